#include "a3d/io.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace a3d::io {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

Vec parse_csv_vector(const std::string& field, const std::string& ctx) {
  Vec v;
  for (const auto& tok : split_on(field, ',')) {
    double x;
    if (!parse_double(tok, x))
      throw ValidationError(ctx + ": not a number: '" + tok + "'");
    v.push_back(x);
  }
  if (!all_finite(v)) throw ValidationError(ctx + ": non-finite value");
  return v;
}

std::string csv_vector(std::span<const double> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt_double(v[i]);
  }
  return out;
}

long parse_long(const std::string& tok, const std::string& ctx) {
  try {
    std::size_t used = 0;
    long v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(ctx + ": not an integer: '" + tok + "'");
  }
}

void expect_header(std::ifstream& in, const std::filesystem::path& path,
                   const std::string& expected) {
  std::string line;
  if (!std::getline(in, line) || line != expected)
    throw ValidationError(path.string() + ": expected header '" + expected + "'");
}

}  // namespace

std::vector<StreamFeatures> load_features(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<StreamFeatures> out;
  std::set<std::pair<std::string, Stream>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string ctx = where(path, lineno);
    auto fields = split_on(line, '\t');
    if (fields.size() != 3)
      throw ValidationError(ctx + ": expected 3 tab-separated fields, got " +
                            std::to_string(fields.size()));
    StreamFeatures rec;
    rec.video_id = fields[0];
    if (rec.video_id.empty()) throw ValidationError(ctx + ": empty video_id");
    auto stream = stream_from_name(fields[1]);
    if (!stream) throw ValidationError(ctx + ": unknown stream '" + fields[1] + "'");
    rec.stream = *stream;
    rec.vector = parse_csv_vector(fields[2], ctx);
    if (rec.vector.empty()) throw ValidationError(ctx + ": empty feature vector");
    if (!out.empty() && rec.vector.size() != out.front().vector.size())
      throw ValidationError(ctx + ": dimension " + std::to_string(rec.vector.size()) +
                            " differs from first record's " +
                            std::to_string(out.front().vector.size()));
    if (!seen.insert({rec.video_id, rec.stream}).second)
      throw ValidationError(ctx + ": duplicate record for video '" + rec.video_id + "' stream " +
                            std::string(stream_name(rec.stream)));
    out.push_back(std::move(rec));
  }
  return out;
}

void save_features(const std::filesystem::path& path, std::span<const StreamFeatures> records) {
  auto out = open_out(path);
  for (const auto& r : records)
    out << r.video_id << '\t' << stream_name(r.stream) << '\t' << csv_vector(r.vector) << '\n';
}

std::vector<DetectionRecord> load_detections(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<DetectionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t feature_dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string ctx = where(path, lineno);
    auto fields = split_on(line, '\t');
    if (fields.size() != 5 && fields.size() != 6)
      throw ValidationError(ctx + ": expected 5 or 6 tab-separated fields, got " +
                            std::to_string(fields.size()));
    DetectionRecord rec;
    rec.video_id = fields[0];
    rec.frame_index = parse_long(fields[1], ctx);
    rec.label_words = split_ws(fields[2]);
    if (!parse_double(fields[3], rec.confidence))
      throw ValidationError(ctx + ": bad confidence '" + fields[3] + "'");
    Vec box = parse_csv_vector(fields[4], ctx);
    if (box.size() != 4) throw ValidationError(ctx + ": bbox needs 4 values x,y,w,h");
    rec.bbox = {box[0], box[1], box[2], box[3]};
    if (fields.size() == 6) {
      rec.feature = parse_csv_vector(fields[5], ctx);
      if (feature_dim == 0) feature_dim = rec.feature->size();
      if (rec.feature->size() != feature_dim)
        throw ValidationError(ctx + ": feature dimension " +
                              std::to_string(rec.feature->size()) +
                              " differs from first record's " + std::to_string(feature_dim));
    }
    validate_detection(rec, ctx);
    out.push_back(std::move(rec));
  }
  return out;
}

void save_detections(const std::filesystem::path& path,
                     std::span<const DetectionRecord> records) {
  auto out = open_out(path);
  for (const auto& r : records) {
    out << r.video_id << '\t' << r.frame_index << '\t';
    for (std::size_t i = 0; i < r.label_words.size(); ++i) {
      if (i) out << ' ';
      out << r.label_words[i];
    }
    out << '\t' << fmt_double(r.confidence) << '\t'
        << csv_vector(std::vector<double>{r.bbox.x, r.bbox.y, r.bbox.width, r.bbox.height});
    if (r.feature) out << '\t' << csv_vector(*r.feature);
    out << '\n';
  }
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  auto in = open_in(path);
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string ctx = where(path, lineno);
    auto toks = split_ws(line);
    if (toks.size() < 2) throw ValidationError(ctx + ": expected 'word v1 ... vD'");
    Vec v;
    v.reserve(toks.size() - 1);
    for (std::size_t i = 1; i < toks.size(); ++i) {
      double x;
      if (!parse_double(toks[i], x))
        throw ValidationError(ctx + ": not a number: '" + toks[i] + "'");
      v.push_back(x);
    }
    if (table.size() > 0 && v.size() != table.dim())
      throw ValidationError(ctx + ": dimension " + std::to_string(v.size()) +
                            " differs from table dimension " + std::to_string(table.dim()));
    try {
      if (!table.insert(toks[0], std::move(v)))
        std::cerr << "warning: " << ctx << ": duplicate word '" << toks[0]
                  << "', keeping the later entry\n";
    } catch (const ValidationError& e) {
      throw ValidationError(ctx + ": " + e.what());
    }
  }
  if (table.size() == 0) throw ValidationError(path.string() + ": empty embedding file");
  return table;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  auto out = open_out(path);
  for (const auto& word : table.sorted_words()) {
    out << word;
    for (double x : *table.find(word)) out << ' ' << fmt_double(x);
    out << '\n';
  }
}

ClassVocabulary load_vocabulary(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_header(in, path, "a3d-vocab v1");
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) labels.push_back(line);
  try {
    return ClassVocabulary::from_labels(std::move(labels));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_vocabulary(const std::filesystem::path& path, const ClassVocabulary& vocab) {
  auto out = open_out(path);
  out << "a3d-vocab v1\n";
  for (const auto& label : vocab.labels()) out << label << '\n';
}

std::vector<VideoSample> load_samples(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_header(in, path, "a3d-samples v1");
  std::vector<VideoSample> out;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string ctx = where(path, lineno);
    auto fields = split_on(line, '\t');
    if (fields.size() != 4)
      throw ValidationError(ctx + ": expected 4 tab-separated fields");
    VideoSample s;
    s.video_id = fields[0];
    if (s.video_id.empty()) throw ValidationError(ctx + ": empty video_id");
    auto sp = split_from_name(fields[1]);
    if (!sp) throw ValidationError(ctx + ": unknown split '" + fields[1] + "'");
    s.split = *sp;
    s.split_index = (int)parse_long(fields[2], ctx);
    if (s.split_index < 1 || s.split_index > 3)
      throw ValidationError(ctx + ": split_index must be 1, 2 or 3");
    s.true_label = (int)parse_long(fields[3], ctx);
    if (s.true_label < 0) throw ValidationError(ctx + ": negative label");
    out.push_back(std::move(s));
  }
  return out;
}

void save_samples(const std::filesystem::path& path, std::span<const VideoSample> samples) {
  auto out = open_out(path);
  out << "a3d-samples v1\n";
  for (const auto& s : samples)
    out << s.video_id << '\t' << split_name(s.split) << '\t' << s.split_index << '\t'
        << s.true_label << '\n';
}

LinearModel load_linear_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_header(in, path, "a3d-linear-model v1");
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(path.string() + ": missing dimensions line");
  auto dims = split_ws(line);
  if (dims.size() != 2) throw ValidationError(path.string() + ":2: expected '<classes> <dim>'");
  LinearModel m;
  m.num_classes = (std::size_t)parse_long(dims[0], where(path, 2));
  m.input_dim = (std::size_t)parse_long(dims[1], where(path, 2));
  auto read_row = [&](std::size_t expected, std::size_t lineno) {
    if (!std::getline(in, line))
      throw ValidationError(where(path, lineno) + ": unexpected end of file");
    auto toks = split_ws(line);
    if (toks.size() != expected)
      throw ValidationError(where(path, lineno) + ": expected " + std::to_string(expected) +
                            " values, got " + std::to_string(toks.size()));
    Vec v(expected);
    for (std::size_t i = 0; i < expected; ++i)
      if (!parse_double(toks[i], v[i]))
        throw ValidationError(where(path, lineno) + ": not a number: '" + toks[i] + "'");
    return v;
  };
  Vec biases = read_row(m.num_classes, 3);
  m.biases = std::move(biases);
  m.weights.reserve(m.num_classes * m.input_dim);
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    Vec row = read_row(m.input_dim, 4 + c);
    m.weights.insert(m.weights.end(), row.begin(), row.end());
  }
  m.validate();
  return m;
}

void save_linear_model(const std::filesystem::path& path, const LinearModel& model) {
  model.validate();
  auto out = open_out(path);
  out << "a3d-linear-model v1\n" << model.num_classes << ' ' << model.input_dim << '\n';
  for (std::size_t c = 0; c < model.num_classes; ++c) {
    if (c) out << ' ';
    out << fmt_double(model.biases[c]);
  }
  out << '\n';
  // one weight row per class
  for (std::size_t c = 0; c < model.num_classes; ++c) {
    auto row = model.row(c);
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (d) out << ' ';
      out << fmt_double(row[d]);
    }
    out << '\n';
  }
}

NetVladParams load_netvlad_params(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_header(in, path, "a3d-netvlad v1");
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(path.string() + ": missing dimensions line");
  auto dims = split_ws(line);
  if (dims.size() != 2) throw ValidationError(path.string() + ":2: expected '<K> <D>'");
  NetVladParams p;
  p.clusters = (std::size_t)parse_long(dims[0], where(path, 2));
  p.dim = (std::size_t)parse_long(dims[1], where(path, 2));
  std::size_t lineno = 2;
  auto read_values = [&](std::size_t expected) {
    ++lineno;
    if (!std::getline(in, line))
      throw ValidationError(where(path, lineno) + ": unexpected end of file");
    auto toks = split_ws(line);
    if (toks.size() != expected)
      throw ValidationError(where(path, lineno) + ": expected " + std::to_string(expected) +
                            " values, got " + std::to_string(toks.size()));
    Vec v(expected);
    for (std::size_t i = 0; i < expected; ++i)
      if (!parse_double(toks[i], v[i]))
        throw ValidationError(where(path, lineno) + ": not a number: '" + toks[i] + "'");
    return v;
  };
  for (std::size_t k = 0; k < p.clusters; ++k) {
    Vec row = read_values(p.dim);
    p.centers.insert(p.centers.end(), row.begin(), row.end());
  }
  for (std::size_t k = 0; k < p.clusters; ++k) {
    Vec row = read_values(p.dim);
    p.assign_weights.insert(p.assign_weights.end(), row.begin(), row.end());
  }
  p.assign_biases = read_values(p.clusters);
  p.validate();
  return p;
}

void save_netvlad_params(const std::filesystem::path& path, const NetVladParams& params) {
  params.validate();
  auto out = open_out(path);
  out << "a3d-netvlad v1\n" << params.clusters << ' ' << params.dim << '\n';
  auto write_row = [&](std::span<const double> row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ' ';
      out << fmt_double(row[i]);
    }
    out << '\n';
  };
  for (std::size_t k = 0; k < params.clusters; ++k) write_row(params.center(k));
  for (std::size_t k = 0; k < params.clusters; ++k) write_row(params.weight_row(k));
  write_row(params.assign_biases);
}

std::vector<TaggedVector> load_tagged_vectors(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<TaggedVector> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string ctx = where(path, lineno);
    auto fields = split_on(line, '\t');
    if (fields.size() != 3)
      throw ValidationError(ctx + ": expected 3 tab-separated fields");
    TaggedVector row;
    row.video_id = fields[0];
    row.tag = fields[1];
    row.values = parse_csv_vector(fields[2], ctx);
    if (row.video_id.empty() || row.values.empty())
      throw ValidationError(ctx + ": empty video_id or vector");
    out.push_back(std::move(row));
  }
  return out;
}

void save_tagged_vectors(const std::filesystem::path& path,
                         std::span<const TaggedVector> rows) {
  auto out = open_out(path);
  for (const auto& r : rows)
    out << r.video_id << '\t' << r.tag << '\t' << csv_vector(r.values) << '\n';
}

}  // namespace a3d::io
