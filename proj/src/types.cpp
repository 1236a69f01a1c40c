#include "a3d/types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace a3d {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string> parse_label(std::string_view label) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  };
  for (std::size_t i = 0; i < label.size(); ++i) {
    unsigned char c = label[i];
    if (c == ' ' || c == '_' || c == '-' || c == '\t') {
      flush();
      continue;
    }
    if (std::isupper(c)) {
      // Camel boundary: previous char was not uppercase, or this starts the
      // tail of an uppercase run ("HTTPServer" -> http server).
      bool prev_upper = i > 0 && std::isupper((unsigned char)label[i - 1]);
      bool next_lower = i + 1 < label.size() && std::islower((unsigned char)label[i + 1]);
      if (!prev_upper || next_lower) flush();
    }
    cur.push_back((char)std::tolower(c));
  }
  flush();
  if (words.empty())
    throw ValidationError("parse_label: empty label '" + std::string(label) + "'");
  return words;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

ClassVocabulary ClassVocabulary::from_labels(std::vector<std::string> labels) {
  if (labels.empty()) throw ValidationError("vocabulary: no labels");
  ClassVocabulary vocab;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) throw ValidationError("vocabulary: empty label at index " + std::to_string(i));
    auto [it, inserted] = vocab.index_.emplace(labels[i], (int)i);
    if (!inserted) throw ValidationError("vocabulary: duplicate label '" + labels[i] + "'");
  }
  vocab.labels_ = std::move(labels);
  return vocab;
}

int ClassVocabulary::index_of(const std::string& label) const {
  auto it = index_.find(label);
  return it == index_.end() ? -1 : it->second;
}

std::vector<std::string> ClassVocabulary::label_words(std::size_t idx) const {
  return parse_label(labels_.at(idx));
}

std::string_view stream_name(Stream s) {
  return s == Stream::spatial ? "spatial" : "temporal";
}

std::optional<Stream> stream_from_name(std::string_view name) {
  if (name == "spatial") return Stream::spatial;
  if (name == "temporal") return Stream::temporal;
  return std::nullopt;
}

void validate_detection(const DetectionRecord& rec, const std::string& where) {
  if (rec.video_id.empty()) throw ValidationError(where + ": empty video_id");
  if (rec.frame_index < 0) throw ValidationError(where + ": negative frame index");
  if (rec.label_words.empty()) throw ValidationError(where + ": no label words");
  if (!std::isfinite(rec.confidence) || rec.confidence < 0.0 || rec.confidence > 1.0)
    throw ValidationError(where + ": confidence " + fmt_double(rec.confidence) + " outside [0,1]");
  if (!(rec.bbox.width > 0.0) || !(rec.bbox.height > 0.0))
    throw ValidationError(where + ": bbox width/height must be positive");
  if (!std::isfinite(rec.bbox.x) || !std::isfinite(rec.bbox.y) ||
      !std::isfinite(rec.bbox.width) || !std::isfinite(rec.bbox.height))
    throw ValidationError(where + ": non-finite bbox");
  if (rec.feature && !all_finite(*rec.feature))
    throw ValidationError(where + ": non-finite feature entry");
}

const Vec* EmbeddingTable::find(std::string_view word) const {
  auto it = entries_.find(to_lower(word));
  return it == entries_.end() ? nullptr : &it->second;
}

bool EmbeddingTable::insert(std::string_view word, Vec v) {
  if (entries_.empty()) dim_ = v.size();
  if (v.size() != dim_)
    throw ValidationError("embedding for '" + std::string(word) + "' has dimension " +
                          std::to_string(v.size()) + ", expected " + std::to_string(dim_));
  if (!all_finite(v))
    throw ValidationError("embedding for '" + std::string(word) + "' has non-finite entries");
  auto [it, inserted] = entries_.insert_or_assign(to_lower(word), std::move(v));
  (void)it;
  return inserted;
}

std::vector<std::string> EmbeddingTable::sorted_words() const {
  std::vector<std::string> words;
  words.reserve(entries_.size());
  for (const auto& [w, _] : entries_) words.push_back(w);
  std::sort(words.begin(), words.end());
  return words;
}

std::string_view split_name(Split s) { return s == Split::train ? "train" : "test"; }

std::optional<Split> split_from_name(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  return std::nullopt;
}

LinearModel LinearModel::zeros(std::size_t num_classes, std::size_t input_dim) {
  LinearModel m;
  m.num_classes = num_classes;
  m.input_dim = input_dim;
  m.weights.assign(num_classes * input_dim, 0.0);
  m.biases.assign(num_classes, 0.0);
  return m;
}

void LinearModel::validate() const {
  if (num_classes == 0 || input_dim == 0)
    throw ValidationError("linear model: zero dimensions");
  if (weights.size() != num_classes * input_dim || biases.size() != num_classes)
    throw ValidationError("linear model: inconsistent dimensions");
  if (!all_finite(weights) || !all_finite(biases))
    throw ValidationError("linear model: non-finite entries");
}

bool is_distribution(std::span<const double> p, double tol) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

void check_distribution(std::span<const double> p, const char* what) {
  if (!is_distribution(p))
    throw NumericError(std::string(what) + " is not a probability distribution");
}

std::size_t argmax_lowest(std::span<const double> v) {
  if (v.empty()) throw ValidationError("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace a3d
