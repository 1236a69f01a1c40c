// a3d: two-stream fusion, attribute filtering, video attribute encoding,
// small-model training and gated joint inference over precomputed feature,
// detection and embedding files.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "a3d/io.hpp"
#include "a3d/kernels.hpp"
#include "a3d/manifest.hpp"
#include "a3d/pipeline.hpp"
#include "a3d/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace a3d;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum ExitCode {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kValidation = 3,
  kNumeric = 4,
  kOrdering = 5,
};

// ---------------------------------------------------------------------------
// flag groups and their manifest (de)serialization

void add_filter_flags(CLI::App* cmd, FilterConfig& f) {
  cmd->add_option("--min-confidence", f.min_confidence, "detector confidence cutoff (keep on >=)")
      ->capture_default_str();
  cmd->add_option("--min-side-px", f.min_side_px, "minimum bbox side in pixels (keep on >=)")
      ->capture_default_str();
  cmd->add_option("--person-words", f.person_words,
                  "labels removed as person-relevant (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--t-sim", f.t_sim, "cosine relevance threshold (training-time filter)")
      ->capture_default_str();
}

json filters_to_json(const FilterConfig& f) {
  return json{{"min_confidence", f.min_confidence},
              {"min_side_px", f.min_side_px},
              {"person_words", f.person_words},
              {"t_sim", f.t_sim}};
}

FilterConfig filters_from_json(const json& j) {
  FilterConfig f;
  f.min_confidence = j.at("min_confidence").get<double>();
  f.min_side_px = j.at("min_side_px").get<int>();
  f.person_words = j.at("person_words").get<std::vector<std::string>>();
  f.t_sim = j.at("t_sim").get<double>();
  return f;
}

void add_train_flags(CLI::App* cmd, TrainConfig& t) {
  cmd->add_option("--initial-lr", t.initial_lr, "initial learning rate")->capture_default_str();
  cmd->add_option("--decay-factor", t.decay_factor, "learning rate decay factor")
      ->capture_default_str();
  cmd->add_option("--decay-every-epochs", t.decay_every_epochs, "epochs between decays")
      ->capture_default_str();
  cmd->add_option("--momentum", t.momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--weight-decay", t.weight_decay, "L2 weight decay")->capture_default_str();
  cmd->add_option("--max-epochs", t.max_epochs, "training epochs")->capture_default_str();
  cmd->add_option("--batch-size", t.batch_size, "mini-batch size (0 = full batch)")
      ->capture_default_str();
}

json train_to_json(const TrainConfig& t) {
  return json{{"initial_lr", t.initial_lr},
              {"decay_factor", t.decay_factor},
              {"decay_every_epochs", t.decay_every_epochs},
              {"momentum", t.momentum},
              {"weight_decay", t.weight_decay},
              {"max_epochs", t.max_epochs},
              {"batch_size", t.batch_size},
              {"seed", t.seed}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.initial_lr = j.at("initial_lr").get<double>();
  t.decay_factor = j.at("decay_factor").get<double>();
  t.decay_every_epochs = j.at("decay_every_epochs").get<int>();
  t.momentum = j.at("momentum").get<double>();
  t.weight_decay = j.at("weight_decay").get<double>();
  t.max_epochs = j.at("max_epochs").get<int>();
  t.batch_size = j.at("batch_size").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  return t;
}

void add_gen_flags(CLI::App* cmd, SyntheticConfig& g) {
  cmd->add_option("--classes", g.num_classes, "number of action classes")->capture_default_str();
  cmd->add_option("--videos", g.num_videos, "number of videos")->capture_default_str();
  cmd->add_option("--low-conf-fraction", g.low_conf_fraction,
                  "fraction of videos with near-flat stream logits")
      ->capture_default_str();
  cmd->add_option("--attr-feature-dim", g.attr_feature_dim,
                  "attribute feature dimension (0 = classes)")
      ->capture_default_str();
  cmd->add_option("--embedding-dim", g.embedding_dim, "word embedding dimension (0 = auto)")
      ->capture_default_str();
  cmd->add_option("--min-dets", g.min_dets_per_video, "min detections per video")
      ->capture_default_str();
  cmd->add_option("--max-dets", g.max_dets_per_video, "max detections per video")
      ->capture_default_str();
  cmd->add_option("--distractor-rate", g.distractor_rate,
                  "irrelevant-attribute rate on confident videos")
      ->capture_default_str();
  cmd->add_option("--junk-rate", g.junk_rate, "rate of detections the filters remove")
      ->capture_default_str();
  cmd->add_option("--train-fraction", g.train_fraction, "train share per split")
      ->capture_default_str();
}

json gen_to_json(const SyntheticConfig& g) {
  return json{{"classes", g.num_classes},
              {"videos", g.num_videos},
              {"low_conf_fraction", g.low_conf_fraction},
              {"attr_feature_dim", g.attr_feature_dim},
              {"embedding_dim", g.embedding_dim},
              {"min_dets", g.min_dets_per_video},
              {"max_dets", g.max_dets_per_video},
              {"distractor_rate", g.distractor_rate},
              {"junk_rate", g.junk_rate},
              {"train_fraction", g.train_fraction}};
}

SyntheticConfig gen_from_json(const json& j) {
  SyntheticConfig g;
  g.num_classes = j.at("classes").get<int>();
  g.num_videos = j.at("videos").get<int>();
  g.low_conf_fraction = j.at("low_conf_fraction").get<double>();
  g.attr_feature_dim = j.at("attr_feature_dim").get<int>();
  g.embedding_dim = j.at("embedding_dim").get<int>();
  g.min_dets_per_video = j.at("min_dets").get<int>();
  g.max_dets_per_video = j.at("max_dets").get<int>();
  g.distractor_rate = j.at("distractor_rate").get<double>();
  g.junk_rate = j.at("junk_rate").get<double>();
  g.train_fraction = j.at("train_fraction").get<double>();
  return g;
}

void add_fusion_flags(CLI::App* cmd, FusionWeights& w, std::string& kind) {
  cmd->add_option("--w-spatial", w.spatial, "spatial stream fusion weight")
      ->capture_default_str();
  cmd->add_option("--w-temporal", w.temporal, "temporal stream fusion weight")
      ->capture_default_str();
  cmd->add_option("--fusion", kind, "fusion strategy")
      ->check(CLI::IsMember({"revised", "original"}))
      ->capture_default_str();
}

FusionKind fusion_kind_from(const std::string& s) {
  return s == "original" ? FusionKind::original : FusionKind::revised;
}

Strategy parse_strategy(const std::string& s) {
  auto st = strategy_from_name(s);
  if (!st) throw UsageError("unknown strategy '" + s + "'");
  return *st;
}

void write_loss_log(const fs::path& path, std::span<const EpochLog> log) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write loss log: " + path.string());
  for (const auto& e : log)
    out << e.epoch << '\t' << fmt_double(e.lr) << '\t' << fmt_double(e.loss) << '\n';
}

void write_metrics(const fs::path& path, const EvalReport& report, const ClassVocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write metrics: " + path.string());
  for (const auto& s : report.splits) {
    out << "accuracy\t" << s.split_index << '\t' << fmt_double(s.accuracy) << '\n';
    out << "n_test\t" << s.split_index << '\t' << s.total << '\n';
  }
  out << "accuracy\tmean\t" << fmt_double(report.mean_accuracy) << '\n';
  for (std::size_t cls = 0; cls < report.per_class.size(); ++cls) {
    const auto& pc = report.per_class[cls];
    double acc = pc.total == 0 ? std::numeric_limits<double>::quiet_NaN()
                               : (double)pc.correct / (double)pc.total;
    out << "per_class_accuracy\t" << vocab.label(cls) << '\t' << fmt_double(acc) << '\n';
  }
  if (report.gate_fraction)
    out << "gate_fraction\tall\t" << fmt_double(*report.gate_fraction) << '\n';
}

void print_report_table(std::ostream& os, const PipelineReports& r) {
  std::vector<int> split_ids;
  for (const auto& s : r.p1_only.splits) split_ids.push_back(s.split_index);
  os << "pipeline ";
  for (int id : split_ids) os << "  split" << id;
  os << "    mean  gate_p2\n";
  auto row = [&](const char* name, const EvalReport& rep) {
    char buf[32];
    os << name;
    for (std::size_t i = strlen(name); i < 9; ++i) os << ' ';
    for (const auto& s : rep.splits) {
      snprintf(buf, sizeof buf, "  %.4f", s.accuracy);
      os << buf;
    }
    snprintf(buf, sizeof buf, "  %.4f", rep.mean_accuracy);
    os << buf;
    if (rep.gate_fraction) {
      snprintf(buf, sizeof buf, "   %.4f", *rep.gate_fraction);
      os << buf;
    } else {
      os << "        -";
    }
    os << '\n';
  };
  row("p1-only", r.p1_only);
  row("p2-only", r.p2_only);
  row("joint", r.joint);
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  SyntheticConfig gen;
  std::uint64_t seed = 7;
  std::string out_dir = ".";
};

json to_json(const GenArgs& a) {
  json j = gen_to_json(a.gen);
  j["seed"] = a.seed;
  j["out_dir"] = a.out_dir;
  return j;
}

GenArgs gen_args_from_json(const json& j) {
  GenArgs a;
  a.gen = gen_from_json(j);
  a.seed = j.at("seed").get<std::uint64_t>();
  a.out_dir = j.at("out_dir").get<std::string>();
  return a;
}

void write_dataset(const DatasetBundle& data, const fs::path& dir) {
  fs::create_directories(dir);
  io::save_vocabulary(dir / "vocab.txt", data.vocab);
  io::save_samples(dir / "samples.txt", data.samples);
  io::save_features(dir / "features.txt", data.features);
  io::save_detections(dir / "detections.txt", data.detections);
  io::save_embeddings(dir / "embeddings.txt", data.embeddings);
}

int run_gen(const GenArgs& args) {
  DatasetBundle data = gen_synthetic(args.gen, args.seed);
  write_dataset(data, args.out_dir);
  RunManifest{"gen", to_json(args)}.save(fs::path(args.out_dir) / "manifest.json");
  std::cout << "generated " << args.gen.num_videos << " videos, " << args.gen.num_classes
            << " classes, " << data.detections.size() << " detections -> " << args.out_dir
            << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// filter

struct FilterArgs {
  std::string detections;
  std::string out;
  FilterConfig filters;
  std::string mode = "test";
  std::string samples;
  std::string vocab;
  std::string embeddings;
};

json to_json(const FilterArgs& a) {
  json j = filters_to_json(a.filters);
  j["detections"] = a.detections;
  j["out"] = a.out;
  j["mode"] = a.mode;
  j["samples"] = a.samples;
  j["vocab"] = a.vocab;
  j["embeddings"] = a.embeddings;
  return j;
}

FilterArgs filter_args_from_json(const json& j) {
  FilterArgs a;
  a.filters = filters_from_json(j);
  a.detections = j.at("detections").get<std::string>();
  a.out = j.at("out").get<std::string>();
  a.mode = j.at("mode").get<std::string>();
  a.samples = j.at("samples").get<std::string>();
  a.vocab = j.at("vocab").get<std::string>();
  a.embeddings = j.at("embeddings").get<std::string>();
  return a;
}

int run_filter(const FilterArgs& args) {
  auto dets = io::load_detections(args.detections);
  auto kept = apply_test_filters(dets, args.filters);
  if (args.mode == "train") {
    if (args.samples.empty() || args.vocab.empty() || args.embeddings.empty())
      throw UsageError("filter --mode train needs --samples, --vocab and --embeddings");
    auto samples = io::load_samples(args.samples);
    auto vocab = io::load_vocabulary(args.vocab);
    auto table = io::load_embeddings(args.embeddings);
    std::unordered_map<std::string, int> label_of;
    for (const auto& s : samples) {
      auto [it, inserted] = label_of.emplace(s.video_id, s.true_label);
      if (!inserted && it->second != s.true_label)
        throw ValidationError("filter: video '" + s.video_id + "' has conflicting labels");
    }
    std::vector<DetectionRecord> out;
    std::unordered_map<std::string, std::vector<DetectionRecord>> by_video;
    std::vector<std::string> order;
    for (auto& d : kept) {
      if (!by_video.count(d.video_id)) order.push_back(d.video_id);
      by_video[d.video_id].push_back(std::move(d));
    }
    for (const auto& vid : order) {
      auto lit = label_of.find(vid);
      if (lit == label_of.end())
        throw ValidationError("filter: video '" + vid + "' not present in samples file");
      auto rel = filter_by_relevance(by_video[vid], vocab.label_words((std::size_t)lit->second),
                                     table, args.filters.t_sim);
      out.insert(out.end(), rel.begin(), rel.end());
    }
    kept = std::move(out);
  } else if (args.mode != "test") {
    throw UsageError("filter --mode must be 'test' or 'train'");
  }
  io::save_detections(args.out, kept);
  RunManifest{"filter", to_json(args)}.save(args.out + ".manifest.json");
  std::cout << "kept " << kept.size() << " of " << dets.size() << " detections -> " << args.out
            << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// encode

struct EncodeArgs {
  std::string detections;
  std::string out;
  std::string encoder = "mean-pool";
  std::string netvlad_params;
};

json to_json(const EncodeArgs& a) {
  return json{{"detections", a.detections},
              {"out", a.out},
              {"encoder", a.encoder},
              {"netvlad_params", a.netvlad_params}};
}

EncodeArgs encode_args_from_json(const json& j) {
  EncodeArgs a;
  a.detections = j.at("detections").get<std::string>();
  a.out = j.at("out").get<std::string>();
  a.encoder = j.at("encoder").get<std::string>();
  a.netvlad_params = j.at("netvlad_params").get<std::string>();
  return a;
}

int run_encode(const EncodeArgs& args) {
  auto enc = encoder_from_name(args.encoder);
  if (!enc || *enc == EncoderKind::pred_agg)
    throw UsageError("encode --encoder must be 'mean-pool' or 'netvlad'");
  auto dets = io::load_detections(args.detections);
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Vec>> by_video;
  for (const auto& d : dets) {
    if (!d.feature) continue;
    if (!by_video.count(d.video_id)) order.push_back(d.video_id);
    by_video[d.video_id].push_back(*d.feature);
  }
  std::vector<std::vector<Vec>> groups;
  groups.reserve(order.size());
  for (const auto& vid : order) groups.push_back(std::move(by_video[vid]));
  if (groups.empty()) throw ValidationError("encode: no detections carry features");

  std::vector<Vec> reps;
  if (*enc == EncoderKind::netvlad) {
    if (args.netvlad_params.empty())
      throw UsageError("encode --encoder netvlad needs --netvlad-params");
    auto params = io::load_netvlad_params(args.netvlad_params);
    reps = kernels::encode_netvlad(groups, params);
  } else {
    reps = kernels::encode_mean_pool(groups);
  }
  std::vector<io::TaggedVector> rows(order.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    rows[i] = {order[i], std::string(encoder_name(*enc)), std::move(reps[i])};
  io::save_tagged_vectors(args.out, rows);
  RunManifest{"encode", to_json(args)}.save(args.out + ".manifest.json");
  std::cout << "encoded " << rows.size() << " videos -> " << args.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string strategy = "attr-classifier";
  std::string detections;
  std::string samples;
  std::string vocab;
  std::string embeddings;
  int split = 1;
  std::string out;
  std::string netvlad_out;
  std::string loss_log;
  TrainConfig train;
  FilterConfig filters;
  std::size_t clusters = 8;
};

json to_json(const TrainArgs& a) {
  json j;
  j["strategy"] = a.strategy;
  j["detections"] = a.detections;
  j["samples"] = a.samples;
  j["vocab"] = a.vocab;
  j["embeddings"] = a.embeddings;
  j["split"] = a.split;
  j["out"] = a.out;
  j["netvlad_out"] = a.netvlad_out;
  j["loss_log"] = a.loss_log;
  j["train"] = train_to_json(a.train);
  j["filters"] = filters_to_json(a.filters);
  j["clusters"] = a.clusters;
  return j;
}

TrainArgs train_args_from_json(const json& j) {
  TrainArgs a;
  a.strategy = j.at("strategy").get<std::string>();
  a.detections = j.at("detections").get<std::string>();
  a.samples = j.at("samples").get<std::string>();
  a.vocab = j.at("vocab").get<std::string>();
  a.embeddings = j.at("embeddings").get<std::string>();
  a.split = j.at("split").get<int>();
  a.out = j.at("out").get<std::string>();
  a.netvlad_out = j.at("netvlad_out").get<std::string>();
  a.loss_log = j.at("loss_log").get<std::string>();
  a.train = train_from_json(j.at("train"));
  a.filters = filters_from_json(j.at("filters"));
  a.clusters = j.at("clusters").get<std::size_t>();
  return a;
}

int run_train(const TrainArgs& args) {
  Strategy strategy = parse_strategy(args.strategy);
  if (strategy == Strategy::attr_classifier && args.embeddings.empty())
    throw UsageError("train --strategy attr-classifier needs --embeddings");
  if (strategy == Strategy::netvlad && args.netvlad_out.empty())
    throw UsageError("train --strategy netvlad needs --netvlad-out");
  DatasetBundle data;
  data.vocab = io::load_vocabulary(args.vocab);
  data.samples = io::load_samples(args.samples);
  data.detections = io::load_detections(args.detections);
  if (!args.embeddings.empty()) data.embeddings = io::load_embeddings(args.embeddings);

  TrainedModels models =
      train_strategy(data, args.split, strategy, args.filters, args.train, args.clusters);
  io::save_linear_model(args.out, models.linear);
  if (models.netvlad) io::save_netvlad_params(args.netvlad_out, *models.netvlad);
  std::string loss_path = args.loss_log.empty() ? args.out + ".loss" : args.loss_log;
  write_loss_log(loss_path, models.log);
  RunManifest{"train", to_json(args)}.save(args.out + ".manifest.json");
  std::cout << "trained " << args.strategy << " on split " << args.split << ", final loss "
            << fmt_double(models.log.back().loss) << " -> " << args.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string which = "joint";
  std::string features;
  std::string detections;
  std::string samples;
  std::string vocab;
  std::string model;
  std::string netvlad_params;
  std::string strategy = "attr-classifier";
  int split = 1;
  std::string fusion = "revised";
  FusionWeights weights;
  double gate_threshold = 0.1;
  FilterConfig filters;
  std::string out;
};

json to_json(const PredictArgs& a) {
  json j;
  j["which"] = a.which;
  j["features"] = a.features;
  j["detections"] = a.detections;
  j["samples"] = a.samples;
  j["vocab"] = a.vocab;
  j["model"] = a.model;
  j["netvlad_params"] = a.netvlad_params;
  j["strategy"] = a.strategy;
  j["split"] = a.split;
  j["fusion"] = a.fusion;
  j["w_spatial"] = a.weights.spatial;
  j["w_temporal"] = a.weights.temporal;
  j["gate_threshold"] = a.gate_threshold;
  j["filters"] = filters_to_json(a.filters);
  j["out"] = a.out;
  return j;
}

PredictArgs predict_args_from_json(const json& j) {
  PredictArgs a;
  a.which = j.at("which").get<std::string>();
  a.features = j.at("features").get<std::string>();
  a.detections = j.at("detections").get<std::string>();
  a.samples = j.at("samples").get<std::string>();
  a.vocab = j.at("vocab").get<std::string>();
  a.model = j.at("model").get<std::string>();
  a.netvlad_params = j.at("netvlad_params").get<std::string>();
  a.strategy = j.at("strategy").get<std::string>();
  a.split = j.at("split").get<int>();
  a.fusion = j.at("fusion").get<std::string>();
  a.weights.spatial = j.at("w_spatial").get<double>();
  a.weights.temporal = j.at("w_temporal").get<double>();
  a.gate_threshold = j.at("gate_threshold").get<double>();
  a.filters = filters_from_json(j.at("filters"));
  a.out = j.at("out").get<std::string>();
  return a;
}

int run_predict(const PredictArgs& args) {
  const bool need_p1 = args.which == "p1" || args.which == "joint";
  const bool need_p2 = args.which == "p2" || args.which == "joint";
  if (!need_p1 && !need_p2) throw UsageError("predict --which must be p1, p2 or joint");
  if (need_p1 && args.features.empty()) throw UsageError("predict: --features required for p1");
  if (need_p2 && (args.detections.empty() || args.model.empty()))
    throw UsageError("predict: --detections and --model required for p2");

  auto vocab = io::load_vocabulary(args.vocab);
  auto samples = io::load_samples(args.samples);
  const std::size_t num_classes = vocab.size();

  std::unordered_map<std::string, const Vec*> spatial, temporal;
  std::vector<StreamFeatures> features;
  if (need_p1) {
    features = io::load_features(args.features);
    for (const auto& f : features) {
      if (f.vector.size() != num_classes)
        throw ValidationError("predict: stream feature dimension " +
                              std::to_string(f.vector.size()) + " != vocabulary size " +
                              std::to_string(num_classes));
      (f.stream == Stream::spatial ? spatial : temporal)[f.video_id] = &f.vector;
    }
  }

  LinearModel model;
  std::optional<NetVladParams> nv;
  std::unordered_map<std::string, std::vector<Vec>> attr_features;
  Strategy strategy = parse_strategy(args.strategy);
  if (need_p2) {
    model = io::load_linear_model(args.model);
    if (!args.netvlad_params.empty()) nv = io::load_netvlad_params(args.netvlad_params);
    if (strategy == Strategy::netvlad && !nv)
      throw UsageError("predict --strategy netvlad needs --netvlad-params");
    auto dets = io::load_detections(args.detections);
    auto kept = apply_test_filters(dets, args.filters);
    for (const auto& d : kept)
      if (d.feature) attr_features[d.video_id].push_back(*d.feature);
  }

  const Vec uniform(num_classes, 1.0 / (double)num_classes);
  GateConfig gate{args.gate_threshold};
  FusionKind fk = fusion_kind_from(args.fusion);

  std::vector<io::TaggedVector> rows;
  for (const auto& s : samples) {
    if (s.split != Split::test || s.split_index != args.split) continue;
    Vec p1, p2;
    if (need_p1) {
      auto si = spatial.find(s.video_id);
      auto ti = temporal.find(s.video_id);
      if (si == spatial.end() || ti == temporal.end())
        throw ValidationError("predict: missing stream features for video '" + s.video_id + "'");
      p1 = fk == FusionKind::revised ? fuse_revised(*si->second, *ti->second, args.weights)
                                     : fuse_original(*si->second, *ti->second, args.weights);
    }
    if (need_p2) {
      auto it = attr_features.find(s.video_id);
      p2 = (it == attr_features.end() || it->second.empty())
               ? uniform
               : attribute_predict(it->second, strategy_encoder(strategy), model,
                                   nv ? &*nv : nullptr);
    }
    Vec result = args.which == "p1"   ? std::move(p1)
                 : args.which == "p2" ? std::move(p2)
                                      : joint_predict(p1, p2, gate);
    rows.push_back({s.video_id, args.which, std::move(result)});
  }
  if (rows.empty())
    throw ValidationError("predict: no test samples in split " + std::to_string(args.split));
  io::save_tagged_vectors(args.out, rows);
  RunManifest{"predict", to_json(args)}.save(args.out + ".manifest.json");
  std::cout << "predicted " << rows.size() << " test videos (" << args.which << ", split "
            << args.split << ") -> " << args.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string predictions;
  std::string samples;
  std::string vocab;
  int split = 1;
  std::string out;
};

json to_json(const EvaluateArgs& a) {
  return json{{"predictions", a.predictions},
              {"samples", a.samples},
              {"vocab", a.vocab},
              {"split", a.split},
              {"out", a.out}};
}

EvaluateArgs evaluate_args_from_json(const json& j) {
  EvaluateArgs a;
  a.predictions = j.at("predictions").get<std::string>();
  a.samples = j.at("samples").get<std::string>();
  a.vocab = j.at("vocab").get<std::string>();
  a.split = j.at("split").get<int>();
  a.out = j.at("out").get<std::string>();
  return a;
}

int run_evaluate(const EvaluateArgs& args) {
  auto vocab = io::load_vocabulary(args.vocab);
  auto all_samples = io::load_samples(args.samples);
  auto rows = io::load_tagged_vectors(args.predictions);

  std::vector<VideoSample> samples;
  for (const auto& s : all_samples)
    if (s.split_index == args.split) samples.push_back(s);

  PredictionMap preds;
  for (auto& r : rows) {
    check_distribution(r.values, "prediction");
    preds[{args.split, r.video_id}] = std::move(r.values);
  }
  EvalReport report = evaluate(samples, preds, vocab.size());
  write_metrics(args.out, report, vocab);
  RunManifest{"evaluate", to_json(args)}.save(args.out + ".manifest.json");

  char buf[64];
  std::cout << "split  n     accuracy\n";
  for (const auto& s : report.splits) {
    snprintf(buf, sizeof buf, "%-5d  %-4zu  %.4f\n", s.split_index, s.total, s.accuracy);
    std::cout << buf;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// demo

struct DemoArgs {
  SyntheticConfig gen;
  std::uint64_t seed = 7;
  std::string strategy = "attr-classifier";
  double gate_threshold = 0.1;
  FusionWeights weights;
  std::string fusion = "revised";
  TrainConfig train;
  FilterConfig filters;
  std::size_t clusters = 8;
  std::string out_dir = ".";
};

json to_json(const DemoArgs& a) {
  json j;
  j["gen"] = gen_to_json(a.gen);
  j["seed"] = a.seed;
  j["strategy"] = a.strategy;
  j["gate_threshold"] = a.gate_threshold;
  j["w_spatial"] = a.weights.spatial;
  j["w_temporal"] = a.weights.temporal;
  j["fusion"] = a.fusion;
  j["train"] = train_to_json(a.train);
  j["filters"] = filters_to_json(a.filters);
  j["clusters"] = a.clusters;
  j["out_dir"] = a.out_dir;
  return j;
}

DemoArgs demo_args_from_json(const json& j) {
  DemoArgs a;
  a.gen = gen_from_json(j.at("gen"));
  a.seed = j.at("seed").get<std::uint64_t>();
  a.strategy = j.at("strategy").get<std::string>();
  a.gate_threshold = j.at("gate_threshold").get<double>();
  a.weights.spatial = j.at("w_spatial").get<double>();
  a.weights.temporal = j.at("w_temporal").get<double>();
  a.fusion = j.at("fusion").get<std::string>();
  a.train = train_from_json(j.at("train"));
  a.filters = filters_from_json(j.at("filters"));
  a.clusters = j.at("clusters").get<std::size_t>();
  a.out_dir = j.at("out_dir").get<std::string>();
  return a;
}

int run_demo(const DemoArgs& args) {
  Strategy strategy = parse_strategy(args.strategy);
  TrainConfig train_cfg = args.train;
  train_cfg.seed = args.seed;

  DatasetBundle data = gen_synthetic(args.gen, args.seed);
  fs::path dir(args.out_dir);
  write_dataset(data, dir);

  PipelineModels models;
  models.encoder = strategy_encoder(strategy);
  for (int split = 1; split <= 3; ++split) {
    TrainedModels tm =
        train_strategy(data, split, strategy, args.filters, train_cfg, args.clusters);
    io::save_linear_model(dir / ("model_split" + std::to_string(split) + ".txt"), tm.linear);
    if (tm.netvlad)
      io::save_netvlad_params(dir / ("netvlad_split" + std::to_string(split) + ".txt"),
                              *tm.netvlad);
    models.per_split[split] = {std::move(tm.linear), std::move(tm.netvlad)};
  }

  PipelineConfig cfg;
  cfg.fusion_weights = args.weights;
  cfg.fusion_kind = fusion_kind_from(args.fusion);
  cfg.filters = args.filters;
  cfg.gate = GateConfig{args.gate_threshold};
  PipelineReports reports = run_pipeline(data, cfg, models);

  write_metrics(dir / "metrics_p1.txt", reports.p1_only, data.vocab);
  write_metrics(dir / "metrics_p2.txt", reports.p2_only, data.vocab);
  write_metrics(dir / "metrics_joint.txt", reports.joint, data.vocab);
  {
    std::ofstream rep(dir / "report.txt");
    if (!rep) throw ValidationError("cannot write report");
    print_report_table(rep, reports);
  }
  RunManifest{"demo", to_json(args)}.save(dir / "manifest.json");

  print_report_table(std::cout, reports);
  double a1 = reports.p1_only.mean_accuracy;
  double a2 = reports.p2_only.mean_accuracy;
  double aj = reports.joint.mean_accuracy;
  bool ordering = aj >= a1 && a1 > a2;
  std::cout << (ordering ? "ordering acc(joint) >= acc(p1) > acc(p2) holds\n"
                         : "ordering acc(joint) >= acc(p1) > acc(p2) VIOLATED\n");
  return ordering ? kOk : kOrdering;
}

// ---------------------------------------------------------------------------
// replay

int dispatch(const RunManifest& m) {
  if (m.command == "gen") return run_gen(gen_args_from_json(m.config));
  if (m.command == "filter") return run_filter(filter_args_from_json(m.config));
  if (m.command == "encode") return run_encode(encode_args_from_json(m.config));
  if (m.command == "train") return run_train(train_args_from_json(m.config));
  if (m.command == "predict") return run_predict(predict_args_from_json(m.config));
  if (m.command == "evaluate") return run_evaluate(evaluate_args_from_json(m.config));
  if (m.command == "demo") return run_demo(demo_args_from_json(m.config));
  throw ValidationError("manifest names unknown command '" + m.command + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decision-level action recognition over precomputed features"};
  app.require_subcommand(1);

  GenArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset");
  add_gen_flags(gen_cmd, gen_args.gen);
  gen_cmd->add_option("--seed", gen_args.seed, "RNG seed")->capture_default_str();
  gen_cmd->add_option("--out-dir", gen_args.out_dir, "output directory")
      ->envname("A3D_OUT_DIR")
      ->capture_default_str();

  FilterArgs filter_args;
  auto* filter_cmd = app.add_subcommand("filter", "filter a detections file");
  filter_cmd->add_option("--detections", filter_args.detections, "input detections")->required();
  filter_cmd->add_option("--out", filter_args.out, "output detections")->required();
  add_filter_flags(filter_cmd, filter_args.filters);
  filter_cmd->add_option("--mode", filter_args.mode, "test (confidence,bbox,person) or train (+relevance)")
      ->check(CLI::IsMember({"test", "train"}))
      ->capture_default_str();
  filter_cmd->add_option("--samples", filter_args.samples, "samples file (train mode)");
  filter_cmd->add_option("--vocab", filter_args.vocab, "vocabulary file (train mode)");
  filter_cmd->add_option("--embeddings", filter_args.embeddings, "embeddings file (train mode)");

  EncodeArgs encode_args;
  auto* encode_cmd = app.add_subcommand("encode", "encode per-video attribute representations");
  encode_cmd->add_option("--detections", encode_args.detections, "input detections with features")
      ->required();
  encode_cmd->add_option("--out", encode_args.out, "output representation file")->required();
  encode_cmd->add_option("--encoder", encode_args.encoder, "mean-pool or netvlad")
      ->check(CLI::IsMember({"mean-pool", "netvlad"}))
      ->capture_default_str();
  encode_cmd->add_option("--netvlad-params", encode_args.netvlad_params,
                         "trained NetVLAD parameter file");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train an attribute-pipeline classifier");
  train_cmd->add_option("--strategy", train_args.strategy,
                        "mean-pool, netvlad or attr-classifier")
      ->check(CLI::IsMember({"mean-pool", "netvlad", "attr-classifier"}))
      ->capture_default_str();
  train_cmd->add_option("--detections", train_args.detections, "detections with features")
      ->required();
  train_cmd->add_option("--samples", train_args.samples, "samples file")->required();
  train_cmd->add_option("--vocab", train_args.vocab, "vocabulary file")->required();
  train_cmd->add_option("--embeddings", train_args.embeddings,
                        "embeddings file (attr-classifier)");
  train_cmd->add_option("--split", train_args.split, "split index")->capture_default_str();
  train_cmd->add_option("--out", train_args.out, "output model file")->required();
  train_cmd->add_option("--netvlad-out", train_args.netvlad_out,
                        "output NetVLAD parameter file (netvlad strategy)");
  train_cmd->add_option("--loss-log", train_args.loss_log, "loss log path (default <out>.loss)");
  train_cmd->add_option("--clusters", train_args.clusters, "NetVLAD clusters")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_args.train.seed, "training seed")->capture_default_str();
  add_train_flags(train_cmd, train_args.train);
  add_filter_flags(train_cmd, train_args.filters);

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "write per-video test predictions");
  predict_cmd->add_option("--which", predict_args.which, "p1, p2 or joint")
      ->check(CLI::IsMember({"p1", "p2", "joint"}))
      ->capture_default_str();
  predict_cmd->add_option("--features", predict_args.features, "stream features file (p1)");
  predict_cmd->add_option("--detections", predict_args.detections, "detections file (p2)");
  predict_cmd->add_option("--samples", predict_args.samples, "samples file")->required();
  predict_cmd->add_option("--vocab", predict_args.vocab, "vocabulary file")->required();
  predict_cmd->add_option("--model", predict_args.model, "linear model file (p2)");
  predict_cmd->add_option("--netvlad-params", predict_args.netvlad_params,
                          "NetVLAD parameter file (netvlad strategy)");
  predict_cmd->add_option("--strategy", predict_args.strategy,
                          "mean-pool, netvlad or attr-classifier")
      ->check(CLI::IsMember({"mean-pool", "netvlad", "attr-classifier"}))
      ->capture_default_str();
  predict_cmd->add_option("--split", predict_args.split, "split index")->capture_default_str();
  predict_cmd->add_option("--gate-threshold", predict_args.gate_threshold,
                          "joint-inference confidence threshold")
      ->capture_default_str();
  add_fusion_flags(predict_cmd, predict_args.weights, predict_args.fusion);
  add_filter_flags(predict_cmd, predict_args.filters);
  predict_cmd->add_option("--out", predict_args.out, "output predictions file")->required();

  EvaluateArgs evaluate_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score predictions against test labels");
  evaluate_cmd->add_option("--predictions", evaluate_args.predictions, "predictions file")
      ->required();
  evaluate_cmd->add_option("--samples", evaluate_args.samples, "samples file")->required();
  evaluate_cmd->add_option("--vocab", evaluate_args.vocab, "vocabulary file")->required();
  evaluate_cmd->add_option("--split", evaluate_args.split, "split index")->capture_default_str();
  evaluate_cmd->add_option("--out", evaluate_args.out, "output metrics file")->required();

  DemoArgs demo_args;
  auto* demo_cmd = app.add_subcommand(
      "demo", "generate, train and evaluate the three-way comparison end to end");
  add_gen_flags(demo_cmd, demo_args.gen);
  demo_cmd->add_option("--seed", demo_args.seed, "RNG seed (dataset and training)")
      ->capture_default_str();
  demo_cmd->add_option("--strategy", demo_args.strategy, "attribute pipeline strategy")
      ->check(CLI::IsMember({"mean-pool", "netvlad", "attr-classifier"}))
      ->capture_default_str();
  demo_cmd->add_option("--gate-threshold", demo_args.gate_threshold,
                       "joint-inference confidence threshold")
      ->capture_default_str();
  add_fusion_flags(demo_cmd, demo_args.weights, demo_args.fusion);
  add_train_flags(demo_cmd, demo_args.train);
  add_filter_flags(demo_cmd, demo_args.filters);
  demo_cmd->add_option("--clusters", demo_args.clusters, "NetVLAD clusters")
      ->capture_default_str();
  demo_cmd->add_option("--out-dir", demo_args.out_dir, "output directory")
      ->envname("A3D_OUT_DIR")
      ->capture_default_str();

  std::string replay_manifest;
  auto* replay_cmd = app.add_subcommand("replay", "re-run a command from its manifest");
  replay_cmd->add_option("manifest", replay_manifest, "manifest.json path")->required();

  int rc = kOk;
  gen_cmd->callback([&] { rc = run_gen(gen_args); });
  filter_cmd->callback([&] { rc = run_filter(filter_args); });
  encode_cmd->callback([&] { rc = run_encode(encode_args); });
  train_cmd->callback([&] { rc = run_train(train_args); });
  predict_cmd->callback([&] { rc = run_predict(predict_args); });
  evaluate_cmd->callback([&] { rc = run_evaluate(evaluate_args); });
  demo_cmd->callback([&] { rc = run_demo(demo_args); });
  replay_cmd->callback([&] { rc = dispatch(RunManifest::load(replay_manifest)); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int r = app.exit(e);
    return r == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return rc;
}
