#include "a3d/inference.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "a3d/kernels.hpp"

namespace a3d {

void GateConfig::validate() const {
  if (!(threshold >= 0.0) || !(threshold <= 1.0))
    throw ValidationError("gate threshold must be in [0,1]");
}

int indicator(double x) {
  if (!std::isfinite(x)) throw NumericError("indicator: non-finite input");
  return x > 0.0 ? 1 : 0;
}

Vec joint_predict(std::span<const double> p1, std::span<const double> p2,
                  const GateConfig& gate) {
  gate.validate();
  if (p1.size() != p2.size()) throw ValidationError("joint_predict: length mismatch");
  check_distribution(p1, "p1");
  check_distribution(p2, "p2");
  double conf = *std::max_element(p1.begin(), p1.end());
  if (indicator(conf - gate.threshold))
    return Vec(p1.begin(), p1.end());
  return Vec(p2.begin(), p2.end());
}

EvalReport evaluate(std::span<const VideoSample> samples, const PredictionMap& predictions,
                    std::size_t num_classes) {
  EvalReport report;
  report.per_class.assign(num_classes, {});
  std::map<int, EvalReport::SplitStat> by_split;
  for (const auto& s : samples) {
    if (s.split != Split::test) continue;
    auto it = predictions.find({s.split_index, s.video_id});
    if (it == predictions.end())
      throw ValidationError("evaluate: missing prediction for video '" + s.video_id +
                            "' split " + std::to_string(s.split_index));
    if (s.true_label < 0 || (std::size_t)s.true_label >= num_classes)
      throw ValidationError("evaluate: label out of range for video '" + s.video_id + "'");
    bool correct = argmax_lowest(it->second) == (std::size_t)s.true_label;
    auto& st = by_split[s.split_index];
    st.split_index = s.split_index;
    st.total += 1;
    st.correct += correct ? 1 : 0;
    report.per_class[s.true_label].total += 1;
    report.per_class[s.true_label].correct += correct ? 1 : 0;
  }
  if (by_split.empty()) throw ValidationError("evaluate: no test samples");
  double acc_sum = 0.0;
  for (auto& [_, st] : by_split) {
    st.accuracy = (double)st.correct / (double)st.total;
    acc_sum += st.accuracy;
    report.splits.push_back(st);
  }
  report.mean_accuracy = acc_sum / (double)report.splits.size();
  return report;
}

Vec attribute_predict(const std::vector<Vec>& features, EncoderKind encoder,
                      const LinearModel& model, const NetVladParams* netvlad) {
  Vec rep;
  switch (encoder) {
    case EncoderKind::mean_pool:
      rep = mean_pool(features);
      break;
    case EncoderKind::netvlad:
      if (!netvlad) throw ValidationError("attribute_predict: netvlad params missing");
      rep = netvlad_forward(features, *netvlad);
      break;
    case EncoderKind::pred_agg: {
      auto logits = kernels::linear_logits_serial(model, features);
      std::vector<Vec> dists(logits.size());
      for (std::size_t i = 0; i < logits.size(); ++i) dists[i] = softmax(logits[i]);
      return aggregate_attribute_predictions(dists);
    }
  }
  auto logits = kernels::linear_logits_serial(model, std::span<const Vec>(&rep, 1));
  return softmax(logits[0]);
}

namespace {

struct VideoStreams {
  const Vec* spatial = nullptr;
  const Vec* temporal = nullptr;
};

}  // namespace

PipelineReports run_pipeline(const DatasetBundle& data, const PipelineConfig& cfg,
                             const PipelineModels& models) {
  cfg.filters.validate();
  cfg.gate.validate();
  cfg.fusion_weights.validate();
  const std::size_t num_classes = data.vocab.size();

  std::unordered_map<std::string, VideoStreams> streams;
  for (const auto& f : data.features) {
    auto& vs = streams[f.video_id];
    (f.stream == Stream::spatial ? vs.spatial : vs.temporal) = &f.vector;
  }

  // Test-time attribute features per video, filtered once up front.
  auto filtered = apply_test_filters(data.detections, cfg.filters);
  std::unordered_map<std::string, std::vector<Vec>> attr_features;
  for (const auto& d : filtered)
    if (d.feature) attr_features[d.video_id].push_back(*d.feature);

  std::vector<const VideoSample*> test_samples;
  for (const auto& s : data.samples)
    if (s.split == Split::test) test_samples.push_back(&s);
  if (test_samples.empty()) throw ValidationError("run_pipeline: empty test split");

  struct Row {
    Vec p1, p2, joint;
    bool routed = false;
  };
  std::vector<Row> rows(test_samples.size());
  const Vec uniform(num_classes, 1.0 / (double)num_classes);

  // Validate serially; exceptions must not escape the parallel region.
  for (const VideoSample* sp : test_samples) {
    auto st = streams.find(sp->video_id);
    if (st == streams.end() || !st->second.spatial || !st->second.temporal)
      throw ValidationError("run_pipeline: missing stream features for video '" + sp->video_id +
                            "'");
    if (!models.per_split.count(sp->split_index))
      throw ValidationError("run_pipeline: no model for split " +
                            std::to_string(sp->split_index));
  }

  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < (long long)test_samples.size(); ++i) {
    try {
      const VideoSample& s = *test_samples[i];
      const VideoStreams& vs = streams.at(s.video_id);
      const SplitModels& sm = models.per_split.at(s.split_index);
      Row& row = rows[i];
      row.p1 = cfg.fusion_kind == FusionKind::revised
                   ? fuse_revised(*vs.spatial, *vs.temporal, cfg.fusion_weights)
                   : fuse_original(*vs.spatial, *vs.temporal, cfg.fusion_weights);
      auto af = attr_features.find(s.video_id);
      if (af == attr_features.end() || af->second.empty()) {
        row.p2 = uniform;
      } else {
        row.p2 = attribute_predict(af->second, models.encoder, sm.linear,
                                   sm.netvlad ? &*sm.netvlad : nullptr);
      }
      row.joint = joint_predict(row.p1, row.p2, cfg.gate);
      double conf = *std::max_element(row.p1.begin(), row.p1.end());
      row.routed = !(conf > cfg.gate.threshold);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  PredictionMap m1, m2, mj;
  std::size_t routed = 0;
  for (std::size_t i = 0; i < test_samples.size(); ++i) {
    const VideoSample& s = *test_samples[i];
    std::pair<int, std::string> key{s.split_index, s.video_id};
    m1[key] = rows[i].p1;
    m2[key] = rows[i].p2;
    mj[key] = rows[i].joint;
    routed += rows[i].routed ? 1 : 0;
  }

  PipelineReports out;
  out.p1_only = evaluate(data.samples, m1, num_classes);
  out.p2_only = evaluate(data.samples, m2, num_classes);
  out.joint = evaluate(data.samples, mj, num_classes);
  out.joint.gate_fraction = (double)routed / (double)test_samples.size();
  return out;
}

}  // namespace a3d
