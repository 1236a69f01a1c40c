#include "a3d/pipeline.hpp"

#include <iostream>
#include <unordered_map>

namespace a3d {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::mean_pool: return "mean-pool";
    case Strategy::netvlad: return "netvlad";
    case Strategy::attr_classifier: return "attr-classifier";
  }
  return "?";
}

std::optional<Strategy> strategy_from_name(std::string_view name) {
  if (name == "mean-pool" || name == "mean_pool") return Strategy::mean_pool;
  if (name == "netvlad") return Strategy::netvlad;
  if (name == "attr-classifier" || name == "attr_classifier") return Strategy::attr_classifier;
  return std::nullopt;
}

EncoderKind strategy_encoder(Strategy s) {
  switch (s) {
    case Strategy::mean_pool: return EncoderKind::mean_pool;
    case Strategy::netvlad: return EncoderKind::netvlad;
    case Strategy::attr_classifier: return EncoderKind::pred_agg;
  }
  return EncoderKind::pred_agg;
}

TrainedModels train_strategy(const DatasetBundle& data, int split_index, Strategy strategy,
                             const FilterConfig& filters, const TrainConfig& cfg,
                             std::size_t clusters) {
  // Training videos of this split, in sample order.
  std::vector<std::pair<std::string, int>> train_videos;
  for (const auto& s : data.samples)
    if (s.split_index == split_index && s.split == Split::train)
      train_videos.emplace_back(s.video_id, s.true_label);
  if (train_videos.empty())
    throw ValidationError("train: split " + std::to_string(split_index) +
                          " has no training videos");

  auto filtered = apply_test_filters(data.detections, filters);
  std::unordered_map<std::string, std::vector<DetectionRecord>> by_video;
  for (auto& d : filtered) by_video[d.video_id].push_back(std::move(d));

  const std::size_t num_classes = data.vocab.size();
  TrainedModels out;
  if (strategy == Strategy::attr_classifier) {
    std::vector<Vec> xs;
    std::vector<int> ys;
    for (const auto& [vid, label] : train_videos) {
      auto it = by_video.find(vid);
      if (it == by_video.end()) continue;
      auto kept = filter_by_relevance(it->second, data.vocab.label_words((std::size_t)label),
                                      data.embeddings, filters.t_sim);
      for (const auto& d : kept)
        if (d.feature) {
          xs.push_back(*d.feature);
          ys.push_back(label);
        }
    }
    auto res = train_linear_classifier(xs, ys, num_classes, cfg);
    out.linear = std::move(res.model);
    out.log = std::move(res.log);
    return out;
  }

  // mean-pool and netvlad train on per-video feature groups.
  std::vector<std::vector<Vec>> groups;
  std::vector<int> labels;
  for (const auto& [vid, label] : train_videos) {
    auto it = by_video.find(vid);
    if (it == by_video.end()) continue;
    std::vector<Vec> feats;
    for (const auto& d : it->second)
      if (d.feature) feats.push_back(*d.feature);
    if (feats.empty()) {
      std::cerr << "warning: training video '" << vid
                << "' has no attribute features after filtering, skipped\n";
      continue;
    }
    groups.push_back(std::move(feats));
    labels.push_back(label);
  }

  if (strategy == Strategy::netvlad) {
    auto res = train_netvlad_classifier(groups, labels, num_classes, cfg, clusters);
    out.linear = std::move(res.model);
    out.netvlad = std::move(res.params);
    out.log = std::move(res.log);
    return out;
  }
  std::vector<Vec> reps(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) reps[i] = mean_pool(groups[i]);
  auto res = train_linear_classifier(reps, labels, num_classes, cfg);
  out.linear = std::move(res.model);
  out.log = std::move(res.log);
  return out;
}

}  // namespace a3d
