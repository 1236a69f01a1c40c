#pragma once

#include <cstdint>

#include "a3d/inference.hpp"
#include "a3d/types.hpp"

namespace a3d {

struct SyntheticConfig {
  int num_classes = 20;
  int num_videos = 500;
  // Fraction of videos whose stream logits are near-flat, so the gate
  // routes them to the attribute pipeline at the default threshold.
  double low_conf_fraction = 0.3;
  int attr_feature_dim = 0;  // 0 -> num_classes; otherwise must be >= num_classes
  int embedding_dim = 0;     // 0 -> num_classes + 3; otherwise must be > num_classes
  int min_dets_per_video = 3;
  int max_dets_per_video = 8;
  // Share of non-junk detections carrying an off-class label and a noise
  // feature, on videos with confident stream logits.
  double distractor_rate = 0.45;
  // Share of detections that the confidence/bbox/person filters remove.
  double junk_rate = 0.2;
  double train_fraction = 0.7;

  void validate() const;
};

// Deterministic in (config, seed). Construction guarantees:
//  - confident videos: fused stream logits put the true class on top with
//    max softmax well above 0.1; their detections are noisy;
//  - low-confidence videos: near-flat logits (max softmax < 0.1 for
//    num_classes >= 12) but tightly clustered class-discriminative
//    detection features;
//  - each class noun embedding has cosine > 0.5 to its planted attribute
//    words and < 0.5 to every distractor word;
//  - every split has at least one train video per class and a non-empty
//    test set.
DatasetBundle gen_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

}  // namespace a3d
