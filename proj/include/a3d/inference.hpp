#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "a3d/attributes.hpp"
#include "a3d/encoding.hpp"
#include "a3d/fusion.hpp"
#include "a3d/types.hpp"

namespace a3d {

struct GateConfig {
  double threshold = 0.1;
  void validate() const;
};

// 1 iff x > 0.
int indicator(double x);

// Returns p1 exactly when max(p1) > threshold, otherwise p2 exactly.
// The tie max(p1) == threshold routes to p2: both indicator terms vanish
// there and the attribute pipeline is the fallback.
Vec joint_predict(std::span<const double> p1, std::span<const double> p2,
                  const GateConfig& gate);

struct EvalReport {
  struct SplitStat {
    int split_index = 0;
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
  };
  struct ClassStat {
    std::size_t total = 0;
    std::size_t correct = 0;
  };
  std::vector<SplitStat> splits;          // ascending split index
  double mean_accuracy = 0.0;             // arithmetic mean over splits
  std::vector<ClassStat> per_class;       // indexed by class, across all splits
  std::optional<double> gate_fraction;    // fraction of test videos routed to p2
};

// (split_index, video_id) -> predicted distribution.
using PredictionMap = std::map<std::pair<int, std::string>, Vec>;

// Accuracy of argmax(prediction) == true_label over the test samples,
// reported per split and averaged. Ties break to the lowest class index.
// Throws when a test sample has no prediction.
EvalReport evaluate(std::span<const VideoSample> samples, const PredictionMap& predictions,
                    std::size_t num_classes);

struct DatasetBundle {
  ClassVocabulary vocab;
  std::vector<VideoSample> samples;
  std::vector<StreamFeatures> features;
  std::vector<DetectionRecord> detections;
  EmbeddingTable embeddings;
};

struct SplitModels {
  LinearModel linear;
  std::optional<NetVladParams> netvlad;  // present for the netvlad encoder
};

struct PipelineModels {
  EncoderKind encoder = EncoderKind::pred_agg;
  std::map<int, SplitModels> per_split;
};

struct PipelineConfig {
  FusionWeights fusion_weights;
  FusionKind fusion_kind = FusionKind::revised;
  FilterConfig filters;
  GateConfig gate;
};

struct PipelineReports {
  EvalReport p1_only;
  EvalReport p2_only;
  EvalReport joint;
};

// p1 from stream fusion, p2 from the attribute path (test-time filters,
// then the chosen encoder + classifier; a video left with no usable
// attribute features falls back to the uniform distribution), p from the
// gate. All three evaluated on the identical test samples.
PipelineReports run_pipeline(const DatasetBundle& data, const PipelineConfig& cfg,
                             const PipelineModels& models);

// The attribute-pipeline distribution for one video's filtered features.
Vec attribute_predict(const std::vector<Vec>& features, EncoderKind encoder,
                      const LinearModel& model, const NetVladParams* netvlad);

}  // namespace a3d
