#pragma once

#include <optional>

#include "a3d/inference.hpp"
#include "a3d/training.hpp"

namespace a3d {

// The three attribute-representation strategies. attr_classifier trains the
// linear head on individual attribute features and aggregates per-attribute
// predictions at inference (EncoderKind::pred_agg).
enum class Strategy { mean_pool, netvlad, attr_classifier };

std::string_view strategy_name(Strategy s);
std::optional<Strategy> strategy_from_name(std::string_view name);
EncoderKind strategy_encoder(Strategy s);

struct TrainedModels {
  LinearModel linear;
  std::optional<NetVladParams> netvlad;
  std::vector<EpochLog> log;
};

// Trains one split's attribute classifier. Detections pass the test-time
// filters for every strategy; attr_classifier additionally applies the
// embedding relevance filter against each training video's label words.
TrainedModels train_strategy(const DatasetBundle& data, int split_index, Strategy strategy,
                             const FilterConfig& filters, const TrainConfig& cfg,
                             std::size_t clusters);

}  // namespace a3d
