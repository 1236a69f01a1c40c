#pragma once

#include <span>

#include "a3d/types.hpp"

namespace a3d {

struct FusionWeights {
  double spatial = 0.6;
  double temporal = 0.4;
  void validate() const;  // both >= 0, sum > 0
};

enum class FusionKind { revised, original };

// Numerically stable (max-subtracted) softmax. Throws on empty or
// non-finite input.
Vec softmax(std::span<const double> logits);

// Weighted elementwise sum of the stream fc features, then one softmax.
Vec fuse_revised(std::span<const double> f_spatial, std::span<const double> f_temporal,
                 const FusionWeights& w);

// Per-stream softmax first, then weighted sum divided by the weight sum so
// the result is a distribution for any valid weights.
Vec fuse_original(std::span<const double> f_spatial, std::span<const double> f_temporal,
                  const FusionWeights& w);

}  // namespace a3d
