#include "a3d/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace a3d {

void FusionWeights::validate() const {
  if (!(spatial >= 0.0) || !(temporal >= 0.0))
    throw ValidationError("fusion weights must be non-negative");
  if (!(spatial + temporal > 0.0))
    throw ValidationError("fusion weights must not both be zero");
}

Vec softmax(std::span<const double> logits) {
  if (logits.empty()) throw ValidationError("softmax: empty vector");
  if (!all_finite(logits)) throw NumericError("softmax: non-finite logit");
  double m = *std::max_element(logits.begin(), logits.end());
  Vec out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

static void check_dims(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("fusion: stream dimension mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
}

Vec fuse_revised(std::span<const double> f_spatial, std::span<const double> f_temporal,
                 const FusionWeights& w) {
  check_dims(f_spatial, f_temporal);
  w.validate();
  Vec summed(f_spatial.size());
  for (std::size_t i = 0; i < summed.size(); ++i)
    summed[i] = w.spatial * f_spatial[i] + w.temporal * f_temporal[i];
  return softmax(summed);
}

Vec fuse_original(std::span<const double> f_spatial, std::span<const double> f_temporal,
                  const FusionWeights& w) {
  check_dims(f_spatial, f_temporal);
  w.validate();
  Vec ps = softmax(f_spatial);
  Vec pt = softmax(f_temporal);
  double wsum = w.spatial + w.temporal;
  Vec out(ps.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (w.spatial * ps[i] + w.temporal * pt[i]) / wsum;
  return out;
}

}  // namespace a3d
