#pragma once

#include <span>
#include <vector>

#include "a3d/rng.hpp"
#include "a3d/types.hpp"

namespace a3d {

enum class EncoderKind { mean_pool, netvlad, pred_agg };

std::string_view encoder_name(EncoderKind k);
std::optional<EncoderKind> encoder_from_name(std::string_view name);

struct NetVladParams {
  std::size_t clusters = 0;  // K
  std::size_t dim = 0;       // D
  std::vector<double> centers;         // K x D row-major
  std::vector<double> assign_weights;  // K x D row-major
  std::vector<double> assign_biases;   // K

  std::span<const double> center(std::size_t k) const { return {centers.data() + k * dim, dim}; }
  std::span<const double> weight_row(std::size_t k) const {
    return {assign_weights.data() + k * dim, dim};
  }
  std::size_t param_count() const { return 2 * clusters * dim + clusters; }
  void validate() const;
};

// Elementwise arithmetic mean. Throws on empty list or ragged dimensions.
Vec mean_pool(std::span<const Vec> features);

// Soft-assign a_k(x_i) = softmax_k(w_k.x_i + b_k); V[k] = sum_i a_k(x_i)(x_i - c_k);
// per-row L2 normalization, flatten, global L2 normalization. Zero rows and a
// zero flattened vector are left as zeros.
Vec netvlad_forward(std::span<const Vec> features, const NetVladParams& params);

// The residual matrix V before either normalization stage, flattened K x D.
Vec netvlad_forward_raw(std::span<const Vec> features, const NetVladParams& params);

struct NetVladGradients {
  NetVladParams params;            // same shape as the input params; holds gradients
  std::vector<Vec> features;       // gradient per input descriptor
};

// Exact gradients of upstream . netvlad_forward(features, params) with
// respect to every parameter and every input descriptor, through both
// normalization stages. Where a normalization hit an exactly-zero vector
// in the forward pass it is skipped there, and the gradient treats that
// stage as identity.
NetVladGradients netvlad_gradients(std::span<const Vec> features, const NetVladParams& params,
                                   std::span<const double> upstream);

// Elementwise mean of per-attribute class distributions.
Vec aggregate_attribute_predictions(std::span<const Vec> per_attr);

// Centers sampled from the training descriptors (seeded); w_k = 2*alpha*c_k,
// b_k = -alpha*|c_k|^2 with alpha = 1 so initial soft-assignments follow
// nearest-center geometry.
NetVladParams init_netvlad_params(std::span<const Vec> training_features, std::size_t clusters,
                                  Rng& rng, double alpha = 1.0);

}  // namespace a3d
