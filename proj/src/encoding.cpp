#include "a3d/encoding.hpp"

#include <algorithm>
#include <cmath>

#include "a3d/fusion.hpp"

namespace a3d {

std::string_view encoder_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::mean_pool: return "mean_pool";
    case EncoderKind::netvlad: return "netvlad";
    case EncoderKind::pred_agg: return "pred_agg";
  }
  return "?";
}

std::optional<EncoderKind> encoder_from_name(std::string_view name) {
  if (name == "mean_pool" || name == "mean-pool") return EncoderKind::mean_pool;
  if (name == "netvlad") return EncoderKind::netvlad;
  if (name == "pred_agg" || name == "pred-agg") return EncoderKind::pred_agg;
  return std::nullopt;
}

void NetVladParams::validate() const {
  if (clusters < 1 || dim < 1) throw ValidationError("netvlad params: K and D must be >= 1");
  if (centers.size() != clusters * dim || assign_weights.size() != clusters * dim ||
      assign_biases.size() != clusters)
    throw ValidationError("netvlad params: inconsistent shapes");
  if (!all_finite(centers) || !all_finite(assign_weights) || !all_finite(assign_biases))
    throw ValidationError("netvlad params: non-finite entries");
}

static void check_features(std::span<const Vec> features, std::size_t dim, const char* who) {
  if (features.empty()) throw ValidationError(std::string(who) + ": empty feature list");
  for (const auto& f : features)
    if (f.size() != dim)
      throw ValidationError(std::string(who) + ": feature dimension " + std::to_string(f.size()) +
                            ", expected " + std::to_string(dim));
}

Vec mean_pool(std::span<const Vec> features) {
  check_features(features, features.empty() ? 0 : features[0].size(), "mean_pool");
  Vec out(features[0].size(), 0.0);
  for (const auto& f : features)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += f[i];
  for (double& x : out) x /= (double)features.size();
  return out;
}

// Soft-assignment matrix, N x K row-major.
static std::vector<double> assignments(std::span<const Vec> features,
                                       const NetVladParams& p) {
  const std::size_t n = features.size(), k = p.clusters;
  std::vector<double> a(n * k);
  Vec logits(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      double dot = p.assign_biases[c];
      auto w = p.weight_row(c);
      for (std::size_t d = 0; d < p.dim; ++d) dot += w[d] * features[i][d];
      logits[c] = dot;
    }
    Vec sm = softmax(logits);
    std::copy(sm.begin(), sm.end(), a.begin() + (long)(i * k));
  }
  return a;
}

Vec netvlad_forward_raw(std::span<const Vec> features, const NetVladParams& params) {
  params.validate();
  check_features(features, params.dim, "netvlad");
  const std::size_t n = features.size(), k = params.clusters, dim = params.dim;
  std::vector<double> a = assignments(features, params);
  Vec v(k * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) {
      double aik = a[i * k + c];
      auto ctr = params.center(c);
      for (std::size_t d = 0; d < dim; ++d)
        v[c * dim + d] += aik * (features[i][d] - ctr[d]);
    }
  return v;
}

static double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Vec netvlad_forward(std::span<const Vec> features, const NetVladParams& params) {
  Vec v = netvlad_forward_raw(features, params);
  const std::size_t k = params.clusters, dim = params.dim;
  for (std::size_t c = 0; c < k; ++c) {
    std::span<double> row(v.data() + c * dim, dim);
    double n = l2_norm(row);
    if (n > 0.0)
      for (double& x : row) x /= n;
  }
  double g = l2_norm(v);
  if (g > 0.0)
    for (double& x : v) x /= g;
  return v;
}

NetVladGradients netvlad_gradients(std::span<const Vec> features, const NetVladParams& params,
                                   std::span<const double> upstream) {
  params.validate();
  check_features(features, params.dim, "netvlad");
  const std::size_t n = features.size(), k = params.clusters, dim = params.dim;
  if (upstream.size() != k * dim)
    throw ValidationError("netvlad gradients: upstream length " + std::to_string(upstream.size()) +
                          ", expected " + std::to_string(k * dim));
  if (!all_finite(upstream)) throw NumericError("netvlad gradients: non-finite upstream");

  // Recompute the forward pass, keeping intermediates.
  std::vector<double> a = assignments(features, params);
  Vec v = netvlad_forward_raw(features, params);

  Vec intra = v;  // row-normalized
  Vec row_norm(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::span<double> row(intra.data() + c * dim, dim);
    row_norm[c] = l2_norm(row);
    if (row_norm[c] > 0.0)
      for (double& x : row) x /= row_norm[c];
  }
  double gnorm = l2_norm(intra);
  Vec z = intra;
  if (gnorm > 0.0)
    for (double& x : z) x /= gnorm;

  // Backward through the global normalization: z = y/|y|.
  Vec g_intra(k * dim);
  if (gnorm > 0.0) {
    double uz = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) uz += upstream[i] * z[i];
    for (std::size_t i = 0; i < z.size(); ++i)
      g_intra[i] = (upstream[i] - uz * z[i]) / gnorm;
  } else {
    std::copy(upstream.begin(), upstream.end(), g_intra.begin());
  }

  // Backward through the per-row normalization.
  Vec g_v(k * dim);
  for (std::size_t c = 0; c < k; ++c) {
    std::span<const double> gu(g_intra.data() + c * dim, dim);
    std::span<const double> t(intra.data() + c * dim, dim);
    std::span<double> gv(g_v.data() + c * dim, dim);
    if (row_norm[c] > 0.0) {
      double gt = 0.0;
      for (std::size_t d = 0; d < dim; ++d) gt += gu[d] * t[d];
      for (std::size_t d = 0; d < dim; ++d) gv[d] = (gu[d] - gt * t[d]) / row_norm[c];
    } else {
      std::copy(gu.begin(), gu.end(), gv.begin());
    }
  }

  NetVladGradients out;
  out.params.clusters = k;
  out.params.dim = dim;
  out.params.centers.assign(k * dim, 0.0);
  out.params.assign_weights.assign(k * dim, 0.0);
  out.params.assign_biases.assign(k, 0.0);
  out.features.assign(n, Vec(dim, 0.0));

  // grad c_k = -(sum_i a_ik) g_vk
  Vec a_colsum(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) a_colsum[c] += a[i * k + c];
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < dim; ++d)
      out.params.centers[c * dim + d] = -a_colsum[c] * g_v[c * dim + d];

  // Through the soft-assignment: r_ik = g_vk . (x_i - c_k),
  // s_ik = a_ik (r_ik - sum_j a_ij r_ij).
  Vec r(k), s(k);
  for (std::size_t i = 0; i < n; ++i) {
    double mean_r = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double dot = 0.0;
      auto ctr = params.center(c);
      for (std::size_t d = 0; d < dim; ++d)
        dot += g_v[c * dim + d] * (features[i][d] - ctr[d]);
      r[c] = dot;
      mean_r += a[i * k + c] * dot;
    }
    for (std::size_t c = 0; c < k; ++c) s[c] = a[i * k + c] * (r[c] - mean_r);

    for (std::size_t c = 0; c < k; ++c) {
      out.params.assign_biases[c] += s[c];
      for (std::size_t d = 0; d < dim; ++d)
        out.params.assign_weights[c * dim + d] += s[c] * features[i][d];
    }
    // grad x_i = sum_k a_ik g_vk + sum_k s_ik w_k
    for (std::size_t c = 0; c < k; ++c) {
      double aik = a[i * k + c];
      auto w = params.weight_row(c);
      for (std::size_t d = 0; d < dim; ++d)
        out.features[i][d] += aik * g_v[c * dim + d] + s[c] * w[d];
    }
  }
  return out;
}

Vec aggregate_attribute_predictions(std::span<const Vec> per_attr) {
  check_features(per_attr, per_attr.empty() ? 0 : per_attr[0].size(),
                 "aggregate_attribute_predictions");
  return mean_pool(per_attr);
}

NetVladParams init_netvlad_params(std::span<const Vec> training_features, std::size_t clusters,
                                  Rng& rng, double alpha) {
  if (clusters < 1) throw ValidationError("netvlad init: clusters must be >= 1");
  check_features(training_features, training_features.empty() ? 0 : training_features[0].size(),
                 "netvlad init");
  const std::size_t dim = training_features[0].size();
  NetVladParams p;
  p.clusters = clusters;
  p.dim = dim;
  p.centers.reserve(clusters * dim);
  for (std::size_t c = 0; c < clusters; ++c) {
    const Vec& f = training_features[rng.uniform_index(training_features.size())];
    for (std::size_t d = 0; d < dim; ++d)
      p.centers.push_back(f[d] + 1e-3 * rng.normal());  // jitter separates repeat draws
  }
  p.assign_weights.resize(clusters * dim);
  p.assign_biases.resize(clusters);
  for (std::size_t c = 0; c < clusters; ++c) {
    double sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      double ck = p.centers[c * dim + d];
      p.assign_weights[c * dim + d] = 2.0 * alpha * ck;
      sq += ck * ck;
    }
    p.assign_biases[c] = -alpha * sq;
  }
  return p;
}

}  // namespace a3d
