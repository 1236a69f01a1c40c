#include "a3d/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace a3d::kernels {

double pairwise_sum(std::span<const double> v) {
  return tree_sum(0, v.size(), [&](std::size_t i) { return v[i]; });
}

static void check_batch(const LinearModel& model, std::span<const Vec> xs) {
  model.validate();
  if (xs.empty()) throw ValidationError("batch kernel: empty batch");
  for (const auto& x : xs)
    if (x.size() != model.input_dim)
      throw ValidationError("batch kernel: input dimension " + std::to_string(x.size()) +
                            ", expected " + std::to_string(model.input_dim));
}

static std::vector<Vec> linear_logits_impl(const LinearModel& model, std::span<const Vec> xs,
                                           bool par) {
  check_batch(model, xs);
  const std::size_t n = xs.size(), c = model.num_classes, d = model.input_dim;
  std::vector<Vec> out(n);
#pragma omp parallel for schedule(static) if (par)
  for (long long i = 0; i < (long long)n; ++i) {
    Vec row(c);
    for (std::size_t j = 0; j < c; ++j) {
      double dot = model.biases[j];
      const double* w = model.weights.data() + j * d;
      const double* x = xs[i].data();
      for (std::size_t t = 0; t < d; ++t) dot += w[t] * x[t];
      row[j] = dot;
    }
    out[i] = std::move(row);
  }
  return out;
}

std::vector<Vec> linear_logits_serial(const LinearModel& model, std::span<const Vec> xs) {
  return linear_logits_impl(model, xs, false);
}
std::vector<Vec> linear_logits(const LinearModel& model, std::span<const Vec> xs) {
  return linear_logits_impl(model, xs, true);
}

// Per-example softmax probabilities with the true-class entry subtracted
// (dl = p - onehot(y)), plus the per-example loss, both N x C / N.
static void ce_forward(const LinearModel& model, std::span<const Vec> xs,
                       std::span<const int> labels, std::vector<double>& dl,
                       std::vector<double>& loss_i, bool par) {
  check_batch(model, xs);
  if (labels.size() != xs.size())
    throw ValidationError("ce kernel: batch has " + std::to_string(xs.size()) + " examples but " +
                          std::to_string(labels.size()) + " labels");
  const std::size_t n = xs.size(), c = model.num_classes, d = model.input_dim;
  for (int y : labels)
    if (y < 0 || (std::size_t)y >= c)
      throw ValidationError("ce kernel: label " + std::to_string(y) + " outside [0, " +
                            std::to_string(c) + ")");
  dl.assign(n * c, 0.0);
  loss_i.assign(n, 0.0);
#pragma omp parallel for schedule(static) if (par)
  for (long long i = 0; i < (long long)n; ++i) {
    double* row = dl.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) {
      double dot = model.biases[j];
      const double* w = model.weights.data() + j * d;
      for (std::size_t t = 0; t < d; ++t) dot += w[t] * xs[i][t];
      row[j] = dot;
    }
    double m = *std::max_element(row, row + c);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(row[j] - m);
    double log_z = std::log(sum) + m;
    loss_i[i] = log_z - row[labels[i]];
    for (std::size_t j = 0; j < c; ++j) row[j] = std::exp(row[j] - log_z);
    row[labels[i]] -= 1.0;
  }
}

static CeBatch ce_loss_grad_impl(const LinearModel& model, std::span<const Vec> xs,
                                 std::span<const int> labels, bool par) {
  const std::size_t n = xs.size(), c = model.num_classes, d = model.input_dim;
  std::vector<double> dl, loss_i;
  ce_forward(model, xs, labels, dl, loss_i, par);

  CeBatch out;
  out.grad_weights.assign(c * d, 0.0);
  out.grad_biases.assign(c, 0.0);
  const double inv_n = 1.0 / (double)n;
#pragma omp parallel for schedule(static) if (par)
  for (long long j = 0; j < (long long)(c * d); ++j) {
    std::size_t cls = (std::size_t)j / d, t = (std::size_t)j % d;
    out.grad_weights[j] =
        inv_n * tree_sum(0, n, [&](std::size_t i) { return dl[i * c + cls] * xs[i][t]; });
  }
#pragma omp parallel for schedule(static) if (par)
  for (long long cls = 0; cls < (long long)c; ++cls)
    out.grad_biases[cls] =
        inv_n * tree_sum(0, n, [&](std::size_t i) { return dl[i * c + cls]; });
  out.loss = inv_n * pairwise_sum(loss_i);
  return out;
}

CeBatch ce_loss_grad_serial(const LinearModel& model, std::span<const Vec> xs,
                            std::span<const int> labels) {
  return ce_loss_grad_impl(model, xs, labels, false);
}
CeBatch ce_loss_grad(const LinearModel& model, std::span<const Vec> xs,
                     std::span<const int> labels) {
  return ce_loss_grad_impl(model, xs, labels, true);
}

double ce_loss(const LinearModel& model, std::span<const Vec> xs, std::span<const int> labels) {
  std::vector<double> dl, loss_i;
  ce_forward(model, xs, labels, dl, loss_i, true);
  return pairwise_sum(loss_i) / (double)xs.size();
}

template <typename Encode>
static std::vector<Vec> encode_impl(std::span<const std::vector<Vec>> groups, bool par,
                                    const Encode& encode) {
  std::vector<Vec> out(groups.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) if (par)
  for (long long i = 0; i < (long long)groups.size(); ++i) {
    try {
      out[i] = encode(groups[i]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<Vec> encode_mean_pool_serial(std::span<const std::vector<Vec>> groups) {
  return encode_impl(groups, false, [](const std::vector<Vec>& g) { return mean_pool(g); });
}
std::vector<Vec> encode_mean_pool(std::span<const std::vector<Vec>> groups) {
  return encode_impl(groups, true, [](const std::vector<Vec>& g) { return mean_pool(g); });
}
std::vector<Vec> encode_netvlad_serial(std::span<const std::vector<Vec>> groups,
                                       const NetVladParams& params) {
  return encode_impl(groups, false,
                     [&](const std::vector<Vec>& g) { return netvlad_forward(g, params); });
}
std::vector<Vec> encode_netvlad(std::span<const std::vector<Vec>> groups,
                                const NetVladParams& params) {
  return encode_impl(groups, true,
                     [&](const std::vector<Vec>& g) { return netvlad_forward(g, params); });
}

static void reduce_blocks_impl(const double* blocks, std::size_t n, std::size_t m, double* out,
                               bool par) {
#pragma omp parallel for schedule(static) if (par)
  for (long long j = 0; j < (long long)m; ++j)
    out[j] = tree_sum(0, n, [&](std::size_t i) { return blocks[i * m + j]; });
}

void reduce_blocks_serial(const double* blocks, std::size_t n, std::size_t m, double* out) {
  reduce_blocks_impl(blocks, n, m, out, false);
}
void reduce_blocks(const double* blocks, std::size_t n, std::size_t m, double* out) {
  reduce_blocks_impl(blocks, n, m, out, true);
}

}  // namespace a3d::kernels
