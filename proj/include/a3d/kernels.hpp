#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "a3d/encoding.hpp"
#include "a3d/types.hpp"

namespace a3d::kernels {

// Fixed-shape pairwise reduction: split at the midpoint, recurse. The tree
// depends only on n, so results are bitwise reproducible and independent of
// the thread count of any loop that calls this per output slot.
template <typename Term>
double tree_sum(std::size_t lo, std::size_t hi, const Term& term) {
  std::size_t n = hi - lo;
  if (n == 0) return 0.0;
  if (n == 1) return term(lo);
  if (n == 2) return term(lo) + term(lo + 1);
  std::size_t mid = lo + n / 2;
  return tree_sum(lo, mid, term) + tree_sum(mid, hi, term);
}

double pairwise_sum(std::span<const double> v);

// Every kernel below has a serial reference twin. The OpenMP variant
// parallelizes over independent output slots only, so the two must agree
// bit for bit; tests assert exactly that.

// logits[i] = W x_i + b
std::vector<Vec> linear_logits_serial(const LinearModel& model, std::span<const Vec> xs);
std::vector<Vec> linear_logits(const LinearModel& model, std::span<const Vec> xs);

struct CeBatch {
  double loss = 0.0;                 // mean cross-entropy over the batch
  std::vector<double> grad_weights;  // d loss / d W, row-major
  std::vector<double> grad_biases;   // d loss / d b
};

// Mean-reduced softmax cross-entropy loss and gradient. Per-example
// probabilities are computed in parallel; each gradient entry is a pairwise
// tree sum over examples.
CeBatch ce_loss_grad_serial(const LinearModel& model, std::span<const Vec> xs,
                            std::span<const int> labels);
CeBatch ce_loss_grad(const LinearModel& model, std::span<const Vec> xs,
                     std::span<const int> labels);

// Mean cross-entropy without gradients (evaluation).
double ce_loss(const LinearModel& model, std::span<const Vec> xs, std::span<const int> labels);

// One representation per feature group.
std::vector<Vec> encode_mean_pool_serial(std::span<const std::vector<Vec>> groups);
std::vector<Vec> encode_mean_pool(std::span<const std::vector<Vec>> groups);
std::vector<Vec> encode_netvlad_serial(std::span<const std::vector<Vec>> groups,
                                       const NetVladParams& params);
std::vector<Vec> encode_netvlad(std::span<const std::vector<Vec>> groups,
                                const NetVladParams& params);

// out[j] = tree-sum over blocks i of blocks[i*m + j]; blocks is n x m row-major.
void reduce_blocks_serial(const double* blocks, std::size_t n, std::size_t m, double* out);
void reduce_blocks(const double* blocks, std::size_t n, std::size_t m, double* out);

}  // namespace a3d::kernels
