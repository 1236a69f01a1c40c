#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "a3d/encoding.hpp"
#include "a3d/types.hpp"

namespace a3d {

struct TrainConfig {
  double initial_lr = 0.001;
  double decay_factor = 0.1;
  int decay_every_epochs = 10;
  double momentum = 0.7;
  double weight_decay = 0.0005;
  int max_epochs = 20;
  int batch_size = 32;  // 0 = full batch
  std::uint64_t seed = 0;
  void validate() const;
};

// initial_lr * decay_factor^floor(epoch / decay_every_epochs), computed by
// stepped multiplication so the schedule values match their decimal forms.
double lr_at(long epoch, const TrainConfig& cfg);

// v <- momentum*v + (grad + weight_decay*param); param <- param - lr*v.
// Throws on shape mismatch or non-finite gradient.
void sgd_step(std::span<double> params, std::span<const double> grads,
              std::span<double> velocity, double lr, double momentum, double weight_decay);

struct EpochLog {
  long epoch = 0;   // 0-based
  double lr = 0.0;
  double loss = 0.0;  // mean pre-update training loss over the epoch
};

struct LinearTrainResult {
  LinearModel model;
  std::vector<EpochLog> log;
};

// Mini-batch SGD on softmax cross-entropy, zero-initialized weights,
// seeded shuffling. Requires at least one example of every class.
LinearTrainResult train_linear_classifier(std::span<const Vec> xs, std::span<const int> labels,
                                          std::size_t num_classes, const TrainConfig& cfg);

struct NetVladTrainResult {
  NetVladParams params;
  LinearModel model;
  std::vector<EpochLog> log;
};

// End-to-end SGD through the linear head and the NetVLAD aggregation.
// Each group is one video's attribute descriptors (all non-empty).
NetVladTrainResult train_netvlad_classifier(std::span<const std::vector<Vec>> groups,
                                            std::span<const int> labels,
                                            std::size_t num_classes, const TrainConfig& cfg,
                                            std::size_t clusters);

// Central finite differences against an analytic gradient; the relative
// error denominator is max(1, |analytic|, |numeric|) per coordinate.
// Returns the maximum relative error. Throws NumericError on non-finite
// loss evaluations.
double grad_check(const std::function<double(std::span<const double>)>& loss,
                  std::span<const double> point, std::span<const double> analytic_grad,
                  double eps);

// Fraction of examples whose argmax logit equals the label.
double classification_accuracy(const LinearModel& model, std::span<const Vec> xs,
                               std::span<const int> labels);

}  // namespace a3d
