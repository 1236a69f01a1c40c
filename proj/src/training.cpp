#include "a3d/training.hpp"

#include <algorithm>
#include <cmath>

#include "a3d/fusion.hpp"
#include "a3d/kernels.hpp"
#include "a3d/rng.hpp"

namespace a3d {

void TrainConfig::validate() const {
  if (!(initial_lr > 0.0)) throw ValidationError("initial_lr must be > 0");
  if (!(decay_factor > 0.0) || !(decay_factor <= 1.0))
    throw ValidationError("decay_factor must be in (0,1]");
  if (decay_every_epochs < 1) throw ValidationError("decay_every_epochs must be >= 1");
  if (!(momentum >= 0.0) || !(momentum < 1.0))
    throw ValidationError("momentum must be in [0,1)");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be >= 0");
  if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
  if (batch_size < 0) throw ValidationError("batch_size must be >= 0");
}

double lr_at(long epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw ValidationError("lr_at: negative epoch");
  long steps = epoch / cfg.decay_every_epochs;
  double lr = cfg.initial_lr;
  for (long i = 0; i < steps; ++i) lr *= cfg.decay_factor;
  return lr;
}

void sgd_step(std::span<double> params, std::span<const double> grads,
              std::span<double> velocity, double lr, double momentum, double weight_decay) {
  if (params.size() != grads.size() || params.size() != velocity.size())
    throw ValidationError("sgd_step: shape mismatch");
  if (!all_finite(grads)) throw NumericError("sgd_step: non-finite gradient");
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + (grads[i] + weight_decay * params[i]);
    params[i] -= lr * velocity[i];
  }
}

namespace {

// Epoch loop shared by both trainers: seeded shuffle, batch slicing,
// pre-update loss logging. Full-batch mode keeps the dataset order: the
// single batch sees every example either way, and a stable order makes the
// epoch gradient reproducible as a fixed pairwise tree.
template <typename BatchStep>
std::vector<EpochLog> run_epochs(std::size_t n, const TrainConfig& cfg, Rng& rng,
                                 const BatchStep& step) {
  std::vector<EpochLog> log;
  const bool full_batch = cfg.batch_size == 0;
  const std::size_t batch = full_batch ? n : (std::size_t)cfg.batch_size;
  std::vector<std::size_t> identity(n);
  for (std::size_t i = 0; i < n; ++i) identity[i] = i;
  for (long epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    double lr = lr_at(epoch, cfg);
    auto order = full_batch ? identity : rng.permutation(n);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      std::size_t end = std::min(start + batch, n);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      double batch_loss = step(idx, lr);
      loss_sum += batch_loss * (double)idx.size();
    }
    log.push_back({epoch, lr, loss_sum / (double)n});
  }
  return log;
}

void require_all_classes(std::span<const int> labels, std::size_t num_classes) {
  if (labels.empty()) throw ValidationError("training: empty dataset");
  std::vector<char> seen(num_classes, 0);
  for (int y : labels) {
    if (y < 0 || (std::size_t)y >= num_classes)
      throw ValidationError("training: label " + std::to_string(y) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    seen[y] = 1;
  }
  for (std::size_t c = 0; c < num_classes; ++c)
    if (!seen[c])
      throw ValidationError("training: class " + std::to_string(c) + " has no examples");
}

}  // namespace

LinearTrainResult train_linear_classifier(std::span<const Vec> xs, std::span<const int> labels,
                                          std::size_t num_classes, const TrainConfig& cfg) {
  cfg.validate();
  if (xs.size() != labels.size())
    throw ValidationError("training: examples/labels size mismatch");
  require_all_classes(labels, num_classes);
  const std::size_t dim = xs[0].size();
  for (const auto& x : xs)
    if (x.size() != dim) throw ValidationError("training: ragged feature dimensions");

  LinearModel model = LinearModel::zeros(num_classes, dim);
  std::vector<double> vel_w(model.weights.size(), 0.0), vel_b(model.biases.size(), 0.0);
  Rng rng(cfg.seed);

  auto log = run_epochs(xs.size(), cfg, rng, [&](std::span<const std::size_t> idx, double lr) {
    std::vector<Vec> bx(idx.size());
    std::vector<int> by(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      bx[i] = xs[idx[i]];
      by[i] = labels[idx[i]];
    }
    auto g = kernels::ce_loss_grad(model, bx, by);
    sgd_step(model.weights, g.grad_weights, vel_w, lr, cfg.momentum, cfg.weight_decay);
    sgd_step(model.biases, g.grad_biases, vel_b, lr, cfg.momentum, cfg.weight_decay);
    return g.loss;
  });
  return {std::move(model), std::move(log)};
}

NetVladTrainResult train_netvlad_classifier(std::span<const std::vector<Vec>> groups,
                                            std::span<const int> labels,
                                            std::size_t num_classes, const TrainConfig& cfg,
                                            std::size_t clusters) {
  cfg.validate();
  if (groups.size() != labels.size())
    throw ValidationError("training: groups/labels size mismatch");
  require_all_classes(labels, num_classes);
  for (const auto& g : groups)
    if (g.empty()) throw ValidationError("training: a video has no attribute features");
  const std::size_t dim = groups[0][0].size();

  Rng rng(cfg.seed);
  std::vector<Vec> all_features;
  for (const auto& g : groups) all_features.insert(all_features.end(), g.begin(), g.end());
  NetVladParams nv = init_netvlad_params(all_features, clusters, rng);
  if (nv.dim != dim) throw ValidationError("training: ragged feature dimensions");
  const std::size_t rep_dim = clusters * dim;
  LinearModel head = LinearModel::zeros(num_classes, rep_dim);

  // One flat parameter/velocity layout: [centers | assign_w | assign_b | W | b].
  const std::size_t nv_count = nv.param_count();
  const std::size_t total = nv_count + head.weights.size() + head.biases.size();
  std::vector<double> velocity(total, 0.0);

  auto flatten_params = [&](std::vector<double>& out) {
    out.clear();
    out.reserve(total);
    out.insert(out.end(), nv.centers.begin(), nv.centers.end());
    out.insert(out.end(), nv.assign_weights.begin(), nv.assign_weights.end());
    out.insert(out.end(), nv.assign_biases.begin(), nv.assign_biases.end());
    out.insert(out.end(), head.weights.begin(), head.weights.end());
    out.insert(out.end(), head.biases.begin(), head.biases.end());
  };
  auto unflatten_params = [&](std::span<const double> flat) {
    const double* p = flat.data();
    std::copy(p, p + nv.centers.size(), nv.centers.begin());
    p += nv.centers.size();
    std::copy(p, p + nv.assign_weights.size(), nv.assign_weights.begin());
    p += nv.assign_weights.size();
    std::copy(p, p + nv.assign_biases.size(), nv.assign_biases.begin());
    p += nv.assign_biases.size();
    std::copy(p, p + head.weights.size(), head.weights.begin());
    p += head.weights.size();
    std::copy(p, p + head.biases.size(), head.biases.begin());
  };

  std::vector<double> flat;
  flatten_params(flat);

  auto log = run_epochs(groups.size(), cfg, rng, [&](std::span<const std::size_t> idx, double lr) {
    const std::size_t bn = idx.size();
    // Per-example flat gradient blocks plus the loss in the last slot.
    std::vector<double> blocks(bn * (total + 1), 0.0);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (long long bi = 0; bi < (long long)bn; ++bi) {
      try {
      const auto& feats = groups[idx[bi]];
      const int y = labels[idx[bi]];
      Vec rep = netvlad_forward(feats, nv);
      Vec logits(num_classes);
      for (std::size_t c = 0; c < num_classes; ++c) {
        double dot = head.biases[c];
        for (std::size_t t = 0; t < rep_dim; ++t) dot += head.weights[c * rep_dim + t] * rep[t];
        logits[c] = dot;
      }
      double m = *std::max_element(logits.begin(), logits.end());
      double sum = 0.0;
      for (double l : logits) sum += std::exp(l - m);
      double log_z = std::log(sum) + m;
      double loss = log_z - logits[y];
      Vec dlogits(num_classes);
      for (std::size_t c = 0; c < num_classes; ++c) dlogits[c] = std::exp(logits[c] - log_z);
      dlogits[y] -= 1.0;

      Vec g_rep(rep_dim, 0.0);
      for (std::size_t c = 0; c < num_classes; ++c)
        for (std::size_t t = 0; t < rep_dim; ++t)
          g_rep[t] += head.weights[c * rep_dim + t] * dlogits[c];
      NetVladGradients nvg = netvlad_gradients(feats, nv, g_rep);

      double* blk = blocks.data() + bi * (total + 1);
      double* p = blk;
      p = std::copy(nvg.params.centers.begin(), nvg.params.centers.end(), p);
      p = std::copy(nvg.params.assign_weights.begin(), nvg.params.assign_weights.end(), p);
      p = std::copy(nvg.params.assign_biases.begin(), nvg.params.assign_biases.end(), p);
      for (std::size_t c = 0; c < num_classes; ++c)
        for (std::size_t t = 0; t < rep_dim; ++t) *p++ = dlogits[c] * rep[t];
      p = std::copy(dlogits.begin(), dlogits.end(), p);
      *p = loss;
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    std::vector<double> grad(total + 1);
    kernels::reduce_blocks(blocks.data(), bn, total + 1, grad.data());
    const double inv = 1.0 / (double)bn;
    for (double& g : grad) g *= inv;
    double batch_loss = grad[total];
    grad.resize(total);
    sgd_step(flat, grad, velocity, lr, cfg.momentum, cfg.weight_decay);
    unflatten_params(flat);
    return batch_loss;
  });
  return {std::move(nv), std::move(head), std::move(log)};
}

double grad_check(const std::function<double(std::span<const double>)>& loss,
                  std::span<const double> point, std::span<const double> analytic_grad,
                  double eps) {
  if (!(eps > 0.0)) throw ValidationError("grad_check: eps must be > 0");
  if (point.size() != analytic_grad.size())
    throw ValidationError("grad_check: gradient/point size mismatch");
  std::vector<double> theta(point.begin(), point.end());
  double max_rel = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double orig = theta[i];
    theta[i] = orig + eps;
    double fp = loss(theta);
    theta[i] = orig - eps;
    double fm = loss(theta);
    theta[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("grad_check: non-finite loss evaluation");
    double numeric = (fp - fm) / (2.0 * eps);
    double denom = std::max({1.0, std::abs(analytic_grad[i]), std::abs(numeric)});
    max_rel = std::max(max_rel, std::abs(numeric - analytic_grad[i]) / denom);
  }
  return max_rel;
}

double classification_accuracy(const LinearModel& model, std::span<const Vec> xs,
                               std::span<const int> labels) {
  if (xs.empty()) throw ValidationError("accuracy: empty dataset");
  auto logits = kernels::linear_logits(model, xs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (argmax_lowest(logits[i]) == (std::size_t)labels[i]) ++correct;
  return (double)correct / (double)xs.size();
}

}  // namespace a3d
