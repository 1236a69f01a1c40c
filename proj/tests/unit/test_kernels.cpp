#include <doctest.h>

#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "a3d/kernels.hpp"
#include "test_util.hpp"

using namespace a3d;

TEST_CASE("pairwise tree sum is accurate and scale-exact under adjacent duplication") {
  Rng rng(3);
  Vec v = testutil::random_vec(rng, 1000);
  double tree = kernels::pairwise_sum(v);
  long double naive = std::accumulate(v.begin(), v.end(), 0.0L);
  CHECK(std::abs((double)(tree - naive)) < 1e-10);

  // duplicating each term adjacently doubles every node of the tree exactly
  for (std::size_t n : {64, 128, 256}) {
    Vec a = testutil::random_vec(rng, n);
    Vec dup;
    for (double x : a) {
      dup.push_back(x);
      dup.push_back(x);
    }
    CHECK(kernels::pairwise_sum(dup) == 2.0 * kernels::pairwise_sum(a));
  }
}

TEST_CASE("linear_logits parallel twin is bit-exact") {
  Rng rng(7);
  LinearModel m = LinearModel::zeros(13, 31);
  for (double& w : m.weights) w = rng.normal();
  for (double& b : m.biases) b = rng.normal();
  std::vector<Vec> xs;
  for (int i = 0; i < 257; ++i) xs.push_back(testutil::random_vec(rng, 31));
  auto a = kernels::linear_logits_serial(m, xs);
  auto b = kernels::linear_logits(m, xs);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("ce_loss_grad parallel twin is bit-exact") {
  Rng rng(11);
  LinearModel m = LinearModel::zeros(9, 17);
  for (double& w : m.weights) w = 0.1 * rng.normal();
  std::vector<Vec> xs;
  std::vector<int> ys;
  for (int i = 0; i < 203; ++i) {
    xs.push_back(testutil::random_vec(rng, 17));
    ys.push_back((int)rng.uniform_index(9));
  }
  auto a = kernels::ce_loss_grad_serial(m, xs, ys);
  auto b = kernels::ce_loss_grad(m, xs, ys);
  CHECK(a.loss == b.loss);
  CHECK(a.grad_weights == b.grad_weights);
  CHECK(a.grad_biases == b.grad_biases);
}

TEST_CASE("ce_loss_grad matches a naive gradient computation") {
  Rng rng(13);
  LinearModel m = LinearModel::zeros(3, 4);
  for (double& w : m.weights) w = 0.2 * rng.normal();
  for (double& b : m.biases) b = 0.2 * rng.normal();
  std::vector<Vec> xs;
  std::vector<int> ys;
  for (int i = 0; i < 20; ++i) {
    xs.push_back(testutil::random_vec(rng, 4));
    ys.push_back((int)rng.uniform_index(3));
  }
  auto g = kernels::ce_loss_grad(m, xs, ys);

  // naive: average of per-example softmax gradients
  std::vector<double> gw(12, 0.0), gb(3, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Vec logits(3, 0.0);
    for (int c = 0; c < 3; ++c) {
      logits[c] = m.biases[c];
      for (int t = 0; t < 4; ++t) logits[c] += m.weights[c * 4 + t] * xs[i][t];
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    loss += std::log(z) + mx - logits[ys[i]];
    for (int c = 0; c < 3; ++c) {
      double p = std::exp(logits[c] - mx) / z - (c == ys[i] ? 1.0 : 0.0);
      gb[c] += p;
      for (int t = 0; t < 4; ++t) gw[c * 4 + t] += p * xs[i][t];
    }
  }
  CHECK(g.loss == doctest::Approx(loss / 20.0).epsilon(1e-12));
  for (int j = 0; j < 12; ++j) CHECK(g.grad_weights[j] == doctest::Approx(gw[j] / 20.0).epsilon(1e-10));
  for (int j = 0; j < 3; ++j) CHECK(g.grad_biases[j] == doctest::Approx(gb[j] / 20.0).epsilon(1e-10));
}

TEST_CASE("encode kernels match their serial twins bit for bit") {
  Rng rng(17);
  std::vector<std::vector<Vec>> groups;
  for (int i = 0; i < 37; ++i) {
    std::vector<Vec> g;
    int n = rng.uniform_int(1, 6);
    for (int j = 0; j < n; ++j) g.push_back(testutil::random_vec(rng, 5));
    groups.push_back(std::move(g));
  }
  CHECK(kernels::encode_mean_pool(groups) == kernels::encode_mean_pool_serial(groups));

  std::vector<Vec> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  NetVladParams p = init_netvlad_params(all, 3, rng);
  CHECK(kernels::encode_netvlad(groups, p) == kernels::encode_netvlad_serial(groups, p));
}

TEST_CASE("reduce_blocks parallel twin is bit-exact and order-fixed") {
  Rng rng(19);
  const std::size_t n = 63, m = 41;
  std::vector<double> blocks(n * m);
  for (double& x : blocks) x = rng.normal();
  std::vector<double> a(m), b(m);
  kernels::reduce_blocks_serial(blocks.data(), n, m, a.data());
  kernels::reduce_blocks(blocks.data(), n, m, b.data());
  CHECK(a == b);
  for (std::size_t j = 0; j < m; ++j) {
    double want = kernels::tree_sum(0, n, [&](std::size_t i) { return blocks[i * m + j]; });
    CHECK(a[j] == want);
  }
}

#ifdef _OPENMP
TEST_CASE("kernel results do not depend on the thread count") {
  Rng rng(23);
  LinearModel m = LinearModel::zeros(7, 11);
  for (double& w : m.weights) w = rng.normal();
  std::vector<Vec> xs;
  std::vector<int> ys;
  for (int i = 0; i < 100; ++i) {
    xs.push_back(testutil::random_vec(rng, 11));
    ys.push_back((int)rng.uniform_index(7));
  }
  int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  auto g1 = kernels::ce_loss_grad(m, xs, ys);
  omp_set_num_threads(saved > 1 ? saved : 2);
  auto g2 = kernels::ce_loss_grad(m, xs, ys);
  omp_set_num_threads(saved);
  CHECK(g1.loss == g2.loss);
  CHECK(g1.grad_weights == g2.grad_weights);
  CHECK(g1.grad_biases == g2.grad_biases);
}
#endif
