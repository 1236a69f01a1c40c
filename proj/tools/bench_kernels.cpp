// Times the OpenMP kernels against their serial reference twins on
// synthetic workloads and checks that both produce identical bits.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "a3d/kernels.hpp"
#include "a3d/rng.hpp"

using namespace a3d;

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double time_ms(int reps, const Fn& fn) {
  fn();  // warm-up
  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool bits_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool bits_equal(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!bits_equal(a[i], b[i])) return false;
  return true;
}

void report(const char* name, double serial_ms, double parallel_ms, bool exact) {
  std::printf("%-22s %10.3f ms %10.3f ms   %5.2fx   %s\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms, exact ? "bit-exact" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 5;
  if (argc > 1) reps = std::atoi(argv[1]);
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled at build time; both columns run serially\n");
#endif
  std::printf("%-22s %13s %13s %8s\n", "kernel", "serial", "openmp", "speedup");

  Rng rng(1234);

  {  // batch linear logits: N=4096 examples, C=101 classes, D=512
    const std::size_t n = 4096, c = 101, d = 512;
    LinearModel m = LinearModel::zeros(c, d);
    for (double& w : m.weights) w = rng.normal();
    for (double& b : m.biases) b = rng.normal();
    std::vector<Vec> xs(n, Vec(d));
    for (auto& x : xs)
      for (double& v : x) v = rng.normal();
    std::vector<Vec> out_s, out_p;
    double ts = time_ms(reps, [&] { out_s = kernels::linear_logits_serial(m, xs); });
    double tp = time_ms(reps, [&] { out_p = kernels::linear_logits(m, xs); });
    report("linear_logits", ts, tp, bits_equal(out_s, out_p));
  }

  {  // cross-entropy batch gradient: N=2048, C=101, D=256
    const std::size_t n = 2048, c = 101, d = 256;
    LinearModel m = LinearModel::zeros(c, d);
    for (double& w : m.weights) w = 0.01 * rng.normal();
    std::vector<Vec> xs(n, Vec(d));
    for (auto& x : xs)
      for (double& v : x) v = rng.normal();
    std::vector<int> ys(n);
    for (int& y : ys) y = (int)rng.uniform_index(c);
    kernels::CeBatch g_s, g_p;
    double ts = time_ms(reps, [&] { g_s = kernels::ce_loss_grad_serial(m, xs, ys); });
    double tp = time_ms(reps, [&] { g_p = kernels::ce_loss_grad(m, xs, ys); });
    bool exact = g_s.loss == g_p.loss && bits_equal(g_s.grad_weights, g_p.grad_weights) &&
                 bits_equal(g_s.grad_biases, g_p.grad_biases);
    report("ce_loss_grad", ts, tp, exact);
  }

  {  // NetVLAD batch encode: 512 videos x 24 descriptors, K=16, D=64
    const std::size_t videos = 512, per = 24, k = 16, d = 64;
    std::vector<Vec> seedfeat(64, Vec(d));
    for (auto& f : seedfeat)
      for (double& v : f) v = rng.normal();
    NetVladParams p = init_netvlad_params(seedfeat, k, rng);
    std::vector<std::vector<Vec>> groups(videos, std::vector<Vec>(per, Vec(d)));
    for (auto& g : groups)
      for (auto& f : g)
        for (double& v : f) v = rng.normal();
    std::vector<Vec> out_s, out_p;
    double ts = time_ms(reps, [&] { out_s = kernels::encode_netvlad_serial(groups, p); });
    double tp = time_ms(reps, [&] { out_p = kernels::encode_netvlad(groups, p); });
    report("encode_netvlad", ts, tp, bits_equal(out_s, out_p));
  }

  {  // mean-pool batch encode: 4096 videos x 32 descriptors, D=256
    const std::size_t videos = 4096, per = 32, d = 256;
    std::vector<std::vector<Vec>> groups(videos, std::vector<Vec>(per, Vec(d)));
    for (auto& g : groups)
      for (auto& f : g)
        for (double& v : f) v = rng.normal();
    std::vector<Vec> out_s, out_p;
    double ts = time_ms(reps, [&] { out_s = kernels::encode_mean_pool_serial(groups); });
    double tp = time_ms(reps, [&] { out_p = kernels::encode_mean_pool(groups); });
    report("encode_mean_pool", ts, tp, bits_equal(out_s, out_p));
  }

  {  // block reduction: 4096 blocks of 2048
    const std::size_t n = 4096, m = 2048;
    std::vector<double> blocks(n * m);
    for (double& v : blocks) v = rng.normal();
    std::vector<double> out_s(m), out_p(m);
    double ts =
        time_ms(reps, [&] { kernels::reduce_blocks_serial(blocks.data(), n, m, out_s.data()); });
    double tp = time_ms(reps, [&] { kernels::reduce_blocks(blocks.data(), n, m, out_p.data()); });
    report("reduce_blocks", ts, tp, bits_equal(out_s, out_p));
  }
  return 0;
}
