// Times the serial reference against the OpenMP variant for each kernel.
// Both paths produce bit-identical outputs (checked here as well); the
// interesting column is the speedup.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "otta/common.hpp"
#include "otta/kernels.hpp"

namespace {

using otta::Rng;
namespace k = otta::kernels;

std::vector<double> random_vec(size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

struct Row {
  std::string name;
  double serial_s;
  double parallel_s;
  bool identical;
};

std::vector<Row> rows;

template <typename SerialFn, typename ParallelFn>
void bench(const std::string& name, size_t out_elems, SerialFn&& s, ParallelFn&& p,
           std::vector<double>& out_serial, std::vector<double>& out_parallel,
           int reps = 5) {
  Row row;
  row.name = name;
  out_serial.assign(out_elems, 0.0);
  out_parallel.assign(out_elems, 0.0);
  row.serial_s = time_best_of(reps, [&] { s(out_serial.data()); });
  row.parallel_s = time_best_of(reps, [&] { p(out_parallel.data()); });
  row.identical = std::memcmp(out_serial.data(), out_parallel.data(),
                              out_elems * sizeof(double)) == 0;
  rows.push_back(row);
}

}  // namespace

int main() {
  Rng rng(42);

  const int B = 32, C = 22, T = 1000, F = 8, D = 2, L = 250;
  const int M = 256, K = 256, N = 256;

  auto a = random_vec(static_cast<size_t>(M) * K, rng);
  auto b = random_vec(static_cast<size_t>(K) * N, rng);
  auto x3 = random_vec(static_cast<size_t>(B) * C * T, rng);
  auto wt = random_vec(static_cast<size_t>(F) * L, rng);
  auto x4 = random_vec(static_cast<size_t>(B) * F * C * T, rng);
  auto ws = random_vec(static_cast<size_t>(F) * D * C, rng);
  auto gy4 = random_vec(static_cast<size_t>(B) * F * C * T, rng);
  auto gy3 = random_vec(static_cast<size_t>(B) * F * D * T, rng);
  std::vector<double> out_s, out_p;

  bench("matmul 256x256x256", static_cast<size_t>(M) * N,
        [&](double* o) { k::serial::matmul(a.data(), b.data(), o, M, K, N); },
        [&](double* o) { k::parallel::matmul(a.data(), b.data(), o, M, K, N); },
        out_s, out_p);

  bench("xxt 22x1000", static_cast<size_t>(C) * C,
        [&](double* o) { k::serial::xxt(x3.data(), o, C, T); },
        [&](double* o) { k::parallel::xxt(x3.data(), o, C, T); }, out_s, out_p, 20);

  bench("temporal_conv fwd 32x22x1000 (F=8,L=250)",
        static_cast<size_t>(B) * F * C * T,
        [&](double* o) { k::serial::temporal_conv_forward(x3.data(), wt.data(), o, B, C, T, F, L); },
        [&](double* o) { k::parallel::temporal_conv_forward(x3.data(), wt.data(), o, B, C, T, F, L); },
        out_s, out_p, 3);

  bench("temporal_conv bwd_input", static_cast<size_t>(B) * C * T,
        [&](double* o) { k::serial::temporal_conv_backward_input(gy4.data(), wt.data(), o, B, C, T, F, L); },
        [&](double* o) { k::parallel::temporal_conv_backward_input(gy4.data(), wt.data(), o, B, C, T, F, L); },
        out_s, out_p, 3);

  bench("temporal_conv bwd_weight", static_cast<size_t>(F) * L,
        [&](double* o) { k::serial::temporal_conv_backward_weight(gy4.data(), x3.data(), o, B, C, T, F, L); },
        [&](double* o) { k::parallel::temporal_conv_backward_weight(gy4.data(), x3.data(), o, B, C, T, F, L); },
        out_s, out_p, 3);

  bench("spatial_conv fwd 32x8x22x1000 (D=2)", static_cast<size_t>(B) * F * D * T,
        [&](double* o) { k::serial::spatial_conv_forward(x4.data(), ws.data(), o, B, F, D, C, T); },
        [&](double* o) { k::parallel::spatial_conv_forward(x4.data(), ws.data(), o, B, F, D, C, T); },
        out_s, out_p);

  bench("spatial_conv bwd_input", static_cast<size_t>(B) * F * C * T,
        [&](double* o) { k::serial::spatial_conv_backward_input(gy3.data(), ws.data(), o, B, F, D, C, T); },
        [&](double* o) { k::parallel::spatial_conv_backward_input(gy3.data(), ws.data(), o, B, F, D, C, T); },
        out_s, out_p);

  bench("linear fwd 256x4096->16", static_cast<size_t>(M) * 16,
        [&](double* o) {
          k::serial::linear_forward(a.data(), b.data(), nullptr, o, M, K, 16);
        },
        [&](double* o) {
          k::parallel::linear_forward(a.data(), b.data(), nullptr, o, M, K, 16);
        },
        out_s, out_p, 10);

  std::printf("threads available to OpenMP: %d\n\n", k::parallel_threads());
  std::printf("%-44s %12s %12s %9s %6s\n", "kernel", "serial [ms]", "openmp [ms]",
              "speedup", "equal");
  bool all_identical = true;
  for (const Row& r : rows) {
    std::printf("%-44s %12.3f %12.3f %8.2fx %6s\n", r.name.c_str(),
                1e3 * r.serial_s, 1e3 * r.parallel_s, r.serial_s / r.parallel_s,
                r.identical ? "yes" : "NO");
    all_identical = all_identical && r.identical;
  }
  if (!all_identical) {
    std::printf("\nerror: serial and parallel kernels disagree\n");
    return 1;
  }
  return 0;
}
