// Times the serial matmul kernel against the OpenMP one and checks that the
// two agree bitwise. Usage: bench_kernels [threads] [reps].

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "zsmstm/common.hpp"
#include "zsmstm/nn/kernels.hpp"

using namespace zsmstm;
namespace k = zsmstm::nn::kernels;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(
             clock::now().time_since_epoch())
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : 4;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 5;

  std::printf("%-18s %10s %12s %12s %8s %8s\n", "shape", "gflop", "serial_ms",
              "omp_ms", "speedup", "match");
  for (int dim : {64, 128, 256, 512}) {
    Rng rng(17);
    std::vector<float> a(static_cast<std::size_t>(dim) * dim);
    std::vector<float> b(a.size());
    for (auto& v : a) v = static_cast<float>(rng.normal());
    for (auto& v : b) v = static_cast<float>(rng.normal());
    std::vector<float> cs(a.size()), cp(a.size());

    double t_serial = 1e30, t_par = 1e30;
    for (int r = 0; r < reps; ++r) {
      const double t0 = now_ms();
      k::gemm_serial(a.data(), false, b.data(), false, cs.data(), dim, dim,
                     dim, false);
      t_serial = std::min(t_serial, now_ms() - t0);
      const double t1 = now_ms();
      k::gemm_parallel(a.data(), false, b.data(), false, cp.data(), dim, dim,
                       dim, false, threads);
      t_par = std::min(t_par, now_ms() - t1);
    }
    const bool match =
        std::memcmp(cs.data(), cp.data(), cs.size() * sizeof(float)) == 0;
    const double gflop = 2.0 * dim * dim * dim / 1e9;
    std::printf("%4dx%-4d x%-7d %10.3f %12.3f %12.3f %8.2f %8s\n", dim, dim,
                dim, gflop, t_serial, t_par, t_serial / t_par,
                match ? "yes" : "NO");
    if (!match) return 1;
  }
  return 0;
}
