// Timing comparison between the serial reference kernels and the OpenMP
// kernels on training-shaped problems. Usage: bench_kernels [rows] [iters]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "arithlab/kernels.hpp"
#include "arithlab/rng.hpp"

using namespace arithlab;
using Clock = std::chrono::steady_clock;

namespace {

double time_of(const std::function<void()>& fn, int iters) {
    fn();  // warm up
    const auto t0 = Clock::now();
    for (int i = 0; i < iters; ++i) fn();
    return std::chrono::duration<double>(Clock::now() - t0).count() / iters;
}

void row(const char* name, double flops, double serial_s, double omp_s) {
    std::printf("%-22s %10.3f ms %10.3f ms %8.2fx", name, serial_s * 1e3, omp_s * 1e3,
                serial_s / omp_s);
    if (flops > 0)
        std::printf("   %7.2f / %7.2f GFLOP/s", flops / serial_s / 1e9, flops / omp_s / 1e9);
    std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
    const int R = argc > 1 ? std::atoi(argv[1]) : 2048;
    const int iters = argc > 2 ? std::atoi(argv[2]) : 10;
    const int K = 256, O = 256, MC = 1024;

    Rng rng(1);
    std::vector<float> x(static_cast<size_t>(R) * K), w(static_cast<size_t>(O) * K);
    std::vector<float> wide(static_cast<size_t>(MC) * K), bias(O, 0.1f);
    std::vector<float> y(static_cast<size_t>(R) * O), ywide(static_cast<size_t>(R) * MC);
    std::vector<float> dy = y, dx = x, dw(w.size(), 0.f), db(O, 0.f);
    std::vector<float> gain(K, 1.f), lnb(K, 0.f), ln(x.size()), mean(R), rstd(R);
    for (auto& v : x) v = static_cast<float>(rng.gauss());
    for (auto& v : w) v = static_cast<float>(rng.gauss());
    for (auto& v : wide) v = static_cast<float>(rng.gauss());
    for (auto& v : dy) v = static_cast<float>(rng.gauss());

    std::printf("rows=%d K=%d O=%d  threads=%d\n", R, K, O, omp_get_max_threads());
    std::printf("%-22s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    row("matmul_xwt", 2.0 * R * K * O,
        time_of([&] { kernels::serial::matmul_xwt(x.data(), w.data(), bias.data(), y.data(), R, K, O); },
                iters),
        time_of([&] { kernels::omp::matmul_xwt(x.data(), w.data(), bias.data(), y.data(), R, K, O); },
                iters));

    row("matmul_xwt (mlp)", 2.0 * R * K * MC,
        time_of(
            [&] {
                kernels::serial::matmul_xwt(x.data(), wide.data(), static_cast<const float*>(nullptr), ywide.data(), R, K, MC);
            },
            iters),
        time_of(
            [&] { kernels::omp::matmul_xwt(x.data(), wide.data(), static_cast<const float*>(nullptr), ywide.data(), R, K, MC); },
            iters));

    row("matmul_xw", 2.0 * R * K * O,
        time_of([&] { kernels::serial::matmul_xw(dy.data(), w.data(), dx.data(), R, O, K); }, iters),
        time_of([&] { kernels::omp::matmul_xw(dy.data(), w.data(), dx.data(), R, O, K); }, iters));

    row("matmul_dw", 2.0 * R * K * O,
        time_of([&] { kernels::serial::matmul_dw(dy.data(), x.data(), dw.data(), db.data(), R, O, K); },
                iters),
        time_of([&] { kernels::omp::matmul_dw(dy.data(), x.data(), dw.data(), db.data(), R, O, K); },
                iters));

    row("softmax_rows", 0,
        time_of([&] { kernels::serial::softmax_rows(y.data(), R, O); }, iters),
        time_of([&] { kernels::omp::softmax_rows(y.data(), R, O); }, iters));

    row("layernorm_fwd", 0,
        time_of(
            [&] {
                kernels::serial::layernorm_fwd(x.data(), gain.data(), lnb.data(), ln.data(),
                                               mean.data(), rstd.data(), R, K, 1e-5f);
            },
            iters),
        time_of(
            [&] {
                kernels::omp::layernorm_fwd(x.data(), gain.data(), lnb.data(), ln.data(), mean.data(),
                                            rstd.data(), R, K, 1e-5f);
            },
            iters));

    row("gelu_fwd", 0,
        time_of([&] { kernels::serial::gelu_fwd(ywide.data(), ywide.data(), ywide.size()); }, iters),
        time_of([&] { kernels::omp::gelu_fwd(ywide.data(), ywide.data(), ywide.size()); }, iters));

    return 0;
}
