// Microbenchmarks comparing the serial reference kernels with the OpenMP
// variants. Build target exists only when google-benchmark is installed.
//
//   ./build/tools/bench_kernels --benchmark_min_time=0.2s

#include <benchmark/benchmark.h>

#include <vector>

#include "core/kernels.hpp"
#include "core/rng.hpp"

using namespace affedit;

namespace {

core::Tensor randn(int n, uint64_t seed) {
    core::RngStream rng(seed);
    return rng.normal_tensor({n});
}

void bm_matmul_serial(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    core::Tensor a = randn(n * n, 1), b = randn(n * n, 2), c = randn(n * n, 3);
    for (auto _ : state) {
        kernels::serial::matmul(a.data(), b.data(), c.data(), n, n, n);
        benchmark::ClobberMemory();
    }
}

void bm_matmul_omp(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    core::Tensor a = randn(n * n, 1), b = randn(n * n, 2), c = randn(n * n, 3);
    for (auto _ : state) {
        kernels::omp::matmul(a.data(), b.data(), c.data(), n, n, n);
        benchmark::ClobberMemory();
    }
}

void bm_softmax_serial(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    core::Tensor x = randn(n * n, 4), y = randn(n * n, 5);
    for (auto _ : state) {
        kernels::serial::softmax_rows(x.data(), y.data(), n, n);
        benchmark::ClobberMemory();
    }
}

void bm_softmax_omp(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    core::Tensor x = randn(n * n, 4), y = randn(n * n, 5);
    for (auto _ : state) {
        kernels::omp::softmax_rows(x.data(), y.data(), n, n);
        benchmark::ClobberMemory();
    }
}

void bm_axpy_serial(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    core::Tensor x = randn(n, 6), y = randn(n, 7);
    for (auto _ : state) {
        kernels::serial::axpy(0.5, x.data(), y.data(), static_cast<size_t>(n));
        benchmark::ClobberMemory();
    }
}

void bm_axpy_omp(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    core::Tensor x = randn(n, 6), y = randn(n, 7);
    for (auto _ : state) {
        kernels::omp::axpy(0.5, x.data(), y.data(), static_cast<size_t>(n));
        benchmark::ClobberMemory();
    }
}

void bm_sum_serial(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    core::Tensor x = randn(n, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernels::serial::sum(x.data(), static_cast<size_t>(n)));
    }
}

void bm_sum_omp(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    core::Tensor x = randn(n, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernels::omp::sum(x.data(), static_cast<size_t>(n)));
    }
}

BENCHMARK(bm_matmul_serial)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_matmul_omp)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_softmax_serial)->Arg(128)->Arg(512);
BENCHMARK(bm_softmax_omp)->Arg(128)->Arg(512);
BENCHMARK(bm_axpy_serial)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(bm_axpy_omp)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(bm_sum_serial)->Arg(1 << 20);
BENCHMARK(bm_sum_omp)->Arg(1 << 20);

}  // namespace

BENCHMARK_MAIN();
