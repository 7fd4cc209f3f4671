#pragma once

#include <cstddef>

#include "core/tensor.hpp"

namespace affedit::kernels {

// Hot inner loops, provided twice: a plain serial reference and an
// OpenMP-parallel variant. Both compute every output element with the same
// per-element serial code, so results are bit-identical across backends and
// thread counts. Scalar reductions use a fixed chunk decomposition for the
// same reason.

enum class Backend { Serial, OpenMP };

Backend backend();
void set_backend(Backend b);
Backend default_backend();  // OpenMP when compiled in, else Serial
int thread_count();

// C(m,n) = A(m,k) * B(k,n)
void matmul(const real* a, const real* b, real* c, int m, int k, int n);
// C(m,n) = A(k,m)^T * B(k,n)
void matmul_at(const real* a, const real* b, real* c, int m, int k, int n);
// C(m,n) = A(m,k) * B(n,k)^T
void matmul_bt(const real* a, const real* b, real* c, int m, int k, int n);

void add(const real* a, const real* b, real* y, size_t n);
void sub(const real* a, const real* b, real* y, size_t n);
void mul(const real* a, const real* b, real* y, size_t n);
void scale(const real* a, real alpha, real* y, size_t n);
// y += alpha * x
void axpy(real alpha, const real* x, real* y, size_t n);

real sum(const real* x, size_t n);
real dot(const real* x, const real* y, size_t n);

// Row-wise softmax of an (rows x cols) matrix.
void softmax_rows(const real* x, real* y, int rows, int cols);

// Per-row sum / mean of an (rows x cols) matrix into y(rows).
void rows_sum(const real* x, real* y, int rows, int cols);

// 2x2 average pooling / nearest upsampling over a (ch, h*w) matrix whose
// columns enumerate an h x w grid row-major. h and w must be even for pool.
void avgpool2x2(const real* x, real* y, int ch, int h, int w);
void upsample2x2(const real* x, real* y, int ch, int h, int w);

namespace serial {
void matmul(const real* a, const real* b, real* c, int m, int k, int n);
void matmul_at(const real* a, const real* b, real* c, int m, int k, int n);
void matmul_bt(const real* a, const real* b, real* c, int m, int k, int n);
void add(const real* a, const real* b, real* y, size_t n);
void sub(const real* a, const real* b, real* y, size_t n);
void mul(const real* a, const real* b, real* y, size_t n);
void scale(const real* a, real alpha, real* y, size_t n);
void axpy(real alpha, const real* x, real* y, size_t n);
real sum(const real* x, size_t n);
real dot(const real* x, const real* y, size_t n);
void softmax_rows(const real* x, real* y, int rows, int cols);
void rows_sum(const real* x, real* y, int rows, int cols);
void avgpool2x2(const real* x, real* y, int ch, int h, int w);
void upsample2x2(const real* x, real* y, int ch, int h, int w);
}  // namespace serial

namespace omp {
void matmul(const real* a, const real* b, real* c, int m, int k, int n);
void matmul_at(const real* a, const real* b, real* c, int m, int k, int n);
void matmul_bt(const real* a, const real* b, real* c, int m, int k, int n);
void add(const real* a, const real* b, real* y, size_t n);
void sub(const real* a, const real* b, real* y, size_t n);
void mul(const real* a, const real* b, real* y, size_t n);
void scale(const real* a, real alpha, real* y, size_t n);
void axpy(real alpha, const real* x, real* y, size_t n);
real sum(const real* x, size_t n);
real dot(const real* x, const real* y, size_t n);
void softmax_rows(const real* x, real* y, int rows, int cols);
void rows_sum(const real* x, real* y, int rows, int cols);
void avgpool2x2(const real* x, real* y, int ch, int h, int w);
void upsample2x2(const real* x, real* y, int ch, int h, int w);
}  // namespace omp

namespace detail {
// Chunk size for deterministic reductions; fixed so the combination order
// does not depend on the thread count.
constexpr size_t kReduceChunk = 4096;

inline real row_dot(const real* x, const real* y, int n) {
    real acc = 0;
    for (int i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}
}  // namespace detail

}  // namespace affedit::kernels
