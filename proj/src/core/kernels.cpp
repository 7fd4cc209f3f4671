#include "core/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace affedit::kernels {

namespace {
Backend g_backend = default_backend();
}

Backend default_backend() {
#ifdef _OPENMP
    return Backend::OpenMP;
#else
    return Backend::Serial;
#endif
}

Backend backend() { return g_backend; }

void set_backend(Backend b) {
#ifndef _OPENMP
    b = Backend::Serial;
#endif
    g_backend = b;
}

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

#define AFFEDIT_DISPATCH(fn, ...)                  \
    if (g_backend == Backend::OpenMP) {            \
        return omp::fn(__VA_ARGS__);               \
    }                                              \
    return serial::fn(__VA_ARGS__)

void matmul(const real* a, const real* b, real* c, int m, int k, int n) {
    AFFEDIT_DISPATCH(matmul, a, b, c, m, k, n);
}
void matmul_at(const real* a, const real* b, real* c, int m, int k, int n) {
    AFFEDIT_DISPATCH(matmul_at, a, b, c, m, k, n);
}
void matmul_bt(const real* a, const real* b, real* c, int m, int k, int n) {
    AFFEDIT_DISPATCH(matmul_bt, a, b, c, m, k, n);
}
void add(const real* a, const real* b, real* y, size_t n) { AFFEDIT_DISPATCH(add, a, b, y, n); }
void sub(const real* a, const real* b, real* y, size_t n) { AFFEDIT_DISPATCH(sub, a, b, y, n); }
void mul(const real* a, const real* b, real* y, size_t n) { AFFEDIT_DISPATCH(mul, a, b, y, n); }
void scale(const real* a, real alpha, real* y, size_t n) {
    AFFEDIT_DISPATCH(scale, a, alpha, y, n);
}
void axpy(real alpha, const real* x, real* y, size_t n) { AFFEDIT_DISPATCH(axpy, alpha, x, y, n); }
real sum(const real* x, size_t n) { AFFEDIT_DISPATCH(sum, x, n); }
real dot(const real* x, const real* y, size_t n) { AFFEDIT_DISPATCH(dot, x, y, n); }
void softmax_rows(const real* x, real* y, int rows, int cols) {
    AFFEDIT_DISPATCH(softmax_rows, x, y, rows, cols);
}
void rows_sum(const real* x, real* y, int rows, int cols) {
    AFFEDIT_DISPATCH(rows_sum, x, y, rows, cols);
}
void avgpool2x2(const real* x, real* y, int ch, int h, int w) {
    AFFEDIT_DISPATCH(avgpool2x2, x, y, ch, h, w);
}
void upsample2x2(const real* x, real* y, int ch, int h, int w) {
    AFFEDIT_DISPATCH(upsample2x2, x, y, ch, h, w);
}

#undef AFFEDIT_DISPATCH

}  // namespace affedit::kernels
