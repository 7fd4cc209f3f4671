#include <algorithm>
#include <cmath>
#include <vector>

#include "core/kernels.hpp"

// Reference implementations. Everything else in the project is checked
// against these, so keep them boring.

namespace affedit::kernels::serial {

void matmul(const real* a, const real* b, real* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        real* ci = c + static_cast<size_t>(i) * n;
        const real* ai = a + static_cast<size_t>(i) * k;
        for (int j = 0; j < n; ++j) ci[j] = 0;
        for (int p = 0; p < k; ++p) {
            real av = ai[p];
            const real* bp = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void matmul_at(const real* a, const real* b, real* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        real* ci = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) ci[j] = 0;
        for (int p = 0; p < k; ++p) {
            real av = a[static_cast<size_t>(p) * m + i];
            const real* bp = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void matmul_bt(const real* a, const real* b, real* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const real* ai = a + static_cast<size_t>(i) * k;
        real* ci = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            ci[j] = detail::row_dot(ai, b + static_cast<size_t>(j) * k, k);
        }
    }
}

void add(const real* a, const real* b, real* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void sub(const real* a, const real* b, real* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
}

void mul(const real* a, const real* b, real* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void scale(const real* a, real alpha, real* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = alpha * a[i];
}

void axpy(real alpha, const real* x, real* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

real sum(const real* x, size_t n) {
    // Fixed-chunk accumulation, same order as the parallel variant.
    size_t chunks = (n + detail::kReduceChunk - 1) / detail::kReduceChunk;
    real total = 0;
    for (size_t c = 0; c < chunks; ++c) {
        size_t lo = c * detail::kReduceChunk;
        size_t hi = std::min(n, lo + detail::kReduceChunk);
        real acc = 0;
        for (size_t i = lo; i < hi; ++i) acc += x[i];
        total += acc;
    }
    return total;
}

real dot(const real* x, const real* y, size_t n) {
    size_t chunks = (n + detail::kReduceChunk - 1) / detail::kReduceChunk;
    real total = 0;
    for (size_t c = 0; c < chunks; ++c) {
        size_t lo = c * detail::kReduceChunk;
        size_t hi = std::min(n, lo + detail::kReduceChunk);
        real acc = 0;
        for (size_t i = lo; i < hi; ++i) acc += x[i] * y[i];
        total += acc;
    }
    return total;
}

void softmax_rows(const real* x, real* y, int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
        const real* xr = x + static_cast<size_t>(r) * cols;
        real* yr = y + static_cast<size_t>(r) * cols;
        real mx = xr[0];
        for (int j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
        real denom = 0;
        for (int j = 0; j < cols; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            denom += yr[j];
        }
        real inv = 1.0 / denom;
        for (int j = 0; j < cols; ++j) yr[j] *= inv;
    }
}

void rows_sum(const real* x, real* y, int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
        const real* xr = x + static_cast<size_t>(r) * cols;
        real acc = 0;
        for (int j = 0; j < cols; ++j) acc += xr[j];
        y[r] = acc;
    }
}

void avgpool2x2(const real* x, real* y, int ch, int h, int w) {
    int oh = h / 2, ow = w / 2;
    for (int c = 0; c < ch; ++c) {
        const real* xc = x + static_cast<size_t>(c) * h * w;
        real* yc = y + static_cast<size_t>(c) * oh * ow;
        for (int i = 0; i < oh; ++i) {
            for (int j = 0; j < ow; ++j) {
                const real* p = xc + static_cast<size_t>(2 * i) * w + 2 * j;
                yc[static_cast<size_t>(i) * ow + j] =
                    0.25 * (p[0] + p[1] + p[w] + p[w + 1]);
            }
        }
    }
}

void upsample2x2(const real* x, real* y, int ch, int h, int w) {
    int oh = h * 2, ow = w * 2;
    for (int c = 0; c < ch; ++c) {
        const real* xc = x + static_cast<size_t>(c) * h * w;
        real* yc = y + static_cast<size_t>(c) * oh * ow;
        for (int i = 0; i < oh; ++i) {
            for (int j = 0; j < ow; ++j) {
                yc[static_cast<size_t>(i) * ow + j] =
                    xc[static_cast<size_t>(i / 2) * w + j / 2];
            }
        }
    }
}

}  // namespace affedit::kernels::serial
