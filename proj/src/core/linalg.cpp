#include "core/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/errors.hpp"
#include "core/kernels.hpp"

namespace affedit::core {

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw InvalidInput("matmul shape mismatch " + a.shape_str() + " x " + b.shape_str());
    }
    Tensor c({a.dim(0), b.dim(1)});
    kernels::matmul(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
    return c;
}

Tensor transpose(const Tensor& a) {
    Tensor t({a.dim(1), a.dim(0)});
    for (int i = 0; i < a.dim(0); ++i)
        for (int j = 0; j < a.dim(1); ++j) t.at(j, i) = a.at(i, j);
    return t;
}

real trace(const Tensor& a) {
    real s = 0;
    for (int i = 0; i < a.dim(0); ++i) s += a.at(i, i);
    return s;
}

EigenSym eigh(const Tensor& symmetric, int max_sweeps) {
    if (symmetric.rank() != 2 || symmetric.dim(0) != symmetric.dim(1)) {
        throw InvalidInput("eigh expects a square matrix");
    }
    int n = symmetric.dim(0);
    Tensor a = symmetric;
    Tensor v({n, n});
    for (int i = 0; i < n; ++i) v.at(i, i) = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        real off = 0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (off < 1e-28) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                real apq = a.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                real app = a.at(p, p), aqq = a.at(q, q);
                real tau = (aqq - app) / (2.0 * apq);
                real t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                real c = 1.0 / std::sqrt(1.0 + t * t);
                real s = t * c;
                for (int k = 0; k < n; ++k) {
                    real akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    real apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    real vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return a.at(i, i) < a.at(j, j); });

    EigenSym out;
    out.values.resize(static_cast<size_t>(n));
    out.vectors = Tensor({n, n});
    for (int j = 0; j < n; ++j) {
        out.values[static_cast<size_t>(j)] = a.at(order[static_cast<size_t>(j)],
                                                  order[static_cast<size_t>(j)]);
        for (int i = 0; i < n; ++i)
            out.vectors.at(i, j) = v.at(i, order[static_cast<size_t>(j)]);
    }
    return out;
}

Tensor psd_sqrt(const Tensor& symmetric) {
    EigenSym eg = eigh(symmetric);
    int n = symmetric.dim(0);
    // V diag(lambda^{1/2}) V^T, built as (V diag(lambda^{1/4})) times its
    // own transpose so the result is symmetric by construction.
    Tensor scaled = eg.vectors;
    for (int j = 0; j < n; ++j) {
        real s = std::pow(std::max<real>(eg.values[static_cast<size_t>(j)], 0), 0.25);
        for (int i = 0; i < n; ++i) scaled.at(i, j) *= s;
    }
    return matmul(scaled, transpose(scaled));
}

}  // namespace affedit::core
