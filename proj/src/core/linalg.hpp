#pragma once

#include <vector>

#include "core/tensor.hpp"

namespace affedit::core {

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Fine for the small feature dimensions used by the metrics (<= a few
// hundred); eigenvalues ascending, eigenvectors as columns of V.
struct EigenSym {
    std::vector<real> values;
    Tensor vectors;  // (n, n), column j pairs with values[j]
};

EigenSym eigh(const Tensor& symmetric, int max_sweeps = 64);

// V * diag(f(lambda)) * V^T with eigenvalues clamped at zero before f.
Tensor psd_sqrt(const Tensor& symmetric);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
real trace(const Tensor& a);

}  // namespace affedit::core
