#include "core/rng.hpp"

#include <cmath>

namespace affedit::core {

uint64_t RngStream::uniform_int(uint64_t n) {
    // Rejection sampling over the largest multiple of n; unbiased and
    // identical on every platform.
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % n;
}

real RngStream::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    real u1, u2;
    do {
        u1 = uniform();
    } while (u1 <= 1e-300);
    u2 = uniform();
    real radius = std::sqrt(-2.0 * std::log(u1));
    real angle = 2.0 * M_PI * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

void RngStream::fill_normal(Tensor& t) {
    for (size_t i = 0; i < t.size(); ++i) t[i] = normal();
}

Tensor RngStream::normal_tensor(std::vector<int> shape) {
    Tensor t(std::move(shape));
    fill_normal(t);
    return t;
}

std::vector<size_t> RngStream::permutation(size_t n) {
    std::vector<size_t> p(n);
    for (size_t i = 0; i < n; ++i) p[i] = i;
    for (size_t i = n; i > 1; --i) {
        size_t j = uniform_int(i);
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

}  // namespace affedit::core
