#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "core/tensor.hpp"

namespace affedit::core {

// Deterministic random stream. std::mt19937_64 is fully specified by the
// standard; the distributions here are implemented by hand because the
// standard library distribution objects are implementation-defined and
// would break the cross-build reproducibility contract.
class RngStream {
  public:
    explicit RngStream(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    real uniform() {
        return static_cast<real>(engine_() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Uniform integer in [0, n). n must be > 0.
    uint64_t uniform_int(uint64_t n);

    // Standard normal via Box-Muller, one cached value.
    real normal();

    void fill_normal(Tensor& t);
    Tensor normal_tensor(std::vector<int> shape);

    // Fisher-Yates permutation of [0, n).
    std::vector<size_t> permutation(size_t n);

    // Derive an independent child stream; used to give each editing request
    // or worker its own stream from one run seed.
    RngStream fork() { return RngStream(next_u64() ^ 0x9e3779b97f4a7c15ull); }

  private:
    std::mt19937_64 engine_;
    bool has_cached_ = false;
    real cached_ = 0;
};

}  // namespace affedit::core
