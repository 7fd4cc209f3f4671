#pragma once

#include <map>
#include <string>

#include "core/autodiff.hpp"
#include "core/checkpoint.hpp"

namespace affedit::nn {

// Adam over the parameters bound to a tape. Moment state is keyed by
// parameter name so it survives across tapes.
class Adam {
  public:
    struct Config {
        real lr = 5e-5;
        real beta1 = 0.9;
        real beta2 = 0.999;
        real eps = 1e-8;
    };

    explicit Adam(Config cfg) : cfg_(cfg) {}

    // Applies one update to every parameter registered on the tape whose
    // name starts with reg_prefix (the prefix its Bind registered with).
    // backward() must already have run.
    void step(core::ParamMap& master, const ad::Tape& tape, const std::string& reg_prefix = "");

    void set_lr(real lr) { cfg_.lr = lr; }
    real lr() const { return cfg_.lr; }

  private:
    Config cfg_;
    long long t_ = 0;
    std::map<std::string, core::Tensor> m_, v_;
};

}  // namespace affedit::nn
