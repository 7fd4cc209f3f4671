#include "nn/adam.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace affedit::nn {

void Adam::step(core::ParamMap& master, const ad::Tape& tape, const std::string& reg_prefix) {
    ++t_;
    real bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<real>(t_));
    real bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<real>(t_));
    for (const auto& binding : tape.params()) {
        if (binding.name.rfind(reg_prefix, 0) != 0) continue;
        std::string key = binding.name.substr(reg_prefix.size());
        auto it = master.find(key);
        if (it == master.end()) {
            throw InvalidConfig("optimizer: unknown parameter " + binding.name);
        }
        core::Tensor& w = it->second;
        const core::Tensor& g = tape.grad(binding.node);
        core::Tensor& m = m_.try_emplace(binding.name, core::Tensor(w.shape())).first->second;
        core::Tensor& v = v_.try_emplace(binding.name, core::Tensor(w.shape())).first->second;
        for (size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            real mhat = m[i] / bc1;
            real vhat = v[i] / bc2;
            w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace affedit::nn
