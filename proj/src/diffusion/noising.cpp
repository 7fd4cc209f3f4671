#include "diffusion/noising.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/kernels.hpp"

namespace affedit::diffusion {

Tensor forward_noise(const Tensor& z, int t, const Tensor& eps, const NoiseSchedule& schedule,
                     bool cumulative_alpha) {
    if (t < 0 || t > schedule.total_steps) {
        throw InvalidStep("forward_noise: t out of [0, T]");
    }
    if (!eps.same_shape(z)) throw InvalidInput("forward_noise: eps shape mismatch");
    if (t == 0) return z;

    real a = cumulative_alpha ? schedule.alpha_bar_at(t) : schedule.alpha_at(t);
    real cz = std::sqrt(a);
    real ce = std::sqrt(1.0 - a);
    Tensor out(z.shape());
    for (size_t i = 0; i < z.size(); ++i) out[i] = cz * z[i] + ce * eps[i];
    return out;
}

Tensor denoise_update(const Tensor& z_t, int t, const Tensor& eps_hat,
                      const NoiseSchedule& schedule, core::RngStream* rng) {
    if (t < 1 || t > schedule.total_steps) {
        throw InvalidStep("denoise_step: t out of [1, T]");
    }
    if (!eps_hat.same_shape(z_t)) throw InvalidInput("denoise: prediction shape mismatch");

    real alpha_t = schedule.alpha_at(t);
    real bar_t = schedule.alpha_bar_at(t);
    real coeff = (1.0 - alpha_t) / std::sqrt(1.0 - bar_t);
    real inv_sqrt_alpha = 1.0 / std::sqrt(alpha_t);
    real sigma = schedule.sigma_at(t);

    Tensor out(z_t.shape());
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = inv_sqrt_alpha * (z_t[i] - coeff * eps_hat[i]);
    }
    if (sigma > 0) {
        if (rng == nullptr) {
            throw InvalidInput("denoise_step: stochastic schedule requires an rng");
        }
        for (size_t i = 0; i < out.size(); ++i) out[i] += sigma * rng->normal();
    }
    return out;
}

Tensor denoise_step(const Tensor& z_t, int t, const Tensor& condition, const Denoiser& denoiser,
                    const NoiseSchedule& schedule, core::RngStream* rng) {
    if (t < 1 || t > schedule.total_steps) {
        throw InvalidStep("denoise_step: t out of [1, T]");
    }
    Tensor eps_hat = denoiser.predict(z_t, t, condition);
    return denoise_update(z_t, t, eps_hat, schedule, rng);
}

}  // namespace affedit::diffusion
