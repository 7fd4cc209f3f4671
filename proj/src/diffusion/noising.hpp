#pragma once

#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "diffusion/schedule.hpp"

namespace affedit::diffusion {

// Noise predictor interface. The toy network implements it; tests plug in
// oracle predictors.
struct Denoiser {
    virtual ~Denoiser() = default;
    // condition is the (C^s, N^l) semantic representation.
    virtual Tensor predict(const Tensor& z_t, int t, const Tensor& condition) const = 0;
};

// Closed-form forward noising z_t = sqrt(abar_t) z + sqrt(1 - abar_t) eps.
// t = 0 returns z unchanged. With cumulative_alpha = false the per-step
// alpha_t is used verbatim instead of the running product (audit mode).
Tensor forward_noise(const Tensor& z, int t, const Tensor& eps, const NoiseSchedule& schedule,
                     bool cumulative_alpha = true);

// One reverse update
//   z_{t-1} = (z_t - eps_hat (1-alpha_t)/sqrt(1-abar_t)) / sqrt(alpha_t)
//             + sigma_t * fresh_noise
// Fresh noise is drawn from rng only when sigma_t > 0; rng may be null when
// the schedule is deterministic.
Tensor denoise_step(const Tensor& z_t, int t, const Tensor& condition, const Denoiser& denoiser,
                    const NoiseSchedule& schedule, core::RngStream* rng = nullptr);

// Same update applied to a precomputed noise prediction.
Tensor denoise_update(const Tensor& z_t, int t, const Tensor& eps_hat,
                      const NoiseSchedule& schedule, core::RngStream* rng = nullptr);

}  // namespace affedit::diffusion
