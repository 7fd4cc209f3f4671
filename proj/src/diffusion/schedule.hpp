#pragma once

#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace affedit::diffusion {

using core::Tensor;

enum class ScheduleKind { LinearBeta, Cosine };

ScheduleKind schedule_kind_from_string(const std::string& s);

// Per-step noise amounts. alpha[t-1] is the step-t alpha, alpha_bar[t-1]
// the cumulative product, sigma[t-1] the reverse-update noise scale.
struct NoiseSchedule {
    int total_steps = 0;
    real eta = 0;
    std::vector<real> alpha;
    std::vector<real> alpha_bar;
    std::vector<real> sigma;

    real alpha_at(int t) const;      // t in [1, T]
    real alpha_bar_at(int t) const;  // t in [0, T]; alpha_bar_at(0) == 1
    real sigma_at(int t) const;      // t in [1, T]

    void validate() const;
    std::string to_csv() const;
};

struct ScheduleParams {
    int total_steps = 50;
    ScheduleKind kind = ScheduleKind::LinearBeta;
    real eta = 0.0;
    // Linear-beta endpoints, tuned so alpha_bar at T=50 is close to zero.
    real beta_start = 0.004;
    real beta_end = 0.30;
};

NoiseSchedule build_schedule(const ScheduleParams& params);
NoiseSchedule build_schedule(int total_steps, ScheduleKind kind, real eta);

}  // namespace affedit::diffusion
