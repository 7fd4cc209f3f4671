#include "diffusion/schedule.hpp"

#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace affedit::diffusion {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "linear-beta") return ScheduleKind::LinearBeta;
    if (s == "cosine") return ScheduleKind::Cosine;
    throw InvalidConfig("unknown schedule kind: " + s);
}

real NoiseSchedule::alpha_at(int t) const {
    if (t < 1 || t > total_steps) throw InvalidStep("alpha_at: step out of range");
    return alpha[static_cast<size_t>(t - 1)];
}

real NoiseSchedule::alpha_bar_at(int t) const {
    if (t < 0 || t > total_steps) throw InvalidStep("alpha_bar_at: step out of range");
    return t == 0 ? 1.0 : alpha_bar[static_cast<size_t>(t - 1)];
}

real NoiseSchedule::sigma_at(int t) const {
    if (t < 1 || t > total_steps) throw InvalidStep("sigma_at: step out of range");
    return sigma[static_cast<size_t>(t - 1)];
}

void NoiseSchedule::validate() const {
    if (total_steps < 1 || alpha.size() != static_cast<size_t>(total_steps) ||
        alpha_bar.size() != alpha.size() || sigma.size() != alpha.size()) {
        throw InvalidConfig("noise schedule has inconsistent sizes");
    }
    real prev_bar = 1.0;
    for (int t = 1; t <= total_steps; ++t) {
        real a = alpha_at(t);
        real bar = alpha_bar_at(t);
        if (!(a > 0 && a < 1)) throw InvalidConfig("alpha out of (0,1)");
        if (!(bar < prev_bar)) throw InvalidConfig("alpha_bar not strictly decreasing");
        if (std::abs(bar - prev_bar * a) > 1e-12) {
            throw InvalidConfig("alpha_bar is not the running product of alpha");
        }
        if (sigma_at(t) < 0) throw InvalidConfig("negative sigma");
        prev_bar = bar;
    }
}

std::string NoiseSchedule::to_csv() const {
    std::ostringstream os;
    os << "t,alpha,alpha_bar,sigma\n";
    os.precision(17);
    for (int t = 1; t <= total_steps; ++t) {
        os << t << "," << alpha_at(t) << "," << alpha_bar_at(t) << "," << sigma_at(t) << "\n";
    }
    return os.str();
}

NoiseSchedule build_schedule(const ScheduleParams& params) {
    if (params.total_steps < 1) throw InvalidConfig("schedule needs total_steps >= 1");
    if (params.eta < 0 || params.eta > 1) throw InvalidConfig("eta must lie in [0,1]");

    int T = params.total_steps;
    NoiseSchedule s;
    s.total_steps = T;
    s.eta = params.eta;
    s.alpha.resize(static_cast<size_t>(T));
    s.alpha_bar.resize(static_cast<size_t>(T));
    s.sigma.resize(static_cast<size_t>(T));

    for (int t = 1; t <= T; ++t) {
        real beta;
        if (params.kind == ScheduleKind::LinearBeta) {
            real frac = T == 1 ? 0.0 : static_cast<real>(t - 1) / (T - 1);
            beta = params.beta_start + frac * (params.beta_end - params.beta_start);
        } else {
            auto bar = [&](real step) {
                real v = std::cos((step / T + 0.008) / 1.008 * M_PI / 2.0);
                return v * v;
            };
            beta = std::min<real>(1.0 - bar(static_cast<real>(t)) / bar(static_cast<real>(t - 1)),
                                  0.999);
        }
        s.alpha[static_cast<size_t>(t - 1)] = 1.0 - beta;
    }

    real running = 1.0;
    for (int t = 1; t <= T; ++t) {
        running *= s.alpha[static_cast<size_t>(t - 1)];
        s.alpha_bar[static_cast<size_t>(t - 1)] = running;
    }

    // DDIM-style sigma interpolation, scaled by eta; eta = 0 makes every
    // reverse update deterministic.
    for (int t = 1; t <= T; ++t) {
        real bar_t = s.alpha_bar_at(t);
        real bar_prev = s.alpha_bar_at(t - 1);
        real v = (1.0 - bar_prev) / (1.0 - bar_t) * (1.0 - bar_t / bar_prev);
        s.sigma[static_cast<size_t>(t - 1)] = params.eta * std::sqrt(std::max<real>(v, 0));
    }

    s.validate();
    return s;
}

NoiseSchedule build_schedule(int total_steps, ScheduleKind kind, real eta) {
    ScheduleParams p;
    p.total_steps = total_steps;
    p.kind = kind;
    p.eta = eta;
    return build_schedule(p);
}

}  // namespace affedit::diffusion
