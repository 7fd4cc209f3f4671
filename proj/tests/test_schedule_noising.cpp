#include <cmath>

#include "doctest.h"

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "diffusion/noising.hpp"
#include "diffusion/schedule.hpp"

using namespace affedit;
using namespace affedit::diffusion;
using core::RngStream;
using core::Tensor;

namespace {

// Oracle predictor that knows the clean latent and reports the exact noise
// consistent with the current z_t.
struct OracleDenoiser : Denoiser {
    OracleDenoiser(Tensor clean_in, const NoiseSchedule* sched)
        : clean(std::move(clean_in)), schedule(sched) {}
    Tensor clean;
    const NoiseSchedule* schedule;
    Tensor predict(const Tensor& z_t, int t, const Tensor&) const override {
        real bar = schedule->alpha_bar_at(t);
        Tensor eps(z_t.shape());
        real denom = std::sqrt(1.0 - bar);
        for (size_t i = 0; i < eps.size(); ++i) {
            eps[i] = (z_t[i] - std::sqrt(bar) * clean[i]) / denom;
        }
        return eps;
    }
};

struct ConstantDenoiser : Denoiser {
    explicit ConstantDenoiser(Tensor v) : value(std::move(v)) {}
    Tensor value;
    Tensor predict(const Tensor&, int, const Tensor&) const override { return value; }
};

}  // namespace

TEST_CASE("build_schedule: single step, eta limits and product oracle") {
    NoiseSchedule one = build_schedule(1, ScheduleKind::LinearBeta, 0.0);
    CHECK(one.total_steps == 1);
    CHECK(one.alpha_bar.size() == 1);
    CHECK(one.alpha_bar_at(1) == doctest::Approx(one.alpha_at(1)));
    one.validate();

    NoiseSchedule deterministic = build_schedule(50, ScheduleKind::LinearBeta, 0.0);
    for (int t = 1; t <= 50; ++t) CHECK(deterministic.sigma_at(t) == 0.0);

    // cumulative-product oracle over the 50 alphas
    long double prod = 1.0L;
    for (int t = 1; t <= 50; ++t) {
        prod *= static_cast<long double>(deterministic.alpha_at(t));
        CHECK(deterministic.alpha_bar_at(t) ==
              doctest::Approx(static_cast<double>(prod)).epsilon(1e-12));
    }

    NoiseSchedule stochastic = build_schedule(20, ScheduleKind::Cosine, 0.7);
    stochastic.validate();
    bool any_sigma = false;
    for (int t = 1; t <= 20; ++t) any_sigma |= stochastic.sigma_at(t) > 0;
    CHECK(any_sigma);
    CHECK(stochastic.sigma_at(1) == doctest::Approx(0.0));  // alpha_bar_0 = 1

    CHECK_THROWS_AS(build_schedule(0, ScheduleKind::LinearBeta, 0.0), InvalidConfig);
    ScheduleParams bad;
    bad.eta = 1.5;
    CHECK_THROWS_AS(build_schedule(bad), InvalidConfig);
}

TEST_CASE("schedule CSV dump lists every step") {
    NoiseSchedule s = build_schedule(5, ScheduleKind::LinearBeta, 0.0);
    std::string csv = s.to_csv();
    CHECK(csv.find("t,alpha,alpha_bar,sigma") == 0);
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 6);
}

TEST_CASE("forward_noise: identity at t=0, linearity, range checks") {
    NoiseSchedule s = build_schedule(50, ScheduleKind::LinearBeta, 0.0);
    RngStream rng(21);
    Tensor z = rng.normal_tensor({4, 8, 8});
    Tensor eps = rng.normal_tensor({4, 8, 8});

    Tensor z0 = forward_noise(z, 0, eps, s);
    for (size_t i = 0; i < z.size(); ++i) CHECK(z0[i] == z[i]);

    Tensor zeros({4, 8, 8});
    Tensor zt = forward_noise(zeros, 17, eps, s);
    real ce = std::sqrt(1.0 - s.alpha_bar_at(17));
    for (size_t i = 0; i < zt.size(); ++i) CHECK(zt[i] == doctest::Approx(ce * eps[i]));

    CHECK_THROWS_AS(forward_noise(z, -1, eps, s), InvalidStep);
    CHECK_THROWS_AS(forward_noise(z, 51, eps, s), InvalidStep);
    Tensor wrong({4, 8, 4});
    CHECK_THROWS_AS(forward_noise(z, 3, wrong, s), InvalidInput);
}

TEST_CASE("forward_noise Monte-Carlo displacement matches the closed form") {
    NoiseSchedule s = build_schedule(50, ScheduleKind::LinearBeta, 0.0);
    RngStream rng(33);
    Tensor z = rng.normal_tensor({2, 6, 6});
    real z_norm_sq = 0;
    for (size_t i = 0; i < z.size(); ++i) z_norm_sq += z[i] * z[i];
    real dim = static_cast<real>(z.size());

    for (int t : {10, 25, 40}) {
        real bar = s.alpha_bar_at(t);
        real expected = (std::sqrt(bar) - 1) * (std::sqrt(bar) - 1) * z_norm_sq +
                        (1.0 - bar) * dim;
        real measured = 0;
        const int draws = 1000;
        for (int k = 0; k < draws; ++k) {
            Tensor eps = rng.normal_tensor({2, 6, 6});
            Tensor zt = forward_noise(z, t, eps, s);
            for (size_t i = 0; i < zt.size(); ++i) {
                real d = zt[i] - z[i];
                measured += d * d;
            }
        }
        measured /= draws;
        CHECK(std::abs(measured - expected) / expected < 0.05);
    }
}

TEST_CASE("forward_noise is variance-preserving on white noise") {
    NoiseSchedule s = build_schedule(50, ScheduleKind::LinearBeta, 0.0);
    RngStream rng(55);
    const int draws = 400;
    real acc = 0;
    size_t count = 0;
    for (int k = 0; k < draws; ++k) {
        Tensor z = rng.normal_tensor({1, 8, 8});
        Tensor eps = rng.normal_tensor({1, 8, 8});
        Tensor zt = forward_noise(z, 30, eps, s);
        for (size_t i = 0; i < zt.size(); ++i) acc += zt[i] * zt[i];
        count += zt.size();
    }
    CHECK(std::abs(acc / static_cast<real>(count) - 1.0) < 0.05);
}

TEST_CASE("non-cumulative audit mode uses the per-step alpha as printed") {
    NoiseSchedule s = build_schedule(50, ScheduleKind::LinearBeta, 0.0);
    RngStream rng(77);
    Tensor z = rng.normal_tensor({1, 4, 4});
    Tensor eps = rng.normal_tensor({1, 4, 4});
    Tensor audit = forward_noise(z, 20, eps, s, false);
    real a = s.alpha_at(20);
    for (size_t i = 0; i < z.size(); ++i) {
        CHECK(audit[i] ==
              doctest::Approx(std::sqrt(a) * z[i] + std::sqrt(1 - a) * eps[i]));
    }
}

TEST_CASE("denoise_step: zero prediction reduces to z / sqrt(alpha)") {
    NoiseSchedule s = build_schedule(50, ScheduleKind::LinearBeta, 0.0);
    RngStream rng(4);
    Tensor z = rng.normal_tensor({4, 8, 8});
    ConstantDenoiser zero(Tensor({4, 8, 8}));
    Tensor out = denoise_step(z, 13, Tensor({64, 16}), zero, s);
    real inv = 1.0 / std::sqrt(s.alpha_at(13));
    for (size_t i = 0; i < z.size(); ++i) CHECK(out[i] == doctest::Approx(inv * z[i]));

    CHECK_THROWS_AS(denoise_step(z, 0, Tensor({64, 16}), zero, s), InvalidStep);
    CHECK_THROWS_AS(denoise_step(z, 51, Tensor({64, 16}), zero, s), InvalidStep);
}

TEST_CASE("denoise_step matches an elementwise evaluation of the printed update") {
    NoiseSchedule s = build_schedule(50, ScheduleKind::LinearBeta, 0.0);
    RngStream rng(90);
    Tensor z_t = rng.normal_tensor({4, 8, 8});
    Tensor pred = rng.normal_tensor({4, 8, 8});
    ConstantDenoiser fixed(pred);

    for (int t : {1, 17, 50}) {
        Tensor out = denoise_step(z_t, t, Tensor({64, 16}), fixed, s);
        // independent elementwise oracle in long double
        long double alpha = s.alpha_at(t);
        long double bar = s.alpha_bar_at(t);
        for (size_t i = 0; i < z_t.size(); ++i) {
            long double expect = (z_t[i] - pred[i] * (1.0L - alpha) / sqrtl(1.0L - bar)) /
                                 sqrtl(alpha);
            CHECK(std::abs(out[i] - static_cast<real>(expect)) < 1e-9);
        }
    }
}

TEST_CASE("single-step inversion: oracle noise recovers z at t=1") {
    NoiseSchedule s = build_schedule(50, ScheduleKind::LinearBeta, 0.0);
    RngStream rng(8);
    Tensor z = rng.normal_tensor({4, 8, 8});
    Tensor eps = rng.normal_tensor({4, 8, 8});
    Tensor z1 = forward_noise(z, 1, eps, s);
    ConstantDenoiser oracle(eps);
    Tensor back = denoise_step(z1, 1, Tensor({64, 16}), oracle, s);
    for (size_t i = 0; i < z.size(); ++i) CHECK(std::abs(back[i] - z[i]) < 1e-5);
}

TEST_CASE("oracle round trip recovers z over t <= 10") {
    NoiseSchedule s = build_schedule(50, ScheduleKind::LinearBeta, 0.0);
    RngStream rng(12);
    Tensor z = rng.normal_tensor({2, 4, 4});
    OracleDenoiser oracle(z, &s);

    for (int t : {3, 7, 10}) {
        Tensor eps = rng.normal_tensor({2, 4, 4});
        Tensor cur = forward_noise(z, t, eps, s);
        for (int step = t; step >= 1; --step) {
            cur = denoise_step(cur, step, Tensor({64, 16}), oracle, s);
        }
        real worst = 0;
        for (size_t i = 0; i < z.size(); ++i) worst = std::max(worst, std::abs(cur[i] - z[i]));
        CHECK(worst <= 1e-3);
    }
}

TEST_CASE("stochastic schedule draws noise only when sigma > 0") {
    NoiseSchedule s = build_schedule(20, ScheduleKind::LinearBeta, 0.5);
    RngStream rng(3);
    Tensor z = rng.normal_tensor({1, 4, 4});
    ConstantDenoiser zero(Tensor({1, 4, 4}));
    CHECK_THROWS_AS(denoise_step(z, 10, Tensor({64, 16}), zero, s, nullptr), InvalidInput);
    RngStream noise_rng(6);
    Tensor out = denoise_step(z, 10, Tensor({64, 16}), zero, s, &noise_rng);
    CHECK(out.all_finite());
}
