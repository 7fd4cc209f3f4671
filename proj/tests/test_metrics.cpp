#include <cmath>

#include "doctest.h"

#include "core/errors.hpp"
#include "core/linalg.hpp"
#include "core/rng.hpp"
#include "evalmetrics/metrics.hpp"
#include "handles/stubs.hpp"

using namespace affedit;
using namespace affedit::evalmetrics;
using core::RngStream;
using core::Tensor;
using spectrum::EmotionDistribution;

namespace {

GaussianSummary make_summary(Tensor mean, Tensor cov) {
    GaussianSummary g;
    g.mean = std::move(mean);
    g.covariance = std::move(cov);
    return g;
}

Tensor identity(int n) {
    Tensor t({n, n});
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

// Analytic eigenvalues of a symmetric 2x2 / 3x3 matrix (Cardano for 3x3).
std::vector<double> analytic_eigs_2x2(const Tensor& m) {
    double tr = m.at(0, 0) + m.at(1, 1);
    double det = m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
    double disc = std::sqrt(std::max(0.0, tr * tr - 4 * det));
    return {(tr - disc) / 2, (tr + disc) / 2};
}

// General (possibly non-symmetric) 3x3 with real eigenvalues: solve the
// characteristic cubic trigonometrically.
std::vector<double> analytic_eigs_3x3(const Tensor& m) {
    double c2 = m.at(0, 0) + m.at(1, 1) + m.at(2, 2);
    double tr_m2 = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) tr_m2 += m.at(i, j) * m.at(j, i);
    double c1 = 0.5 * (c2 * c2 - tr_m2);
    double c0 = m.at(0, 0) * (m.at(1, 1) * m.at(2, 2) - m.at(1, 2) * m.at(2, 1)) -
                m.at(0, 1) * (m.at(1, 0) * m.at(2, 2) - m.at(1, 2) * m.at(2, 0)) +
                m.at(0, 2) * (m.at(1, 0) * m.at(2, 1) - m.at(1, 1) * m.at(2, 0));
    // depressed cubic x^3 + p x + q with lambda = x + c2/3
    double p = c1 - c2 * c2 / 3.0;
    double q = -2.0 * c2 * c2 * c2 / 27.0 + c1 * c2 / 3.0 - c0;
    double a = std::sqrt(std::max(0.0, -p / 3.0));
    double arg = a == 0.0 ? 0.0 : 3.0 * q / (2.0 * p * a);
    arg = std::min(1.0, std::max(-1.0, arg));
    double theta = std::acos(arg);
    std::vector<double> eigs(3);
    for (int k = 0; k < 3; ++k) {
        eigs[static_cast<size_t>(k)] =
            2.0 * a * std::cos(theta / 3.0 - 2.0 * M_PI * k / 3.0) + c2 / 3.0;
    }
    return eigs;
}

}  // namespace

TEST_CASE("frechet_distance: identical Gaussians and pure mean shift") {
    RngStream rng(2);
    Tensor a({3, 3});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a.at(i, j) = rng.normal();
    Tensor cov = core::matmul(a, core::transpose(a));
    GaussianSummary g = make_summary(rng.normal_tensor({3}), cov);
    CHECK(frechet_distance(g, g) == doctest::Approx(0.0).epsilon(1e-9));

    GaussianSummary p = make_summary(Tensor({2}), identity(2));
    GaussianSummary q = make_summary(Tensor({2}, {3.0, 4.0}), identity(2));
    CHECK(frechet_distance(p, q) == doctest::Approx(25.0).epsilon(1e-10));
}

TEST_CASE("frechet_distance is symmetric and matches analytic eigen oracles") {
    RngStream rng(5);
    auto random_psd = [&](int n) {
        Tensor a({n, n});
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a.at(i, j) = rng.normal();
        return core::matmul(a, core::transpose(a));
    };

    for (int dim : {2, 3}) {
        Tensor ca = random_psd(dim), cb = random_psd(dim);
        Tensor mu_a = rng.normal_tensor({dim}), mu_b = rng.normal_tensor({dim});
        GaussianSummary a = make_summary(mu_a, ca), b = make_summary(mu_b, cb);

        real got = frechet_distance(a, b);
        CHECK(got == doctest::Approx(frechet_distance(b, a)).epsilon(1e-8));

        // oracle: tr((Sa Sb)^{1/2}) = sum sqrt(eig(Sa Sb)); the product's
        // eigenvalues come from closed-form formulas, not from eigh.
        Tensor prod = core::matmul(ca, cb);
        std::vector<double> eigs =
            dim == 2 ? analytic_eigs_2x2(prod) : analytic_eigs_3x3(prod);
        double tr_sqrt = 0;
        for (double e : eigs) tr_sqrt += std::sqrt(std::max(0.0, e));
        double mean_term = 0;
        for (int i = 0; i < dim; ++i) {
            double d = mu_a[static_cast<size_t>(i)] - mu_b[static_cast<size_t>(i)];
            mean_term += d * d;
        }
        double expect = mean_term + core::trace(ca) + core::trace(cb) - 2.0 * tr_sqrt;
        CHECK(got == doctest::Approx(expect).epsilon(1e-6));
    }

    // commuting (diagonal) case at dim 8: closed form sum sqrt(a_i b_i)
    Tensor da({8, 8}), db({8, 8});
    Tensor mu({8});
    double expect8 = 0;
    for (int i = 0; i < 8; ++i) {
        double va = 0.2 + rng.uniform() * 3.0;
        double vb = 0.2 + rng.uniform() * 3.0;
        da.at(i, i) = va;
        db.at(i, i) = vb;
        expect8 += va + vb - 2.0 * std::sqrt(va * vb);
    }
    CHECK(frechet_distance(make_summary(mu, da), make_summary(mu, db)) ==
          doctest::Approx(expect8).epsilon(1e-9));

    // analytic eigenvalue oracle wrong-dimension check
    CHECK_THROWS_AS(
        frechet_distance(make_summary(Tensor({2}), identity(2)),
                         make_summary(Tensor({3}), identity(3))),
        InvalidInput);
}

TEST_CASE("summarize_features and the PSD validity check") {
    RngStream rng(8);
    std::vector<std::vector<real>> feats;
    for (int i = 0; i < 12; ++i) {
        std::vector<real> f(4);
        for (auto& v : f) v = rng.normal();
        feats.push_back(std::move(f));
    }
    GaussianSummary g = summarize_features(feats);
    g.validate();

    // mean oracle
    for (int d = 0; d < 4; ++d) {
        real acc = 0;
        for (const auto& f : feats) acc += f[static_cast<size_t>(d)];
        CHECK(g.mean[static_cast<size_t>(d)] == doctest::Approx(acc / 12).epsilon(1e-12));
    }
    // unbiased covariance oracle, one entry
    real c01 = 0;
    for (const auto& f : feats) {
        c01 += (f[0] - g.mean[0]) * (f[1] - g.mean[1]);
    }
    CHECK(g.covariance.at(0, 1) == doctest::Approx(c01 / 11).epsilon(1e-12));

    CHECK_THROWS_AS(summarize_features({{1.0, 2.0}}), InvalidInput);
}

TEST_CASE("sem_c: uniform stubs, saturation, hand-computed fixture") {
    handles::UniformProbClassifier object10(10);
    handles::UniformProbClassifier scene4(4);
    std::vector<Tensor> images(3, Tensor({3, 4, 4}));
    CHECK(sem_c(images, object10, scene4) == doctest::Approx(0.25));

    struct OneHot : ProbClassifier {
        std::vector<real> probabilities(const Tensor&) const override {
            std::vector<real> p(6, 0.0);
            p[2] = 1.0;
            return p;
        }
    } one_hot;
    CHECK(sem_c(images, one_hot, scene4) == doctest::Approx(1.0));

    struct PerImage : ProbClassifier {
        std::vector<real> probabilities(const Tensor& image) const override {
            // keyed by the planted first pixel
            real v = image[0];
            return {v, 1.0 - v};
        }
    } keyed;
    std::vector<Tensor> fixture;
    real planted[3] = {0.9, 0.3, 0.6};
    for (real v : planted) {
        Tensor img({3, 2, 2});
        img[0] = v;
        fixture.push_back(img);
    }
    // per-image max of {max(v,1-v), 0.25}
    real expect = (0.9 + 0.7 + 0.6) / 3.0;
    CHECK(sem_c(fixture, keyed, scene4) == doctest::Approx(expect).epsilon(1e-12));

    CHECK_THROWS_AS(sem_c({}, object10, scene4), InvalidInput);
}

TEST_CASE("kld_score: identity, one-hot vs uniform, elementwise oracle") {
    EmotionDistribution uniform = EmotionDistribution::uniform();
    CHECK(kld_score(uniform, uniform) <= 1e-6);

    EmotionDistribution hot = EmotionDistribution::one_hot(1);
    real kl = kld_score(uniform, hot);  // KL(target=hot || predicted=uniform)
    CHECK(std::abs(kl - std::log(8.0)) < 1e-3);

    // random fixture vs a long-double term-by-term oracle
    RngStream rng(4);
    auto random_simplex = [&] {
        std::vector<real> p(8);
        real sum = 0;
        for (auto& v : p) {
            v = rng.uniform() + 1e-3;
            sum += v;
        }
        for (auto& v : p) v /= sum;
        return EmotionDistribution::from_probs(p);
    };
    for (int trial = 0; trial < 10; ++trial) {
        EmotionDistribution pred = random_simplex();
        EmotionDistribution target = random_simplex();
        const long double eps = 1e-8L;
        long double psum = 0, tsum = 0;
        for (int i = 0; i < 8; ++i) {
            psum += pred.probs[static_cast<size_t>(i)] + eps;
            tsum += target.probs[static_cast<size_t>(i)] + eps;
        }
        long double expect = 0;
        for (int i = 0; i < 8; ++i) {
            long double pi = (pred.probs[static_cast<size_t>(i)] + eps) / psum;
            long double ti = (target.probs[static_cast<size_t>(i)] + eps) / tsum;
            expect += ti * logl(ti / pi);
        }
        CHECK(std::abs(kld_score(pred, target) - static_cast<double>(expect)) <= 1e-9);
        CHECK(kld_score(pred, target) >= 0);
    }

    // direction flag swaps the arguments
    EmotionDistribution a = random_simplex(), b = random_simplex();
    CHECK(kld_score(a, b, 1e-8, KldDirection::PredictedGivenTarget) ==
          doctest::Approx(kld_score(b, a, 1e-8, KldDirection::TargetGivenPredicted)));
}

TEST_CASE("evaluate_suite: degenerate batch, composition, error paths") {
    RngStream rng(11);
    handles::PixelFeatureExtractor features;
    handles::ChannelMeanProbClassifier object_cls;
    handles::UniformProbClassifier scene_cls(4);
    handles::ColorToneClassifier emotion_cls;

    EvalHandles h;
    h.feature_extractor = &features;
    h.object_classifier = &object_cls;
    h.scene_classifier = &scene_cls;
    h.emotion_classifier = &emotion_cls;

    std::vector<EvalRecord> records;
    for (int i = 0; i < 4; ++i) {
        EvalRecord rec;
        rec.id = "r" + std::to_string(i);
        rec.original = rng.normal_tensor({3, 8, 8});
        for (auto& v : rec.original.vec()) v = std::abs(v) * 0.2;
        rec.edited = rec.original;  // identical sets
        rec.target = EmotionDistribution::uniform();
        rec.text = "fixture";
        records.push_back(std::move(rec));
    }

    EvalReport report = evaluate_suite(records, h, "cfg123");
    REQUIRE(report.fid.has_value());
    CHECK(*report.fid == doctest::Approx(0.0).epsilon(1e-6));
    REQUIRE(report.sem_c.has_value());
    REQUIRE(report.mean_kld.has_value());
    CHECK(report.n == 4);
    CHECK(report.config_hash == "cfg123");
    CHECK(report.errors.empty());

    // report fields equal individually computed metrics
    std::vector<Tensor> edited;
    std::vector<std::vector<real>> ef, rf;
    real kld_total = 0;
    for (const auto& rec : records) {
        edited.push_back(rec.edited);
        ef.push_back(features.features(rec.edited));
        rf.push_back(features.features(rec.original));
        kld_total += kld_score(spectrum::estimate_distribution(rec.edited, emotion_cls),
                               rec.target);
    }
    CHECK(*report.sem_c == doctest::Approx(sem_c(edited, object_cls, scene_cls)));
    CHECK(*report.fid ==
          doctest::Approx(frechet_distance(summarize_features(ef), summarize_features(rf))));
    CHECK(*report.mean_kld == doctest::Approx(kld_total / 4));

    // JSON and CSV artifacts
    auto j = report.to_json();
    CHECK(j["n"] == 4);
    CHECK(report.per_record_csv().find("r0,") != std::string::npos);

    CHECK_THROWS_AS(evaluate_suite({}, h, "x"), InvalidInput);

    // partial report: missing handle produces an error entry, not a throw
    EvalHandles partial = h;
    partial.feature_extractor = nullptr;
    EvalReport degraded = evaluate_suite(records, partial, "x");
    CHECK(!degraded.fid.has_value());
    CHECK(degraded.sem_c.has_value());
    REQUIRE(!degraded.errors.empty());
}

TEST_CASE("metrics are invariant to batch order") {
    RngStream rng(13);
    std::vector<std::vector<real>> feats;
    for (int i = 0; i < 6; ++i) {
        std::vector<real> f(3);
        for (auto& v : f) v = rng.normal();
        feats.push_back(std::move(f));
    }
    auto reversed = feats;
    std::reverse(reversed.begin(), reversed.end());
    GaussianSummary a = summarize_features(feats);
    GaussianSummary b = summarize_features(reversed);
    for (size_t i = 0; i < a.mean.size(); ++i) {
        CHECK(a.mean[i] == doctest::Approx(b.mean[i]).epsilon(1e-12));
    }
    for (size_t i = 0; i < a.covariance.size(); ++i) {
        CHECK(a.covariance[i] == doctest::Approx(b.covariance[i]).epsilon(1e-12));
    }
}
