#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "mapper/mapper.hpp"

using namespace affedit;
using namespace affedit::mapper;
using core::RngStream;
using core::Tensor;

TEST_CASE("extract_key_semantics: linearity, pooling and a matvec oracle") {
    MapperConfig cfg;
    cfg.c_s = 8;
    cfg.c_t = 4;
    cfg.n_l = 5;
    cfg.heads = 2;
    cfg.depth = 1;
    EmotionalMapper m(cfg, 3);

    // zero input with zero bias -> zero vector
    m.params().at("key.b").fill(0.0);
    Tensor zero_sem({8, 5});
    Tensor fk0 = m.extract_key_semantics(zero_sem);
    for (size_t i = 0; i < fk0.size(); ++i) CHECK(fk0[i] == 0.0);

    // constant-over-tokens input pools to the constant column
    RngStream rng(4);
    Tensor col = rng.normal_tensor({8});
    Tensor constant({8, 5});
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 5; ++c) constant.at(r, c) = col[static_cast<size_t>(r)];
    Tensor fk = m.extract_key_semantics(constant);
    const Tensor& w = m.params().at("key.w");
    for (int r = 0; r < 8; ++r) {
        real expect = 0;
        for (int c = 0; c < 8; ++c) expect += w.at(r, c) * col[static_cast<size_t>(c)];
        CHECK(fk[static_cast<size_t>(r)] == doctest::Approx(expect).epsilon(1e-12));
    }

    // random fixture vs an independent pooled matvec
    Tensor sem = rng.normal_tensor({8, 5});
    Tensor fk_rand = m.extract_key_semantics(sem);
    for (int r = 0; r < 8; ++r) {
        long double acc = 0;
        for (int c = 0; c < 8; ++c) {
            long double pooled = 0;
            for (int tkn = 0; tkn < 5; ++tkn) pooled += sem.at(c, tkn);
            pooled /= 5;
            acc += w.at(r, c) * pooled;
        }
        CHECK(fk_rand[static_cast<size_t>(r)] ==
              doctest::Approx(static_cast<double>(acc)).epsilon(1e-10));
    }
}

TEST_CASE("modulate: degenerate cases and an elementwise oracle") {
    const real eps = 1e-5;
    RngStream rng(7);
    const int c = 6, n = 9;
    Tensor f = rng.normal_tensor({c, n});
    Tensor zero_fk({c});
    Tensor w1 = rng.normal_tensor({c, c});
    Tensor w2 = rng.normal_tensor({c, c});

    // f_k = 0 reduces to plain per-channel normalization
    Tensor plain = modulate(f, zero_fk, w1, w2, eps);
    for (int r = 0; r < c; ++r) {
        real mu = 0;
        for (int j = 0; j < n; ++j) mu += f.at(r, j);
        mu /= n;
        real var = 0;
        for (int j = 0; j < n; ++j) var += (f.at(r, j) - mu) * (f.at(r, j) - mu);
        var /= n;
        real sd = std::max(std::sqrt(var), eps);
        for (int j = 0; j < n; ++j) {
            CHECK(plain.at(r, j) == doctest::Approx((f.at(r, j) - mu) / sd).epsilon(1e-10));
        }
    }

    // constant feature rows hit the sigma floor and come out ~0
    Tensor constant = Tensor::full({c, n}, 1.7);
    Tensor flat = modulate(constant, zero_fk, w1, w2, eps);
    for (size_t i = 0; i < flat.size(); ++i) CHECK(std::abs(flat[i]) < 1e-9);

    // random fixture vs an elementwise long-double oracle
    Tensor fk = rng.normal_tensor({c});
    Tensor out = modulate(f, fk, w1, w2, eps);
    for (int r = 0; r < c; ++r) {
        long double mu = 0;
        for (int j = 0; j < n; ++j) mu += f.at(r, j);
        mu /= n;
        long double var = 0;
        for (int j = 0; j < n; ++j) {
            var += (f.at(r, j) - mu) * static_cast<long double>(f.at(r, j) - mu);
        }
        var /= n;
        long double sd = std::max<long double>(sqrtl(var), eps);
        long double scale = 1.0, shift = 0.0;
        long double w1fk = 0, w2fk = 0;
        for (int k = 0; k < c; ++k) {
            w1fk += w1.at(r, k) * fk[static_cast<size_t>(k)];
            w2fk += w2.at(r, k) * fk[static_cast<size_t>(k)];
        }
        scale = 1.0L + w1fk;
        shift = w2fk;
        for (int j = 0; j < n; ++j) {
            long double expect = scale * (f.at(r, j) - mu) / sd + shift;
            CHECK(out.at(r, j) == doctest::Approx(static_cast<double>(expect)).epsilon(1e-9));
        }
    }
}

TEST_CASE("modulate gradients match finite differences") {
    const real eps = 1e-5;
    RngStream rng(13);
    const int c = 4, n = 6;
    Tensor f0 = rng.normal_tensor({c, n});
    Tensor fk0 = rng.normal_tensor({c});
    Tensor w1 = rng.normal_tensor({c, c});
    Tensor w2 = rng.normal_tensor({c, c});
    Tensor weights = rng.normal_tensor({c, n});  // projection to a scalar

    auto loss_value = [&](const Tensor& f, const Tensor& fk) {
        ad::Tape t;
        ad::Var out = modulate(t, t.leaf(f), t.leaf(fk), t.leaf(w1), t.leaf(w2), eps);
        return t.value(t.sum_all(t.mul(out, t.leaf(weights))))[0];
    };

    ad::Tape tape;
    ad::Var fv = tape.leaf(f0, true);
    ad::Var fkv = tape.leaf(fk0, true);
    ad::Var out = modulate(tape, fv, fkv, tape.leaf(w1), tape.leaf(w2), eps);
    ad::Var loss = tape.sum_all(tape.mul(out, tape.leaf(weights)));
    tape.backward(loss);

    const real h = 1e-6;
    const Tensor& gf = tape.grad(fv);
    for (size_t i = 0; i < f0.size(); ++i) {
        Tensor fp = f0, fm = f0;
        fp[i] += h;
        fm[i] -= h;
        real fd = (loss_value(fp, fk0) - loss_value(fm, fk0)) / (2 * h);
        real denom = std::max({std::abs(fd), std::abs(gf[i]), real(1e-5)});
        CHECK(std::abs(fd - gf[i]) / denom < 1e-4);
    }
    const Tensor& gfk = tape.grad(fkv);
    for (size_t i = 0; i < fk0.size(); ++i) {
        Tensor kp = fk0, km = fk0;
        kp[i] += h;
        km[i] -= h;
        real fd = (loss_value(f0, kp) - loss_value(f0, km)) / (2 * h);
        real denom = std::max({std::abs(fd), std::abs(gfk[i]), real(1e-5)});
        CHECK(std::abs(fd - gfk[i]) / denom < 1e-4);
    }
}

TEST_CASE("mapper_forward: shape, purity and shape mismatch errors") {
    MapperConfig cfg;
    cfg.c_s = 16;
    cfg.c_t = 8;
    cfg.n_l = 6;
    cfg.heads = 4;
    cfg.depth = 3;
    EmotionalMapper m(cfg, 11);

    RngStream rng(2);
    Tensor request = rng.normal_tensor({8, 6});
    Tensor semantics = rng.normal_tensor({16, 6});

    auto out1 = m.forward(request, semantics);
    auto out2 = m.forward(request, semantics);
    CHECK(out1.embedding.shape() == std::vector<int>{16, 6});
    for (size_t i = 0; i < out1.embedding.size(); ++i) {
        CHECK(out1.embedding[i] == out2.embedding[i]);
    }

    Tensor bad = rng.normal_tensor({7, 6});
    CHECK_THROWS_AS(m.forward(bad, semantics), InvalidConfig);
    Tensor bad_sem = rng.normal_tensor({16, 5});
    CHECK_THROWS_AS(m.forward(request, bad_sem), InvalidConfig);
}

TEST_CASE("zeroed sub-modules reduce the block to composed modulations") {
    MapperConfig cfg;
    cfg.c_s = 8;
    cfg.c_t = 4;
    cfg.n_l = 5;
    cfg.heads = 2;
    cfg.depth = 1;
    EmotionalMapper m(cfg, 5);

    // zero every attention/FFN output projection path
    for (auto& [name, tensor] : m.params()) {
        if (name.find(".msa.") != std::string::npos ||
            name.find(".mca.") != std::string::npos ||
            name.find(".ffn.") != std::string::npos) {
            tensor.fill(0.0);
        }
    }

    RngStream rng(6);
    Tensor request = rng.normal_tensor({4, 5});
    Tensor semantics = rng.normal_tensor({8, 5});
    Tensor got = m.forward(request, semantics).embedding;

    // oracle: lift, then modulate three times with the block's matrices
    Tensor fk = m.extract_key_semantics(semantics);
    ad::Tape t;
    ad::Var x = t.leaf(request);
    x = t.add_rowwise(t.matmul(t.leaf(m.params().at("entry.w")), x),
                      t.leaf(m.params().at("entry.b")));
    for (int mod = 0; mod < 3; ++mod) {
        std::string pre = "blk0.mod" + std::to_string(mod);
        x = modulate(t, x, t.leaf(fk), t.leaf(m.params().at(pre + ".w1")),
                     t.leaf(m.params().at(pre + ".w2")), cfg.eps_norm);
    }
    const Tensor& expect = t.value(x);
    REQUIRE(got.same_shape(expect));
    for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-10));
    }
}

TEST_CASE("cross-attention is exactly invariant to key/value token order") {
    MapperConfig cfg;
    cfg.c_s = 8;
    cfg.c_t = 4;
    cfg.n_l = 6;
    cfg.heads = 2;
    cfg.depth = 2;
    EmotionalMapper m(cfg, 9);

    RngStream rng(14);
    Tensor request = rng.normal_tensor({4, 6});
    Tensor semantics = rng.normal_tensor({8, 6});

    // permute semantic tokens
    std::vector<int> perm{3, 0, 5, 1, 4, 2};
    Tensor permuted({8, 6});
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 6; ++c) permuted.at(r, c) = semantics.at(r, perm[static_cast<size_t>(c)]);

    // f^k pools over tokens and MCA sums over keys, so the full forward is
    // unchanged under any permutation of the semantics tokens.
    Tensor a = m.forward(request, semantics).embedding;
    Tensor b = m.forward(request, permuted).embedding;
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("mapper end-to-end gradient on a sampled parameter subset") {
    MapperConfig cfg;
    cfg.c_s = 8;
    cfg.c_t = 4;
    cfg.n_l = 4;
    cfg.heads = 2;
    cfg.depth = 2;
    EmotionalMapper m(cfg, 21);

    RngStream rng(22);
    Tensor request = rng.normal_tensor({4, 4});
    Tensor semantics = rng.normal_tensor({8, 4});

    auto loss_now = [&]() {
        ad::Tape t;
        nn::Bind bind(t, m.params(), false);
        ad::Var out = m.forward_t(t, t.leaf(request), t.leaf(semantics), bind);
        return t.value(t.mean_all(out))[0];
    };

    ad::Tape tape;
    nn::Bind bind(tape, m.params(), true);
    ad::Var out = m.forward_t(tape, tape.leaf(request), tape.leaf(semantics), bind);
    ad::Var loss = tape.mean_all(out);
    tape.backward(loss);

    // roughly 1% of parameters, deterministic stride
    const real h = 1e-6;
    int checked = 0;
    for (const auto& binding : tape.params()) {
        Tensor& master = m.params().at(binding.name);
        const Tensor& g = tape.grad(binding.node);
        for (size_t i = 0; i < master.size(); i += 97) {
            real saved = master[i];
            master[i] = saved + h;
            real fp = loss_now();
            master[i] = saved - h;
            real fm = loss_now();
            master[i] = saved;
            real fd = (fp - fm) / (2 * h);
            real denom = std::max({std::abs(fd), std::abs(g[i]), real(1e-5)});
            CHECK(std::abs(fd - g[i]) / denom < 1e-3);
            ++checked;
        }
    }
    CHECK(checked > 30);
}
