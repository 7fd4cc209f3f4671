#include <cmath>
#include <functional>

#include "doctest.h"

#include "core/autodiff.hpp"
#include "core/rng.hpp"
#include "nn/layers.hpp"

using namespace affedit;
using ad::Tape;
using ad::Var;
using core::RngStream;
using core::Tensor;

namespace {

using BuildFn = std::function<Var(Tape&, Var)>;

real eval_at(const Tensor& x, const BuildFn& build) {
    Tape tape;
    Var leaf = tape.leaf(x, false);
    Var out = build(tape, leaf);
    return tape.value(out)[0];
}

// Central finite differences against the analytic gradient, elementwise.
void check_gradient(const Tensor& x0, const BuildFn& build, real tol = 1e-5) {
    Tape tape;
    Var leaf = tape.leaf(x0, true);
    Var out = build(tape, leaf);
    tape.backward(out);
    Tensor analytic = tape.grad(leaf);

    const real h = 1e-6;
    for (size_t i = 0; i < x0.size(); ++i) {
        Tensor xp = x0, xm = x0;
        xp[i] += h;
        xm[i] -= h;
        real fd = (eval_at(xp, build) - eval_at(xm, build)) / (2 * h);
        real denom = std::max({std::abs(fd), std::abs(analytic[i]), real(1e-4)});
        CHECK(std::abs(fd - analytic[i]) / denom < tol);
    }
}

}  // namespace

TEST_CASE("elementwise and reduction op gradients") {
    RngStream rng(101);
    Tensor x = rng.normal_tensor({3, 4});

    Tensor w0 = rng.normal_tensor({3, 4});
    check_gradient(x, [](Tape& t, Var v) { return t.sum_all(t.square(v)); });
    check_gradient(x, [](Tape& t, Var v) { return t.mean_all(t.mul(v, v)); });
    check_gradient(x, [&w0](Tape& t, Var v) {
        Var w = t.leaf(w0, false);
        return t.sum_all(t.mul(t.add(v, w), t.sub(v, w)));
    });
    check_gradient(x, [](Tape& t, Var v) {
        return t.sum_all(t.gelu(t.scale(v, 0.7)));
    });
    check_gradient(x, [](Tape& t, Var v) {
        return t.sum_all(t.square(t.add_scalar(t.relu(v), 0.3)));
    });
    Tensor pos = x;
    for (size_t i = 0; i < pos.size(); ++i) pos[i] = std::abs(pos[i]) + 0.5;
    check_gradient(pos, [](Tape& t, Var v) { return t.sum_all(t.sqrt_guarded(v)); });
    check_gradient(pos, [](Tape& t, Var v) { return t.sum_all(t.reciprocal(v)); });
    check_gradient(x, [](Tape& t, Var v) { return t.frobenius_norm(v); });
}

TEST_CASE("matmul, matvec and transpose gradients") {
    RngStream rng(102);
    Tensor a = rng.normal_tensor({3, 5});
    Tensor b = rng.normal_tensor({5, 4});
    Tensor v = rng.normal_tensor({5});

    check_gradient(a, [&](Tape& t, Var x) {
        Var bb = t.leaf(b, false);
        return t.sum_all(t.square(t.matmul(x, bb)));
    });
    check_gradient(b, [&](Tape& t, Var x) {
        Var aa = t.leaf(a, false);
        return t.sum_all(t.square(t.matmul(aa, x)));
    });
    Tensor a45 = rng.normal_tensor({4, 5});
    check_gradient(v, [&](Tape& t, Var x) {
        Var aa = t.leaf(a45, false);
        return t.sum_all(t.square(t.matvec(aa, x)));
    });
    check_gradient(a, [](Tape& t, Var x) {
        return t.sum_all(t.square(t.transpose(x)));
    });
}

TEST_CASE("rowwise and broadcast gradients") {
    RngStream rng(103);
    Tensor m = rng.normal_tensor({4, 6});
    Tensor v = rng.normal_tensor({4});

    check_gradient(m, [](Tape& t, Var x) {
        return t.sum_all(t.square(t.broadcast_rows(t.rows_mean(x), 6)));
    });
    check_gradient(v, [&](Tape& t, Var x) {
        Var mm = t.leaf(m, false);
        return t.sum_all(t.square(t.mul_rowwise(mm, x)));
    });
    check_gradient(m, [&](Tape& t, Var x) {
        Var vv = t.leaf(v, false);
        return t.sum_all(t.square(t.add_rowwise(x, vv)));
    });
    check_gradient(v, [](Tape& t, Var x) {
        return t.sum_all(t.square(t.broadcast_rows(x, 7)));
    });
}

TEST_CASE("softmax, slicing and pooling gradients") {
    RngStream rng(104);
    Tensor m = rng.normal_tensor({4, 6});
    Tensor grid = rng.normal_tensor({3, 4 * 6});

    check_gradient(m, [](Tape& t, Var x) {
        return t.sum_all(t.square(t.softmax_rows(x)));
    });
    check_gradient(m, [](Tape& t, Var x) {
        Var top = t.slice_rows(x, 0, 2);
        Var bottom = t.slice_rows(x, 2, 4);
        return t.sum_all(t.mul(top, bottom));
    });
    check_gradient(m, [](Tape& t, Var x) {
        return t.sum_all(t.square(t.concat_rows(x, t.scale(x, 2.0))));
    });
    check_gradient(grid, [](Tape& t, Var x) {
        return t.sum_all(t.square(t.avgpool2x2(x, 4, 6)));
    });
    check_gradient(grid, [](Tape& t, Var x) {
        return t.sum_all(t.square(t.upsample2x2(x, 4, 6)));
    });
    check_gradient(m, [](Tape& t, Var x) {
        return t.sum_all(t.square(t.reshape(x, {6, 4})));
    });
    check_gradient(m, [](Tape& t, Var x) {
        return t.sum_all(t.square(t.clamp_min(x, 0.1)));
    });
}

TEST_CASE("attention block end-to-end gradient") {
    RngStream rng(105);
    core::ParamMap params;
    nn::add_attention(params, "attn", 8, 6, rng);
    Tensor x = rng.normal_tensor({8, 5});
    Tensor kv = rng.normal_tensor({6, 7});

    // Gradient w.r.t. the query stream.
    check_gradient(x, [&](Tape& t, Var q) {
        nn::Bind bind(t, params, false);
        Var kvv = t.leaf(kv, false);
        return t.sum_all(t.square(nn::attention(t, bind, "attn", q, kvv, 2)));
    });
    // Gradient w.r.t. the key/value stream (the mapper-conditioning path).
    check_gradient(kv, [&](Tape& t, Var kvv) {
        nn::Bind bind(t, params, false);
        Var q = t.leaf(x, false);
        return t.sum_all(t.square(nn::attention(t, bind, "attn", q, kvv, 2)));
    });
}

TEST_CASE("channel_norm matches hand computation and differentiates") {
    RngStream rng(106);
    Tensor x = rng.normal_tensor({3, 8});
    Tape t;
    Var v = t.leaf(x, false);
    Var y = nn::channel_norm(t, v, 1e-5);
    const Tensor& out = t.value(y);
    for (int r = 0; r < 3; ++r) {
        real mu = 0;
        for (int j = 0; j < 8; ++j) mu += x.at(r, j);
        mu /= 8;
        real var = 0;
        for (int j = 0; j < 8; ++j) var += (x.at(r, j) - mu) * (x.at(r, j) - mu);
        var /= 8;
        real sd = std::sqrt(var);
        for (int j = 0; j < 8; ++j) {
            CHECK(out.at(r, j) == doctest::Approx((x.at(r, j) - mu) / sd).epsilon(1e-9));
        }
    }
    // Weight the normalized entries; a plain sum of squares is constant in x.
    Tensor weights = rng.normal_tensor({3, 8});
    check_gradient(x, [&weights](Tape& tp, Var xv) {
        Var w = tp.leaf(weights, false);
        return tp.sum_all(tp.mul(nn::channel_norm(tp, xv, 1e-5), w));
    });
}

TEST_CASE("parameter bindings receive gradients") {
    RngStream rng(107);
    core::ParamMap params;
    nn::add_linear(params, "fc", 4, 3, rng);
    Tensor x = rng.normal_tensor({4, 5});

    Tape t;
    nn::Bind bind(t, params, true);
    Var y = nn::linear(t, bind, "fc", t.leaf(x, false));
    Var loss = t.sum_all(t.square(y));
    t.backward(loss);
    REQUIRE(t.params().size() == 2);
    bool any_nonzero = false;
    for (const auto& p : t.params()) {
        const Tensor& g = t.grad(p.node);
        for (size_t i = 0; i < g.size(); ++i) any_nonzero |= g[i] != 0;
    }
    CHECK(any_nonzero);
}
