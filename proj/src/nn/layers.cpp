#include "nn/layers.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace affedit::nn {

namespace {
Tensor gaussian_init(RngStream& rng, std::vector<int> shape, real stddev) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.normal() * stddev;
    return t;
}
}  // namespace

void add_linear(ParamMap& params, const std::string& prefix, int in, int out,
                RngStream& rng, bool bias) {
    params.emplace(prefix + ".w",
                   gaussian_init(rng, {out, in}, 1.0 / std::sqrt(static_cast<real>(in))));
    if (bias) params.emplace(prefix + ".b", Tensor({out}));
}

void add_attention(ParamMap& params, const std::string& prefix, int c_x, int c_kv,
                   RngStream& rng) {
    real sx = 1.0 / std::sqrt(static_cast<real>(c_x));
    real skv = 1.0 / std::sqrt(static_cast<real>(c_kv));
    params.emplace(prefix + ".wq", gaussian_init(rng, {c_x, c_x}, sx));
    params.emplace(prefix + ".wk", gaussian_init(rng, {c_x, c_kv}, skv));
    params.emplace(prefix + ".wv", gaussian_init(rng, {c_x, c_kv}, skv));
    params.emplace(prefix + ".wo", gaussian_init(rng, {c_x, c_x}, sx));
}

void add_ffn(ParamMap& params, const std::string& prefix, int c, int hidden,
             RngStream& rng) {
    add_linear(params, prefix + ".fc1", c, hidden, rng);
    add_linear(params, prefix + ".fc2", hidden, c, rng);
}

void add_norm_affine(ParamMap& params, const std::string& prefix, int c) {
    params.emplace(prefix + ".g", Tensor::full({c}, 1.0));
    params.emplace(prefix + ".b", Tensor({c}));
}

Var Bind::operator()(const std::string& name) {
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    auto pit = params_.find(name);
    if (pit == params_.end()) {
        throw InvalidConfig("unknown parameter: " + name);
    }
    Var v = trainable_ ? tape_.param(reg_prefix_ + name, pit->second)
                       : tape_.leaf(pit->second, false);
    cache_.emplace(name, v);
    return v;
}

Var linear(Tape& t, Bind& p, const std::string& prefix, Var x) {
    Var y = t.matmul(p(prefix + ".w"), x);
    return t.add_rowwise(y, p(prefix + ".b"));
}

Var linear_vec(Tape& t, Bind& p, const std::string& prefix, Var v) {
    Var y = t.matvec(p(prefix + ".w"), v);
    return t.add(y, p(prefix + ".b"));
}

Var attention(Tape& t, Bind& p, const std::string& prefix, Var x, Var kv, int heads,
              Var mask_bias) {
    int c = t.value(x).dim(0);
    if (c % heads != 0) throw InvalidConfig("attention width not divisible by heads");
    int dh = c / heads;
    real inv_scale = 1.0 / std::sqrt(static_cast<real>(dh));

    Var q = t.matmul(p(prefix + ".wq"), x);
    Var k = t.matmul(p(prefix + ".wk"), kv);
    Var v = t.matmul(p(prefix + ".wv"), kv);

    Var merged;
    for (int h = 0; h < heads; ++h) {
        Var qh = t.slice_rows(q, h * dh, (h + 1) * dh);
        Var kh = t.slice_rows(k, h * dh, (h + 1) * dh);
        Var vh = t.slice_rows(v, h * dh, (h + 1) * dh);
        Var scores = t.scale(t.matmul(t.transpose(qh), kh), inv_scale);
        if (mask_bias.valid()) scores = t.add(scores, mask_bias);
        Var weights = t.softmax_rows(scores);  // (Nq, Nk)
        Var oh = t.matmul(vh, t.transpose(weights));
        merged = h == 0 ? oh : t.concat_rows(merged, oh);
    }
    return t.matmul(p(prefix + ".wo"), merged);
}

Var ffn(Tape& t, Bind& p, const std::string& prefix, Var x) {
    return linear(t, p, prefix + ".fc2", t.gelu(linear(t, p, prefix + ".fc1", x)));
}

Var channel_norm(Tape& t, Var x, real eps) {
    int n = t.value(x).dim(1);
    Var mu = t.rows_mean(x);
    Var centered = t.sub(x, t.broadcast_rows(mu, n));
    Var variance = t.rows_mean(t.square(centered));
    Var sigma = t.clamp_min(t.sqrt_guarded(variance), eps);
    return t.mul_rowwise(centered, t.reciprocal(sigma));
}

Var norm_affine(Tape& t, Bind& p, const std::string& prefix, Var x, real eps) {
    Var normalized = channel_norm(t, x, eps);
    return t.add_rowwise(t.mul_rowwise(normalized, p(prefix + ".g")), p(prefix + ".b"));
}

Tensor prefix_mask_bias(int query_len, int key_len, int n_real) {
    Tensor bias({query_len, key_len});
    for (int i = 0; i < query_len; ++i) {
        for (int j = n_real; j < key_len; ++j) bias.at(i, j) = -1e9;
    }
    return bias;
}

Tensor prefix_mask_vector(int n, int n_real) {
    Tensor v({n});
    for (int i = 0; i < n && i < n_real; ++i) v[static_cast<size_t>(i)] = 1.0;
    return v;
}

Var masked_channel_norm(Tape& t, Var x, int n_real, real eps) {
    int n = t.value(x).dim(1);
    if (n_real <= 0 || n_real > n) throw InvalidInput("masked_channel_norm: bad prefix length");
    Var mask = t.leaf(prefix_mask_vector(n, n_real), false);
    real inv_count = 1.0 / static_cast<real>(n_real);
    Var mu = t.scale(t.matvec(x, mask), inv_count);
    Var centered = t.sub(x, t.broadcast_rows(mu, n));
    Var variance = t.scale(t.matvec(t.square(centered), mask), inv_count);
    Var sigma = t.clamp_min(t.sqrt_guarded(variance), eps);
    return t.mul_rowwise(centered, t.reciprocal(sigma));
}

Tensor sinusoidal_embedding(real position, int dim) {
    Tensor e({dim});
    int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        real freq = std::pow(10000.0, -static_cast<real>(i) / half);
        e[static_cast<size_t>(i)] = std::sin(position * freq);
        e[static_cast<size_t>(half + i)] = std::cos(position * freq);
    }
    return e;
}

}  // namespace affedit::nn
