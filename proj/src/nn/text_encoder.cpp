#include "nn/text_encoder.hpp"

#include "core/errors.hpp"

namespace affedit::nn {

using ad::Tape;
using ad::Var;

TextEncoder::TextEncoder(TextEncoderConfig cfg, uint64_t seed) : cfg_(cfg) {
    if (cfg_.channels % cfg_.heads != 0) {
        throw InvalidConfig("text encoder channels not divisible by heads");
    }
    core::RngStream rng(seed);
    int c = cfg_.channels;
    params_.emplace("emb", [&] {
        Tensor e({c, cfg_.vocab});
        for (size_t i = 0; i < e.size(); ++i) e[i] = rng.normal() * 0.5;
        return e;
    }());
    params_.emplace("pos", [&] {
        Tensor p({c, cfg_.seq_len});
        for (size_t i = 0; i < p.size(); ++i) p[i] = rng.normal() * 0.1;
        return p;
    }());
    add_norm_affine(params_, "norm0", c);
    add_attention(params_, "msa", c, c, rng);
    add_norm_affine(params_, "norm1", c);
    add_ffn(params_, "ffn", c, c * cfg_.ffn_mult, rng);
    add_norm_affine(params_, "norm2", c);
}

namespace {

Var masked_norm_affine(Tape& t, Bind& p, const std::string& prefix, Var x, int n_real,
                       real eps) {
    Var normalized = masked_channel_norm(t, x, n_real, eps);
    return t.add_rowwise(t.mul_rowwise(normalized, p(prefix + ".g")), p(prefix + ".b"));
}

}  // namespace

Var TextEncoder::encode_t(Tape& t, const std::vector<int>& ids, Bind& p, int n_real) const {
    if (static_cast<int>(ids.size()) != cfg_.seq_len) {
        throw InvalidInput("token sequence length must equal seq_len");
    }
    if (n_real < 0) {
        n_real = cfg_.seq_len;
        for (int i = 0; i < cfg_.seq_len; ++i) {
            if (ids[static_cast<size_t>(i)] == 0) {
                n_real = i;
                break;
            }
        }
    }
    if (n_real < 1 || n_real > cfg_.seq_len) {
        throw InvalidInput("text encoder needs at least one real token");
    }

    Var x = t.add(t.gather_cols(p("emb"), ids), p("pos"));
    Var mask = t.leaf(prefix_mask_bias(cfg_.seq_len, cfg_.seq_len, n_real), false);

    Var xn = masked_norm_affine(t, p, "norm0", x, n_real, cfg_.eps_norm);
    x = t.add(x, attention(t, p, "msa", xn, xn, cfg_.heads, mask));
    x = t.add(x, ffn(t, p, "ffn", masked_norm_affine(t, p, "norm1", x, n_real, cfg_.eps_norm)));
    return masked_norm_affine(t, p, "norm2", x, n_real, cfg_.eps_norm);
}

Tensor TextEncoder::encode(const std::vector<int>& ids, int n_real) const {
    Tape tape;
    Bind bind(tape, params_, false);
    return tape.value(encode_t(tape, ids, bind, n_real));
}

}  // namespace affedit::nn
