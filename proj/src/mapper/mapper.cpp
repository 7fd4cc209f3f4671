#include "mapper/mapper.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace affedit::mapper {

void TextSemantics::validate(int channels, int seq_len) const {
    if (embedding.rank() != 2 || embedding.dim(0) != channels || embedding.dim(1) != seq_len) {
        throw InvalidInput("text semantics has shape " + embedding.shape_str());
    }
    if (!embedding.all_finite()) throw InvalidInput("text semantics has non-finite entries");
}

void MapperConfig::validate() const {
    if (depth < 1) throw InvalidConfig("mapper depth must be >= 1");
    if (c_s % heads != 0) throw InvalidConfig("mapper c_s not divisible by heads");
}

Var modulate(Tape& t, Var f, Var f_k, Var w1, Var w2, real eps_norm) {
    const Tensor& fv = t.value(f);
    if (fv.rank() != 2) throw InvalidInput("modulate expects a rank-2 feature map");
    int n = fv.dim(1);

    Var mu = t.rows_mean(f);
    Var centered = t.sub(f, t.broadcast_rows(mu, n));
    Var sigma = t.clamp_min(t.sqrt_guarded(t.rows_mean(t.square(centered))), eps_norm);
    Var normalized = t.mul_rowwise(centered, t.reciprocal(sigma));

    Var scale_vec = t.add_scalar(t.matvec(w1, f_k), 1.0);
    Var shift_vec = t.matvec(w2, f_k);
    return t.add_rowwise(t.mul_rowwise(normalized, scale_vec), shift_vec);
}

Tensor modulate(const Tensor& f, const Tensor& f_k, const Tensor& w1, const Tensor& w2,
                real eps_norm) {
    Tape tape;
    Var out = modulate(tape, tape.leaf(f), tape.leaf(f_k), tape.leaf(w1), tape.leaf(w2),
                       eps_norm);
    return tape.value(out);
}

EmotionalMapper::EmotionalMapper(MapperConfig cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    core::RngStream rng(seed);
    nn::add_linear(params_, "entry", cfg_.c_t, cfg_.c_s, rng);
    nn::add_linear(params_, "key", cfg_.c_s, cfg_.c_s, rng);
    real w_std = 1.0 / std::sqrt(static_cast<real>(cfg_.c_s));
    for (int d = 0; d < cfg_.depth; ++d) {
        std::string blk = "blk" + std::to_string(d);
        nn::add_attention(params_, blk + ".msa", cfg_.c_s, cfg_.c_s, rng);
        nn::add_attention(params_, blk + ".mca", cfg_.c_s, cfg_.c_s, rng);
        nn::add_ffn(params_, blk + ".ffn", cfg_.c_s, cfg_.c_s * 2, rng);
        for (int m = 0; m < 3; ++m) {
            std::string mod = blk + ".mod" + std::to_string(m);
            params_.emplace(mod + ".w1", [&] {
                Tensor w({cfg_.c_s, cfg_.c_s});
                for (size_t i = 0; i < w.size(); ++i) w[i] = rng.normal() * w_std;
                return w;
            }());
            params_.emplace(mod + ".w2", [&] {
                Tensor w({cfg_.c_s, cfg_.c_s});
                for (size_t i = 0; i < w.size(); ++i) w[i] = rng.normal() * w_std;
                return w;
            }());
        }
    }
}

Var EmotionalMapper::extract_key_semantics_t(Tape& t, Var semantics, nn::Bind& p) const {
    const Tensor& sv = t.value(semantics);
    if (sv.rank() != 2 || sv.dim(0) != cfg_.c_s) {
        throw InvalidInput("key semantics: unexpected semantics shape " + sv.shape_str());
    }
    Var pooled = t.rows_mean(semantics);
    return nn::linear_vec(t, p, "key", pooled);
}

Tensor EmotionalMapper::extract_key_semantics(const Tensor& semantics) const {
    Tape tape;
    nn::Bind bind(tape, params_, false);
    return tape.value(extract_key_semantics_t(tape, tape.leaf(semantics), bind));
}

Var EmotionalMapper::forward_t(Tape& t, Var request, Var semantics, nn::Bind& p) const {
    const Tensor& rv = t.value(request);
    const Tensor& sv = t.value(semantics);
    if (rv.rank() != 2 || rv.dim(0) != cfg_.c_t || rv.dim(1) != cfg_.n_l) {
        throw InvalidConfig("mapper: request shape " + rv.shape_str() + " does not match config");
    }
    if (sv.rank() != 2 || sv.dim(0) != cfg_.c_s || sv.dim(1) != cfg_.n_l) {
        throw InvalidConfig("mapper: semantics shape " + sv.shape_str() +
                            " does not match config");
    }

    Var f_k = extract_key_semantics_t(t, semantics, p);
    Var x = nn::linear(t, p, "entry", request);

    for (int d = 0; d < cfg_.depth; ++d) {
        std::string blk = "blk" + std::to_string(d);
        auto mod = [&](int m, Var f) {
            std::string pre = blk + ".mod" + std::to_string(m);
            return modulate(t, f, f_k, p(pre + ".w1"), p(pre + ".w2"), cfg_.eps_norm);
        };
        x = mod(0, t.add(x, nn::attention(t, p, blk + ".msa", x, x, cfg_.heads)));
        x = mod(1, t.add(x, nn::attention(t, p, blk + ".mca", x, semantics, cfg_.heads)));
        x = mod(2, t.add(x, nn::ffn(t, p, blk + ".ffn", x)));
    }
    return x;
}

SemanticRepresentation EmotionalMapper::forward(const Tensor& request,
                                                const Tensor& semantics) const {
    Tape tape;
    nn::Bind bind(tape, params_, false);
    Var out = forward_t(tape, tape.leaf(request), tape.leaf(semantics), bind);
    return SemanticRepresentation{tape.value(out)};
}

}  // namespace affedit::mapper
