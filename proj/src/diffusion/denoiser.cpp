#include "diffusion/denoiser.hpp"

#include "core/errors.hpp"

namespace affedit::diffusion {

using ad::Tape;
using ad::Var;

LatentDenoiser::LatentDenoiser(DenoiserConfig cfg, uint64_t seed) : cfg_(cfg) {
    if (cfg_.width % cfg_.heads != 0) {
        throw InvalidConfig("denoiser width not divisible by heads");
    }
    if (cfg_.grid % 2 != 0) throw InvalidConfig("denoiser grid must be even");
    RngStream rng(seed);
    int w = cfg_.width;
    int tokens = cfg_.grid * cfg_.grid;

    nn::add_linear(params_, "lift", cfg_.latent_channels, w, rng);
    params_.emplace("pos", [&] {
        Tensor p({w, tokens});
        for (size_t i = 0; i < p.size(); ++i) p[i] = rng.normal() * 0.02;
        return p;
    }());
    nn::add_linear(params_, "time.fc1", w, w, rng);
    nn::add_linear(params_, "time.fc2", w, w, rng);

    nn::add_norm_affine(params_, "fine.norm0", w);
    nn::add_attention(params_, "fine.mca", w, cfg_.cond_channels, rng);

    nn::add_norm_affine(params_, "coarse.norm0", w);
    nn::add_attention(params_, "coarse.msa", w, w, rng);
    nn::add_norm_affine(params_, "coarse.norm1", w);
    nn::add_attention(params_, "coarse.mca", w, cfg_.cond_channels, rng);
    nn::add_norm_affine(params_, "coarse.norm2", w);
    nn::add_ffn(params_, "coarse.ffn", w, w * cfg_.ffn_mult, rng);

    nn::add_linear(params_, "fuse", 2 * w, w, rng);
    nn::add_norm_affine(params_, "fine.norm1", w);
    nn::add_ffn(params_, "fine.ffn", w, w * cfg_.ffn_mult, rng);

    nn::add_norm_affine(params_, "head.norm", w);
    nn::add_linear(params_, "head", w, cfg_.latent_channels, rng);
}

Var LatentDenoiser::predict_t(Tape& t, Var z_t, int step, Var condition,
                              nn::Bind& p) const {
    const Tensor& zv = t.value(z_t);
    int g = cfg_.grid;
    if (zv.rank() != 3 || zv.dim(0) != cfg_.latent_channels || zv.dim(1) != g ||
        zv.dim(2) != g) {
        throw InvalidInput("denoiser: unexpected latent shape " + zv.shape_str());
    }
    const Tensor& cv = t.value(condition);
    if (cv.rank() != 2 || cv.dim(0) != cfg_.cond_channels) {
        throw InvalidInput("denoiser: unexpected condition shape " + cv.shape_str());
    }
    int tokens = g * g;
    real eps = cfg_.eps_norm;

    Var x = t.reshape(z_t, {cfg_.latent_channels, tokens});
    x = nn::linear(t, p, "lift", x);
    x = t.add(x, p("pos"));

    Var temb = t.leaf(nn::sinusoidal_embedding(static_cast<real>(step), cfg_.width), false);
    temb = nn::linear_vec(t, p, "time.fc2", t.gelu(nn::linear_vec(t, p, "time.fc1", temb)));
    x = t.add_rowwise(x, temb);

    // Full-resolution cross-attention to the condition.
    x = t.add(x, nn::attention(t, p, "fine.mca",
                               nn::norm_affine(t, p, "fine.norm0", x, eps), condition,
                               cfg_.heads));

    // Pooled stage.
    Var y = t.avgpool2x2(x, g, g);
    Var yn = nn::norm_affine(t, p, "coarse.norm0", y, eps);
    y = t.add(y, nn::attention(t, p, "coarse.msa", yn, yn, cfg_.heads));
    y = t.add(y, nn::attention(t, p, "coarse.mca",
                               nn::norm_affine(t, p, "coarse.norm1", y, eps), condition,
                               cfg_.heads));
    y = t.add(y, nn::ffn(t, p, "coarse.ffn",
                         nn::norm_affine(t, p, "coarse.norm2", y, eps)));

    // Upsample and fuse with the skip path.
    Var up = t.upsample2x2(y, g / 2, g / 2);
    x = nn::linear(t, p, "fuse", t.concat_rows(x, up));
    x = t.add(x, nn::ffn(t, p, "fine.ffn",
                         nn::norm_affine(t, p, "fine.norm1", x, eps)));

    Var out = nn::linear(t, p, "head", nn::norm_affine(t, p, "head.norm", x, eps));
    return t.reshape(out, {cfg_.latent_channels, g, g});
}

Tensor LatentDenoiser::predict(const Tensor& z_t, int step, const Tensor& condition) const {
    Tape tape;
    nn::Bind bind(tape, params_, false);
    Var z = tape.leaf(z_t, false);
    Var cond = tape.leaf(condition, false);
    return tape.value(predict_t(tape, z, step, cond, bind));
}

}  // namespace affedit::diffusion
