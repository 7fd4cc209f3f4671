#pragma once

#include "core/autodiff.hpp"
#include "core/checkpoint.hpp"
#include "diffusion/noising.hpp"
#include "nn/layers.hpp"

namespace affedit::diffusion {

using core::ParamMap;
using core::RngStream;

struct DenoiserConfig {
    int latent_channels = 4;
    int grid = 16;  // latent is (latent_channels, grid, grid)
    int width = 32;
    int heads = 4;
    int cond_channels = 64;  // channels of the semantic representation
    int ffn_mult = 2;
    real eps_norm = 1e-5;
};

// Small conditional denoiser over the latent grid: token lift with learned
// positions and a sinusoidal time embedding, cross-attention to the
// semantic representation at full resolution, a pooled 8x8 stage with
// self- plus cross-attention, then an upsample-and-fuse back to the grid.
class LatentDenoiser : public Denoiser {
  public:
    LatentDenoiser(DenoiserConfig cfg, uint64_t seed);

    Tensor predict(const Tensor& z_t, int t, const Tensor& condition) const override;

    // Tape-based forward; bind controls whether this network's parameters
    // are trainable on the tape. Gradients flow to `condition` either way.
    ad::Var predict_t(ad::Tape& tape, ad::Var z_t, int t, ad::Var condition,
                      nn::Bind& bind) const;

    const DenoiserConfig& config() const { return cfg_; }
    ParamMap& params() { return params_; }
    const ParamMap& params() const { return params_; }

  private:
    DenoiserConfig cfg_;
    ParamMap params_;
};

}  // namespace affedit::diffusion
