#pragma once

#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "diffusion/denoiser.hpp"
#include "diffusion/noising.hpp"
#include "diffusion/schedule.hpp"

namespace affedit::supervision {

using ad::Tape;
using ad::Var;
using core::Tensor;

struct SupervisorResponse {
    std::string prompt_id;
    std::string text;
    Tensor embedding;  // (C^s, N^l) once encoded; empty until then

    bool flagged_empty() const { return text.empty(); }
};

struct LossWeights {
    real beta = 10.0;
    void validate() const;
};

// Sum over responses of the (Frobenius-flattened) L2 distance between the
// mapped representation and each response embedding. The printed formula
// uses the unsquared norm; `squared` switches to squared distances.
real sentiment_alignment_loss(const Tensor& mapped, const std::vector<Tensor>& responses,
                              bool squared = false);
Var sentiment_alignment_loss_t(Tape& tape, Var mapped, const std::vector<Tensor>& responses,
                               bool squared = false);

// Noise-prediction loss for one sample: forward-noise `latent` to step t
// with `noise`, run the denoiser, return ||noise - prediction||_2.
real diffusion_loss(const Tensor& latent, int t, const Tensor& noise, const Tensor& condition,
                    const diffusion::Denoiser& denoiser, const diffusion::NoiseSchedule& schedule);
// Tape version used in training; gradients flow into `condition` through
// the (frozen) denoiser parameters bound via `bind`.
Var diffusion_loss_t(Tape& tape, const Tensor& latent, int t, const Tensor& noise, Var condition,
                     const diffusion::LatentDenoiser& denoiser, nn::Bind& bind,
                     const diffusion::NoiseSchedule& schedule);

// L_total = L_sa + beta * L_dm.
real total_loss(real sa, real dm, const LossWeights& weights);
Var total_loss_t(Tape& tape, Var sa, Var dm, const LossWeights& weights);

}  // namespace affedit::supervision
