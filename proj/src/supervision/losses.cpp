#include "supervision/losses.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace affedit::supervision {

void LossWeights::validate() const {
    if (!(beta > 0)) throw InvalidConfig("loss weight beta must be positive");
}

real sentiment_alignment_loss(const Tensor& mapped, const std::vector<Tensor>& responses,
                              bool squared) {
    real total = 0;
    for (const Tensor& resp : responses) {
        if (!resp.same_shape(mapped)) {
            throw InvalidInput("sentiment alignment: response embedding shape mismatch");
        }
        real acc = 0;
        for (size_t i = 0; i < resp.size(); ++i) {
            real d = mapped[i] - resp[i];
            acc += d * d;
        }
        total += squared ? acc : std::sqrt(acc);
    }
    return total;
}

Var sentiment_alignment_loss_t(Tape& tape, Var mapped, const std::vector<Tensor>& responses,
                               bool squared) {
    Var total;
    for (const Tensor& resp : responses) {
        Var diff = tape.sub(mapped, tape.leaf(resp, false));
        Var term = squared ? tape.sum_all(tape.square(diff)) : tape.frobenius_norm(diff);
        total = total.valid() ? tape.add(total, term) : term;
    }
    if (!total.valid()) return tape.leaf(Tensor::scalar(0), false);
    return total;
}

real diffusion_loss(const Tensor& latent, int t, const Tensor& noise, const Tensor& condition,
                    const diffusion::Denoiser& denoiser,
                    const diffusion::NoiseSchedule& schedule) {
    if (t < 1 || t > schedule.total_steps) {
        throw InvalidStep("diffusion_loss: t out of [1, T]");
    }
    Tensor z_t = diffusion::forward_noise(latent, t, noise, schedule);
    Tensor predicted = denoiser.predict(z_t, t, condition);
    real acc = 0;
    for (size_t i = 0; i < noise.size(); ++i) {
        real d = noise[i] - predicted[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

Var diffusion_loss_t(Tape& tape, const Tensor& latent, int t, const Tensor& noise, Var condition,
                     const diffusion::LatentDenoiser& denoiser, nn::Bind& bind,
                     const diffusion::NoiseSchedule& schedule) {
    if (t < 1 || t > schedule.total_steps) {
        throw InvalidStep("diffusion_loss: t out of [1, T]");
    }
    Tensor z_t = diffusion::forward_noise(latent, t, noise, schedule);
    Var predicted = denoiser.predict_t(tape, tape.leaf(z_t, false), t, condition, bind);
    Var diff = tape.sub(tape.leaf(noise, false), predicted);
    return tape.frobenius_norm(diff);
}

real total_loss(real sa, real dm, const LossWeights& weights) {
    weights.validate();
    if (!std::isfinite(sa) || !std::isfinite(dm)) {
        throw InvalidInput("total_loss: non-finite component");
    }
    return sa + weights.beta * dm;
}

Var total_loss_t(Tape& tape, Var sa, Var dm, const LossWeights& weights) {
    weights.validate();
    return tape.add(sa, tape.scale(dm, weights.beta));
}

}  // namespace affedit::supervision
