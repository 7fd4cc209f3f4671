#include "editing/editing.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/kernels.hpp"
#include "diffusion/noising.hpp"

namespace affedit::editing {

void EditPipeline::validate() const {
    if (!request_encoder || !semantic_encoder || !mapper || !denoiser || !autoencoder) {
        throw InvalidConfig("edit pipeline is incomplete");
    }
}

Tensor EditPipeline::condition_for(const std::string& text) const {
    std::vector<int> ids = tokenizer.encode(text);
    Tensor request = request_encoder->encode(ids);
    Tensor semantics = semantic_encoder->encode(ids);
    return mapper->forward(request, semantics).embedding;
}

namespace {

real frob_norm(const Tensor& t) {
    return std::sqrt(kernels::dot(t.data(), t.data(), t.size()));
}

void check_level(int t, const diffusion::NoiseSchedule& schedule) {
    if (t < 0 || t > schedule.total_steps) {
        throw InvalidStep("noise level t=" + std::to_string(t) + " outside [0, " +
                          std::to_string(schedule.total_steps) + "]");
    }
}

// Shared reverse loop. When mask is non-null, each refined latent is
// blended with forward_noise(z0, step, eps_init) so the (1-M) region stays
// pinned to the original's noising trajectory. The 0/1 mask entries assign
// exactly rather than via the blend arithmetic, keeping the degenerate
// all-ones / all-zeros masks bit-exact.
EditResult run_reverse(const Tensor& z_start, int t_start, const Tensor& condition,
                       const EditPipeline& pipeline, core::RngStream& rng,
                       const Tensor* mask, const Tensor* z0, const Tensor* eps_init,
                       bool record_latents) {
    EditResult result;
    Tensor z = z_start;

    auto blend_and_trace = [&](Tensor& current, int level) {
        EditTraceStep step;
        step.step = level;
        if (mask) {
            Tensor z_in = diffusion::forward_noise(*z0, level, *eps_init, pipeline.schedule);
            int grid = current.dim(1);
            size_t plane = static_cast<size_t>(grid) * grid;
            real worst = 0;
            for (int c = 0; c < current.dim(0); ++c) {
                for (size_t p = 0; p < plane; ++p) {
                    real m = (*mask)[p];
                    size_t idx = static_cast<size_t>(c) * plane + p;
                    if (m == 0.0) {
                        current[idx] = z_in[idx];
                    } else if (m != 1.0) {
                        current[idx] = current[idx] * m + z_in[idx] * (1.0 - m);
                    }
                    if (m == 0.0) {
                        worst = std::max(worst, std::abs(current[idx] - z_in[idx]));
                    }
                }
            }
            step.preserved_mismatch = worst;
        }
        step.latent_norm = frob_norm(current);
        result.trace.push_back(step);
        if (record_latents) result.latents.push_back(current);
    };

    blend_and_trace(z, t_start);
    for (int step = t_start; step >= 1; --step) {
        z = diffusion::denoise_step(z, step, condition, *pipeline.denoiser, pipeline.schedule,
                                    &rng);
        blend_and_trace(z, step - 1);
    }
    result.image = pipeline.autoencoder->decode(z);
    return result;
}

}  // namespace

EditResult edit(const EditRequest& request, const EditPipeline& pipeline) {
    pipeline.validate();
    if (!request.image.has_value()) throw InvalidInput("edit: request has no image");
    if (request.mask.has_value()) throw InvalidInput("edit: mask provided; use edit_masked");
    check_level(request.noise_level, pipeline.schedule);

    Tensor condition = pipeline.condition_for(request.text);
    Tensor z = pipeline.autoencoder->encode(*request.image);
    if (request.noise_level == 0) {
        EditResult result;
        result.trace.push_back({0, frob_norm(z), 0});
        if (request.record_latents) result.latents.push_back(z);
        result.image = pipeline.autoencoder->decode(z);
        return result;
    }

    core::RngStream rng(request.seed);
    Tensor eps = rng.normal_tensor(z.shape());
    Tensor z_t = diffusion::forward_noise(z, request.noise_level, eps, pipeline.schedule);
    return run_reverse(z_t, request.noise_level, condition, pipeline, rng, nullptr, nullptr,
                       nullptr, request.record_latents);
}

EditResult edit_masked(const EditRequest& request, const EditPipeline& pipeline) {
    pipeline.validate();
    if (!request.image.has_value()) throw InvalidInput("edit_masked: request has no image");
    if (!request.mask.has_value()) throw InvalidInput("edit_masked: request has no mask");
    check_level(request.noise_level, pipeline.schedule);

    const Tensor& mask = *request.mask;
    int grid = pipeline.autoencoder->config().grid();
    if (mask.rank() != 2 || mask.dim(0) != grid || mask.dim(1) != grid) {
        throw InvalidInput("edit_masked: mask must be (grid, grid)");
    }
    for (size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] != 0.0 && mask[i] != 1.0) {
            throw InvalidInput("edit_masked: mask must be binary");
        }
    }

    Tensor condition = pipeline.condition_for(request.text);
    Tensor z = pipeline.autoencoder->encode(*request.image);
    if (request.noise_level == 0) {
        EditResult result;
        result.trace.push_back({0, frob_norm(z), 0});
        if (request.record_latents) result.latents.push_back(z);
        result.image = pipeline.autoencoder->decode(z);
        return result;
    }

    core::RngStream rng(request.seed);
    Tensor eps = rng.normal_tensor(z.shape());
    Tensor z_t = diffusion::forward_noise(z, request.noise_level, eps, pipeline.schedule);
    return run_reverse(z_t, request.noise_level, condition, pipeline, rng, &mask, &z, &eps,
                       request.record_latents);
}

EditResult generate(const std::string& text, uint64_t seed, const EditPipeline& pipeline,
                    bool record_latents) {
    pipeline.validate();
    Tensor condition = pipeline.condition_for(text);

    const auto& cfg = pipeline.autoencoder->config();
    core::RngStream rng(seed);
    Tensor z_T = rng.normal_tensor({cfg.latent_channels, cfg.grid(), cfg.grid()});
    return run_reverse(z_T, pipeline.schedule.total_steps, condition, pipeline, rng, nullptr,
                       nullptr, nullptr, record_latents);
}

}  // namespace affedit::editing
