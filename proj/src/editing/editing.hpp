#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/text.hpp"
#include "diffusion/autoencoder.hpp"
#include "diffusion/denoiser.hpp"
#include "diffusion/schedule.hpp"
#include "mapper/mapper.hpp"
#include "nn/text_encoder.hpp"

namespace affedit::editing {

using core::Tensor;

// Everything inference needs, read-only. Independent requests may run
// concurrently against one pipeline.
struct EditPipeline {
    const nn::TextEncoder* request_encoder = nullptr;
    const nn::TextEncoder* semantic_encoder = nullptr;
    const mapper::EmotionalMapper* mapper = nullptr;
    const diffusion::Denoiser* denoiser = nullptr;
    const diffusion::PatchAutoencoder* autoencoder = nullptr;
    diffusion::NoiseSchedule schedule;
    core::HashTokenizer tokenizer{512, 16};

    // Mapper conditioning for a text description.
    Tensor condition_for(const std::string& text) const;
    void validate() const;
};

struct EditRequest {
    std::optional<Tensor> image;  // (3, S, S) in [0,1]; absent for generation
    std::string text;
    int noise_level = 37;                 // t
    std::optional<Tensor> mask;           // (grid, grid) binary, 1 = editable
    uint64_t seed = 0;
    bool record_latents = false;          // keep per-step latents in the trace
};

struct EditTraceStep {
    int step = 0;                   // t after this update
    real latent_norm = 0;           // Frobenius norm of the current latent
    real preserved_mismatch = 0;    // max |z - z_in_t| over the (1-M) region
};

struct EditResult {
    Tensor image;
    std::vector<EditTraceStep> trace;
    std::vector<Tensor> latents;  // filled when record_latents is set
};

// Global edit: encode, partially noise to t, denoise back under the mapped
// text condition, decode. t = 0 degenerates to the autoencoder round-trip.
EditResult edit(const EditRequest& request, const EditPipeline& pipeline);

// Mask-preserving local edit: after every reverse step the refined latent
// is blended with the original latent noised to the same level,
// z = z' * M + z_in * (1 - M). The noise for z_in reuses the request's
// initial draw, so an all-ones mask reproduces edit() bit for bit.
EditResult edit_masked(const EditRequest& request, const EditPipeline& pipeline);

// Pure generation: start from Gaussian z_T and run the full reverse chain.
EditResult generate(const std::string& text, uint64_t seed, const EditPipeline& pipeline,
                    bool record_latents = false);

}  // namespace affedit::editing
