#pragma once

#include <memory>
#include <string>

#include "diffusion/autoencoder.hpp"
#include "diffusion/denoiser.hpp"
#include "diffusion/schedule.hpp"
#include "mapper/mapper.hpp"
#include "nn/text_encoder.hpp"
#include "pipeline/config.hpp"

namespace affedit::pipeline {

// Checkpoint stages. Each file is a core::Checkpoint whose config header
// records the network dimensions, the seed and the category ordering, so a
// load reconstructs the exact network.

void save_spectrum_checkpoint(const std::string& path, const nn::TextEncoder& encoder,
                              const RunConfig& cfg);
// Throws IoError naming the producing command when the file is missing.
nn::TextEncoder load_spectrum_checkpoint(const std::string& path);

struct Backbone {
    diffusion::PatchAutoencoder autoencoder;
    diffusion::LatentDenoiser denoiser;
    nn::TextEncoder semantic_encoder;
    diffusion::NoiseSchedule schedule;
};

void save_backbone_checkpoint(const std::string& path, const Backbone& backbone,
                              const RunConfig& cfg);
Backbone load_backbone_checkpoint(const std::string& path);

void save_mapper_checkpoint(const std::string& path, const mapper::EmotionalMapper& m,
                            const RunConfig& cfg);
mapper::EmotionalMapper load_mapper_checkpoint(const std::string& path);

// Builders from a RunConfig (fresh, seeded networks).
nn::TextEncoder make_request_encoder(const RunConfig& cfg);
nn::TextEncoder make_semantic_encoder(const RunConfig& cfg);
mapper::EmotionalMapper make_mapper(const RunConfig& cfg);
diffusion::LatentDenoiser make_denoiser(const RunConfig& cfg);
diffusion::PatchAutoencoder make_autoencoder(const RunConfig& cfg);
diffusion::NoiseSchedule make_schedule(const RunConfig& cfg);

}  // namespace affedit::pipeline
