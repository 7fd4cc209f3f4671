#pragma once

#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/text.hpp"
#include "diffusion/autoencoder.hpp"
#include "diffusion/denoiser.hpp"
#include "diffusion/schedule.hpp"
#include "mapper/mapper.hpp"
#include "nn/adam.hpp"
#include "nn/text_encoder.hpp"
#include "supervision/losses.hpp"
#include "supervision/mllm_client.hpp"

namespace affedit::supervision {

// One response per prompt, in prompt order. Empty responses are kept and
// flagged (flagged_empty()); the training loop skips such samples.
std::vector<SupervisorResponse> collect_responses(const std::string& image_id,
                                                  const std::vector<uint8_t>& image_png,
                                                  const std::vector<SupervisorPrompt>& prompts,
                                                  MllmClient& client);

// Encodes response texts with the frozen semantic encoder.
void encode_responses(std::vector<SupervisorResponse>& responses,
                      const core::HashTokenizer& tokenizer,
                      const nn::TextEncoder& semantic_encoder);

// Precomputed training sample for the mapper phase. The latent and both
// encoder outputs are constants (every network but the mapper is frozen).
struct TrainItem {
    std::string id;
    Tensor latent;                            // E(image)
    Tensor request_embedding;                 // frozen request encoder output
    Tensor semantics_embedding;               // frozen semantic encoder output
    std::vector<Tensor> response_embeddings;  // encoded supervisor responses
};

struct ModelBundle {
    const nn::TextEncoder* request_encoder = nullptr;
    const nn::TextEncoder* semantic_encoder = nullptr;
    mapper::EmotionalMapper* mapper = nullptr;
    const diffusion::LatentDenoiser* denoiser = nullptr;
    const diffusion::PatchAutoencoder* autoencoder = nullptr;
    diffusion::NoiseSchedule schedule;
    bool denoiser_frozen = false;
    bool autoencoder_frozen = false;

    // Enforces the freeze contract preconditions.
    void validate_frozen() const;
};

struct StepRecord {
    real l_sa = 0;
    real l_dm = 0;
    real l_total = 0;
};

// One optimizer step on the mapper parameters only. Aborts with
// TrainingDiverged on a non-finite loss.
StepRecord train_step(ModelBundle& models, const std::vector<const TrainItem*>& batch,
                      const LossWeights& weights, nn::Adam& optimizer, core::RngStream& rng,
                      bool squared_sa = false);

struct MapperTrainConfig {
    int steps = 200;
    int batch_size = 8;
    real learning_rate = 5e-5;
    LossWeights weights;
    uint64_t seed = 0;
    bool squared_sa = false;
};

// Full mapper phase; returns the per-step loss log (CSV-ready).
std::vector<StepRecord> train_mapper(ModelBundle& models, const std::vector<TrainItem>& items,
                                     const MapperTrainConfig& config);

std::string train_log_csv(const std::vector<StepRecord>& log);

// Backbone pretraining: fits the denoiser (and the semantic encoder) to
// predict noise on (latent, text) pairs, conditioning on the encoder
// output directly. This stands in for the pretrained generative backbone.
struct BackboneItem {
    Tensor latent;
    std::vector<int> text_ids;
};

struct BackboneTrainConfig {
    int steps = 500;
    int batch_size = 8;
    real learning_rate = 1e-3;
    uint64_t seed = 0;
    bool train_semantic_encoder = true;
};

std::vector<std::pair<int, real>> pretrain_denoiser(diffusion::LatentDenoiser& denoiser,
                                                    nn::TextEncoder& semantic_encoder,
                                                    const diffusion::NoiseSchedule& schedule,
                                                    const std::vector<BackboneItem>& items,
                                                    const BackboneTrainConfig& config);

}  // namespace affedit::supervision
