#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/text.hpp"
#include "nn/adam.hpp"
#include "nn/text_encoder.hpp"
#include "spectrum/emotion.hpp"

namespace affedit::spectrum {

// Text-encoder output for one request, (C^t, N^l).
struct EmotionalRequest {
    Tensor embedding;
    void validate(int channels, int seq_len) const;
};

// A point on the emotional spectrum: request embedding plus the paired
// emotion distribution.
struct SpectrumSample {
    EmotionalRequest request;
    EmotionDistribution distribution;
    std::string sample_id;
};

EmotionalRequest encode_request(const std::vector<int>& tokens, const nn::TextEncoder& encoder);
EmotionalRequest encode_request(const std::string& text, const core::HashTokenizer& tokenizer,
                                const nn::TextEncoder& encoder);

// Ratio distance ||r_i - r_j||_2 / max(||d_i - d_j||_2, eps); request
// matrices are Frobenius-flattened.
real sentiment_distance(const SpectrumSample& a, const SpectrumSample& b, real eps = 1e-6);

struct Triplet {
    int anchor = -1;
    int positive = -1;
    int negative = -1;
};

struct TripletBatch {
    std::vector<Triplet> triplets;
    int count() const { return static_cast<int>(triplets.size()); }
};

// Batch-hard mining: per eligible anchor, the farthest positive and the
// nearest negative under sentiment_distance. Anchors lacking a positive or
// a negative are skipped; an entirely ineligible batch throws EmptyBatch.
// Distance ties break toward the lowest candidate index.
TripletBatch mine_triplets(const std::vector<SpectrumSample>& batch, const WheelGeometry& wheel,
                           real eps = 1e-6);

// Hinge triplet loss over the batch, margin alpha.
real contrastive_loss(const std::vector<SpectrumSample>& batch, const TripletBatch& triplets,
                      real alpha = 0.2, real eps = 1e-6);

// Tape version: requests[i] is the on-tape embedding for batch[i]; the
// distribution denominators enter as constants.
ad::Var contrastive_loss_t(ad::Tape& tape, const std::vector<ad::Var>& requests,
                           const std::vector<SpectrumSample>& batch,
                           const TripletBatch& triplets, real alpha, real eps);

// Labeled text for spectrum training.
struct LabeledText {
    std::string id;
    std::vector<int> token_ids;
    EmotionDistribution distribution;
};

struct SpectrumTrainConfig {
    int epochs = 10;
    int batch_size = 32;
    real learning_rate = 5e-5;
    real alpha = 0.2;
    real eps = 1e-6;
    uint64_t seed = 0;
    int max_steps = 0;  // 0 = no cap
};

struct SpectrumTrainResult {
    std::vector<std::pair<int, real>> loss_log;  // (step, loss)
    int steps = 0;
    int skipped_batches = 0;
};

// Contrastive training of the request encoder; the encoder is frozen when
// training returns. Aborts with TrainingDiverged on a non-finite loss and
// EmptyBatch when an epoch yields no valid triplet.
SpectrumTrainResult train_spectrum(nn::TextEncoder& encoder,
                                   const std::vector<LabeledText>& dataset,
                                   const WheelGeometry& wheel, const SpectrumTrainConfig& config);

// Fraction of sampled valid (anchor, positive, negative) triples with
// dis(anc,pos) < dis(anc,neg); used for held-out evaluation.
real triplet_accuracy(const std::vector<SpectrumSample>& samples, const WheelGeometry& wheel,
                      uint64_t seed, int max_triplets = 2000, real eps = 1e-6);

// Pairwise sentiment distances as CSV (ids in header row/column).
std::string pairwise_distance_csv(const std::vector<SpectrumSample>& samples, real eps = 1e-6);

// One JSONL manifest record: {"id", "text", "image_path"? , "distribution"?}.
struct ManifestRecord {
    std::string id;
    std::string text;
    std::string image_path;
    std::optional<EmotionDistribution> distribution;
};

std::vector<ManifestRecord> load_manifest_jsonl(const std::string& path);

}  // namespace affedit::spectrum
