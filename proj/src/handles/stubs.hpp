#pragma once

#include <map>
#include <string>
#include <vector>

#include "dataset/dataset.hpp"
#include "diffusion/autoencoder.hpp"
#include "evalmetrics/metrics.hpp"
#include "spectrum/emotion.hpp"

namespace affedit::handles {

using core::Tensor;

// Deterministic offline handles. These are the default plugs for the
// classifier / extractor / retriever interfaces; adapters for real models
// implement the same interfaces.

// Warm-vs-dark color heuristic over the 8 emotion categories: a warm
// red-dominant palette scores contentment, a dark blue-dominant palette
// scores fear. gain controls the logit sharpness.
class ColorToneClassifier : public spectrum::DistributionEstimator {
  public:
    explicit ColorToneClassifier(real gain = 8.0) : gain_(gain) {}
    std::vector<real> logits(const Tensor& image) const override;

    // warm statistic: mean(R) - mean(B), in [-1, 1].
    static real warm_statistic(const Tensor& image);

  private:
    real gain_;
};

// Reads a category planted in the image's top-left pixel (value c / 16).
// Fixture images for the dataset tests carry their label this way.
class PlantedLabelClassifier : public spectrum::DistributionEstimator {
  public:
    std::vector<real> logits(const Tensor& image) const override;
    static Tensor plant_label(Tensor image, int category);
};

// Uniform probabilities over k classes.
class UniformProbClassifier : public evalmetrics::ProbClassifier {
  public:
    explicit UniformProbClassifier(int classes) : classes_(classes) {}
    std::vector<real> probabilities(const Tensor&) const override {
        return std::vector<real>(static_cast<size_t>(classes_), 1.0 / classes_);
    }

  private:
    int classes_;
};

// Softmax over per-channel means; a cheap stand-in "object classifier".
class ChannelMeanProbClassifier : public evalmetrics::ProbClassifier {
  public:
    explicit ChannelMeanProbClassifier(real gain = 4.0) : gain_(gain) {}
    std::vector<real> probabilities(const Tensor& image) const override;

  private:
    real gain_;
};

// FID features from the toy autoencoder bottleneck: the latent pooled to a
// 4x4 grid per channel.
class BottleneckFeatureExtractor : public evalmetrics::FeatureExtractor {
  public:
    explicit BottleneckFeatureExtractor(const diffusion::PatchAutoencoder* autoencoder)
        : autoencoder_(autoencoder) {}
    std::vector<real> features(const Tensor& image) const override;

  private:
    const diffusion::PatchAutoencoder* autoencoder_;
};

// Checkpoint-free fallback: 8x8-downsampled pixel features.
class PixelFeatureExtractor : public evalmetrics::FeatureExtractor {
  public:
    std::vector<real> features(const Tensor& image) const override;
};

// Word-list text emotion classifier: argmax of per-category keyword hits;
// ties and no-hit default to the configured fallback category.
class KeywordTextClassifier : public dataset::TextEmotionClassifier {
  public:
    explicit KeywordTextClassifier(int fallback = 0) : fallback_(fallback) {}
    void add_keyword(const std::string& word, int category);
    // Built-in word lists for the 8 categories.
    static KeywordTextClassifier with_default_lexicon();

    int category(const std::string& text) const override;

  private:
    std::map<std::string, int> keyword_to_category_;
    int fallback_;
};

// Deterministic offline supervisor: decodes the query's PNG bytes, reads
// the warm statistic and answers each prompt with a palette-appropriate
// sentence. Stands in for a hosted multimodal model when running offline.
std::shared_ptr<supervision::StubMllmClient> make_offline_supervisor();

// Retrieval scores from an explicit (text, image_id) table with a default.
class ScoreTableRetriever : public dataset::Retriever {
  public:
    explicit ScoreTableRetriever(real default_score = 0.0) : default_(default_score) {}
    void set_score(const std::string& text, const std::string& image_id, real score);
    real score(const std::string& text, const std::string& image_id) const override;

  private:
    std::map<std::pair<std::string, std::string>, real> table_;
    real default_;
};

}  // namespace affedit::handles
