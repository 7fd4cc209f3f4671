#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/tensor.hpp"
#include "spectrum/emotion.hpp"

namespace affedit::evalmetrics {

using core::Tensor;
using spectrum::EmotionDistribution;

// Mean and covariance of a feature batch. Covariance is the unbiased
// sample covariance; symmetric by construction.
struct GaussianSummary {
    Tensor mean;        // (d)
    Tensor covariance;  // (d, d)

    // Symmetry plus eigenvalues >= -1e-8.
    void validate() const;
};

GaussianSummary summarize_features(const std::vector<std::vector<real>>& features);

// ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa Sb)^{1/2}); the matrix square root
// goes through psd_sqrt(Sa) and an eigendecomposition of the symmetrized
// product, eigenvalues clamped at zero. Result clamped at 0.
real frechet_distance(const GaussianSummary& a, const GaussianSummary& b);

// Probability-vector classifier handle (any number of classes).
struct ProbClassifier {
    virtual ~ProbClassifier() = default;
    virtual std::vector<real> probabilities(const Tensor& image) const = 0;
};

// Feature extractor handle for FID.
struct FeatureExtractor {
    virtual ~FeatureExtractor() = default;
    virtual std::vector<real> features(const Tensor& image) const = 0;
};

// Mean over images of max(best object prob, best scene prob).
real sem_c(const std::vector<Tensor>& images, const ProbClassifier& object_classifier,
           const ProbClassifier& scene_classifier);

enum class KldDirection { TargetGivenPredicted, PredictedGivenTarget };

// KL(target || predicted) by default, both sides eps-smoothed and
// renormalized.
real kld_score(const EmotionDistribution& predicted, const EmotionDistribution& target,
               real eps = 1e-8, KldDirection direction = KldDirection::TargetGivenPredicted);

struct EvalRecord {
    std::string id;
    Tensor original;  // (3, S, S)
    Tensor edited;    // (3, S, S)
    EmotionDistribution target;
    std::string text;
};

struct EvalHandles {
    const FeatureExtractor* feature_extractor = nullptr;
    const ProbClassifier* object_classifier = nullptr;
    const ProbClassifier* scene_classifier = nullptr;
    const spectrum::DistributionEstimator* emotion_classifier = nullptr;
};

// Aggregate report. Metrics that fail carry an error string instead of a
// value; the report is still produced.
struct EvalReport {
    std::optional<real> fid;
    std::optional<real> sem_c;
    std::optional<real> mean_kld;
    int n = 0;
    std::string config_hash;
    std::vector<std::string> errors;
    std::vector<std::pair<std::string, real>> per_record_kld;

    nlohmann::json to_json() const;
    std::string per_record_csv() const;
};

EvalReport evaluate_suite(const std::vector<EvalRecord>& records, const EvalHandles& handles,
                          const std::string& config_hash, real kld_eps = 1e-8,
                          KldDirection direction = KldDirection::TargetGivenPredicted);

}  // namespace affedit::evalmetrics
