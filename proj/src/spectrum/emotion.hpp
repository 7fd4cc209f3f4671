#pragma once

#include <array>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace affedit::spectrum {

using core::Tensor;

// The eight wheel categories, in the fixed order used everywhere:
// amusement, awe, contentment, excitement, anger, disgust, fear, sadness.
inline constexpr int kCategoryCount = 8;

const std::array<std::string, kCategoryCount>& category_names();
const std::string& category_name(int index);
int category_index(const std::string& name);  // throws InvalidInput on unknown

// Probability vector over the eight categories.
struct EmotionDistribution {
    Tensor probs{std::vector<int>{kCategoryCount}};

    static EmotionDistribution uniform();
    static EmotionDistribution from_probs(std::vector<real> values);
    // Softmax of classifier logits; throws InvalidConfig unless exactly 8.
    static EmotionDistribution from_logits(const std::vector<real>& logits);
    static EmotionDistribution one_hot(int category);

    // Entries >= 0 summing to 1 within 1e-6.
    void validate() const;
    // Lowest index wins ties.
    int argmax() const;
};

enum class Valence { Positive, Negative };

// Angular layout of the wheel. Opposition is the 180-degree category;
// the region split is by valence half.
struct WheelGeometry {
    std::array<real, kCategoryCount> angle_deg;
    std::array<Valence, kCategoryCount> region;

    static WheelGeometry standard();

    int opposite(int category) const;
    bool same_region(int a, int b) const;
    Valence valence_of(int category) const { return region[static_cast<size_t>(category)]; }

    // opposite() must be an involution and awe/disgust must oppose.
    void validate() const;
};

enum class PairRelation { Positive, Negative, Neutral };

// Relation of two distributions under the wheel: positive when the argmax
// categories share a region, negative when they are opposites, neutral
// otherwise.
PairRelation pair_relation(const EmotionDistribution& a, const EmotionDistribution& b,
                           const WheelGeometry& wheel);

// Image emotion classifier handle; implementations return raw logits.
struct DistributionEstimator {
    virtual ~DistributionEstimator() = default;
    virtual std::vector<real> logits(const Tensor& image) const = 0;
};

EmotionDistribution estimate_distribution(const Tensor& image,
                                          const DistributionEstimator& classifier);

}  // namespace affedit::spectrum
