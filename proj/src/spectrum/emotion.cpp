#include "spectrum/emotion.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/kernels.hpp"

namespace affedit::spectrum {

const std::array<std::string, kCategoryCount>& category_names() {
    static const std::array<std::string, kCategoryCount> names = {
        "amusement", "awe", "contentment", "excitement",
        "anger",     "disgust", "fear",    "sadness"};
    return names;
}

const std::string& category_name(int index) {
    if (index < 0 || index >= kCategoryCount) throw InvalidInput("category index out of range");
    return category_names()[static_cast<size_t>(index)];
}

int category_index(const std::string& name) {
    const auto& names = category_names();
    for (int i = 0; i < kCategoryCount; ++i) {
        if (names[static_cast<size_t>(i)] == name) return i;
    }
    throw InvalidInput("unknown emotion category: " + name);
}

EmotionDistribution EmotionDistribution::uniform() {
    EmotionDistribution d;
    d.probs.fill(1.0 / kCategoryCount);
    return d;
}

EmotionDistribution EmotionDistribution::from_probs(std::vector<real> values) {
    if (values.size() != kCategoryCount) {
        throw InvalidInput("emotion distribution needs exactly 8 entries");
    }
    EmotionDistribution d;
    d.probs = Tensor({kCategoryCount}, std::move(values));
    d.validate();
    return d;
}

EmotionDistribution EmotionDistribution::from_logits(const std::vector<real>& logits) {
    if (logits.size() != kCategoryCount) {
        throw InvalidConfig("classifier emitted " + std::to_string(logits.size()) +
                            " logits, expected 8");
    }
    EmotionDistribution d;
    kernels::softmax_rows(logits.data(), d.probs.data(), 1, kCategoryCount);
    return d;
}

EmotionDistribution EmotionDistribution::one_hot(int category) {
    if (category < 0 || category >= kCategoryCount) {
        throw InvalidInput("one_hot category out of range");
    }
    EmotionDistribution d;
    d.probs[static_cast<size_t>(category)] = 1.0;
    return d;
}

void EmotionDistribution::validate() const {
    if (probs.rank() != 1 || probs.dim(0) != kCategoryCount) {
        throw InvalidInput("emotion distribution must have length 8");
    }
    real sum = 0;
    for (int i = 0; i < kCategoryCount; ++i) {
        real p = probs[static_cast<size_t>(i)];
        if (!(p >= 0) || !std::isfinite(p)) {
            throw InvalidInput("emotion distribution entries must be finite and >= 0");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw InvalidInput("emotion distribution must sum to 1 (got " + std::to_string(sum) + ")");
    }
}

int EmotionDistribution::argmax() const {
    int best = 0;
    for (int i = 1; i < kCategoryCount; ++i) {
        if (probs[static_cast<size_t>(i)] > probs[static_cast<size_t>(best)]) best = i;
    }
    return best;
}

WheelGeometry WheelGeometry::standard() {
    WheelGeometry w;
    // Positive half on 0..135, negative on 180..315; awe (45) opposes
    // disgust (225).
    w.angle_deg = {0, 45, 90, 135, 180, 225, 270, 315};
    w.region = {Valence::Positive, Valence::Positive, Valence::Positive, Valence::Positive,
                Valence::Negative, Valence::Negative, Valence::Negative, Valence::Negative};
    return w;
}

int WheelGeometry::opposite(int category) const {
    if (category < 0 || category >= kCategoryCount) {
        throw InvalidInput("opposite: category out of range");
    }
    real target = std::fmod(angle_deg[static_cast<size_t>(category)] + 180.0, 360.0);
    int best = 0;
    real best_dist = 1e9;
    for (int i = 0; i < kCategoryCount; ++i) {
        real diff = std::abs(angle_deg[static_cast<size_t>(i)] - target);
        diff = std::min(diff, 360.0 - diff);
        if (diff < best_dist) {
            best_dist = diff;
            best = i;
        }
    }
    return best;
}

bool WheelGeometry::same_region(int a, int b) const {
    return region[static_cast<size_t>(a)] == region[static_cast<size_t>(b)];
}

void WheelGeometry::validate() const {
    for (int c = 0; c < kCategoryCount; ++c) {
        if (opposite(opposite(c)) != c) {
            throw InvalidConfig("wheel geometry: opposite is not an involution");
        }
    }
    if (opposite(category_index("awe")) != category_index("disgust")) {
        throw InvalidConfig("wheel geometry: awe and disgust must be opposites");
    }
}

PairRelation pair_relation(const EmotionDistribution& a, const EmotionDistribution& b,
                           const WheelGeometry& wheel) {
    a.validate();
    b.validate();
    int ca = a.argmax();
    int cb = b.argmax();
    if (wheel.same_region(ca, cb)) return PairRelation::Positive;
    if (wheel.opposite(ca) == cb) return PairRelation::Negative;
    return PairRelation::Neutral;
}

EmotionDistribution estimate_distribution(const Tensor& image,
                                          const DistributionEstimator& classifier) {
    if (!image.all_finite()) throw InvalidInput("estimate_distribution: non-finite image");
    return EmotionDistribution::from_logits(classifier.logits(image));
}

}  // namespace affedit::spectrum
