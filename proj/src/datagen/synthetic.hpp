#pragma once

#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "spectrum/emotion.hpp"

namespace affedit::datagen {

using core::RngStream;
using core::Tensor;

// Synthetic toy corpora: smooth palette-driven images paired with templated
// texts. Everything is seeded and fully reproducible.

struct Palette {
    // channel ranges in [0,1]
    real r_lo, r_hi;
    real g_lo, g_hi;
    real b_lo, b_hi;
};

// warm sunset-ish palette (red-dominant) and a dark cold one.
Palette warm_palette();
Palette dark_palette();

// Smooth random field: a palette base color with low-frequency brightness
// variation and a couple of soft blobs.
Tensor render_image(const Palette& palette, int size, RngStream& rng);

struct CorpusItem {
    std::string id;
    Tensor image;  // (3, size, size)
    std::string text;
    std::string cluster;  // e.g. "warm" / "dark" / a category name
    spectrum::EmotionDistribution distribution;
};

// Two-emotion corpus: warm images described with contentment words, dark
// images with fear words.
std::vector<CorpusItem> make_warm_dark_corpus(int per_cluster, int image_size, uint64_t seed);

// Text-only corpus of emotion clusters with separable token statistics;
// images are not rendered. Used for spectrum training.
struct TextItem {
    std::string id;
    std::string text;
    std::string cluster;
    spectrum::EmotionDistribution distribution;
};

std::vector<TextItem> make_text_clusters(const std::vector<std::string>& categories,
                                         int per_cluster, uint64_t seed);

// Representative sentences for the two toy emotions.
std::string warm_text(RngStream& rng);
std::string dark_text(RngStream& rng);

}  // namespace affedit::datagen
