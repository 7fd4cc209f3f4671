#include "datagen/synthetic.hpp"

#include <cmath>
#include <map>

#include "core/errors.hpp"

namespace affedit::datagen {

Palette warm_palette() { return {0.70, 0.95, 0.35, 0.60, 0.05, 0.25}; }
Palette dark_palette() { return {0.02, 0.18, 0.05, 0.22, 0.30, 0.60}; }

Tensor render_image(const Palette& p, int size, RngStream& rng) {
    auto range = [&](real lo, real hi) { return lo + (hi - lo) * rng.uniform(); };
    real base[3] = {range(p.r_lo, p.r_hi), range(p.g_lo, p.g_hi), range(p.b_lo, p.b_hi)};

    // low-frequency brightness wave
    real fx = 0.5 + rng.uniform() * 1.5;
    real fy = 0.5 + rng.uniform() * 1.5;
    real phase = rng.uniform() * 2.0 * M_PI;
    real wave_amp = 0.06 + rng.uniform() * 0.08;

    // two soft blobs shifting brightness
    struct Blob {
        real cx, cy, radius, amp;
    };
    Blob blobs[2];
    for (Blob& b : blobs) {
        b.cx = rng.uniform();
        b.cy = rng.uniform();
        b.radius = 0.12 + rng.uniform() * 0.2;
        b.amp = (rng.uniform() - 0.5) * 0.3;
    }

    Tensor image({3, size, size});
    size_t plane = static_cast<size_t>(size) * size;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            real u = static_cast<real>(x) / size;
            real v = static_cast<real>(y) / size;
            real bright = 1.0 + wave_amp * std::sin(2.0 * M_PI * (fx * u + fy * v) + phase);
            for (const Blob& b : blobs) {
                real d2 = (u - b.cx) * (u - b.cx) + (v - b.cy) * (v - b.cy);
                bright += b.amp * std::exp(-d2 / (b.radius * b.radius));
            }
            for (int c = 0; c < 3; ++c) {
                real value = base[c] * bright;
                image[static_cast<size_t>(c) * plane + static_cast<size_t>(y) * size + x] =
                    std::min<real>(1.0, std::max<real>(0.0, value));
            }
        }
    }
    return image;
}

namespace {

const std::vector<std::string>& word_pool(const std::string& key) {
    static const std::map<std::string, std::vector<std::string>> pools = {
        {"warm",
         {"warm", "golden", "sunset", "calm", "peaceful", "cozy", "glowing", "amber",
          "honey", "meadow", "gentle", "serene", "content", "soft"}},
        {"dark",
         {"dark", "cold", "night", "dread", "shadowy", "fog", "menacing", "gloomy",
          "terrifying", "ominous", "bleak", "haunted", "fear", "grim"}},
        {"awe",
         {"grand", "majestic", "vast", "towering", "magnificent", "immense", "soaring",
          "monumental", "awe", "sublime"}},
        {"contentment",
         {"calm", "peaceful", "cozy", "warm", "content", "serene", "gentle", "quiet",
          "restful", "mellow"}},
        {"excitement",
         {"thrilling", "energetic", "vibrant", "exciting", "lively", "electric", "racing",
          "dazzling", "wild", "buzzing"}},
        {"amusement",
         {"funny", "playful", "laughing", "silly", "amusing", "whimsical", "joking",
          "giggling", "cheerful", "lighthearted"}},
        {"anger",
         {"furious", "rage", "angry", "hostile", "violent", "seething", "burning",
          "bitter", "fierce", "boiling"}},
        {"disgust",
         {"rotten", "filthy", "disgusting", "festering", "foul", "putrid", "grimy",
          "slimy", "rancid", "moldy"}},
        {"fear",
         {"dark", "dread", "terrifying", "ominous", "fear", "menacing", "creeping",
          "chilling", "haunting", "sinister"}},
        {"sadness",
         {"lonely", "mournful", "somber", "grief", "sad", "gloomy", "weeping", "aching",
          "desolate", "forlorn"}},
    };
    auto it = pools.find(key);
    if (it == pools.end()) throw InvalidInput("no word pool for cluster: " + key);
    return it->second;
}

const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> fillers = {
        "a",     "scene", "of",    "the",   "landscape", "view",  "with", "light",
        "place", "image", "moment", "field", "sky",       "over", "in"};
    return fillers;
}

std::string sample_text(const std::string& pool_key, RngStream& rng) {
    const auto& pool = word_pool(pool_key);
    const auto& fillers = filler_words();
    std::string text;
    int n_words = 4 + static_cast<int>(rng.uniform_int(4));
    for (int i = 0; i < n_words; ++i) {
        if (!text.empty()) text += " ";
        if (rng.uniform() < 0.7) {
            text += pool[rng.uniform_int(pool.size())];
        } else {
            text += fillers[rng.uniform_int(fillers.size())];
        }
    }
    // guarantee at least one pool word
    text += " " + pool[rng.uniform_int(pool.size())];
    return text;
}

spectrum::EmotionDistribution sample_distribution(int category, RngStream& rng) {
    real peak = 0.6 + 0.25 * rng.uniform();
    std::vector<real> probs(spectrum::kCategoryCount, 0.0);
    real rest = 1.0 - peak;
    std::vector<real> noise(spectrum::kCategoryCount, 0.0);
    real noise_sum = 0;
    for (int i = 0; i < spectrum::kCategoryCount; ++i) {
        if (i == category) continue;
        noise[static_cast<size_t>(i)] = rng.uniform() + 0.05;
        noise_sum += noise[static_cast<size_t>(i)];
    }
    for (int i = 0; i < spectrum::kCategoryCount; ++i) {
        probs[static_cast<size_t>(i)] =
            i == category ? peak : rest * noise[static_cast<size_t>(i)] / noise_sum;
    }
    return spectrum::EmotionDistribution::from_probs(probs);
}

}  // namespace

std::string warm_text(RngStream& rng) { return sample_text("warm", rng); }
std::string dark_text(RngStream& rng) { return sample_text("dark", rng); }

std::vector<CorpusItem> make_warm_dark_corpus(int per_cluster, int image_size, uint64_t seed) {
    RngStream rng(seed);
    std::vector<CorpusItem> items;
    items.reserve(static_cast<size_t>(per_cluster) * 2);
    int contentment = spectrum::category_index("contentment");
    int fear = spectrum::category_index("fear");
    for (int i = 0; i < per_cluster; ++i) {
        CorpusItem warm;
        warm.id = "warm" + std::to_string(i);
        warm.cluster = "warm";
        warm.image = render_image(warm_palette(), image_size, rng);
        warm.text = warm_text(rng);
        warm.distribution = sample_distribution(contentment, rng);
        items.push_back(std::move(warm));

        CorpusItem dark;
        dark.id = "dark" + std::to_string(i);
        dark.cluster = "dark";
        dark.image = render_image(dark_palette(), image_size, rng);
        dark.text = dark_text(rng);
        dark.distribution = sample_distribution(fear, rng);
        items.push_back(std::move(dark));
    }
    return items;
}

std::vector<TextItem> make_text_clusters(const std::vector<std::string>& categories,
                                         int per_cluster, uint64_t seed) {
    RngStream rng(seed);
    std::vector<TextItem> items;
    items.reserve(categories.size() * static_cast<size_t>(per_cluster));
    for (const std::string& category : categories) {
        int cat_idx = spectrum::category_index(category);
        for (int i = 0; i < per_cluster; ++i) {
            TextItem item;
            item.id = category + std::to_string(i);
            item.cluster = category;
            item.text = sample_text(category, rng);
            item.distribution = sample_distribution(cat_idx, rng);
            items.push_back(std::move(item));
        }
    }
    return items;
}

}  // namespace affedit::datagen
