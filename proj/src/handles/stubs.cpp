#include "handles/stubs.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/kernels.hpp"
#include "core/text.hpp"
#include "io/image.hpp"

namespace affedit::handles {

real ColorToneClassifier::warm_statistic(const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw InvalidInput("warm_statistic expects a (3,H,W) image");
    }
    size_t plane = static_cast<size_t>(image.dim(1)) * image.dim(2);
    real red = kernels::sum(image.data(), plane) / static_cast<real>(plane);
    real blue = kernels::sum(image.data() + 2 * plane, plane) / static_cast<real>(plane);
    return red - blue;
}

std::vector<real> ColorToneClassifier::logits(const Tensor& image) const {
    real warm = warm_statistic(image);
    std::vector<real> out(spectrum::kCategoryCount, 0.0);
    out[static_cast<size_t>(spectrum::category_index("contentment"))] = gain_ * warm;
    out[static_cast<size_t>(spectrum::category_index("fear"))] = -gain_ * warm;
    return out;
}

std::vector<real> PlantedLabelClassifier::logits(const Tensor& image) const {
    int category = static_cast<int>(std::lround(image[0] * 16.0));
    std::vector<real> out(spectrum::kCategoryCount, 0.0);
    if (category >= 0 && category < spectrum::kCategoryCount) {
        out[static_cast<size_t>(category)] = 20.0;
    }
    return out;
}

Tensor PlantedLabelClassifier::plant_label(Tensor image, int category) {
    image[0] = static_cast<real>(category) / 16.0;
    return image;
}

std::vector<real> ChannelMeanProbClassifier::probabilities(const Tensor& image) const {
    if (image.rank() != 3) throw InvalidInput("classifier expects a rank-3 image");
    int ch = image.dim(0);
    size_t plane = static_cast<size_t>(image.dim(1)) * image.dim(2);
    std::vector<real> logits(static_cast<size_t>(ch));
    for (int c = 0; c < ch; ++c) {
        logits[static_cast<size_t>(c)] =
            gain_ * kernels::sum(image.data() + static_cast<size_t>(c) * plane, plane) /
            static_cast<real>(plane);
    }
    std::vector<real> probs(logits.size());
    kernels::softmax_rows(logits.data(), probs.data(), 1, ch);
    return probs;
}

std::vector<real> BottleneckFeatureExtractor::features(const Tensor& image) const {
    Tensor latent = autoencoder_->encode(image);
    int g = latent.dim(1);
    int pooled = 4;
    int cell = g / pooled;
    std::vector<real> out;
    out.reserve(static_cast<size_t>(latent.dim(0)) * pooled * pooled);
    for (int c = 0; c < latent.dim(0); ++c) {
        for (int py = 0; py < pooled; ++py) {
            for (int px = 0; px < pooled; ++px) {
                real acc = 0;
                for (int y = py * cell; y < (py + 1) * cell; ++y) {
                    for (int x = px * cell; x < (px + 1) * cell; ++x) {
                        acc += latent[static_cast<size_t>(c) * g * g +
                                      static_cast<size_t>(y) * g + x];
                    }
                }
                out.push_back(acc / static_cast<real>(cell * cell));
            }
        }
    }
    return out;
}

std::vector<real> PixelFeatureExtractor::features(const Tensor& image) const {
    if (image.rank() != 3) throw InvalidInput("feature extractor expects a rank-3 image");
    int ch = image.dim(0), h = image.dim(1), w = image.dim(2);
    const int grid = 8;
    std::vector<real> out;
    out.reserve(static_cast<size_t>(ch) * grid * grid);
    for (int c = 0; c < ch; ++c) {
        for (int gy = 0; gy < grid; ++gy) {
            for (int gx = 0; gx < grid; ++gx) {
                int y0 = gy * h / grid, y1 = (gy + 1) * h / grid;
                int x0 = gx * w / grid, x1 = (gx + 1) * w / grid;
                real acc = 0;
                int count = 0;
                for (int y = y0; y < y1; ++y) {
                    for (int x = x0; x < x1; ++x) {
                        acc += image[static_cast<size_t>(c) * h * w +
                                     static_cast<size_t>(y) * w + x];
                        ++count;
                    }
                }
                out.push_back(count ? acc / count : 0.0);
            }
        }
    }
    return out;
}

void KeywordTextClassifier::add_keyword(const std::string& word, int category) {
    keyword_to_category_[word] = category;
}

KeywordTextClassifier KeywordTextClassifier::with_default_lexicon() {
    KeywordTextClassifier c;
    auto add_all = [&](const std::vector<std::string>& words, const char* category) {
        int idx = spectrum::category_index(category);
        for (const auto& w : words) c.add_keyword(w, idx);
    };
    add_all({"funny", "playful", "laughing", "silly", "amusing"}, "amusement");
    add_all({"grand", "majestic", "vast", "towering", "awe", "magnificent"}, "awe");
    add_all({"calm", "peaceful", "cozy", "warm", "content", "serene", "gentle"}, "contentment");
    add_all({"thrilling", "energetic", "vibrant", "exciting", "lively"}, "excitement");
    add_all({"furious", "rage", "angry", "hostile", "violent"}, "anger");
    add_all({"rotten", "filthy", "disgusting", "festering", "foul"}, "disgust");
    add_all({"dark", "dread", "terrifying", "ominous", "fear", "menacing"}, "fear");
    add_all({"lonely", "mournful", "somber", "grief", "sad", "gloomy"}, "sadness");
    return c;
}

int KeywordTextClassifier::category(const std::string& text) const {
    std::array<int, spectrum::kCategoryCount> hits{};
    for (const std::string& word : core::normalize_words(text)) {
        auto it = keyword_to_category_.find(word);
        if (it != keyword_to_category_.end()) ++hits[static_cast<size_t>(it->second)];
    }
    int best = fallback_, best_hits = 0;
    for (int c = 0; c < spectrum::kCategoryCount; ++c) {
        if (hits[static_cast<size_t>(c)] > best_hits) {
            best_hits = hits[static_cast<size_t>(c)];
            best = c;
        }
    }
    return best;
}

std::shared_ptr<supervision::StubMllmClient> make_offline_supervisor() {
    return std::make_shared<supervision::StubMllmClient>(
        [](const supervision::MllmQuery& q) -> std::string {
            bool warm = true;
            if (!q.image_bytes.empty()) {
                Tensor image = io::image_to_tensor(io::decode_png_bytes(q.image_bytes));
                warm = ColorToneClassifier::warm_statistic(image) >= 0;
            }
            if (q.prompt_id == "color_tone") {
                return warm ? "the image glows with warm golden amber light, calm and cozy"
                            : "the palette is dark cold and gloomy, heavy with shadow";
            }
            if (q.prompt_id == "object_category") {
                return warm ? "a gentle sunlit meadow scene, peaceful and serene"
                            : "a bleak night scene, ominous and menacing";
            }
            if (q.prompt_id == "facial_expression") {
                return warm ? "no faces are visible; the scene itself feels content and restful"
                            : "no faces are visible; the scene itself feels fearful and tense";
            }
            if (q.prompt_id == "atmosphere") {
                return warm ? "the atmosphere is warm serene and content"
                            : "the atmosphere is dark chilling and sinister";
            }
            if (q.prompt_id == "cot_phase1") {
                return warm ? "a soft sunlit field stretches across the image"
                            : "a dim foggy expanse fills the image";
            }
            if (q.prompt_id == "cot_phase2") {
                return warm ? "the scene suggests contentment, warmth and calm"
                            : "the scene suggests fear, dread and unease";
            }
            if (q.prompt_id == "cot_phase3") {
                return warm ? "a soft sunlit field that evokes contentment and calm"
                            : "a dim foggy expanse that evokes fear and dread";
            }
            return warm ? "a warm serene impression" : "a dark unsettling impression";
        });
}

void ScoreTableRetriever::set_score(const std::string& text, const std::string& image_id,
                                    real score) {
    table_[{text, image_id}] = score;
}

real ScoreTableRetriever::score(const std::string& text, const std::string& image_id) const {
    auto it = table_.find({text, image_id});
    return it == table_.end() ? default_ : it->second;
}

}  // namespace affedit::handles
