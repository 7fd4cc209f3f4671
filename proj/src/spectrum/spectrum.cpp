#include "spectrum/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/kernels.hpp"

namespace affedit::spectrum {

using ad::Tape;
using ad::Var;

void EmotionalRequest::validate(int channels, int seq_len) const {
    if (embedding.rank() != 2 || embedding.dim(0) != channels || embedding.dim(1) != seq_len) {
        throw InvalidInput("emotional request has shape " + embedding.shape_str());
    }
    if (!embedding.all_finite()) throw InvalidInput("emotional request has non-finite entries");
}

EmotionalRequest encode_request(const std::vector<int>& tokens, const nn::TextEncoder& encoder) {
    bool any_real = false;
    for (int id : tokens) any_real |= id != 0;
    if (tokens.empty() || !any_real) throw InvalidInput("encode_request: empty token sequence");
    EmotionalRequest r{encoder.encode(tokens)};
    r.validate(encoder.config().channels, encoder.config().seq_len);
    return r;
}

EmotionalRequest encode_request(const std::string& text, const core::HashTokenizer& tokenizer,
                                const nn::TextEncoder& encoder) {
    return encode_request(tokenizer.encode(text), encoder);
}

namespace {

real request_l2(const Tensor& a, const Tensor& b) {
    real acc = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        real d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

real distribution_l2(const EmotionDistribution& a, const EmotionDistribution& b) {
    real acc = 0;
    for (int i = 0; i < kCategoryCount; ++i) {
        real d = a.probs[static_cast<size_t>(i)] - b.probs[static_cast<size_t>(i)];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace

real sentiment_distance(const SpectrumSample& a, const SpectrumSample& b, real eps) {
    if (eps <= 0) throw InvalidInput("sentiment_distance: eps must be positive");
    if (!a.request.embedding.same_shape(b.request.embedding)) {
        throw InvalidInput("sentiment_distance: request shapes differ");
    }
    real num = request_l2(a.request.embedding, b.request.embedding);
    real den = std::max(distribution_l2(a.distribution, b.distribution), eps);
    return num / den;
}

TripletBatch mine_triplets(const std::vector<SpectrumSample>& batch, const WheelGeometry& wheel,
                           real eps) {
    TripletBatch out;
    int n = static_cast<int>(batch.size());
    for (int a = 0; a < n; ++a) {
        int best_pos = -1, best_neg = -1;
        real pos_dist = -1, neg_dist = 0;
        for (int j = 0; j < n; ++j) {
            if (j == a) continue;
            PairRelation rel = pair_relation(batch[static_cast<size_t>(a)].distribution,
                                             batch[static_cast<size_t>(j)].distribution, wheel);
            if (rel == PairRelation::Neutral) continue;
            real d = sentiment_distance(batch[static_cast<size_t>(a)],
                                        batch[static_cast<size_t>(j)], eps);
            if (rel == PairRelation::Positive) {
                if (d > pos_dist) {
                    pos_dist = d;
                    best_pos = j;
                }
            } else if (best_neg < 0 || d < neg_dist) {
                neg_dist = d;
                best_neg = j;
            }
        }
        if (best_pos >= 0 && best_neg >= 0) {
            out.triplets.push_back({a, best_pos, best_neg});
        }
    }
    if (out.triplets.empty()) {
        throw EmptyBatch("mine_triplets: no anchor has both a positive and a negative");
    }
    return out;
}

real contrastive_loss(const std::vector<SpectrumSample>& batch, const TripletBatch& triplets,
                      real alpha, real eps) {
    if (triplets.triplets.empty()) throw EmptyBatch("contrastive_loss: no triplets");
    real total = 0;
    for (const Triplet& trip : triplets.triplets) {
        real dp = sentiment_distance(batch[static_cast<size_t>(trip.anchor)],
                                     batch[static_cast<size_t>(trip.positive)], eps);
        real dn = sentiment_distance(batch[static_cast<size_t>(trip.anchor)],
                                     batch[static_cast<size_t>(trip.negative)], eps);
        total += std::max<real>(0, dp - dn + alpha);
    }
    return total;
}

Var contrastive_loss_t(Tape& tape, const std::vector<Var>& requests,
                       const std::vector<SpectrumSample>& batch, const TripletBatch& triplets,
                       real alpha, real eps) {
    if (triplets.triplets.empty()) throw EmptyBatch("contrastive_loss: no triplets");
    if (requests.size() != batch.size()) {
        throw InvalidInput("contrastive_loss_t: requests/batch size mismatch");
    }
    Var total;
    for (const Triplet& trip : triplets.triplets) {
        auto dist = [&](int i, int j) {
            real den = std::max(
                distribution_l2(batch[static_cast<size_t>(i)].distribution,
                                batch[static_cast<size_t>(j)].distribution),
                eps);
            Var diff = tape.sub(requests[static_cast<size_t>(i)],
                                requests[static_cast<size_t>(j)]);
            return tape.scale(tape.frobenius_norm(diff), 1.0 / den);
        };
        Var dp = dist(trip.anchor, trip.positive);
        Var dn = dist(trip.anchor, trip.negative);
        Var hinge = tape.relu(tape.add_scalar(tape.sub(dp, dn), alpha));
        total = total.valid() ? tape.add(total, hinge) : hinge;
    }
    return total;
}

SpectrumTrainResult train_spectrum(nn::TextEncoder& encoder,
                                   const std::vector<LabeledText>& dataset,
                                   const WheelGeometry& wheel,
                                   const SpectrumTrainConfig& config) {
    if (dataset.empty()) throw EmptyBatch("train_spectrum: empty dataset");
    wheel.validate();

    core::RngStream rng(config.seed);
    nn::Adam optimizer({config.learning_rate});
    SpectrumTrainResult result;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<size_t> order = rng.permutation(dataset.size());
        int epoch_triplets = 0;
        for (size_t start = 0; start + 1 < order.size();
             start += static_cast<size_t>(config.batch_size)) {
            size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
            if (end - start < 2) break;

            Tape tape;
            nn::Bind bind(tape, encoder.params(), true);
            std::vector<Var> requests;
            std::vector<SpectrumSample> samples;
            requests.reserve(end - start);
            for (size_t k = start; k < end; ++k) {
                const LabeledText& item = dataset[order[k]];
                Var r = encoder.encode_t(tape, item.token_ids, bind);
                requests.push_back(r);
                samples.push_back({EmotionalRequest{tape.value(r)}, item.distribution, item.id});
            }

            TripletBatch mined;
            try {
                mined = mine_triplets(samples, wheel, config.eps);
            } catch (const EmptyBatch&) {
                ++result.skipped_batches;
                continue;
            }
            epoch_triplets += mined.count();

            Var loss = contrastive_loss_t(tape, requests, samples, mined, config.alpha,
                                          config.eps);
            real value = tape.value(loss)[0];
            if (!std::isfinite(value)) {
                throw TrainingDiverged("train_spectrum: loss became non-finite at step " +
                                       std::to_string(result.steps));
            }
            tape.backward(loss);
            optimizer.step(encoder.params(), tape);
            result.loss_log.emplace_back(result.steps, value);
            ++result.steps;
            if (config.max_steps > 0 && result.steps >= config.max_steps) {
                encoder.set_frozen(true);
                return result;
            }
        }
        if (epoch_triplets == 0) {
            throw EmptyBatch("train_spectrum: epoch produced no valid triplet");
        }
    }
    encoder.set_frozen(true);
    return result;
}

real triplet_accuracy(const std::vector<SpectrumSample>& samples, const WheelGeometry& wheel,
                      uint64_t seed, int max_triplets, real eps) {
    int n = static_cast<int>(samples.size());
    if (n < 3) throw InvalidInput("triplet_accuracy needs at least 3 samples");
    core::RngStream rng(seed);
    int found = 0, correct = 0, attempts = 0;
    while (found < max_triplets && attempts < max_triplets * 20) {
        ++attempts;
        int a = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n)));
        int p = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n)));
        int g = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n)));
        if (a == p || a == g) continue;
        if (pair_relation(samples[static_cast<size_t>(a)].distribution,
                          samples[static_cast<size_t>(p)].distribution,
                          wheel) != PairRelation::Positive) {
            continue;
        }
        if (pair_relation(samples[static_cast<size_t>(a)].distribution,
                          samples[static_cast<size_t>(g)].distribution,
                          wheel) != PairRelation::Negative) {
            continue;
        }
        ++found;
        real dp = sentiment_distance(samples[static_cast<size_t>(a)],
                                     samples[static_cast<size_t>(p)], eps);
        real dn = sentiment_distance(samples[static_cast<size_t>(a)],
                                     samples[static_cast<size_t>(g)], eps);
        if (dp < dn) ++correct;
    }
    if (found == 0) throw EmptyBatch("triplet_accuracy: no valid triplets found");
    return static_cast<real>(correct) / static_cast<real>(found);
}

std::string pairwise_distance_csv(const std::vector<SpectrumSample>& samples, real eps) {
    std::ostringstream os;
    os << "id";
    for (const auto& s : samples) os << "," << s.sample_id;
    os << "\n";
    os.precision(12);
    for (size_t i = 0; i < samples.size(); ++i) {
        os << samples[i].sample_id;
        for (size_t j = 0; j < samples.size(); ++j) {
            os << "," << (i == j ? 0.0 : sentiment_distance(samples[i], samples[j], eps));
        }
        os << "\n";
    }
    return os.str();
}

std::vector<ManifestRecord> load_manifest_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    std::vector<ManifestRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        ManifestRecord rec;
        rec.id = j.at("id").get<std::string>();
        rec.text = j.at("text").get<std::string>();
        rec.image_path = j.value("image_path", "");
        if (j.contains("distribution")) {
            rec.distribution =
                EmotionDistribution::from_probs(j.at("distribution").get<std::vector<real>>());
        }
        if (rec.image_path.empty() && !rec.distribution.has_value()) {
            throw InvalidInput("manifest line " + std::to_string(line_no) +
                               ": needs image_path or distribution");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace affedit::spectrum
