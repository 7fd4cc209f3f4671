#include "evalmetrics/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "core/errors.hpp"
#include "core/linalg.hpp"

namespace affedit::evalmetrics {

void GaussianSummary::validate() const {
    if (mean.rank() != 1 || covariance.rank() != 2 || covariance.dim(0) != mean.dim(0) ||
        covariance.dim(1) != mean.dim(0)) {
        throw InvalidInput("gaussian summary shapes do not agree");
    }
    int n = mean.dim(0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            if (std::abs(covariance.at(i, j) - covariance.at(j, i)) > 1e-9) {
                throw InvalidInput("covariance is not symmetric");
            }
        }
    }
    core::EigenSym eg = core::eigh(covariance);
    if (!eg.values.empty() && eg.values.front() < -1e-8) {
        throw InvalidInput("covariance has eigenvalue below -1e-8");
    }
}

GaussianSummary summarize_features(const std::vector<std::vector<real>>& features) {
    if (features.size() < 2) {
        throw InvalidInput("need at least 2 feature vectors for a Gaussian summary");
    }
    size_t d = features.front().size();
    for (const auto& f : features) {
        if (f.size() != d) throw InvalidInput("feature dimension mismatch");
    }
    int n = static_cast<int>(features.size());
    GaussianSummary g;
    g.mean = Tensor({static_cast<int>(d)});
    for (const auto& f : features) {
        for (size_t i = 0; i < d; ++i) g.mean[i] += f[i];
    }
    for (size_t i = 0; i < d; ++i) g.mean[i] /= n;

    g.covariance = Tensor({static_cast<int>(d), static_cast<int>(d)});
    for (const auto& f : features) {
        for (size_t i = 0; i < d; ++i) {
            real di = f[i] - g.mean[i];
            for (size_t j = i; j < d; ++j) {
                g.covariance.at(static_cast<int>(i), static_cast<int>(j)) +=
                    di * (f[j] - g.mean[j]);
            }
        }
    }
    for (size_t i = 0; i < d; ++i) {
        for (size_t j = i; j < d; ++j) {
            real v = g.covariance.at(static_cast<int>(i), static_cast<int>(j)) / (n - 1);
            g.covariance.at(static_cast<int>(i), static_cast<int>(j)) = v;
            g.covariance.at(static_cast<int>(j), static_cast<int>(i)) = v;
        }
    }
    return g;
}

real frechet_distance(const GaussianSummary& a, const GaussianSummary& b) {
    if (a.mean.dim(0) != b.mean.dim(0)) {
        throw InvalidInput("frechet_distance: dimension mismatch");
    }
    int d = a.mean.dim(0);

    real mean_term = 0;
    for (int i = 0; i < d; ++i) {
        real diff = a.mean[static_cast<size_t>(i)] - b.mean[static_cast<size_t>(i)];
        mean_term += diff * diff;
    }

    Tensor sqrt_a = core::psd_sqrt(a.covariance);
    Tensor inner = core::matmul(core::matmul(sqrt_a, b.covariance), sqrt_a);
    // symmetrize against roundoff before the eigendecomposition
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < i; ++j) {
            real v = 0.5 * (inner.at(i, j) + inner.at(j, i));
            inner.at(i, j) = v;
            inner.at(j, i) = v;
        }
    }
    core::EigenSym eg = core::eigh(inner);
    real tr_sqrt = 0;
    for (real lambda : eg.values) tr_sqrt += std::sqrt(std::max<real>(lambda, 0));

    real value = mean_term + core::trace(a.covariance) + core::trace(b.covariance) -
                 2.0 * tr_sqrt;
    return std::max<real>(value, 0);
}

real sem_c(const std::vector<Tensor>& images, const ProbClassifier& object_classifier,
           const ProbClassifier& scene_classifier) {
    if (images.empty()) throw InvalidInput("sem_c: empty image batch");
    real total = 0;
    for (const Tensor& image : images) {
        auto best = [&](const std::vector<real>& probs) {
            if (probs.empty()) throw InvalidInput("sem_c: classifier returned no classes");
            return *std::max_element(probs.begin(), probs.end());
        };
        real obj = best(object_classifier.probabilities(image));
        real scene = best(scene_classifier.probabilities(image));
        total += std::max(obj, scene);
    }
    return total / static_cast<real>(images.size());
}

namespace {

std::array<real, spectrum::kCategoryCount> smooth(const EmotionDistribution& d, real eps) {
    std::array<real, spectrum::kCategoryCount> out{};
    real sum = 0;
    for (int i = 0; i < spectrum::kCategoryCount; ++i) {
        out[static_cast<size_t>(i)] = d.probs[static_cast<size_t>(i)] + eps;
        sum += out[static_cast<size_t>(i)];
    }
    for (auto& v : out) v /= sum;
    return out;
}

}  // namespace

real kld_score(const EmotionDistribution& predicted, const EmotionDistribution& target,
               real eps, KldDirection direction) {
    predicted.validate();
    target.validate();
    auto p = smooth(predicted, eps);
    auto t = smooth(target, eps);
    const auto& ref = direction == KldDirection::TargetGivenPredicted ? t : p;
    const auto& other = direction == KldDirection::TargetGivenPredicted ? p : t;
    real kl = 0;
    for (int i = 0; i < spectrum::kCategoryCount; ++i) {
        kl += ref[static_cast<size_t>(i)] *
              std::log(ref[static_cast<size_t>(i)] / other[static_cast<size_t>(i)]);
    }
    return std::max<real>(kl, 0);
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["fid"] = fid.has_value() ? nlohmann::json(*fid) : nlohmann::json();
    j["sem_c"] = sem_c.has_value() ? nlohmann::json(*sem_c) : nlohmann::json();
    j["mean_kld"] = mean_kld.has_value() ? nlohmann::json(*mean_kld) : nlohmann::json();
    j["n"] = n;
    j["config_hash"] = config_hash;
    j["errors"] = errors;
    return j;
}

std::string EvalReport::per_record_csv() const {
    std::ostringstream os;
    os << "id,kld\n";
    os.precision(10);
    for (const auto& [id, kld] : per_record_kld) os << id << "," << kld << "\n";
    return os.str();
}

EvalReport evaluate_suite(const std::vector<EvalRecord>& records, const EvalHandles& handles,
                          const std::string& config_hash, real kld_eps,
                          KldDirection direction) {
    if (records.empty()) throw InvalidInput("evaluate_suite: no records");
    EvalReport report;
    report.n = static_cast<int>(records.size());
    report.config_hash = config_hash;

    if (handles.feature_extractor) {
        try {
            std::vector<std::vector<real>> edited_feats, real_feats;
            for (const EvalRecord& rec : records) {
                edited_feats.push_back(handles.feature_extractor->features(rec.edited));
                real_feats.push_back(handles.feature_extractor->features(rec.original));
            }
            report.fid = frechet_distance(summarize_features(edited_feats),
                                          summarize_features(real_feats));
        } catch (const std::exception& e) {
            report.errors.push_back(std::string("fid: ") + e.what());
        }
    } else {
        report.errors.emplace_back("fid: no feature extractor configured");
    }

    if (handles.object_classifier && handles.scene_classifier) {
        try {
            std::vector<Tensor> edited;
            for (const EvalRecord& rec : records) edited.push_back(rec.edited);
            report.sem_c = sem_c(edited, *handles.object_classifier, *handles.scene_classifier);
        } catch (const std::exception& e) {
            report.errors.push_back(std::string("sem_c: ") + e.what());
        }
    } else {
        report.errors.emplace_back("sem_c: classifiers not configured");
    }

    if (handles.emotion_classifier) {
        try {
            real total = 0;
            for (const EvalRecord& rec : records) {
                EmotionDistribution predicted =
                    spectrum::estimate_distribution(rec.edited, *handles.emotion_classifier);
                real kld = kld_score(predicted, rec.target, kld_eps, direction);
                report.per_record_kld.emplace_back(rec.id, kld);
                total += kld;
            }
            report.mean_kld = total / static_cast<real>(records.size());
        } catch (const std::exception& e) {
            report.errors.push_back(std::string("kld: ") + e.what());
        }
    } else {
        report.errors.emplace_back("kld: no emotion classifier configured");
    }

    return report;
}

}  // namespace affedit::evalmetrics
