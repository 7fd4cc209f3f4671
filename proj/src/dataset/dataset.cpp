#include "dataset/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/text.hpp"

namespace affedit::dataset {

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

std::string status_name(RecordStatus s) {
    switch (s) {
        case RecordStatus::Pending: return "pending";
        case RecordStatus::Annotated: return "annotated";
        case RecordStatus::Validated: return "validated";
        case RecordStatus::Rejected: return "rejected";
    }
    throw InvalidInput("bad record status");
}

RecordStatus status_from_name(const std::string& s) {
    if (s == "pending") return RecordStatus::Pending;
    if (s == "annotated") return RecordStatus::Annotated;
    if (s == "validated") return RecordStatus::Validated;
    if (s == "rejected") return RecordStatus::Rejected;
    throw InvalidInput("unknown record status: " + s);
}

void AnnotationRecord::validate() const {
    if (!phase3.empty() && (phase1.empty() || phase2.empty())) {
        throw InvalidInput("record " + id + ": phase3 present without phases 1-2");
    }
    if (status == RecordStatus::Rejected && reject_reason.empty()) {
        throw InvalidInput("record " + id + ": rejected without a criterion id");
    }
    if (status != RecordStatus::Rejected && !reject_reason.empty()) {
        throw InvalidInput("record " + id + ": reason set on non-rejected record");
    }
}

namespace {

nlohmann::json record_to_json(const AnnotationRecord& r) {
    nlohmann::json j;
    j["id"] = r.id;
    j["image_path"] = r.image_path;
    j["phase1"] = r.phase1;
    j["phase2"] = r.phase2;
    j["phase3"] = r.phase3;
    j["status"] = status_name(r.status);
    j["reject_reason"] = r.reject_reason;
    j["retry_count"] = r.retry_count;
    return j;
}

AnnotationRecord record_from_json(const nlohmann::json& j) {
    AnnotationRecord r;
    r.id = j.at("id").get<std::string>();
    r.image_path = j.value("image_path", "");
    r.phase1 = j.value("phase1", "");
    r.phase2 = j.value("phase2", "");
    r.phase3 = j.value("phase3", "");
    r.status = status_from_name(j.value("status", "pending"));
    r.reject_reason = j.value("reject_reason", "");
    r.retry_count = j.value("retry_count", 0);
    return r;
}

}  // namespace

RecordStore::RecordStore(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;  // fresh store
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        AnnotationRecord r = record_from_json(nlohmann::json::parse(line));
        if (latest_.find(r.id) == latest_.end()) order_.push_back(r.id);
        latest_[r.id] = std::move(r);
    }
}

void RecordStore::append_line(const AnnotationRecord& record) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot append to record store: " + path_);
    out << record_to_json(record).dump() << "\n";
}

void RecordStore::upsert(const AnnotationRecord& record) {
    record.validate();
    auto it = latest_.find(record.id);
    if (it != latest_.end()) {
        // Idempotence: identical snapshots are not re-appended.
        if (record_to_json(it->second) == record_to_json(record)) return;
    } else {
        order_.push_back(record.id);
    }
    latest_[record.id] = record;
    append_line(record);
}

std::vector<AnnotationRecord> RecordStore::all() const {
    std::vector<AnnotationRecord> out;
    out.reserve(order_.size());
    for (const std::string& id : order_) out.push_back(latest_.at(id));
    return out;
}

std::optional<AnnotationRecord> RecordStore::find(const std::string& id) const {
    auto it = latest_.find(id);
    if (it == latest_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Annotation
// ---------------------------------------------------------------------------

CotPrompts CotPrompts::defaults() {
    CotPrompts p;
    p.phase1 =
        "Look at the image and identify the main objects and what they are doing. "
        "Answer with a short factual sentence.";
    p.phase2 =
        "The image shows: {content}. Estimate the emotional cues present in the image: "
        "what feelings does the scene suggest?";
    p.phase3 =
        "The image shows: {content}. Its emotional cues are: {cues}. Combine these into one "
        "fluent description of the image that names the main objects and the emotions they "
        "evoke. Intentionally exclude descriptions of object appearances such as colors, "
        "styles, or facial expressions.";
    return p;
}

namespace {

std::string fill_slot(std::string templ, const std::string& slot, const std::string& value) {
    std::string token = "{" + slot + "}";
    auto pos = templ.find(token);
    while (pos != std::string::npos) {
        templ.replace(pos, token.size(), value);
        pos = templ.find(token, pos + value.size());
    }
    return templ;
}

}  // namespace

AnnotationRecord annotate_cot(const std::string& image_id, const std::string& image_path,
                              const std::vector<uint8_t>& image_png,
                              supervision::MllmClient& client, RecordStore& store,
                              const CotPrompts& prompts) {
    AnnotationRecord record;
    if (auto existing = store.find(image_id)) {
        record = *existing;
        if (record.status != RecordStatus::Pending) return record;  // already annotated
    } else {
        record.id = image_id;
        record.image_path = image_path;
        store.upsert(record);
    }

    try {
        supervision::MllmQuery q1{image_id, image_png, "cot_phase1", prompts.phase1};
        record.phase1 = client.complete(q1);

        supervision::MllmQuery q2{image_id, image_png, "cot_phase2",
                                  fill_slot(prompts.phase2, "content", record.phase1)};
        record.phase2 = client.complete(q2);

        std::string p3 = fill_slot(prompts.phase3, "content", record.phase1);
        p3 = fill_slot(p3, "cues", record.phase2);
        supervision::MllmQuery q3{image_id, image_png, "cot_phase3", p3};
        record.phase3 = client.complete(q3);

        record.status = RecordStatus::Annotated;
    } catch (const SupervisionUnavailable&) {
        record.phase1.clear();
        record.phase2.clear();
        record.phase3.clear();
        record.status = RecordStatus::Pending;
        ++record.retry_count;
    }
    store.upsert(record);
    return record;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

PolarityLexicon PolarityLexicon::from_scores(
    const std::vector<std::pair<std::string, real>>& scores, real min_score, real max_score) {
    if (scores.empty()) throw InvalidConfig("polarity lexicon is empty");
    PolarityLexicon lex;
    real midpoint = (min_score + max_score) / 2.0;
    for (const auto& [word, score] : scores) {
        std::vector<std::string> normalized = core::normalize_words(word);
        if (normalized.size() != 1) continue;  // multi-word entries are skipped
        lex.polarity_[normalized.front()] =
            score >= midpoint ? Valence::Positive : Valence::Negative;
    }
    if (lex.polarity_.empty()) throw InvalidConfig("polarity lexicon has no usable entries");
    return lex;
}

PolarityLexicon PolarityLexicon::from_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open lexicon: " + path);
    std::vector<std::pair<std::string, real>> scores;
    real lo = 1e300, hi = -1e300;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw InvalidInput("lexicon line " + std::to_string(line_no) + ": expected TSV");
        }
        std::string word = line.substr(0, tab);
        real score = std::stod(line.substr(tab + 1));
        lo = std::min(lo, score);
        hi = std::max(hi, score);
        scores.emplace_back(std::move(word), score);
    }
    return from_scores(scores, lo, hi);
}

std::optional<Valence> PolarityLexicon::lookup(const std::string& word) const {
    std::vector<std::string> normalized = core::normalize_words(word);
    if (normalized.size() != 1) return std::nullopt;
    auto it = polarity_.find(normalized.front());
    if (it == polarity_.end()) return std::nullopt;
    return it->second;
}

ValidationOutcome validate_keyword(const std::string& text, Valence image_polarity,
                                   const PolarityLexicon& lexicon) {
    for (const std::string& word : core::normalize_words(text)) {
        auto polarity = lexicon.lookup(word);
        if (polarity.has_value() && *polarity == image_polarity) return {true, "", 0};
    }
    return {false, "keyword", 0};
}

ValidationOutcome validate_emotion_agreement(const std::string& text, const Tensor& image,
                                             const TextEmotionClassifier& text_classifier,
                                             const spectrum::DistributionEstimator&
                                                 image_classifier,
                                             const spectrum::WheelGeometry& wheel,
                                             bool region_level) {
    int text_cat = text_classifier.category(text);
    if (text_cat < 0 || text_cat >= spectrum::kCategoryCount) {
        throw SupervisionUnavailable("text classifier returned invalid category");
    }
    int image_cat = spectrum::estimate_distribution(image, image_classifier).argmax();
    bool agree = region_level ? wheel.same_region(text_cat, image_cat) : text_cat == image_cat;
    return agree ? ValidationOutcome{true, "", 0} : ValidationOutcome{false, "emotion", 0};
}

ValidationOutcome validate_retrieval(const std::string& text, const std::string& paired_image_id,
                                     const std::vector<std::string>& distractor_ids,
                                     const Retriever& retriever, int top_k,
                                     int required_distractors) {
    if (static_cast<int>(distractor_ids.size()) < required_distractors) {
        throw InvalidConfig("validate_retrieval: need " + std::to_string(required_distractors) +
                            " distractors, got " + std::to_string(distractor_ids.size()));
    }
    real paired_score = retriever.score(text, paired_image_id);
    int strictly_better = 0;
    int tied = 0;
    for (const std::string& id : distractor_ids) {
        if (id == paired_image_id) {
            throw InvalidInput("validate_retrieval: paired image appears among distractors");
        }
        real s = retriever.score(text, id);
        if (s > paired_score) {
            ++strictly_better;
        } else if (s == paired_score) {
            ++tied;
        }
    }
    // Reported rank breaks ties by stable image id order (the paired image
    // precedes distractors). Passing requires the worst-case rank over any
    // tie order to clear the cutoff, so ties can never straddle it.
    int rank = strictly_better + 1;
    int worst_rank = strictly_better + tied + 1;
    bool pass = worst_rank <= top_k;
    return {pass, pass ? "" : "retrieval", rank};
}

AnnotationRecord validate_record(AnnotationRecord record, const Tensor& image,
                                 const std::vector<std::string>& distractor_ids,
                                 const ValidatorHandles& handles, RecordStore& store) {
    if (!handles.lexicon || !handles.text_classifier || !handles.image_classifier ||
        !handles.retriever || !handles.wheel) {
        throw InvalidConfig("validate_record: incomplete validator handles");
    }
    if (record.status != RecordStatus::Annotated) return record;  // idempotent

    const std::string& text = record.phase3;

    int image_cat = spectrum::estimate_distribution(image, *handles.image_classifier).argmax();
    Valence polarity = handles.wheel->valence_of(image_cat);

    ValidationOutcome outcome = validate_keyword(text, polarity, *handles.lexicon);
    if (outcome.passed) {
        outcome = validate_emotion_agreement(text, image, *handles.text_classifier,
                                             *handles.image_classifier, *handles.wheel,
                                             handles.emotion_region_level);
    }
    if (outcome.passed) {
        outcome = validate_retrieval(text, record.id, distractor_ids, *handles.retriever,
                                     handles.retrieval_top_k, handles.required_distractors);
    }

    if (outcome.passed) {
        record.status = RecordStatus::Validated;
        record.reject_reason.clear();
    } else {
        record.status = RecordStatus::Rejected;
        record.reject_reason = outcome.reason;
    }
    store.upsert(record);
    return record;
}

// ---------------------------------------------------------------------------
// Evaluation split
// ---------------------------------------------------------------------------

EvalSplitResult build_eval_split(const std::vector<SplitCandidate>& candidates, int n,
                                 real distance_percentile) {
    if (candidates.size() < 2) {
        throw InvalidInput("build_eval_split needs at least 2 validated records");
    }
    size_t dim = candidates.front().embedding.size();
    for (const auto& c : candidates) {
        if (c.embedding.size() != dim) {
            throw InvalidInput("build_eval_split: embedding dimension mismatch");
        }
    }

    auto l2 = [&](const std::vector<real>& a, const std::vector<real>& b) {
        real acc = 0;
        for (size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(acc);
    };

    std::vector<EvalSample> samples;
    samples.reserve(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
        int best = -1;
        real best_dist = 0;
        for (size_t j = 0; j < candidates.size(); ++j) {
            if (i == j) continue;
            real d = l2(candidates[i].embedding, candidates[j].embedding);
            bool better = best < 0 || d < best_dist ||
                          (d == best_dist &&
                           candidates[j].id < candidates[static_cast<size_t>(best)].id);
            if (better) {
                best = static_cast<int>(j);
                best_dist = d;
            }
        }
        const auto& target = candidates[static_cast<size_t>(best)];
        samples.push_back({candidates[i].id, target.id, target.text, target.distribution,
                           best_dist});
    }

    if (distance_percentile < 100.0) {
        std::vector<real> dists;
        dists.reserve(samples.size());
        for (const auto& s : samples) dists.push_back(s.embedding_distance);
        std::sort(dists.begin(), dists.end());
        size_t cut = static_cast<size_t>(
            std::floor(distance_percentile / 100.0 * static_cast<real>(dists.size() - 1)));
        real cutoff = dists[cut];
        std::erase_if(samples, [&](const EvalSample& s) {
            return s.embedding_distance > cutoff;
        });
    }

    EvalSplitResult result;
    if (n > static_cast<int>(samples.size())) {
        result.warning = true;
        result.warning_message = "requested " + std::to_string(n) + " samples, only " +
                                 std::to_string(samples.size()) + " available";
    } else {
        samples.resize(static_cast<size_t>(std::max(n, 0)));
        if (n == 0) {
            result.warning = true;
            result.warning_message = "n = 0 produces an empty split";
        }
    }
    result.samples = std::move(samples);
    return result;
}

}  // namespace affedit::dataset
