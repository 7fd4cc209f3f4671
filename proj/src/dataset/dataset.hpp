#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/tensor.hpp"
#include "spectrum/emotion.hpp"
#include "supervision/mllm_client.hpp"

namespace affedit::dataset {

using core::Tensor;
using spectrum::EmotionDistribution;
using spectrum::Valence;

// ---------------------------------------------------------------------------
// Records and the append-only store
// ---------------------------------------------------------------------------

enum class RecordStatus { Pending, Annotated, Validated, Rejected };

std::string status_name(RecordStatus s);
RecordStatus status_from_name(const std::string& s);

struct AnnotationRecord {
    std::string id;
    std::string image_path;
    std::string phase1;  // main objects / activities
    std::string phase2;  // emotional cues
    std::string phase3;  // full description
    RecordStatus status = RecordStatus::Pending;
    std::string reject_reason;  // exactly one criterion id when rejected
    int retry_count = 0;

    void validate() const;
};

// JSONL append-log of record snapshots; the latest snapshot per id wins.
// Rerunning a pipeline over a completed store is a no-op.
class RecordStore {
  public:
    explicit RecordStore(std::string path);

    void upsert(const AnnotationRecord& record);
    std::vector<AnnotationRecord> all() const;  // latest snapshots, insertion order
    std::optional<AnnotationRecord> find(const std::string& id) const;

    const std::string& path() const { return path_; }

  private:
    void append_line(const AnnotationRecord& record);

    std::string path_;
    std::vector<std::string> order_;
    std::map<std::string, AnnotationRecord> latest_;
};

// ---------------------------------------------------------------------------
// Chain-of-thought annotation
// ---------------------------------------------------------------------------

struct CotPrompts {
    std::string phase1;  // slot {image}
    std::string phase2;  // slots {image} {content}
    std::string phase3;  // slots {content} {cues}; includes the
                         // appearance-exclusion instruction

    static CotPrompts defaults();
};

// Runs the three phases in order, feeding each output into the next
// prompt's slots, and persists the record. A client failure leaves the
// record pending with retry_count incremented.
AnnotationRecord annotate_cot(const std::string& image_id, const std::string& image_path,
                              const std::vector<uint8_t>& image_png,
                              supervision::MllmClient& client, RecordStore& store,
                              const CotPrompts& prompts = CotPrompts::defaults());

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

// Binarized valence lexicon (VAD-style), loaded from TSV "word<TAB>score".
// Scores above the midpoint are positive words.
class PolarityLexicon {
  public:
    static PolarityLexicon from_tsv(const std::string& path);
    static PolarityLexicon from_scores(const std::vector<std::pair<std::string, real>>& scores,
                                       real min_score, real max_score);

    std::optional<Valence> lookup(const std::string& word) const;
    size_t size() const { return polarity_.size(); }

  private:
    std::map<std::string, Valence> polarity_;
};

struct ValidationOutcome {
    bool passed = false;
    std::string reason;  // criterion id when failed: keyword | emotion | retrieval
    int detail = 0;      // retrieval rank, when applicable
};

// (i) Keyword detection: at least one token of `text` must carry the
// image's polarity.
ValidationOutcome validate_keyword(const std::string& text, Valence image_polarity,
                                   const PolarityLexicon& lexicon);

// Text emotion classifier handle (argmax category over the 8).
struct TextEmotionClassifier {
    virtual ~TextEmotionClassifier() = default;
    virtual int category(const std::string& text) const = 0;
};

// (ii) Emotion classification: text and image argmax categories must match
// exactly; `region_level` relaxes to same wheel region.
ValidationOutcome validate_emotion_agreement(const std::string& text, const Tensor& image,
                                             const TextEmotionClassifier& text_classifier,
                                             const spectrum::DistributionEstimator&
                                                 image_classifier,
                                             const spectrum::WheelGeometry& wheel,
                                             bool region_level = false);

// Text-image retrieval scorer handle.
struct Retriever {
    virtual ~Retriever() = default;
    virtual real score(const std::string& text, const std::string& image_id) const = 0;
};

// (iii) Retrieval: the paired image must rank in the top `top_k` of
// {paired} + distractors under the retriever score, and the rank must be
// unambiguous: if score ties straddle the cutoff the sample fails.
ValidationOutcome validate_retrieval(const std::string& text, const std::string& paired_image_id,
                                     const std::vector<std::string>& distractor_ids,
                                     const Retriever& retriever, int top_k = 10,
                                     int required_distractors = 127);

struct ValidatorHandles {
    const PolarityLexicon* lexicon = nullptr;
    const TextEmotionClassifier* text_classifier = nullptr;
    const spectrum::DistributionEstimator* image_classifier = nullptr;
    const Retriever* retriever = nullptr;
    const spectrum::WheelGeometry* wheel = nullptr;
    bool emotion_region_level = false;
    int retrieval_top_k = 10;
    int required_distractors = 127;
};

// Runs the three criteria in the fixed order (keyword, emotion,
// retrieval) on an annotated record; first failure rejects. Needs the
// image tensor for the classifiers and a distractor pool for retrieval.
AnnotationRecord validate_record(AnnotationRecord record, const Tensor& image,
                                 const std::vector<std::string>& distractor_ids,
                                 const ValidatorHandles& handles, RecordStore& store);

// ---------------------------------------------------------------------------
// Evaluation split
// ---------------------------------------------------------------------------

struct EvalSample {
    std::string original_id;
    std::string target_id;
    std::string target_text;
    EmotionDistribution target_distribution;
    real embedding_distance = 0;
};

struct SplitCandidate {
    std::string id;
    std::string text;
    EmotionDistribution distribution;
    std::vector<real> embedding;
};

// For each original, the target is its nearest distinct neighbor by
// embedding L2 distance (ties to the lexically smallest id). Samples whose
// nearest-neighbor distance falls above the configured percentile of all
// such distances are dropped; at most n samples are returned. warning is
// set when n exceeds what is available or n is zero.
struct EvalSplitResult {
    std::vector<EvalSample> samples;
    bool warning = false;
    std::string warning_message;
};

EvalSplitResult build_eval_split(const std::vector<SplitCandidate>& candidates, int n,
                                 real distance_percentile = 100.0);

}  // namespace affedit::dataset
