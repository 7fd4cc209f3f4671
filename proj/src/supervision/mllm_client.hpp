#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace affedit::supervision {

// One question posed to the supervisor about an image. The default set
// probes the four emotional factors: color tone, object category, facial
// expression, and overall atmosphere.
struct SupervisorPrompt {
    std::string id;
    std::string text;
};

std::vector<SupervisorPrompt> default_prompts();

struct MllmQuery {
    std::string image_id;
    std::vector<uint8_t> image_bytes;  // PNG; may be empty for text-only phases
    std::string prompt_id;
    std::string prompt_text;
};

// Chat-completion style client. Implementations must be safe for use from
// one thread at a time; the pipeline serializes calls per client.
class MllmClient {
  public:
    virtual ~MllmClient() = default;
    virtual std::string complete(const MllmQuery& query) = 0;
    virtual std::string name() const = 0;
};

// Deterministic offline supervisor: fixture answers keyed by
// (image_id, prompt_id), with an optional rule fallback.
class StubMllmClient : public MllmClient {
  public:
    using Rule = std::function<std::string(const MllmQuery&)>;

    StubMllmClient() = default;
    explicit StubMllmClient(Rule fallback) : fallback_(std::move(fallback)) {}

    void add_fixture(const std::string& image_id, const std::string& prompt_id,
                     std::string answer);

    std::string complete(const MllmQuery& query) override;
    std::string name() const override { return "stub"; }

    int call_count() const { return call_count_; }

  private:
    std::map<std::pair<std::string, std::string>, std::string> fixtures_;
    Rule fallback_;
    int call_count_ = 0;
};

struct HttpClientConfig {
    std::string endpoint;              // e.g. http://localhost:8080/v1/complete
    std::string api_key_env = "AFFEDIT_API_KEY";
    int timeout_ms = 30000;
    int max_retries = 3;
    int backoff_ms = 250;       // doubled per retry
    int min_interval_ms = 0;    // rate limit between requests
};

// POSTs {"prompt", "image_id", "image_b64"?} as JSON and expects
// {"text": ...} back. Retries transport failures with exponential backoff;
// throws SupervisionUnavailable once retries are exhausted.
class HttpMllmClient : public MllmClient {
  public:
    explicit HttpMllmClient(HttpClientConfig cfg);
    ~HttpMllmClient() override;

    std::string complete(const MllmQuery& query) override;
    std::string name() const override { return "http:" + cfg_.endpoint; }

  private:
    HttpClientConfig cfg_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// On-disk response cache keyed by sha256(image bytes) + prompt id. Empty
// responses are never cached.
class CachedMllmClient : public MllmClient {
  public:
    CachedMllmClient(std::shared_ptr<MllmClient> inner, std::string cache_dir);

    std::string complete(const MllmQuery& query) override;
    std::string name() const override { return "cached(" + inner_->name() + ")"; }

    int hits() const { return hits_; }
    int misses() const { return misses_; }

  private:
    std::string key_path(const MllmQuery& query) const;

    std::shared_ptr<MllmClient> inner_;
    std::string cache_dir_;
    int hits_ = 0;
    int misses_ = 0;
};

}  // namespace affedit::supervision
