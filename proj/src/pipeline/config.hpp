#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "core/tensor.hpp"

namespace affedit::pipeline {

// Parsed TOML value. The config reader implements the subset of TOML the
// run config needs: [sections], strings, integers, floats, booleans and
// flat arrays; '#' comments. docs/config.schema.json documents every key.
using TomlValue = std::variant<std::string, int64_t, real, bool, std::vector<real>,
                               std::vector<std::string>>;

// Flat map with dotted keys ("schedule.eta"). Throws InvalidConfig on
// syntax errors.
std::map<std::string, TomlValue> parse_toml(const std::string& text);
std::map<std::string, TomlValue> parse_toml_file(const std::string& path);

struct RunConfig {
    uint64_t seed = 0;

    // model dims
    int c_t = 32;
    int c_s = 64;
    int n_l = 16;
    int vocab = 512;
    int encoder_heads = 4;
    int mapper_depth = 4;
    int mapper_heads = 4;
    int image_size = 64;
    int patch = 4;
    int latent_channels = 4;
    int ae_hidden = 32;
    int denoiser_width = 32;
    int denoiser_heads = 4;

    // schedule
    int total_steps = 50;
    std::string schedule_kind = "linear-beta";
    real eta = 0.0;
    real beta_start = 0.004;
    real beta_end = 0.30;
    int default_t = 37;

    // paths
    std::string checkpoint_dir = "artifacts";
    std::string manifest;
    std::string cache_dir = "cache";
    std::string record_store = "records.jsonl";
    std::string lexicon;
    std::string retrieval_scores;

    // supervisor client
    std::string endpoint;
    std::string api_key_env = "AFFEDIT_API_KEY";
    int timeout_ms = 30000;
    int max_retries = 3;
    int min_interval_ms = 0;
    bool offline = true;

    // spectrum training
    real spectrum_lr = 5e-5;
    int spectrum_epochs = 10;
    int spectrum_batch = 32;
    real triplet_margin = 0.2;

    // backbone training
    real backbone_lr = 1e-3;
    int backbone_steps = 600;
    int backbone_batch = 8;
    int ae_steps = 1200;
    int ae_batch = 256;
    real ae_lr = 2e-3;

    // mapper training
    real mapper_lr = 5e-5;
    int mapper_steps = 300;
    int mapper_batch = 8;
    real loss_beta = 10.0;
    bool squared_sa = false;

    // evaluation
    real kld_eps = 1e-8;
    std::string kld_direction = "target-given-predicted";

    // dataset validation
    int retrieval_top_k = 10;
    int required_distractors = 127;
    bool emotion_region_level = false;
    real split_percentile = 100.0;

    static RunConfig defaults() { return RunConfig{}; }
    static RunConfig from_file(const std::string& path);
    // Applies a parsed key/value table on top of this config; unknown keys
    // are rejected.
    void apply(const std::map<std::string, TomlValue>& values);

    void validate() const;
    nlohmann::json to_json() const;
    // sha256 of the canonical resolved config, 16 hex chars.
    std::string hash() const;
};

}  // namespace affedit::pipeline
