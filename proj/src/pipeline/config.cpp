#include "pipeline/config.hpp"

#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

#include "core/digest.hpp"
#include "core/errors.hpp"

namespace affedit::pipeline {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// strips a trailing comment that is not inside a string literal
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

TomlValue parse_scalar(const std::string& raw, int line_no) {
    if (raw.empty()) throw InvalidConfig("config line " + std::to_string(line_no) + ": empty value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') {
            throw InvalidConfig("config line " + std::to_string(line_no) + ": unterminated string");
        }
        return raw.substr(1, raw.size() - 2);
    }
    if (raw == "true") return true;
    if (raw == "false") return false;
    bool is_float = raw.find_first_of(".eE") != std::string::npos;
    try {
        size_t used = 0;
        if (is_float) {
            real v = std::stod(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        }
        int64_t v = std::stoll(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw InvalidConfig("config line " + std::to_string(line_no) + ": bad value '" + raw +
                            "'");
    }
}

TomlValue parse_value(const std::string& raw, int line_no) {
    if (!raw.empty() && raw.front() == '[') {
        if (raw.back() != ']') {
            throw InvalidConfig("config line " + std::to_string(line_no) + ": unterminated array");
        }
        std::string body = raw.substr(1, raw.size() - 2);
        std::vector<std::string> parts;
        std::string cur;
        bool in_string = false;
        for (char ch : body) {
            if (ch == '"') in_string = !in_string;
            if (ch == ',' && !in_string) {
                parts.push_back(trim(cur));
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        if (!trim(cur).empty()) parts.push_back(trim(cur));
        if (parts.empty()) return std::vector<real>{};
        if (parts.front().front() == '"') {
            std::vector<std::string> out;
            for (const auto& p : parts) out.push_back(std::get<std::string>(parse_scalar(p, line_no)));
            return out;
        }
        std::vector<real> out;
        for (const auto& p : parts) {
            TomlValue v = parse_scalar(p, line_no);
            out.push_back(std::holds_alternative<int64_t>(v)
                              ? static_cast<real>(std::get<int64_t>(v))
                              : std::get<real>(v));
        }
        return out;
    }
    return parse_scalar(raw, line_no);
}

}  // namespace

std::map<std::string, TomlValue> parse_toml(const std::string& text) {
    std::map<std::string, TomlValue> out;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw InvalidConfig("config line " + std::to_string(line_no) + ": bad section");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw InvalidConfig("config line " + std::to_string(line_no) + ": empty section");
            }
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidConfig("config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw InvalidConfig("config line " + std::to_string(line_no) + ": empty key");
        }
        std::string full = section.empty() ? key : section + "." + key;
        if (out.count(full)) {
            throw InvalidConfig("config line " + std::to_string(line_no) + ": duplicate key '" +
                                full + "'");
        }
        out[full] = parse_value(trim(line.substr(eq + 1)), line_no);
    }
    return out;
}

std::map<std::string, TomlValue> parse_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_toml(buffer.str());
}

namespace {

struct Setter {
    std::function<void(RunConfig&, const TomlValue&)> apply;
};

int64_t as_int(const TomlValue& v, const std::string& key) {
    if (!std::holds_alternative<int64_t>(v)) {
        throw InvalidConfig("config key '" + key + "' expects an integer");
    }
    return std::get<int64_t>(v);
}

real as_real(const TomlValue& v, const std::string& key) {
    if (std::holds_alternative<int64_t>(v)) return static_cast<real>(std::get<int64_t>(v));
    if (!std::holds_alternative<real>(v)) {
        throw InvalidConfig("config key '" + key + "' expects a number");
    }
    return std::get<real>(v);
}

std::string as_string(const TomlValue& v, const std::string& key) {
    if (!std::holds_alternative<std::string>(v)) {
        throw InvalidConfig("config key '" + key + "' expects a string");
    }
    return std::get<std::string>(v);
}

bool as_bool(const TomlValue& v, const std::string& key) {
    if (!std::holds_alternative<bool>(v)) {
        throw InvalidConfig("config key '" + key + "' expects a boolean");
    }
    return std::get<bool>(v);
}

const std::map<std::string, Setter>& registry() {
#define INT_KEY(name, field) \
    {name, {[](RunConfig& c, const TomlValue& v) { c.field = static_cast<int>(as_int(v, name)); }}}
#define REAL_KEY(name, field) \
    {name, {[](RunConfig& c, const TomlValue& v) { c.field = as_real(v, name); }}}
#define STR_KEY(name, field) \
    {name, {[](RunConfig& c, const TomlValue& v) { c.field = as_string(v, name); }}}
#define BOOL_KEY(name, field) \
    {name, {[](RunConfig& c, const TomlValue& v) { c.field = as_bool(v, name); }}}
    static const std::map<std::string, Setter> table = {
        {"seed",
         {[](RunConfig& c, const TomlValue& v) {
             c.seed = static_cast<uint64_t>(as_int(v, "seed"));
         }}},
        INT_KEY("dims.c_t", c_t),
        INT_KEY("dims.c_s", c_s),
        INT_KEY("dims.n_l", n_l),
        INT_KEY("dims.vocab", vocab),
        INT_KEY("dims.encoder_heads", encoder_heads),
        INT_KEY("dims.mapper_depth", mapper_depth),
        INT_KEY("dims.mapper_heads", mapper_heads),
        INT_KEY("dims.image_size", image_size),
        INT_KEY("dims.patch", patch),
        INT_KEY("dims.latent_channels", latent_channels),
        INT_KEY("dims.ae_hidden", ae_hidden),
        INT_KEY("dims.denoiser_width", denoiser_width),
        INT_KEY("dims.denoiser_heads", denoiser_heads),
        INT_KEY("schedule.total_steps", total_steps),
        STR_KEY("schedule.kind", schedule_kind),
        REAL_KEY("schedule.eta", eta),
        REAL_KEY("schedule.beta_start", beta_start),
        REAL_KEY("schedule.beta_end", beta_end),
        INT_KEY("schedule.default_t", default_t),
        STR_KEY("paths.checkpoint_dir", checkpoint_dir),
        STR_KEY("paths.manifest", manifest),
        STR_KEY("paths.cache_dir", cache_dir),
        STR_KEY("paths.record_store", record_store),
        STR_KEY("paths.lexicon", lexicon),
        STR_KEY("paths.retrieval_scores", retrieval_scores),
        STR_KEY("client.endpoint", endpoint),
        STR_KEY("client.api_key_env", api_key_env),
        INT_KEY("client.timeout_ms", timeout_ms),
        INT_KEY("client.max_retries", max_retries),
        INT_KEY("client.min_interval_ms", min_interval_ms),
        BOOL_KEY("client.offline", offline),
        REAL_KEY("spectrum.learning_rate", spectrum_lr),
        INT_KEY("spectrum.epochs", spectrum_epochs),
        INT_KEY("spectrum.batch_size", spectrum_batch),
        REAL_KEY("spectrum.margin", triplet_margin),
        REAL_KEY("backbone.learning_rate", backbone_lr),
        INT_KEY("backbone.steps", backbone_steps),
        INT_KEY("backbone.batch_size", backbone_batch),
        INT_KEY("backbone.ae_steps", ae_steps),
        INT_KEY("backbone.ae_batch", ae_batch),
        REAL_KEY("backbone.ae_learning_rate", ae_lr),
        REAL_KEY("mapper.learning_rate", mapper_lr),
        INT_KEY("mapper.steps", mapper_steps),
        INT_KEY("mapper.batch_size", mapper_batch),
        REAL_KEY("mapper.loss_beta", loss_beta),
        BOOL_KEY("mapper.squared_sa", squared_sa),
        REAL_KEY("evaluate.kld_eps", kld_eps),
        STR_KEY("evaluate.kld_direction", kld_direction),
        INT_KEY("dataset.retrieval_top_k", retrieval_top_k),
        INT_KEY("dataset.required_distractors", required_distractors),
        BOOL_KEY("dataset.emotion_region_level", emotion_region_level),
        REAL_KEY("dataset.split_percentile", split_percentile),
    };
#undef INT_KEY
#undef REAL_KEY
#undef STR_KEY
#undef BOOL_KEY
    return table;
}

}  // namespace

void RunConfig::apply(const std::map<std::string, TomlValue>& values) {
    const auto& table = registry();
    for (const auto& [key, value] : values) {
        auto it = table.find(key);
        if (it == table.end()) {
            throw InvalidConfig("unknown config key: '" + key + "'");
        }
        it->second.apply(*this, value);
    }
}

RunConfig RunConfig::from_file(const std::string& path) {
    RunConfig cfg;
    cfg.apply(parse_toml_file(path));
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    if (n_l < 1 || c_t < 1 || c_s < 1) throw InvalidConfig("dims must be positive");
    if (c_s % mapper_heads != 0) throw InvalidConfig("dims.c_s must divide by mapper_heads");
    if (c_t % encoder_heads != 0 || c_s % encoder_heads != 0) {
        throw InvalidConfig("encoder_heads must divide both c_t and c_s");
    }
    if (image_size % patch != 0) throw InvalidConfig("image_size must divide by patch");
    if ((image_size / patch) % 2 != 0) throw InvalidConfig("latent grid must be even");
    if (denoiser_width % denoiser_heads != 0) {
        throw InvalidConfig("denoiser_width must divide by denoiser_heads");
    }
    if (total_steps < 1) throw InvalidConfig("schedule.total_steps must be >= 1");
    if (default_t < 0 || default_t > total_steps) {
        throw InvalidConfig("schedule.default_t must lie in [0, total_steps]");
    }
    if (eta < 0 || eta > 1) throw InvalidConfig("schedule.eta must lie in [0,1]");
    if (loss_beta <= 0) throw InvalidConfig("mapper.loss_beta must be positive");
    if (kld_direction != "target-given-predicted" && kld_direction != "predicted-given-target") {
        throw InvalidConfig("evaluate.kld_direction must be target-given-predicted or "
                            "predicted-given-target");
    }
    (void)0;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["dims"] = {{"c_t", c_t},
                 {"c_s", c_s},
                 {"n_l", n_l},
                 {"vocab", vocab},
                 {"encoder_heads", encoder_heads},
                 {"mapper_depth", mapper_depth},
                 {"mapper_heads", mapper_heads},
                 {"image_size", image_size},
                 {"patch", patch},
                 {"latent_channels", latent_channels},
                 {"ae_hidden", ae_hidden},
                 {"denoiser_width", denoiser_width},
                 {"denoiser_heads", denoiser_heads}};
    j["schedule"] = {{"total_steps", total_steps}, {"kind", schedule_kind},
                     {"eta", eta},                 {"beta_start", beta_start},
                     {"beta_end", beta_end},       {"default_t", default_t}};
    j["paths"] = {{"checkpoint_dir", checkpoint_dir}, {"manifest", manifest},
                  {"cache_dir", cache_dir},           {"record_store", record_store},
                  {"lexicon", lexicon},               {"retrieval_scores", retrieval_scores}};
    j["client"] = {{"endpoint", endpoint},       {"api_key_env", api_key_env},
                   {"timeout_ms", timeout_ms},   {"max_retries", max_retries},
                   {"min_interval_ms", min_interval_ms}, {"offline", offline}};
    j["spectrum"] = {{"learning_rate", spectrum_lr},
                     {"epochs", spectrum_epochs},
                     {"batch_size", spectrum_batch},
                     {"margin", triplet_margin}};
    j["backbone"] = {{"learning_rate", backbone_lr}, {"steps", backbone_steps},
                     {"batch_size", backbone_batch}, {"ae_steps", ae_steps},
                     {"ae_batch", ae_batch},         {"ae_learning_rate", ae_lr}};
    j["mapper"] = {{"learning_rate", mapper_lr},
                   {"steps", mapper_steps},
                   {"batch_size", mapper_batch},
                   {"loss_beta", loss_beta},
                   {"squared_sa", squared_sa}};
    j["evaluate"] = {{"kld_eps", kld_eps}, {"kld_direction", kld_direction}};
    j["dataset"] = {{"retrieval_top_k", retrieval_top_k},
                    {"required_distractors", required_distractors},
                    {"emotion_region_level", emotion_region_level},
                    {"split_percentile", split_percentile}};
    return j;
}

std::string RunConfig::hash() const {
    return core::sha256_hex(to_json().dump()).substr(0, 16);
}

}  // namespace affedit::pipeline
