#include "supervision/mllm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "core/digest.hpp"
#include "core/errors.hpp"

namespace affedit::supervision {

std::vector<SupervisorPrompt> default_prompts() {
    return {
        {"color_tone",
         "Describe the color tone of this image and the mood it conveys."},
        {"object_category",
         "What are the main objects or subjects in this image, and how do they shape its "
         "emotional impression?"},
        {"facial_expression",
         "If any faces are visible, describe their expressions and the feelings they show. "
         "If none are visible, say so and describe the emotional posture of the scene."},
        {"atmosphere",
         "Describe the overall atmosphere of this image and the emotion it evokes."},
    };
}

void StubMllmClient::add_fixture(const std::string& image_id, const std::string& prompt_id,
                                 std::string answer) {
    fixtures_[{image_id, prompt_id}] = std::move(answer);
}

std::string StubMllmClient::complete(const MllmQuery& query) {
    ++call_count_;
    auto it = fixtures_.find({query.image_id, query.prompt_id});
    if (it != fixtures_.end()) return it->second;
    if (fallback_) return fallback_(query);
    throw SupervisionUnavailable("stub supervisor has no fixture for image '" + query.image_id +
                                 "' prompt '" + query.prompt_id + "'");
}

// ---------------------------------------------------------------------------
// HTTP client
// ---------------------------------------------------------------------------

namespace {

const char* kB64Chars = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<uint8_t>& data) {
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 2 < data.size()) {
        uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out.push_back(kB64Chars[(v >> 18) & 63]);
        out.push_back(kB64Chars[(v >> 12) & 63]);
        out.push_back(kB64Chars[(v >> 6) & 63]);
        out.push_back(kB64Chars[v & 63]);
        i += 3;
    }
    size_t rest = data.size() - i;
    if (rest == 1) {
        uint32_t v = data[i] << 16;
        out.push_back(kB64Chars[(v >> 18) & 63]);
        out.push_back(kB64Chars[(v >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (rest == 2) {
        uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out.push_back(kB64Chars[(v >> 18) & 63]);
        out.push_back(kB64Chars[(v >> 12) & 63]);
        out.push_back(kB64Chars[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

struct ParsedEndpoint {
    std::string host_port;  // scheme://host:port
    std::string path;
};

ParsedEndpoint split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw InvalidConfig("endpoint must include a scheme: " + endpoint);
    }
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

struct HttpMllmClient::Impl {
    explicit Impl(const HttpClientConfig& cfg)
        : parsed(split_endpoint(cfg.endpoint)), client(parsed.host_port) {
        client.set_connection_timeout(0, cfg.timeout_ms * 1000);
        client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
    }

    ParsedEndpoint parsed;
    httplib::Client client;
    std::chrono::steady_clock::time_point last_request{};
};

HttpMllmClient::HttpMllmClient(HttpClientConfig cfg)
    : cfg_(std::move(cfg)), impl_(std::make_unique<Impl>(cfg_)) {}

HttpMllmClient::~HttpMllmClient() = default;

std::string HttpMllmClient::complete(const MllmQuery& query) {
    nlohmann::json body;
    body["prompt"] = query.prompt_text;
    body["prompt_id"] = query.prompt_id;
    body["image_id"] = query.image_id;
    if (!query.image_bytes.empty()) body["image_b64"] = base64_encode(query.image_bytes);

    httplib::Headers headers;
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string payload = body.dump();
    int backoff = cfg_.backoff_ms;
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < cfg_.max_retries; ++attempt) {
        if (cfg_.min_interval_ms > 0) {
            auto now = std::chrono::steady_clock::now();
            auto since = std::chrono::duration_cast<std::chrono::milliseconds>(
                             now - impl_->last_request)
                             .count();
            if (since < cfg_.min_interval_ms) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(cfg_.min_interval_ms - since));
            }
        }
        impl_->last_request = std::chrono::steady_clock::now();

        auto res = impl_->client.Post(impl_->parsed.path, headers, payload, "application/json");
        if (res && res->status == 200) {
            try {
                nlohmann::json parsed = nlohmann::json::parse(res->body);
                return parsed.at("text").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                last_error = std::string("malformed response: ") + e.what();
            }
        } else if (res) {
            last_error = "http status " + std::to_string(res->status);
        } else {
            last_error = "transport error " + httplib::to_string(res.error());
        }
        if (attempt + 1 < cfg_.max_retries) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
    }
    throw SupervisionUnavailable("supervisor unreachable after " +
                                 std::to_string(cfg_.max_retries) + " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

CachedMllmClient::CachedMllmClient(std::shared_ptr<MllmClient> inner, std::string cache_dir)
    : inner_(std::move(inner)), cache_dir_(std::move(cache_dir)) {
    std::filesystem::create_directories(cache_dir_);
}

std::string CachedMllmClient::key_path(const MllmQuery& query) const {
    std::string image_hash =
        core::sha256_hex(query.image_bytes.data(), query.image_bytes.size());
    std::string key = core::sha256_hex(image_hash + ":" + query.prompt_id);
    return cache_dir_ + "/" + key + ".txt";
}

std::string CachedMllmClient::complete(const MllmQuery& query) {
    std::string path = key_path(query);
    {
        std::ifstream in(path, std::ios::binary);
        if (in) {
            ++hits_;
            std::string text((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
            return text;
        }
    }
    ++misses_;
    std::string text = inner_->complete(query);
    if (!text.empty()) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << text;
    }
    return text;
}

}  // namespace affedit::supervision
