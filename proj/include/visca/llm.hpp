#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "visca/errors.hpp"
#include "visca/image.hpp"

namespace visca::llm {

struct TextPart {
    std::string text;
};

struct ImagePart {
    std::shared_ptr<const RgbImage> image;
};

using Part = std::variant<TextPart, ImagePart>;

struct CompletionRequest {
    std::string model;
    std::vector<Part> parts;
    double temperature = 0.0;
    int max_output = 2048;

    CompletionRequest& text(std::string t) {
        parts.emplace_back(TextPart{std::move(t)});
        return *this;
    }
    CompletionRequest& image(RgbImage img) {
        parts.emplace_back(ImagePart{std::make_shared<const RgbImage>(std::move(img))});
        return *this;
    }
};

struct Usage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct CompletionResponse {
    std::string text;
    std::string provider;
    bool cached = false;
    std::optional<Usage> usage;
};

// Hex SHA-256 over model, temperature, and every part's bytes in order.
std::string cache_key(const CompletionRequest& request);

std::string sha256_hex(const std::string& data);

// A failure worth retrying (HTTP 5xx/429, connection reset, timeout).
class TransientError : public ProviderError {
public:
    explicit TransientError(const std::string& what) : ProviderError("transient: " + what) {}
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string name() const = 0;
    // Throws TransientError for retryable failures and other ProviderError
    // subclasses for permanent ones.
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// One file per key; entries are write-once (link-then-unlink publish).
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<CompletionResponse> get(const std::string& key) const;
    // Returns false if an entry already existed; the stored value wins.
    bool put(const std::string& key, const CompletionResponse& response) const;

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
};

struct RetryPolicy {
    int max_retries = 2;
    std::chrono::milliseconds base_backoff{250};
    double multiplier = 2.0;
};

struct GatewayStats {
    std::size_t requests = 0;
    std::size_t provider_calls = 0;
    std::size_t cache_hits = 0;
    std::size_t retries = 0;
    std::size_t repairs = 0;
};

// Uniform completion entry point: cache lookup, bounded concurrency,
// retry with exponential backoff.
class Gateway {
public:
    Gateway(std::shared_ptr<Provider> provider, std::optional<ResponseCache> cache = std::nullopt,
            RetryPolicy retry = {}, int max_in_flight = 4);

    CompletionResponse complete(const CompletionRequest& request);

    // Completion whose text must be a JSON document. One repair reprompt is
    // sent on a parse failure; a second failure raises ProviderProtocolError.
    nlohmann::json complete_json(const CompletionRequest& request);

    GatewayStats stats() const;
    const Provider& provider() const noexcept { return *provider_; }
    const std::string& default_model() const noexcept { return default_model_; }
    void set_default_model(std::string model) { default_model_ = std::move(model); }

private:
    std::shared_ptr<Provider> provider_;
    std::optional<ResponseCache> cache_;
    RetryPolicy retry_;
    std::counting_semaphore<256> in_flight_;
    std::string default_model_ = "mock";

    mutable std::mutex stats_mutex_;
    GatewayStats stats_;
};

// Extracts a JSON value from model output, tolerating ``` fences and
// surrounding prose. Throws nlohmann::json::parse_error.
nlohmann::json parse_json_reply(const std::string& text);

struct HttpProviderConfig {
    std::string endpoint;  // full chat-completions URL
    std::string api_key;
    std::chrono::seconds timeout{120};
};

// OpenAI-compatible chat-completions provider; images go as base64 PNG
// data URLs.
class HttpProvider : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig config);

    std::string name() const override { return "http"; }
    CompletionResponse complete(const CompletionRequest& request) override;

    // Request body sent for `request` (exposed for tests).
    static nlohmann::json request_body(const CompletionRequest& request);

private:
    HttpProviderConfig config_;
};

std::string base64_encode(const std::vector<std::uint8_t>& data);

}  // namespace visca::llm
