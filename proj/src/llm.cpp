#include "visca/llm.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace visca::llm {

using nlohmann::json;

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr); }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
    void update(std::string_view s) { update(s.data(), s.size()); }
    void update_u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        update(b, sizeof b);
    }

    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_, md, &len);
        static constexpr char kDigits[] = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out += kDigits[md[i] >> 4];
            out += kDigits[md[i] & 0xf];
        }
        return out;
    }

private:
    EVP_MD_CTX* ctx_;
};

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string cache_key(const CompletionRequest& request) {
    Sha256 h;
    h.update("visca-completion-v1");
    h.update_u64(request.model.size());
    h.update(request.model);
    char temp[32];
    std::snprintf(temp, sizeof temp, "%.6f", request.temperature);
    h.update(temp);
    h.update_u64(request.parts.size());
    for (const auto& part : request.parts) {
        if (const auto* t = std::get_if<TextPart>(&part)) {
            h.update("T");
            h.update_u64(t->text.size());
            h.update(t->text);
        } else {
            const auto& img = *std::get<ImagePart>(part).image;
            h.update("I");
            h.update_u64(static_cast<std::uint64_t>(img.width()));
            h.update_u64(static_cast<std::uint64_t>(img.height()));
            h.update(img.bytes().data(), img.bytes().size());
        }
    }
    return h.hex();
}

std::string sha256_hex(const std::string& data) {
    Sha256 h;
    h.update(data.data(), data.size());
    return h.hex();
}

// ---------------------------------------------------------------- cache

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::optional<CompletionResponse> ResponseCache::get(const std::string& key) const {
    const auto path = dir_ / (key + ".json");
    if (!std::filesystem::is_regular_file(path)) return std::nullopt;
    try {
        const auto j = json::parse(read_file(path));
        CompletionResponse r;
        r.text = j.at("text").get<std::string>();
        r.provider = j.value("provider", std::string{});
        r.cached = true;
        return r;
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

bool ResponseCache::put(const std::string& key, const CompletionResponse& response) const {
    const auto final_path = dir_ / (key + ".json");
    static std::atomic<unsigned> counter{0};
    const auto tmp = dir_ / (key + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++));
    {
        std::ofstream out(tmp, std::ios::binary);
        out << json{{"text", response.text}, {"provider", response.provider}}.dump() << '\n';
        if (!out) throw InternalError("cannot write cache entry " + tmp.string());
    }
    // link() fails if the key is already published, so the first writer wins.
    const bool published = ::link(tmp.c_str(), final_path.c_str()) == 0;
    std::filesystem::remove(tmp);
    return published;
}

// -------------------------------------------------------------- gateway

Gateway::Gateway(std::shared_ptr<Provider> provider, std::optional<ResponseCache> cache, RetryPolicy retry,
                 int max_in_flight)
    : provider_(std::move(provider)),
      cache_(std::move(cache)),
      retry_(retry),
      in_flight_(std::clamp(max_in_flight, 1, 256)) {}

CompletionResponse Gateway::complete(const CompletionRequest& request) {
    if (request.parts.empty()) throw InternalError("completion request without parts");
    const std::string key = cache_key(request);
    {
        std::lock_guard lock(stats_mutex_);
        ++stats_.requests;
    }
    if (cache_) {
        if (auto hit = cache_->get(key)) {
            std::lock_guard lock(stats_mutex_);
            ++stats_.cache_hits;
            return *hit;
        }
    }

    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<256>& s;
        ~Release() { s.release(); }
    } release{in_flight_};

    auto backoff = retry_.base_backoff;
    for (int attempt = 0;; ++attempt) {
        try {
            {
                std::lock_guard lock(stats_mutex_);
                ++stats_.provider_calls;
            }
            CompletionResponse r = provider_->complete(request);
            if (r.text.empty()) throw ProviderProtocolError("empty completion text");
            r.cached = false;
            if (cache_) {
                cache_->put(key, r);
                // Converge on whatever value won the publish race.
                if (auto stored = cache_->get(key)) {
                    stored->cached = false;
                    stored->usage = r.usage;
                    return *stored;
                }
            }
            return r;
        } catch (const TransientError& e) {
            if (attempt >= retry_.max_retries) {
                throw ProviderUnavailable("gave up after " + std::to_string(attempt + 1) + " attempts: " + e.what());
            }
            {
                std::lock_guard lock(stats_mutex_);
                ++stats_.retries;
            }
            std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(backoff.count()) * retry_.multiplier));
        }
    }
}

json parse_json_reply(const std::string& text) {
    std::string body = text;
    if (const auto fence = body.find("```"); fence != std::string::npos) {
        const auto start = body.find('\n', fence);
        const auto end = body.find("```", start == std::string::npos ? fence + 3 : start);
        if (start != std::string::npos && end != std::string::npos) body = body.substr(start + 1, end - start - 1);
    }
    const auto first = body.find_first_of("{[");
    const auto last = body.find_last_of("}]");
    if (first != std::string::npos && last != std::string::npos && last > first) {
        body = body.substr(first, last - first + 1);
    }
    return json::parse(body);
}

json Gateway::complete_json(const CompletionRequest& request) {
    const auto first = complete(request);
    try {
        return parse_json_reply(first.text);
    } catch (const json::parse_error& e) {
        {
            std::lock_guard lock(stats_mutex_);
            ++stats_.repairs;
        }
        CompletionRequest repair = request;
        repair.text("Your previous reply could not be parsed as JSON (" + std::string(e.what()) +
                    "). Previous reply:\n" + first.text +
                    "\nReply again with only the corrected JSON document and no other text.");
        const auto second = complete(repair);
        try {
            return parse_json_reply(second.text);
        } catch (const json::parse_error& e2) {
            throw ProviderProtocolError(std::string("reply is not JSON after repair: ") + e2.what());
        }
    }
}

GatewayStats Gateway::stats() const {
    std::lock_guard lock(stats_mutex_);
    return stats_;
}

// ---------------------------------------------------------------- http

std::string base64_encode(const std::vector<std::uint8_t>& data) {
    std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                  static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {}

json HttpProvider::request_body(const CompletionRequest& request) {
    json content = json::array();
    for (const auto& part : request.parts) {
        if (const auto* t = std::get_if<TextPart>(&part)) {
            content.push_back({{"type", "text"}, {"text", t->text}});
        } else {
            const auto png = encode_png(*std::get<ImagePart>(part).image);
            content.push_back(
                {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
        }
    }
    return {
        {"model", request.model},
        {"temperature", request.temperature},
        {"max_tokens", request.max_output},
        {"messages", json::array({{{"role", "user"}, {"content", content}}})},
    };
}

CompletionResponse HttpProvider::complete(const CompletionRequest& request) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, kUrl)) {
        throw ProviderProtocolError("bad endpoint URL '" + config_.endpoint + "'");
    }
    httplib::Client client(m[1].str());
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const std::string path = m[2].matched ? m[2].str() : "/";
    auto res = client.Post(path, headers, request_body(request).dump(), "application/json");
    if (!res) throw TransientError("HTTP request failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403) {
        throw ProviderAuthError("HTTP " + std::to_string(res->status));
    }
    if (res->status == 429 || res->status >= 500) throw TransientError("HTTP " + std::to_string(res->status));
    if (res->status != 200) throw ProviderProtocolError("HTTP " + std::to_string(res->status) + ": " + res->body);

    CompletionResponse out;
    out.provider = name();
    try {
        const auto body = json::parse(res->body);
        const auto& message = body.at("choices").at(0).at("message");
        const auto& content = message.at("content");
        if (content.is_string()) {
            out.text = content.get<std::string>();
        } else {
            for (const auto& piece : content) {
                if (piece.value("type", "") == "text") out.text += piece.at("text").get<std::string>();
            }
        }
        if (body.contains("usage")) {
            const auto& u = body.at("usage");
            out.usage = Usage{u.value("prompt_tokens", 0L), u.value("completion_tokens", 0L)};
        }
    } catch (const json::exception& e) {
        throw ProviderProtocolError(std::string("malformed provider payload: ") + e.what());
    }
    if (out.text.empty()) throw ProviderProtocolError("provider returned empty content");
    return out;
}

}  // namespace visca::llm
