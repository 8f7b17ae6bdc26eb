#pragma once

#include <httplib.h>

#include <atomic>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace vt {

// Local chat-completions endpoint answering from a script of HTTP statuses;
// after the script runs out every request gets 200.
class StubServer {
public:
    explicit StubServer(std::vector<int> statuses, std::string reply = "{\"ok\": true}")
        : statuses_(std::move(statuses)), reply_(std::move(reply)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const auto n = hits_++;
            last_body_ = req.body;
            auth_ = req.get_header_value("Authorization");
            const int status = n < statuses_.size() ? statuses_[n] : 200;
            res.status = status;
            if (status == 200) {
                const nlohmann::json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", reply_}}}}}},
                                             {"usage", {{"prompt_tokens", 10}, {"completion_tokens", 3}}}};
                res.set_content(body.dump(), "application/json");
            } else {
                res.set_content("{\"error\": \"scripted\"}", "application/json");
            }
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
    std::size_t hits() const { return hits_; }
    const std::string& last_body() const { return last_body_; }
    const std::string& auth() const { return auth_; }

private:
    httplib::Server server_;
    std::vector<int> statuses_;
    std::string reply_;
    std::atomic<std::size_t> hits_{0};
    std::string last_body_;
    std::string auth_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace vt
