#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace convoy::testing {

// Local OpenAI-compatible endpoint. The handler sees the parsed request body and the 1-based
// request number and fills the response.
class MockLlmServer {
public:
    using Handler = std::function<void(const nlohmann::json& request, int n, httplib::Response& res)>;

    explicit MockLlmServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = ++count_;
            const auto body = nlohmann::json::parse(req.body, nullptr, false);
            {
                std::lock_guard lock(mutex_);
                requests_.push_back(body);
            }
            handler_(body, n, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockLlmServer() {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
    int count() const { return count_; }
    std::vector<nlohmann::json> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }

    static std::string reply(const std::string& content) {
        return nlohmann::json{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}}
            .dump();
    }

private:
    Handler handler_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> count_{0};
    mutable std::mutex mutex_;
    std::vector<nlohmann::json> requests_;
};

}  // namespace convoy::testing
