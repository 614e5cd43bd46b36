#pragma once

// Scripted SER/ASR server speaking the /analyze and /transcribe protocol.

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace speeji::testing {

struct Reply {
    int status = 200;
    std::string body;
    std::chrono::milliseconds delay{0};
};

class FakeBackend {
public:
    using Handler = std::function<Reply(const nlohmann::json& request)>;

    FakeBackend() {
        server_.Post("/analyze", [this](const httplib::Request& req, httplib::Response& res) {
            serve(req, res, analyze_, analyze_log_);
        });
        server_.Post("/transcribe", [this](const httplib::Request& req, httplib::Response& res) {
            serve(req, res, transcribe_, transcribe_log_);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~FakeBackend() {
        server_.stop();
        thread_.join();
    }

    FakeBackend(const FakeBackend&) = delete;
    FakeBackend& operator=(const FakeBackend&) = delete;

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    void on_analyze(Handler h) {
        std::lock_guard lock(mutex_);
        analyze_ = std::move(h);
    }
    void on_transcribe(Handler h) {
        std::lock_guard lock(mutex_);
        transcribe_ = std::move(h);
    }

    std::vector<nlohmann::json> analyze_requests() const {
        std::lock_guard lock(mutex_);
        return analyze_log_;
    }
    std::vector<nlohmann::json> transcribe_requests() const {
        std::lock_guard lock(mutex_);
        return transcribe_log_;
    }

    /// Every span answered with the same raw triple.
    static Handler constant(double v, double a, double d) {
        return [=](const nlohmann::json& req) {
            nlohmann::json results = nlohmann::json::array();
            for (std::size_t i = 0; i < req["spans"].size(); ++i) {
                results.push_back({{"valence", v}, {"arousal", a}, {"dominance", d}});
            }
            return Reply{200, nlohmann::json{{"results", results}}.dump()};
        };
    }

private:
    void serve(const httplib::Request& req, httplib::Response& res, Handler& handler,
               std::vector<nlohmann::json>& log) {
        Handler h;
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        {
            std::lock_guard lock(mutex_);
            log.push_back(body);
            h = handler;
        }
        if (!h) {
            res.status = 404;
            return;
        }
        const Reply r = h(body);
        if (r.delay.count() > 0) std::this_thread::sleep_for(r.delay);
        res.status = r.status;
        res.set_content(r.body, "application/json");
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    Handler analyze_;
    Handler transcribe_;
    std::vector<nlohmann::json> analyze_log_;
    std::vector<nlohmann::json> transcribe_log_;
};

/// Reply with a fixed transcript.
inline FakeBackend::Handler transcript_reply(
    const std::vector<std::tuple<double, double, std::string>>& segments) {
    return [=](const nlohmann::json&) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [s, e, t] : segments) arr.push_back({{"start_s", s}, {"end_s", e}, {"text", t}});
        return Reply{200, nlohmann::json{{"segments", arr}}.dump()};
    };
}

}  // namespace speeji::testing
