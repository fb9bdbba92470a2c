#include "riskpipe/mock_llm.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "riskpipe/errors.hpp"

namespace riskpipe {

namespace {

MockRule rule_from_json(const nlohmann::json& j, std::size_t index) {
    if (!j.is_object() || !j.contains("pattern")) {
        throw FormatError("mock rule " + std::to_string(index) + " needs a pattern");
    }
    MockRule rule;
    rule.pattern = j.at("pattern").get<std::string>();
    rule.completion = j.value("completion", std::string());
    rule.finish_reason = j.value("finish_reason", std::string("stop"));
    rule.fail_times = j.value("fail_times", 0);
    rule.status = j.value("status", 200);
    rule.delay_ms = j.value("delay_ms", 0);
    rule.malformed = j.value("malformed", false);
    return rule;
}

}  // namespace

struct MockLlmServer::Impl {
    std::vector<MockRule> rules;
    std::vector<std::regex> patterns;
    httplib::Server server;
    std::thread thread;
    std::string host = "127.0.0.1";
    int bound_port = 0;

    std::atomic<std::size_t> requests{0};
    std::atomic<std::size_t> in_flight{0};
    std::atomic<std::size_t> high_water{0};
    std::mutex mutex;                       // guards fail_counts and hits
    std::vector<int> fail_counts;
    std::vector<std::size_t> hits;

    explicit Impl(std::vector<MockRule> r) : rules(std::move(r)) {
        patterns.reserve(rules.size());
        for (const MockRule& rule : rules) {
            try {
                patterns.emplace_back(rule.pattern);
            } catch (const std::regex_error& e) {
                throw FormatError("bad mock rule pattern '" + rule.pattern + "': " + e.what());
            }
        }
        fail_counts.assign(rules.size(), 0);
        hits.assign(rules.size(), 0);
        install_handlers();
    }

    ~Impl() { shutdown(); }

    void shutdown() {
        if (server.is_running()) {
            server.stop();
        }
        if (thread.joinable()) {
            thread.join();
        }
    }

    void install_handlers() {
        server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
            const std::size_t current = in_flight.fetch_add(1) + 1;
            std::size_t seen = high_water.load();
            while (current > seen && !high_water.compare_exchange_weak(seen, current)) {
            }
            requests.fetch_add(1);
            handle_completion(req, res);
            in_flight.fetch_sub(1);
        });
        server.Get("/__mock__/stats", [this](const httplib::Request&, httplib::Response& res) {
            nlohmann::json out = {
                {"requests", requests.load()},
                {"high_water", high_water.load()},
            };
            {
                std::lock_guard<std::mutex> lock(mutex);
                out["rule_hits"] = hits;
            }
            res.set_content(out.dump(), "application/json");
        });
    }

    void handle_completion(const httplib::Request& req, httplib::Response& res) {
        std::string prompt;
        std::string model;
        try {
            const nlohmann::json body = nlohmann::json::parse(req.body);
            model = body.value("model", std::string());
            prompt = body.at("messages").at(0).at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            res.status = 400;
            res.set_content(R"({"error": "bad request body"})", "application/json");
            return;
        }

        int matched = -1;
        for (std::size_t i = 0; i < patterns.size(); ++i) {
            if (std::regex_search(prompt, patterns[i])) {
                matched = static_cast<int>(i);
                break;
            }
        }
        if (matched < 0) {
            res.status = 400;
            res.set_content(R"({"error": "no rule matched the prompt"})", "application/json");
            return;
        }
        const MockRule& rule = rules[static_cast<std::size_t>(matched)];
        bool fail_now = false;
        {
            std::lock_guard<std::mutex> lock(mutex);
            ++hits[static_cast<std::size_t>(matched)];
            if (fail_counts[static_cast<std::size_t>(matched)] < rule.fail_times) {
                ++fail_counts[static_cast<std::size_t>(matched)];
                fail_now = true;
            }
        }
        if (rule.delay_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(rule.delay_ms));
        }
        if (fail_now) {
            res.status = 500;
            res.set_content(R"({"error": "scripted failure"})", "application/json");
            return;
        }
        if (rule.malformed) {
            res.status = rule.status;
            res.set_content("this is not json", "text/plain");
            return;
        }
        if (rule.status != 200) {
            res.status = rule.status;
            res.set_content(R"({"error": "scripted status"})", "application/json");
            return;
        }
        nlohmann::json out = {
            {"id", "mock-" + std::to_string(requests.load())},
            {"object", "chat.completion"},
            {"model", model},
            {"choices",
             nlohmann::json::array({{
                 {"index", 0},
                 {"message", {{"role", "assistant"}, {"content", rule.completion}}},
                 {"finish_reason", rule.finish_reason},
             }})},
        };
        res.set_content(out.dump(), "application/json");
    }
};

MockLlmServer::MockLlmServer() : impl_(std::make_unique<Impl>(std::vector<MockRule>{})) {}

MockLlmServer::MockLlmServer(std::vector<MockRule> rules)
    : impl_(std::make_unique<Impl>(std::move(rules))) {}

MockLlmServer::~MockLlmServer() = default;
MockLlmServer::MockLlmServer(MockLlmServer&&) noexcept = default;
MockLlmServer& MockLlmServer::operator=(MockLlmServer&&) noexcept = default;

std::vector<MockRule> MockLlmServer::parse_script(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("mock script is not valid JSON: ") + e.what());
    }
    const nlohmann::json* rules = &doc;
    if (doc.is_object()) {
        if (!doc.contains("rules")) {
            throw FormatError("mock script object needs a 'rules' array");
        }
        rules = &doc.at("rules");
    }
    if (!rules->is_array()) {
        throw FormatError("mock script rules must be an array");
    }
    std::vector<MockRule> out;
    out.reserve(rules->size());
    for (std::size_t i = 0; i < rules->size(); ++i) {
        out.push_back(rule_from_json((*rules)[i], i));
    }
    return out;
}

std::vector<MockRule> MockLlmServer::load_script(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open mock script: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_script(buffer.str());
}

void MockLlmServer::start(const std::string& host, int port) {
    Impl& impl = *impl_;
    if (impl.server.is_running()) {
        throw PreconditionError("mock server already running");
    }
    impl.host = host;
    if (port == 0) {
        impl.bound_port = impl.server.bind_to_any_port(host);
        if (impl.bound_port <= 0) {
            throw TransportError("cannot bind mock server on " + host);
        }
    } else {
        if (!impl.server.bind_to_port(host, port)) {
            throw TransportError("cannot bind mock server on " + host + ":" +
                                 std::to_string(port));
        }
        impl.bound_port = port;
    }
    impl.thread = std::thread([&impl]() { impl.server.listen_after_bind(); });
    impl.server.wait_until_ready();
}

void MockLlmServer::stop() { impl_->shutdown(); }

int MockLlmServer::port() const { return impl_->bound_port; }

std::string MockLlmServer::endpoint_url() const {
    return "http://" + impl_->host + ":" + std::to_string(impl_->bound_port);
}

std::size_t MockLlmServer::request_count() const { return impl_->requests.load(); }

std::size_t MockLlmServer::high_water() const { return impl_->high_water.load(); }

std::vector<std::size_t> MockLlmServer::rule_hits() const {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    return impl_->hits;
}

}  // namespace riskpipe
