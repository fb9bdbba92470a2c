#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace riskpipe {

// One scripted response. Rules are matched in order by searching `pattern`
// (ECMAScript regex) against the incoming prompt; the first match wins.
struct MockRule {
    std::string pattern;
    std::string completion;
    std::string finish_reason = "stop";
    int fail_times = 0;    // HTTP 500s served before the canned response
    int status = 200;      // final status once fail_times is exhausted
    int delay_ms = 0;      // handler sleep, makes concurrency observable
    bool malformed = false;  // respond 200 with a non-JSON body
};

// In-process chat-completions endpoint for offline tests. Also exposes
// GET /__mock__/stats with request counters. Unmatched prompts get HTTP 400.
class MockLlmServer {
public:
    MockLlmServer();
    explicit MockLlmServer(std::vector<MockRule> rules);
    ~MockLlmServer();
    MockLlmServer(MockLlmServer&&) noexcept;
    MockLlmServer& operator=(MockLlmServer&&) noexcept;
    MockLlmServer(const MockLlmServer&) = delete;
    MockLlmServer& operator=(const MockLlmServer&) = delete;

    // Parses a script file: JSON {"rules": [...]} or a bare rule array.
    static std::vector<MockRule> load_script(const std::string& path);
    static std::vector<MockRule> parse_script(const std::string& text);

    // Binds and serves on a background thread; port 0 picks an ephemeral
    // port. Throws TransportError if the address cannot be bound.
    void start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();

    int port() const;
    std::string endpoint_url() const;

    std::size_t request_count() const;
    std::size_t high_water() const;  // max concurrent in-flight requests seen
    std::vector<std::size_t> rule_hits() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace riskpipe
