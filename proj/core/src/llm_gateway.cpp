#include "riskpipe/llm_gateway.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "riskpipe/errors.hpp"

namespace riskpipe {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host:port
    std::string prefix;  // path prefix without trailing slash, possibly empty
};

Endpoint split_endpoint(const std::string& url) {
    const std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) {
        throw DomainError("endpoint_url must start with http:// or https://: " + url);
    }
    const std::size_t path = url.find('/', scheme + 3);
    Endpoint ep;
    if (path == std::string::npos) {
        ep.origin = url;
    } else {
        ep.origin = url.substr(0, path);
        ep.prefix = url.substr(path);
    }
    while (!ep.prefix.empty() && ep.prefix.back() == '/') {
        ep.prefix.pop_back();
    }
    return ep;
}

void validate_config(const DecodingConfig& config) {
    if (config.temperature < 0.0) {
        throw DomainError("temperature must be >= 0");
    }
    if (config.max_new_tokens < 1) {
        throw DomainError("max_new_tokens must be positive");
    }
    if (config.model_name.empty()) {
        throw DomainError("model_name must be set");
    }
    if (config.endpoint_url.empty()) {
        throw DomainError("endpoint_url must be set");
    }
}

}  // namespace

std::string to_string(FinishReason reason) {
    switch (reason) {
        case FinishReason::Stop:
            return "stop";
        case FinishReason::Length:
            return "length";
        case FinishReason::Error:
            return "error";
    }
    throw DomainError("unknown finish reason");
}

LlmClient::LlmClient(RetryPolicy retry) : retry_(retry) {
    if (retry_.max_retries < 0 || retry_.backoff_base_ms < 0 || retry_.timeout_s < 1) {
        throw DomainError("invalid retry policy");
    }
}

CompletionResult LlmClient::complete(const std::string& prompt,
                                     const DecodingConfig& config) const {
    if (prompt.empty()) {
        throw PreconditionError("prompt must be non-empty");
    }
    validate_config(config);
    const Endpoint ep = split_endpoint(config.endpoint_url);

    nlohmann::json request = {
        {"model", config.model_name},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", config.temperature},
        {"max_tokens", config.max_new_tokens},
    };
    const std::string body = request.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(kApiKeyEnvVar); key != nullptr && key[0] != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const auto start = std::chrono::steady_clock::now();
    std::string last_transport_error;
    for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<std::int64_t>(retry_.backoff_base_ms)
                                          << (attempt - 1)));
        }
        httplib::Client client(ep.origin);
        client.set_connection_timeout(retry_.timeout_s, 0);
        client.set_read_timeout(retry_.timeout_s, 0);
        client.set_write_timeout(retry_.timeout_s, 0);

        httplib::Result res =
            client.Post(ep.prefix + "/v1/chat/completions", headers, body, "application/json");
        if (!res) {
            last_transport_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_transport_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProtocolError("HTTP " + std::to_string(res->status) + " from " + ep.origin);
        }

        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("response body is not JSON: ") + e.what());
        }
        std::string text;
        std::string finish = "stop";
        try {
            const nlohmann::json& choice = parsed.at("choices").at(0);
            text = choice.at("message").at("content").get<std::string>();
            if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
                finish = choice["finish_reason"].get<std::string>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("response missing choices[0].message.content: ") +
                                e.what());
        }
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
        if (finish == "length") {
            throw BudgetError("completion truncated at the token limit", text);
        }
        if (text.empty()) {
            throw ProtocolError("completion text is empty");
        }
        CompletionResult result;
        result.text = std::move(text);
        result.finish_reason = FinishReason::Stop;
        result.latency_ms = elapsed;
        return result;
    }
    throw TransportError("request failed after " + std::to_string(retry_.max_retries + 1) +
                         " attempts: " + last_transport_error);
}

std::vector<CompletionResult> LlmClient::batch_complete(const std::vector<std::string>& prompts,
                                                        const DecodingConfig& config,
                                                        int parallelism) const {
    if (parallelism < 1) {
        throw PreconditionError("parallelism must be >= 1");
    }
    std::vector<CompletionResult> results(prompts.size());
    if (prompts.empty()) {
        return results;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= prompts.size()) {
                return;
            }
            try {
                results[i] = complete(prompts[i], config);
            } catch (const BudgetError& e) {
                results[i].text = e.partial_text;
                results[i].finish_reason = FinishReason::Length;
                results[i].error.clear();
            } catch (const std::exception& e) {
                results[i].text.clear();
                results[i].finish_reason = FinishReason::Error;
                results[i].error = e.what();
            }
        }
    };

    const std::size_t threads =
        std::min(static_cast<std::size_t>(parallelism), prompts.size());
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }
    return results;
}

}  // namespace riskpipe
