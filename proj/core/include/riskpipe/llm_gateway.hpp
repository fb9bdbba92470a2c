#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace riskpipe {

// Name of the environment variable holding the bearer token, if any.
// Secrets are never read from config files.
inline constexpr const char* kApiKeyEnvVar = "RISKPIPE_API_KEY";

struct DecodingConfig {
    double temperature = 0.0;  // 0 means greedy decoding
    int max_new_tokens = 1024;
    std::string model_name;
    std::string endpoint_url;

    bool greedy() const { return temperature == 0.0; }
};

enum class FinishReason { Stop, Length, Error };

std::string to_string(FinishReason reason);

struct CompletionResult {
    std::string text;
    FinishReason finish_reason = FinishReason::Stop;
    std::int64_t latency_ms = 0;
    std::string error;  // non-empty only when finish_reason = Error
};

struct RetryPolicy {
    int max_retries = 3;          // attempts beyond the first, transport errors only
    int backoff_base_ms = 500;    // doubles per retry: 0.5s, 1s, 2s
    int timeout_s = 120;
};

// Chat-completions HTTP client. Each call opens its own connection, so one
// client instance is shareable across threads.
class LlmClient {
public:
    explicit LlmClient(RetryPolicy retry = {});

    // POST {endpoint_url}/v1/chat/completions with the prompt as a single
    // user message. Retries transient transport failures (network errors,
    // HTTP 5xx) per the retry policy. Throws TransportError after retries
    // are exhausted, ProtocolError on malformed responses or HTTP 4xx, and
    // BudgetError (carrying the partial text) when the completion was cut
    // off at the token limit.
    CompletionResult complete(const std::string& prompt, const DecodingConfig& config) const;

    // Runs complete() over all prompts with at most `parallelism` requests
    // in flight. Results are positional; a failed prompt yields a result
    // with finish_reason = Error (or Length with partial text) in its slot
    // and never aborts the batch.
    std::vector<CompletionResult> batch_complete(const std::vector<std::string>& prompts,
                                                 const DecodingConfig& config,
                                                 int parallelism) const;

    const RetryPolicy& retry_policy() const { return retry_; }

private:
    RetryPolicy retry_;
};

}  // namespace riskpipe
