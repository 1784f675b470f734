#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "semtree/prompts.hpp"
#include "semtree/scorer.hpp"
#include "semtree/util.hpp"

namespace semtree {

struct LlmEndpointConfig {
    std::string base_url;           // e.g. http://host:port/v1/chat/completions
    std::string model_name;
    std::string api_key_env_var;    // key is read from this variable, never a flag
    int thinking_budget = -1;       // -1 model-decided, 0 disabled
    int max_retries = 2;
    double timeout_seconds = 60.0;
    double temperature = 0.0;
    int retry_backoff_ms = 500;     // doubles per attempt
    int max_in_flight = 4;
};

struct CompletionRequest {
    std::string prompt;
    double temperature = 0.0;
    int thinking_budget = -1;
    std::string model;
};

struct CompletionResult {
    std::string text;
    std::optional<std::int64_t> input_tokens;
    std::optional<std::int64_t> output_tokens;
};

// Single-call transport to a chat-completion-style endpoint. Implementations
// throw ResponseParseError(Transport, ...) on failure; retry policy lives in
// the callers.
class LlmTransport {
public:
    virtual ~LlmTransport() = default;
    virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

// POSTs {model, messages, temperature, thinking_budget} and reads
// choices[0].message.content plus usage counts when present. Bounded
// in-flight requests.
class HttpChatTransport : public LlmTransport {
public:
    explicit HttpChatTransport(LlmEndpointConfig config);
    ~HttpChatTransport() override;

    CompletionResult complete(const CompletionRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Retry/backoff wrapper shared by every remote call site: re-sends the full
// prompt on each failure, never repairs partial responses. `parse` throws
// ResponseParseError to trigger a retry; after exhaustion the last error (with
// raw response attached) propagates. Token usage accumulates into `cost_out`,
// falling back to a length-based estimate when the transport reports none.
template <typename T>
T complete_with_retries(LlmTransport& transport, const CompletionRequest& request,
                        int max_retries, int backoff_ms, TokenCost* cost_out,
                        const std::function<T(const std::string&)>& parse) {
    std::exception_ptr last_error;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        if (attempt > 0 && backoff_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms << (attempt - 1)));
        }
        try {
            CompletionResult result = transport.complete(request);
            if (cost_out) {
                cost_out->input_tokens +=
                    result.input_tokens ? *result.input_tokens : estimate_tokens(request.prompt);
                cost_out->output_tokens +=
                    result.output_tokens ? *result.output_tokens : estimate_tokens(result.text);
            }
            return parse(result.text);
        } catch (const ResponseParseError&) {
            last_error = std::current_exception();
        }
    }
    std::rethrow_exception(last_error);
}

// Listwise scorer backed by a remote model: renders the scoring prompt,
// parses the structured response, normalizes scores to [0,1], tracks cost.
class LlmScorer : public ListwiseScorer {
public:
    LlmScorer(std::shared_ptr<LlmTransport> transport, LlmEndpointConfig config,
              PromptSet prompts = {}, PromptOptions options = {});

    ScoreResponse score(const ScoreRequest& request) override;

    // Optional per-session memo keyed by (query, slate member ids); replay
    // aid only, off by default.
    void enable_memo(bool on) { memo_enabled_ = on; }

private:
    std::shared_ptr<LlmTransport> transport_;
    LlmEndpointConfig config_;
    PromptSet prompts_;
    PromptOptions options_;
    bool memo_enabled_ = false;
    std::mutex memo_mutex_;
    std::unordered_map<std::string, ScoreResponse> memo_;
};

// Child-texts -> summary via the node-summary prompt; prompt ids are a
// monotone watermark counter.
class LlmNodeSummarizer {
public:
    LlmNodeSummarizer(std::shared_ptr<LlmTransport> transport, LlmEndpointConfig config,
                      PromptSet prompts = {}, PromptOptions options = {});

    std::string summarize(const std::vector<std::string>& child_texts);

    TokenCost cost() const;

private:
    std::shared_ptr<LlmTransport> transport_;
    LlmEndpointConfig config_;
    PromptSet prompts_;
    PromptOptions options_;
    std::atomic<std::uint64_t> next_prompt_id_{0};
    mutable std::mutex cost_mutex_;
    TokenCost cost_;
};

}  // namespace semtree
