#include "semtree/llm_client.hpp"

#include <httplib.h>
#include <json.hpp>

#include <condition_variable>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace semtree {

using nlohmann::json;

namespace {

struct ParsedUrl {
    bool https = false;
    std::string host_port;  // host[:port]
    std::string path;       // leading slash
};

ParsedUrl parse_url(const std::string& url) {
    ParsedUrl out;
    std::string rest = url;
    if (rest.rfind("https://", 0) == 0) {
        out.https = true;
        rest = rest.substr(8);
    } else if (rest.rfind("http://", 0) == 0) {
        rest = rest.substr(7);
    } else {
        throw std::invalid_argument("base_url must start with http:// or https://: " + url);
    }
    const auto slash = rest.find('/');
    out.host_port = slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);
    if (out.host_port.empty()) throw std::invalid_argument("base_url has no host: " + url);
    return out;
}

// Simple counting gate; keeps at most `limit` requests in flight.
class InFlightGate {
public:
    explicit InFlightGate(int limit) : limit_(limit < 1 ? 1 : limit) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return in_flight_ < limit_; });
        ++in_flight_;
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            --in_flight_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int limit_;
    int in_flight_ = 0;
};

}  // namespace

struct HttpChatTransport::Impl {
    LlmEndpointConfig config;
    ParsedUrl url;
    std::string api_key;
    InFlightGate gate;

    explicit Impl(LlmEndpointConfig cfg)
        : config(std::move(cfg)), url(parse_url(config.base_url)), gate(config.max_in_flight) {
        if (!config.api_key_env_var.empty()) {
            if (const char* key = std::getenv(config.api_key_env_var.c_str())) {
                api_key = key;
            }
        }
    }
};

HttpChatTransport::HttpChatTransport(LlmEndpointConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpChatTransport::~HttpChatTransport() = default;

CompletionResult HttpChatTransport::complete(const CompletionRequest& request) {
    json body;
    body["model"] = request.model.empty() ? impl_->config.model_name : request.model;
    body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = request.temperature;
    body["thinking_budget"] = request.thinking_budget;

    httplib::Headers headers;
    if (!impl_->api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + impl_->api_key);
    }

    impl_->gate.acquire();
    struct Release {
        InFlightGate& gate;
        ~Release() { gate.release(); }
    } release{impl_->gate};

    const auto timeout_s = static_cast<time_t>(impl_->config.timeout_seconds);
    const auto timeout_us =
        static_cast<time_t>((impl_->config.timeout_seconds - static_cast<double>(timeout_s)) * 1e6);

    httplib::Result res;
    if (impl_->url.https) {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
        httplib::SSLClient client(impl_->url.host_port);
        client.set_read_timeout(timeout_s, timeout_us);
        client.set_write_timeout(timeout_s, timeout_us);
        res = client.Post(impl_->url.path, headers, body.dump(), "application/json");
#else
        throw ResponseParseError(ParseErrorKind::Transport,
                                 "built without TLS support; use an http:// endpoint", "");
#endif
    } else {
        httplib::Client client(impl_->url.host_port);
        client.set_read_timeout(timeout_s, timeout_us);
        client.set_write_timeout(timeout_s, timeout_us);
        res = client.Post(impl_->url.path, headers, body.dump(), "application/json");
    }

    if (!res) {
        throw ResponseParseError(ParseErrorKind::Transport,
                                 "request failed: " + httplib::to_string(res.error()), "");
    }
    if (res->status != 200) {
        throw ResponseParseError(ParseErrorKind::Transport,
                                 "HTTP " + std::to_string(res->status), res->body);
    }

    json payload = json::parse(res->body, nullptr, false);
    if (payload.is_discarded()) {
        throw ResponseParseError(ParseErrorKind::Transport, "response body is not JSON",
                                 res->body);
    }

    CompletionResult out;
    if (payload.contains("choices") && payload["choices"].is_array() &&
        !payload["choices"].empty()) {
        const auto& choice = payload["choices"][0];
        if (choice.contains("message") && choice["message"].contains("content")) {
            out.text = choice["message"]["content"].get<std::string>();
        } else if (choice.contains("text")) {
            out.text = choice["text"].get<std::string>();
        }
    } else if (payload.contains("text")) {
        out.text = payload["text"].get<std::string>();
    }
    if (out.text.empty()) {
        throw ResponseParseError(ParseErrorKind::Transport, "no completion text in response",
                                 res->body);
    }
    if (payload.contains("usage")) {
        const auto& usage = payload["usage"];
        if (usage.contains("prompt_tokens")) {
            out.input_tokens = usage["prompt_tokens"].get<std::int64_t>();
        }
        if (usage.contains("completion_tokens")) {
            out.output_tokens = usage["completion_tokens"].get<std::int64_t>();
        }
    }
    return out;
}

LlmScorer::LlmScorer(std::shared_ptr<LlmTransport> transport, LlmEndpointConfig config,
                     PromptSet prompts, PromptOptions options)
    : transport_(std::move(transport)),
      config_(std::move(config)),
      prompts_(std::move(prompts)),
      options_(options) {}

ScoreResponse LlmScorer::score(const ScoreRequest& request) {
    std::string memo_key;
    if (memo_enabled_) {
        std::ostringstream key;
        key << request.query << '\x1f';
        for (const auto& c : request.candidates) key << c.node.value << ',';
        memo_key = key.str();
        std::lock_guard lock(memo_mutex_);
        if (auto it = memo_.find(memo_key); it != memo_.end()) return it->second;
    }

    CompletionRequest creq;
    creq.prompt = build_scoring_prompt(request.query, request.candidates,
                                       request.relevance_definition, prompts_, options_);
    creq.temperature = config_.temperature;
    creq.thinking_budget = config_.thinking_budget;
    creq.model = config_.model_name;

    ScoreResponse out;
    const std::size_t k = request.candidates.size();
    ParsedScores parsed = complete_with_retries<ParsedScores>(
        *transport_, creq, config_.max_retries, config_.retry_backoff_ms, &out.cost,
        [k](const std::string& text) { return parse_score_response(text, k); });

    out.scores = std::move(parsed.scores);
    out.reasoning = std::move(parsed.reasoning);
    out.ranking = std::move(parsed.ranking);
    out.flags = std::move(parsed.flags);

    if (memo_enabled_) {
        std::lock_guard lock(memo_mutex_);
        memo_.emplace(std::move(memo_key), out);
    }
    return out;
}

LlmNodeSummarizer::LlmNodeSummarizer(std::shared_ptr<LlmTransport> transport,
                                     LlmEndpointConfig config, PromptSet prompts,
                                     PromptOptions options)
    : transport_(std::move(transport)),
      config_(std::move(config)),
      prompts_(std::move(prompts)),
      options_(options) {}

std::string LlmNodeSummarizer::summarize(const std::vector<std::string>& child_texts) {
    CompletionRequest creq;
    creq.prompt =
        build_summary_prompt(next_prompt_id_.fetch_add(1), child_texts, prompts_, options_);
    creq.temperature = config_.temperature;
    creq.thinking_budget = config_.thinking_budget;
    creq.model = config_.model_name;

    TokenCost call_cost;
    std::string summary = complete_with_retries<std::string>(
        *transport_, creq, config_.max_retries, config_.retry_backoff_ms, &call_cost,
        [](const std::string& text) { return parse_summary_response(text); });

    std::lock_guard lock(cost_mutex_);
    cost_.input_tokens += call_cost.input_tokens;
    cost_.output_tokens += call_cost.output_tokens;
    return summary;
}

TokenCost LlmNodeSummarizer::cost() const {
    std::lock_guard lock(cost_mutex_);
    return cost_;
}

}  // namespace semtree
