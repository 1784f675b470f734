#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <memory>
#include <thread>

#include "semtree/llm_client.hpp"

using namespace semtree;
using nlohmann::json;

namespace {

// In-process chat-completion endpoint for transport tests.
class FakeEndpoint {
public:
    FakeEndpoint() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
            last_body = req.body;
            last_auth = req.get_header_value("Authorization");
            ++hits;
            if (fail_next.exchange(false)) {
                res.status = 500;
                res.set_content("boom", "text/plain");
                return;
            }
            json request = json::parse(req.body);
            const std::size_t candidates = count_candidates(request);
            json scores = json::array();
            for (std::size_t i = 0; i < candidates; ++i) {
                scores.push_back(json::array({i, 10 * (i + 1)}));
            }
            json content;
            content["reasoning"] = "served by fake endpoint";
            content["ranking"] = json::array();
            content["relevance_scores"] = scores;
            json body;
            body["choices"] =
                json::array({json{{"message", json{{"role", "assistant"},
                                                   {"content", content.dump()}}}}});
            body["usage"] = {{"prompt_tokens", 123}, {"completion_tokens", 45}};
            res.set_content(body.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~FakeEndpoint() {
        server_.stop();
        thread_.join();
    }

    std::string url() const {
        return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    }

    std::string last_body;
    std::string last_auth;
    std::atomic<int> hits{0};
    std::atomic<bool> fail_next{false};

private:
    static std::size_t count_candidates(const json& request) {
        // candidates appear as "[i] " headers in the prompt
        const std::string prompt = request["messages"][0]["content"].get<std::string>();
        std::size_t count = 0;
        while (prompt.find("[" + std::to_string(count) + "] ") != std::string::npos) ++count;
        return count;
    }

    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ScoreRequest simple_request(int candidates) {
    ScoreRequest req;
    req.query = "transport probe";
    for (int i = 0; i < candidates; ++i) {
        req.candidates.push_back({NodeId{static_cast<std::uint64_t>(i)},
                                  "candidate text " + std::to_string(i)});
    }
    return req;
}

}  // namespace

TEST_CASE("http transport round-trips the chat-completion contract") {
    FakeEndpoint endpoint;
    LlmEndpointConfig config;
    config.base_url = endpoint.url();
    config.model_name = "fake-model";
    config.api_key_env_var = "SEMTREE_TEST_API_KEY";
    config.thinking_budget = -1;
    config.temperature = 0.25;
    config.retry_backoff_ms = 0;
    setenv("SEMTREE_TEST_API_KEY", "sk-test-123", 1);

    auto transport = std::make_shared<HttpChatTransport>(config);
    LlmScorer scorer(transport, config);
    auto response = scorer.score(simple_request(3));

    CHECK(response.scores == std::vector<double>{0.10, 0.20, 0.30});
    CHECK(response.cost.input_tokens == 123);
    CHECK(response.cost.output_tokens == 45);
    CHECK(endpoint.last_auth == "Bearer sk-test-123");

    json body = json::parse(endpoint.last_body);
    CHECK(body["model"] == "fake-model");
    CHECK(body["temperature"] == 0.25);
    CHECK(body["thinking_budget"] == -1);
    CHECK(body["messages"][0]["role"] == "user");
    const std::string prompt = body["messages"][0]["content"].get<std::string>();
    CHECK(prompt.find("transport probe") != std::string::npos);
    CHECK(prompt.find("[2] candidate text 2") != std::string::npos);
}

TEST_CASE("http transport surfaces HTTP errors and the scorer retries them") {
    FakeEndpoint endpoint;
    LlmEndpointConfig config;
    config.base_url = endpoint.url();
    config.max_retries = 1;
    config.retry_backoff_ms = 0;
    config.api_key_env_var = "";

    auto transport = std::make_shared<HttpChatTransport>(config);
    endpoint.fail_next = true;
    LlmScorer scorer(transport, config);
    auto response = scorer.score(simple_request(2));
    CHECK(endpoint.hits == 2);  // 500 then success
    CHECK(response.scores.size() == 2);
}

TEST_CASE("unreachable endpoint is a transport error after retries") {
    LlmEndpointConfig config;
    config.base_url = "http://127.0.0.1:1/nowhere";
    config.max_retries = 0;
    config.retry_backoff_ms = 0;
    config.timeout_seconds = 2.0;
    auto transport = std::make_shared<HttpChatTransport>(config);
    LlmScorer scorer(transport, config);
    try {
        scorer.score(simple_request(1));
        FAIL("expected transport failure");
    } catch (const ResponseParseError& e) {
        CHECK(e.kind == ParseErrorKind::Transport);
    }
}

TEST_CASE("url parsing validates scheme and host") {
    CHECK_THROWS(HttpChatTransport(LlmEndpointConfig{.base_url = "ftp://host/x"}));
    CHECK_THROWS(HttpChatTransport(LlmEndpointConfig{.base_url = "http:///missing"}));
}
