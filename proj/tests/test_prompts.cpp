#include <doctest.h>

#include <fstream>
#include <sstream>

#include "semtree/prompts.hpp"

using namespace semtree;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing fixture ", path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const std::string kGoldenDir = std::string(TEST_DATA_DIR) + "/golden/";

}  // namespace

TEST_CASE("render_template substitution and brace escaping") {
    CHECK(render_template("a {x} b", {{"x", "X"}}) == "a X b");
    CHECK(render_template("{{\"k\": {v}}}", {{"v", "1"}}) == "{\"k\": 1}");
    CHECK_THROWS(render_template("{unknown}", {}));
    CHECK_THROWS(render_template("{unterminated", {}));
    // substituted values are not re-scanned
    CHECK(render_template("{x}", {{"x", "{{literal}}"}}) == "{{literal}}");
}

TEST_CASE("scoring prompt matches the golden instantiation byte for byte") {
    std::vector<SlateCandidate> candidates = {
        {NodeId{10}, "Quaternion rotation basics for 3D graphics"},
        {NodeId{11}, "Soil bacteria in nitrogen fixation"},
    };
    const std::string prompt = build_scoring_prompt("what causes yaw drift?", candidates, "");
    CHECK(prompt == read_file(kGoldenDir + "scoring_prompt.txt"));
}

TEST_CASE("scoring prompt: option headers appear exactly once each") {
    std::vector<SlateCandidate> candidates = {{NodeId{1}, "first"}, {NodeId{2}, "second"}};
    const std::string prompt = build_scoring_prompt("q", candidates, "custom definition");
    auto count = [&](const std::string& needle) {
        std::size_t n = 0;
        for (std::size_t pos = prompt.find(needle); pos != std::string::npos;
             pos = prompt.find(needle, pos + 1)) {
            ++n;
        }
        return n;
    };
    CHECK(count("[0] first") == 1);
    CHECK(count("[1] second") == 1);
    CHECK(prompt.find("custom definition") != std::string::npos);
}

TEST_CASE("scoring prompt truncates oversized candidates with a marker") {
    PromptOptions options;
    options.candidate_char_budget = 2000;
    std::vector<SlateCandidate> candidates = {{NodeId{1}, std::string(10000, 'x')}};
    const std::string rendered = render_candidate_options(candidates, options);
    CHECK(rendered.size() < 2100);
    CHECK(rendered.find("...") != std::string::npos);
}

TEST_CASE("keyword prompt matches golden") {
    std::vector<std::pair<int, std::string>> passages = {
        {0, "Alpha passage about glacial erosion."},
        {1, "Beta passage about market equilibria."},
    };
    CHECK(build_keyword_prompt(passages) == read_file(kGoldenDir + "keyword_prompt.txt"));
}

TEST_CASE("clustering prompt matches golden, braces unescaped") {
    std::vector<KeywordCount> keywords = {{"physics", 3}, {"chem\"istry", 1}};
    const std::string prompt = build_clustering_prompt(keywords, 2, 4);
    CHECK(prompt == read_file(kGoldenDir + "clustering_prompt.txt"));
    // the JSON example in the template must come out with single braces
    CHECK(prompt.find("{{") == std::string::npos);
    CHECK(prompt.find("\"clusters\": [") != std::string::npos);
}

TEST_CASE("summary prompt matches golden and watermarks the prompt id") {
    const std::string prompt = build_summary_prompt(7, {"First child text", "Second child text"});
    CHECK(prompt == read_file(kGoldenDir + "summary_prompt.txt"));
    CHECK(prompt.find("Prompt ID: 7 ") != std::string::npos);
}

TEST_CASE("prompt overrides load from a directory") {
    PromptSet prompts;
    prompts.load_overrides("/nonexistent/dir");  // silently keeps defaults
    CHECK(prompts.listwise_scoring == std::string(prompts::kListwiseScoring));
}

// --------------------------------------------------------------------------
// response parsing

TEST_CASE("score response: happy path") {
    const std::string text =
        R"({"reasoning": "...", "ranking": [1, 0], "relevance_scores": [[0, 40], [1, 90]]})";
    auto parsed = parse_score_response(text, 2);
    CHECK(parsed.scores == std::vector<double>{0.40, 0.90});
    CHECK(parsed.ranking == std::vector<int>{1, 0});
    CHECK(parsed.reasoning == "...");
    CHECK(parsed.flags.empty());
}

TEST_CASE("score response: code fences are stripped") {
    const std::string text =
        "```json\n{\"reasoning\": \"r\", \"ranking\": [0], \"relevance_scores\": [[0, 55]]}\n```";
    auto parsed = parse_score_response(text, 1);
    CHECK(parsed.scores[0] == doctest::Approx(0.55));
}

TEST_CASE("score response: leading prose before the object") {
    const std::string text = "Sure! Here is the JSON:\n{\"relevance_scores\": [[0, 10]]}";
    auto parsed = parse_score_response(text, 1);
    CHECK(parsed.scores[0] == doctest::Approx(0.10));
}

TEST_CASE("score response: scores-only object is accepted") {
    // reasoning-free mode constrains the model to emit only the scores field
    auto parsed = parse_score_response(R"({"relevance_scores": [[0, 5], [1, 95]]})", 2);
    CHECK(parsed.scores[1] == doctest::Approx(0.95));
    CHECK(parsed.ranking.empty());
}

TEST_CASE("score response: every malformation is classified") {
    auto kind_of = [](const std::string& text, std::size_t k) {
        try {
            parse_score_response(text, k);
        } catch (const ResponseParseError& e) {
            return e.kind;
        }
        return ParseErrorKind::Transport;  // sentinel: no error thrown
    };

    CHECK(kind_of("not json at all", 1) == ParseErrorKind::MalformedJson);
    CHECK(kind_of("[1, 2, 3]", 1) == ParseErrorKind::MalformedJson);
    CHECK(kind_of(R"({"ranking": [0]})", 1) == ParseErrorKind::MissingField);
    CHECK(kind_of(R"({"relevance_scores": 5})", 1) == ParseErrorKind::BadType);
    CHECK(kind_of(R"({"relevance_scores": [[0, "high"]]})", 1) == ParseErrorKind::BadType);
    CHECK(kind_of(R"({"relevance_scores": [[3, 50]]})", 1) == ParseErrorKind::IndexOutOfRange);
    CHECK(kind_of(R"({"relevance_scores": [[-1, 50]]})", 1) == ParseErrorKind::IndexOutOfRange);
    CHECK(kind_of(R"({"relevance_scores": [[0, 50], [0, 60]]})", 2) ==
          ParseErrorKind::DuplicateIndex);
    CHECK(kind_of(R"({"relevance_scores": [[0, 50], [1, 60]]})", 3) ==
          ParseErrorKind::IncompleteCoverage);
}

TEST_CASE("score response: out-of-range scores are clamped and flagged") {
    auto parsed = parse_score_response(R"({"relevance_scores": [[0, 150], [1, -20]]})", 2);
    CHECK(parsed.scores[0] == doctest::Approx(1.0));
    CHECK(parsed.scores[1] == doctest::Approx(0.0));
    CHECK(parsed.flags.size() == 2);
}

TEST_CASE("score response error carries the raw text") {
    try {
        parse_score_response(R"({"relevance_scores": [[0, 50]]})", 2);
        FAIL("expected throw");
    } catch (const ResponseParseError& e) {
        CHECK(e.raw_response.find("relevance_scores") != std::string::npos);
    }
}

TEST_CASE("keyword response parsing") {
    const std::string good = R"({"passages_keywords": [
        {"passage_id": 1, "hierarchical_keywords": ["a", "b", "c", "d", "e"]},
        {"passage_id": 0, "hierarchical_keywords": ["v", "w", "x", "y", "z"]}
    ]})";
    auto parsed = parse_keyword_response(good);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].passage_id == 1);
    CHECK(parsed[1].levels[4] == "z");

    // four levels instead of five
    const std::string four = R"({"passages_keywords": [
        {"passage_id": 0, "hierarchical_keywords": ["a", "b", "c", "d"]}
    ]})";
    CHECK_THROWS_AS(parse_keyword_response(four), ResponseParseError);
}

TEST_CASE("clustering response parsing") {
    const std::string good = R"({"clusters": [
        {"name": "A", "description": "da", "keywords": ["k1", "k2"]},
        {"name": "B", "description": "db", "keywords": ["k3"]}
    ]})";
    auto parsed = parse_clustering_response(good);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].keywords.size() == 2);
    CHECK_THROWS_AS(parse_clustering_response(R"({"clusters": []})"), ResponseParseError);
    CHECK_THROWS_AS(parse_clustering_response(R"({"nope": 1})"), ResponseParseError);
}

TEST_CASE("summary response parsing") {
    CHECK(parse_summary_response(R"({"summary": "the summary", "common_theme": "t"})") ==
          "the summary");
    CHECK_THROWS_AS(parse_summary_response(R"({"common_theme": "t"})"), ResponseParseError);
}
