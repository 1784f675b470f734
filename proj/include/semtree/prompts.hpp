#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semtree/scorer.hpp"

namespace semtree {

// Built-in prompt templates. Placeholders use {name}; literal braces are
// written {{ and }} and unescape at render time. Each template can be
// overridden from a text file of the same name.
namespace prompts {
extern const std::string_view kListwiseScoring;     // places: relevance_defintion, query, child_node_options
extern const std::string_view kMultiLevelKeywords;  // places: desc_list
extern const std::string_view kTopicClustering;     // places: keywords_list_with_count, min_k, max_k
extern const std::string_view kNodeSummary;         // places: prompt_id, positive_set_descriptions
}  // namespace prompts

// Substitutes {key} -> value in a single left-to-right pass; {{ and }} become
// literal braces. Unknown placeholders throw.
std::string render_template(std::string_view tpl,
                            const std::map<std::string, std::string>& values);

// Holds the four templates, with per-template file overrides.
struct PromptSet {
    std::string listwise_scoring{prompts::kListwiseScoring};
    std::string multi_level_keywords{prompts::kMultiLevelKeywords};
    std::string topic_clustering{prompts::kTopicClustering};
    std::string node_summary{prompts::kNodeSummary};

    // Loads any of listwise_scoring.txt, multi_level_keywords.txt,
    // topic_clustering.txt, node_summary.txt found under `dir`.
    void load_overrides(const std::string& dir);
};

struct PromptOptions {
    // Per-candidate text cap when rendering slates; cut text gets a marker.
    std::size_t candidate_char_budget = 2000;
    // Total character budget across child texts fed to the node summarizer.
    std::size_t summary_input_char_budget = 24000;
};

extern const std::string kDefaultRelevanceDefinition;

// Candidate list rendered as "[i] text" blocks, one per candidate.
std::string render_candidate_options(const std::vector<SlateCandidate>& candidates,
                                     const PromptOptions& options);

std::string build_scoring_prompt(const std::string& query,
                                 const std::vector<SlateCandidate>& candidates,
                                 const std::string& relevance_definition,
                                 const PromptSet& prompts = {},
                                 const PromptOptions& options = {});

// Passages rendered as a JSON array of {"id", "content"} objects.
std::string build_keyword_prompt(const std::vector<std::pair<int, std::string>>& passages,
                                 const PromptSet& prompts = {},
                                 const PromptOptions& options = {});

struct KeywordCount {
    std::string keyword;
    std::int64_t count = 1;
};

std::string build_clustering_prompt(const std::vector<KeywordCount>& keywords, int min_k,
                                    int max_k, const PromptSet& prompts = {});

std::string build_summary_prompt(std::uint64_t prompt_id,
                                 const std::vector<std::string>& child_texts,
                                 const PromptSet& prompts = {},
                                 const PromptOptions& options = {});

// ---------------------------------------------------------------------------
// Response parsing

enum class ParseErrorKind {
    Transport,
    MalformedJson,
    MissingField,
    BadType,
    IndexOutOfRange,
    DuplicateIndex,
    IncompleteCoverage,
};

std::string_view to_string(ParseErrorKind kind);

class ResponseParseError : public std::runtime_error {
public:
    ResponseParseError(ParseErrorKind kind, const std::string& message, std::string raw)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message),
          kind(kind),
          raw_response(std::move(raw)) {}

    ParseErrorKind kind;
    std::string raw_response;
};

// Removes markdown code fences; falls back to the outermost {...} span.
std::string extract_json_payload(const std::string& text);

struct ParsedScores {
    std::vector<double> scores;  // normalized to [0,1], aligned to candidate index
    std::string reasoning;
    std::vector<int> ranking;
    std::vector<std::string> flags;  // e.g. clamped out-of-range raw scores
};

// Parses the scoring response contract: a JSON object whose
// `relevance_scores` is a list of [candidate_index, score_0_to_100] pairs
// covering every index exactly once. `reasoning` and `ranking` are optional.
ParsedScores parse_score_response(const std::string& text, std::size_t candidate_count);

struct ParsedKeywordLevels {
    int passage_id = 0;
    std::array<std::string, 5> levels;
};

std::vector<ParsedKeywordLevels> parse_keyword_response(const std::string& text);

struct ParsedTopicCluster {
    std::string name;
    std::string description;
    std::vector<std::string> keywords;
};

std::vector<ParsedTopicCluster> parse_clustering_response(const std::string& text);

// Returns the `summary` field of the node-summary response.
std::string parse_summary_response(const std::string& text);

}  // namespace semtree
