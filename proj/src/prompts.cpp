#include "semtree/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "semtree/util.hpp"

namespace semtree {

namespace prompts {

const std::string_view kListwiseScoring =
    R"TPL(You are an intelligent search agent navigating a hierarchical semantic tree of topics. Your mission is to predict the most promising candidates to find the answer to the user's query using the relevance definition below.

**Relevance Definition:** {relevance_defintion}

---

## USER QUERY

{query}

---

## CANDIDATES

Here are the candidates, each is identified by a unique `node_id` provided at the very start in [] (e.g., [0]).

{child_node_options}

---

## YOUR EVALUATION TASK
1.  First, identify the essential problem in the query.
2.  Think step by step to reason about why each candidate is relevant or irrelevant (based on the relevance definition). Provide this analysis in the `reasoning` field.
3.  Rank these passages based on their relevance to the query. Provide your ranking in the `ranking` field.
4.  Assign a relevance score from 0 to 100 (based on the relevance definition and the ranking). Provide relevances in the `relevance_scores` field.

---

## OUTPUT FORMAT
You must provide your response as a single, clean JSON object. The JSON should have three keys: `reasoning`, `ranking`, and `relevance_scores`.

* `reasoning`: This must be a **string**.
* `ranking`: This must be an **array of integers** representing the order of the candidates.
* `relevance_scores`: This must be an **array of arrays** where each inner array contains [node_id, relevance_score]. For example: [[0, 85], [1, 92], [2, 73]].

---

## YOUR RESPONSE
)TPL";

const std::string_view kMultiLevelKeywords =
    R"TPL(You are an expert in information retrieval and keyword generation. Your task is to analyze a provided list of informational passages and generate a hierarchically sorted list of search keywords for each passage, strictly adhering to the 5-level rubric below.

## Keyword Generation Rules (5 Levels):

Level 1: 1-2 Word, Core Subject / Domain (Broadest)
Meaning: The absolute fundamental, overarching subject area or discipline.
Characteristics: Only 1 to 2 word, very high-level (e.g., "Technology", "Science", "History")

Level 2: 3-4 Word, General Topic / Sub-domain
Meaning: Narrows Level 1; the specific major topic or branch within the broader field.
Characteristics: Only 3 to 4 words, still general but more focused

Level 3: 4-6 Word, Key Concepts / Main Themes
Meaning: The central ideas, significant concepts, or primary themes directly discussed.
Characteristics: Only 4 to 6 words, core messages, primary subjects, often main sections

Level 4: 7-10 Word, Very Concise Passage Summary
Meaning: A very short, concise summary of what the entire passage is about. This should encapsulate the essential idea or purpose of the passage.
Characteristics: Only 7 to 10 words

Level 5: 11-20 Word, Concise Passage Summary (Most Specific)
Meaning: A concise summary but more descriptive than level 4 of what the entire passage is about. This should encapsulate the main idea or purpose of the passage.
Characteristics: A single sentence, 11 to 20 words.

### General Keyword Requirements:

- All keywords must be actionable terms or phrases a user would realistically search.
- Ensure comprehensive coverage of the passage's content across all 5 levels.

## Output Format

Your output must be a single JSON object. This object will contain a top-level key: "passages_keywords". The value associated with this key must be a JSON array. Each element in this array will be an object with two keys:
"passage_id": An integer that exactly matches the "id" from the corresponding input passage.
"hierarchical_keywords": A JSON array of strings of length 5. Each string represents a hierarchical level (Level 1 at index 0, Level 2 at index 1, and so on).

## List of Input Passages:

{desc_list}
)TPL";

const std::string_view kTopicClustering =
    R"TPL(You are an expert data analyst and taxonomist. Your task is to analyze a list of keywords and their associated counts which indicate how many that keyword appears in the corpus.

## Goal
- Group the following keywords into **k** semantically coherent and **well-balanced** (i.e. each cluster should aim to contain similar weighted count) clusters, where k is between [{min_k}, {max_k}]. The primary basis for grouping must be the **topic and meaning** of the keywords.
- Use the provided count as a measure of each keyword's **importance or popularity**. This weight should help you decide which topics are most significant.
- Try to always maximize the number of clusters but **without** sacrificing the quality of the clustering, **quality of clustering is paramount**.

For every cluster, generate:
* A descriptive `cluster_name`.
* An information-dense `cluster_description` summarizing the core themes.
* A list of all input `keywords` that constitute this cluster or apply to this cluster.

## Input Data
Here is the list of keywords and their importance counts:

{keywords_list_with_count}

## Desired Output Format
Your final output must be a single JSON object, with no other text or explanation. The JSON object must have key: "clusters".

{{
  "clusters": [
    {{"name": "Name of Cluster 1", "description": "A very information dense description of the cluster", "keywords": ["keyword 1", "keyword 2", ...] }},
    {{"name": "Name of Cluster 2", "description": "A very information dense description of the cluster", "keywords": ["keyword 3", "keyword 4", ...] }},
    ...
  ],
}}

---

## Your Response
)TPL";

const std::string_view kNodeSummary =
    R"TPL(You are an expert AI analyst and summarizer. Your mission is to create a highly informative and "discriminative signpost" for a navigating search agent. This signpost (a summary) must guide the agent to the correct cluster of nodes to answer a user's query.

You will follow a strict, step-by-step cognitive process. You must analyze the children nodes in a target parent node (the "Positive Set").

Prompt ID: {prompt_id} (ignore, this is just for watermarking purposes).

## INPUTS

### POSITIVE SET: Information about the target parent node to be summarized

{positive_set_descriptions}
---

## YOUR TASK & OUTPUT FORMAT

Your entire output must be a single, valid JSON object. Inside this JSON, you will follow the 3-step thinking process outlined below, populating each field as instructed.

### JSON Structure and Instructions:

{{
  "detailed_fingerprints": [
    // For EACH children node in the POSITIVE SET (target parent node), extract a structured object of its key, queryable facts.
    {{
      "one_line_summary": "...", // write a very information dense and very concise one-line summary for the information contained in this node
      "key_entities": ["..."], // List a very few key entities which is central to this node
      "genre_or_category": ["..."], // List a few key genre / categories this node can be classified into
      "name": "...", // Name the node
    }}
  ],
  "common_theme": "...", // Reason deeply what are the common themes between the nodes in the POSITIVE SET
  "summary": "...", // Based on step 1 and step 2, write a very information dense description of the target node, **make sure to include all key entities**.
}}

---

## Your Response
)TPL";

}  // namespace prompts

const std::string kDefaultRelevanceDefinition =
    "A candidate is relevant if its content helps answer the query or leads toward "
    "documents that do.";

std::string render_template(std::string_view tpl,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tpl.size() + 256);
    for (std::size_t i = 0; i < tpl.size();) {
        const char c = tpl[i];
        if (c == '{') {
            if (i + 1 < tpl.size() && tpl[i + 1] == '{') {
                out.push_back('{');
                i += 2;
                continue;
            }
            const std::size_t close = tpl.find('}', i + 1);
            if (close == std::string_view::npos) {
                throw std::invalid_argument("unterminated placeholder in template");
            }
            const std::string key(tpl.substr(i + 1, close - i - 1));
            auto it = values.find(key);
            if (it == values.end()) {
                throw std::invalid_argument("template references unknown placeholder '" + key +
                                            "'");
            }
            out += it->second;
            i = close + 1;
            continue;
        }
        if (c == '}' && i + 1 < tpl.size() && tpl[i + 1] == '}') {
            out.push_back('}');
            i += 2;
            continue;
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

void PromptSet::load_overrides(const std::string& dir) {
    auto try_load = [&](const char* name, std::string& target) {
        const std::filesystem::path path = std::filesystem::path(dir) / name;
        if (!std::filesystem::exists(path)) return;
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        target = buf.str();
    };
    try_load("listwise_scoring.txt", listwise_scoring);
    try_load("multi_level_keywords.txt", multi_level_keywords);
    try_load("topic_clustering.txt", topic_clustering);
    try_load("node_summary.txt", node_summary);
}

std::string render_candidate_options(const std::vector<SlateCandidate>& candidates,
                                     const PromptOptions& options) {
    std::vector<std::string> blocks;
    blocks.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        blocks.push_back("[" + std::to_string(i) + "] " +
                         truncate_with_marker(candidates[i].text, options.candidate_char_budget));
    }
    return join(blocks, "\n\n");
}

std::string build_scoring_prompt(const std::string& query,
                                 const std::vector<SlateCandidate>& candidates,
                                 const std::string& relevance_definition,
                                 const PromptSet& prompts, const PromptOptions& options) {
    return render_template(
        prompts.listwise_scoring,
        {{"relevance_defintion",
          relevance_definition.empty() ? kDefaultRelevanceDefinition : relevance_definition},
         {"query", query},
         {"child_node_options", render_candidate_options(candidates, options)}});
}

std::string build_keyword_prompt(const std::vector<std::pair<int, std::string>>& passages,
                                 const PromptSet& prompts, const PromptOptions& options) {
    std::vector<std::string> rows;
    rows.reserve(passages.size());
    for (const auto& [id, content] : passages) {
        nlohmann::json j;
        j["id"] = id;
        j["content"] = truncate_with_marker(content, options.candidate_char_budget);
        rows.push_back("  " + j.dump());
    }
    const std::string desc_list = "[\n" + join(rows, ",\n") + "\n]";
    return render_template(prompts.multi_level_keywords, {{"desc_list", desc_list}});
}

std::string build_clustering_prompt(const std::vector<KeywordCount>& keywords, int min_k,
                                    int max_k, const PromptSet& prompts) {
    std::vector<std::string> rows;
    rows.reserve(keywords.size());
    for (const auto& kc : keywords) {
        nlohmann::json key(kc.keyword);
        rows.push_back("- " + key.dump() + " (count: " + std::to_string(kc.count) + ")");
    }
    return render_template(prompts.topic_clustering,
                           {{"keywords_list_with_count", join(rows, "\n")},
                            {"min_k", std::to_string(min_k)},
                            {"max_k", std::to_string(max_k)}});
}

std::string build_summary_prompt(std::uint64_t prompt_id,
                                 const std::vector<std::string>& child_texts,
                                 const PromptSet& prompts, const PromptOptions& options) {
    const auto trimmed = truncate_longest_first(child_texts, options.summary_input_char_budget);
    std::vector<std::string> blocks;
    blocks.reserve(trimmed.size());
    for (std::size_t i = 0; i < trimmed.size(); ++i) {
        blocks.push_back("[" + std::to_string(i) + "] " + trimmed[i]);
    }
    return render_template(prompts.node_summary,
                           {{"prompt_id", std::to_string(prompt_id)},
                            {"positive_set_descriptions", join(blocks, "\n\n")}});
}

// ---------------------------------------------------------------------------

std::string_view to_string(ParseErrorKind kind) {
    switch (kind) {
        case ParseErrorKind::Transport: return "transport error";
        case ParseErrorKind::MalformedJson: return "malformed JSON";
        case ParseErrorKind::MissingField: return "missing field";
        case ParseErrorKind::BadType: return "bad field type";
        case ParseErrorKind::IndexOutOfRange: return "candidate index out of range";
        case ParseErrorKind::DuplicateIndex: return "duplicate candidate index";
        case ParseErrorKind::IncompleteCoverage: return "incomplete index coverage";
    }
    return "unknown error";
}

std::string extract_json_payload(const std::string& text) {
    std::string s = text;
    auto trim = [](std::string& v) {
        const auto first = v.find_first_not_of(" \t\r\n");
        const auto last = v.find_last_not_of(" \t\r\n");
        v = first == std::string::npos ? std::string{} : v.substr(first, last - first + 1);
    };
    trim(s);
    if (s.rfind("```", 0) == 0) {
        // drop the opening fence line and any trailing fence
        const auto nl = s.find('\n');
        s = nl == std::string::npos ? std::string{} : s.substr(nl + 1);
        const auto fence = s.rfind("```");
        if (fence != std::string::npos) s = s.substr(0, fence);
        trim(s);
    }
    if (!s.empty() && s.front() == '{') return s;
    const auto open = s.find('{');
    const auto close = s.rfind('}');
    if (open != std::string::npos && close != std::string::npos && close > open) {
        return s.substr(open, close - open + 1);
    }
    return s;
}

namespace {

nlohmann::json parse_object(const std::string& text) {
    const std::string payload = extract_json_payload(text);
    nlohmann::json j = nlohmann::json::parse(payload, nullptr, false);
    if (j.is_discarded()) {
        throw ResponseParseError(ParseErrorKind::MalformedJson, "response is not valid JSON",
                                 text);
    }
    if (!j.is_object()) {
        throw ResponseParseError(ParseErrorKind::MalformedJson, "response is not a JSON object",
                                 text);
    }
    return j;
}

}  // namespace

ParsedScores parse_score_response(const std::string& text, std::size_t candidate_count) {
    const nlohmann::json j = parse_object(text);

    if (!j.contains("relevance_scores")) {
        throw ResponseParseError(ParseErrorKind::MissingField, "no relevance_scores key", text);
    }
    const auto& rs = j["relevance_scores"];
    if (!rs.is_array()) {
        throw ResponseParseError(ParseErrorKind::BadType, "relevance_scores is not an array",
                                 text);
    }

    ParsedScores out;
    out.scores.assign(candidate_count, 0.0);
    std::set<std::size_t> seen;
    for (const auto& pair : rs) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
            !pair[1].is_number()) {
            throw ResponseParseError(ParseErrorKind::BadType,
                                     "relevance_scores entries must be [index, score] pairs",
                                     text);
        }
        const std::int64_t idx = pair[0].get<std::int64_t>();
        if (idx < 0 || static_cast<std::size_t>(idx) >= candidate_count) {
            throw ResponseParseError(ParseErrorKind::IndexOutOfRange,
                                     "index " + std::to_string(idx) + " outside [0, " +
                                         std::to_string(candidate_count) + ")",
                                     text);
        }
        if (!seen.insert(static_cast<std::size_t>(idx)).second) {
            throw ResponseParseError(ParseErrorKind::DuplicateIndex,
                                     "index " + std::to_string(idx) + " scored twice", text);
        }
        double score = pair[1].get<double>();
        if (score < 0.0 || score > 100.0) {
            out.flags.push_back("score " + std::to_string(score) + " for index " +
                                std::to_string(idx) + " clamped to [0,100]");
            score = std::clamp(score, 0.0, 100.0);
        }
        out.scores[static_cast<std::size_t>(idx)] = score / 100.0;
    }
    if (seen.size() != candidate_count) {
        throw ResponseParseError(ParseErrorKind::IncompleteCoverage,
                                 std::to_string(seen.size()) + " of " +
                                     std::to_string(candidate_count) + " candidates scored",
                                 text);
    }

    if (j.contains("reasoning") && j["reasoning"].is_string()) {
        out.reasoning = j["reasoning"].get<std::string>();
    }
    if (j.contains("ranking") && j["ranking"].is_array()) {
        bool ok = true;
        for (const auto& r : j["ranking"]) ok = ok && r.is_number_integer();
        if (ok) {
            for (const auto& r : j["ranking"]) out.ranking.push_back(r.get<int>());
        } else {
            out.flags.push_back("ranking ignored: not an integer array");
        }
    }
    return out;
}

std::vector<ParsedKeywordLevels> parse_keyword_response(const std::string& text) {
    const nlohmann::json j = parse_object(text);
    if (!j.contains("passages_keywords")) {
        throw ResponseParseError(ParseErrorKind::MissingField, "no passages_keywords key", text);
    }
    const auto& arr = j["passages_keywords"];
    if (!arr.is_array()) {
        throw ResponseParseError(ParseErrorKind::BadType, "passages_keywords is not an array",
                                 text);
    }
    std::vector<ParsedKeywordLevels> out;
    for (const auto& item : arr) {
        if (!item.is_object() || !item.contains("passage_id") ||
            !item.contains("hierarchical_keywords")) {
            throw ResponseParseError(ParseErrorKind::MissingField,
                                     "entry missing passage_id/hierarchical_keywords", text);
        }
        if (!item["passage_id"].is_number_integer()) {
            throw ResponseParseError(ParseErrorKind::BadType, "passage_id must be an integer",
                                     text);
        }
        const auto& levels = item["hierarchical_keywords"];
        if (!levels.is_array() || levels.size() != 5) {
            throw ResponseParseError(ParseErrorKind::BadType,
                                     "hierarchical_keywords must hold exactly 5 strings", text);
        }
        ParsedKeywordLevels parsed;
        parsed.passage_id = item["passage_id"].get<int>();
        for (std::size_t i = 0; i < 5; ++i) {
            if (!levels[i].is_string()) {
                throw ResponseParseError(ParseErrorKind::BadType,
                                         "hierarchical_keywords entries must be strings", text);
            }
            parsed.levels[i] = levels[i].get<std::string>();
        }
        out.push_back(std::move(parsed));
    }
    return out;
}

std::vector<ParsedTopicCluster> parse_clustering_response(const std::string& text) {
    const nlohmann::json j = parse_object(text);
    if (!j.contains("clusters")) {
        throw ResponseParseError(ParseErrorKind::MissingField, "no clusters key", text);
    }
    const auto& arr = j["clusters"];
    if (!arr.is_array() || arr.empty()) {
        throw ResponseParseError(ParseErrorKind::BadType, "clusters must be a non-empty array",
                                 text);
    }
    std::vector<ParsedTopicCluster> out;
    for (const auto& item : arr) {
        if (!item.is_object() || !item.contains("name") || !item.contains("keywords")) {
            throw ResponseParseError(ParseErrorKind::MissingField,
                                     "cluster entry missing name/keywords", text);
        }
        ParsedTopicCluster cluster;
        cluster.name = item["name"].get<std::string>();
        cluster.description = item.value("description", std::string{});
        if (!item["keywords"].is_array()) {
            throw ResponseParseError(ParseErrorKind::BadType, "keywords must be an array", text);
        }
        for (const auto& k : item["keywords"]) {
            if (!k.is_string()) {
                throw ResponseParseError(ParseErrorKind::BadType, "keywords must be strings",
                                         text);
            }
            cluster.keywords.push_back(k.get<std::string>());
        }
        out.push_back(std::move(cluster));
    }
    return out;
}

std::string parse_summary_response(const std::string& text) {
    const nlohmann::json j = parse_object(text);
    if (!j.contains("summary")) {
        throw ResponseParseError(ParseErrorKind::MissingField, "no summary key", text);
    }
    if (!j["summary"].is_string()) {
        throw ResponseParseError(ParseErrorKind::BadType, "summary must be a string", text);
    }
    return j["summary"].get<std::string>();
}

}  // namespace semtree
