#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "semtree/tree.hpp"

namespace semtree {

struct TokenCost {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
};

struct SlateCandidate {
    NodeId node;
    std::string text;
};

struct ScoreRequest {
    std::string query;
    std::vector<SlateCandidate> candidates;
    std::string relevance_definition;
    std::int64_t slate_id = 0;
};

struct ScoreResponse {
    std::vector<double> scores;  // aligned to candidates, each in [0,1]
    std::string reasoning;
    std::vector<int> ranking;    // optional; logged, never used for traversal
    TokenCost cost;
    std::vector<std::string> flags;
};

// Listwise scoring contract: a query and k candidate texts go in, k scores in
// [0,1] come out. Backends are stateless per call and safe to invoke
// concurrently.
class ListwiseScorer {
public:
    virtual ~ListwiseScorer() = default;
    virtual ScoreResponse score(const ScoreRequest& request) = 0;
};

// Deterministic test double realizing the scoring contract. A candidate's
// base score aggregates ground-truth relevance over its leaf descendants;
// per-slate bias and Gaussian noise are layered on top, all seeded, so the
// same (query, candidates, slate_id, seed) always yields the same output.
struct OracleConfig {
    std::unordered_map<std::string, double> gold_relevance;  // doc_id -> [0,1]
    enum class Aggregation { Max, Mean } aggregation = Aggregation::Max;
    double slate_bias_min = 0.0;
    double slate_bias_max = 0.0;
    double score_noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

class OracleScorer : public ListwiseScorer {
public:
    OracleScorer(const SemanticTree& tree, OracleConfig config);

    ScoreResponse score(const ScoreRequest& request) override;

    // Relevance aggregate over the node's leaf descendants, before noise.
    double base_score(NodeId v) const;

private:
    const SemanticTree& tree_;
    OracleConfig config_;
    mutable std::unordered_map<NodeId, double, NodeIdHash> base_cache_;
};

// Replays a fixed sequence of score lists; for tests that need hand-picked
// scorer behavior.
class ScriptedScorer : public ListwiseScorer {
public:
    explicit ScriptedScorer(std::vector<std::vector<double>> responses)
        : responses_(responses.begin(), responses.end()) {}

    ScoreResponse score(const ScoreRequest& request) override;

    std::size_t remaining() const { return responses_.size(); }

private:
    std::deque<std::vector<double>> responses_;
};

}  // namespace semtree
