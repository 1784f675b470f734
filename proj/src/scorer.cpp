#include "semtree/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "semtree/rng.hpp"
#include "semtree/util.hpp"

namespace semtree {

OracleScorer::OracleScorer(const SemanticTree& tree, OracleConfig config)
    : tree_(tree), config_(std::move(config)) {
    if (config_.score_noise_sigma < 0.0) {
        throw std::invalid_argument("score_noise_sigma must be >= 0");
    }
    if (config_.slate_bias_min > config_.slate_bias_max) {
        throw std::invalid_argument("slate bias range inverted");
    }
}

double OracleScorer::base_score(NodeId v) const {
    if (auto it = base_cache_.find(v); it != base_cache_.end()) return it->second;

    const Node& node = tree_.node(v);
    double score = 0.0;
    if (node.is_leaf()) {
        auto it = config_.gold_relevance.find(*node.doc_id);
        score = it == config_.gold_relevance.end() ? 0.0 : it->second;
    } else {
        auto leaves = leaf_descendants(tree_, v);
        double acc = 0.0;
        for (NodeId leaf : leaves) {
            auto it = config_.gold_relevance.find(*tree_.node(leaf).doc_id);
            const double rel = it == config_.gold_relevance.end() ? 0.0 : it->second;
            if (config_.aggregation == OracleConfig::Aggregation::Max) {
                acc = std::max(acc, rel);
            } else {
                acc += rel;
            }
        }
        score = config_.aggregation == OracleConfig::Aggregation::Max
                    ? acc
                    : (leaves.empty() ? 0.0 : acc / static_cast<double>(leaves.size()));
    }
    base_cache_.emplace(v, score);
    return score;
}

ScoreResponse OracleScorer::score(const ScoreRequest& request) {
    ScoreResponse out;
    out.scores.reserve(request.candidates.size());

    // One bias per slate, drawn from the configured range; keyed by slate id
    // so rescoring the same slate reproduces it.
    Rng bias_rng(derive_seed(config_.seed, "oracle-slate-bias",
                             static_cast<std::uint64_t>(request.slate_id)));
    const double bias = config_.slate_bias_min == config_.slate_bias_max
                            ? config_.slate_bias_min
                            : bias_rng.uniform(config_.slate_bias_min, config_.slate_bias_max);

    for (const auto& cand : request.candidates) {
        double s = base_score(cand.node) + bias;
        if (config_.score_noise_sigma > 0.0) {
            Rng noise_rng(derive_seed(config_.seed, "oracle-noise",
                                      splitmix64(static_cast<std::uint64_t>(request.slate_id)) ^
                                          cand.node.value));
            s += noise_rng.normal(0.0, config_.score_noise_sigma);
        }
        out.scores.push_back(std::clamp(s, 0.0, 1.0));
        out.cost.input_tokens += estimate_tokens(cand.text);
        out.cost.output_tokens += 2;
    }
    out.cost.input_tokens += estimate_tokens(request.query);

    // A ranking consistent with the emitted scores, ties by position.
    std::vector<int> order(request.candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return out.scores[a] > out.scores[b]; });
    out.ranking = order;
    return out;
}

ScoreResponse ScriptedScorer::score(const ScoreRequest& request) {
    if (responses_.empty()) {
        throw std::runtime_error("ScriptedScorer: no responses left (slate " +
                                 std::to_string(request.slate_id) + ")");
    }
    ScoreResponse out;
    out.scores = std::move(responses_.front());
    responses_.pop_front();
    if (out.scores.size() != request.candidates.size()) {
        throw std::runtime_error(
            "ScriptedScorer: scripted response size " + std::to_string(out.scores.size()) +
            " != slate size " + std::to_string(request.candidates.size()));
    }
    for (const auto& cand : request.candidates) {
        out.cost.input_tokens += estimate_tokens(cand.text);
        out.cost.output_tokens += 2;
    }
    return out;
}

}  // namespace semtree
