#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "semtree/calibration.hpp"
#include "semtree/rng.hpp"
#include "semtree/scorer.hpp"
#include "semtree/tree.hpp"

namespace semtree {

struct SearchConfig {
    int beam_size = 2;          // expansions per iteration
    int iterations = 20;        // total iterations
    double ema_alpha = 0.5;     // path relevance momentum
    int leaf_aug_count = 10;    // cross-branch leaves added to leaf slates
    int top_k = 100;            // result list cap
    std::string relevance_definition;
    std::uint64_t seed = 0;
    // When > 0, runs until exactly this many scorer calls have been spent (or
    // the frontier empties), truncating the final beam; `iterations` is
    // ignored. Lets budget-matched sweeps equalize actual call counts.
    int scorer_call_budget = 0;
    CalibrationConfig calibration;
};

struct CostLedger {
    std::int64_t scorer_calls = 0;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
};

struct ExpansionEvent {
    int iteration = 0;
    std::int64_t slate_id = -1;  // -1 when the expansion was skipped
    NodeId expanded;
    double path_relevance_at_pop = 0.0;
    // Highest priority left in the frontier once the whole beam was popped;
    // lets trace audits confirm each expansion was the frontier maximum.
    double frontier_rest_max = 0.0;
    bool frontier_rest_empty = true;
    std::vector<NodeId> slate;
    std::vector<double> observed;
    std::vector<double> fitted;  // latent scores after this iteration's solve
    int excluded_children = 0;
    int child_count = 0;
    bool skipped = false;  // every child was excluded
};

struct IterationCheckpoint {
    int iteration = 0;
    std::int64_t cum_scorer_calls = 0;
    std::int64_t cum_input_tokens = 0;
    std::int64_t cum_output_tokens = 0;
    std::vector<std::pair<std::string, double>> top;  // current best (doc_id, path_rel)
};

struct SearchTrace {
    std::vector<ExpansionEvent> expansions;
    std::vector<IterationCheckpoint> checkpoints;
    int iterations_run = 0;
    bool aborted = false;
    std::string abort_reason;
};

struct SearchResult {
    std::vector<std::pair<std::string, double>> ranked;  // doc_id, path relevance, descending
    CostLedger cost;
    SearchTrace trace;
};

// Scorer failure after retries: the partial trace and ranking-so-far ride
// along with the error.
class SearchAborted : public std::runtime_error {
public:
    SearchAborted(const std::string& message, SearchResult partial_result)
        : std::runtime_error(message), partial(std::move(partial_result)) {}

    SearchResult partial;
};

// Best-first beam search over the tree, guided by calibrated path relevance.
// One instance = one query session; the tree is shared read-only.
class Searcher {
public:
    Searcher(const SemanticTree& tree, ListwiseScorer& scorer, SearchConfig config,
             std::string query, std::set<std::string> excluded_docs = {});

    // Runs one iteration (up to beam_size expansions + calibration solve +
    // path relevance refresh). Returns false without doing work when the
    // frontier is empty or the call budget is exhausted.
    bool run_iteration();

    bool done() const;

    SearchResult finish();

    // --- introspection (tests, trace audits) ---
    std::vector<NodeId> build_slate(NodeId v);
    double path_relevance(NodeId v) const;
    const CalibrationModel& model() const { return model_; }
    const ScoreHistory& history() const { return history_; }
    const std::map<NodeId, double>& prediction_set() const { return pred_; }
    std::size_t frontier_size() const { return frontier_rank_.size(); }
    const CostLedger& cost() const { return cost_; }
    int iterations_run() const { return iteration_; }

private:
    struct FrontierKey {
        double priority;
        NodeId id;
        bool operator<(const FrontierKey& other) const {
            if (priority != other.priority) return priority > other.priority;
            return id < other.id;
        }
    };

    struct PendingExpansion {
        NodeId node;
        std::vector<NodeId> slate;
        std::size_t event_index;
    };

    void frontier_insert(NodeId v, double priority);
    void frontier_erase(NodeId v);
    bool is_excluded_leaf(NodeId v) const;
    double recompute_path_relevance(NodeId v,
                                    std::unordered_map<NodeId, double, NodeIdHash>& memo) const;
    void refresh_priorities();
    std::vector<std::pair<std::string, double>> current_ranking(std::size_t limit) const;
    SearchResult snapshot_result() const;

    const SemanticTree& tree_;
    ListwiseScorer& scorer_;
    SearchConfig config_;
    std::string query_;

    std::set<FrontierKey> frontier_rank_;
    std::unordered_map<NodeId, double, NodeIdHash> frontier_members_;
    std::map<NodeId, double> pred_;  // scored leaves, ordered for determinism
    std::unordered_set<std::uint64_t> expanded_;
    std::unordered_set<std::uint64_t> excluded_leaves_;

    ScoreHistory history_;
    CalibrationModel model_;
    bool solved_once_ = false;

    CostLedger cost_;
    SearchTrace trace_;
    std::int64_t next_slate_id_ = 0;
    int iteration_ = 0;
    Rng aug_rng_;
};

// Runs the whole loop; throws SearchAborted on scorer exhaustion.
SearchResult search(const std::string& query, const SemanticTree& tree, ListwiseScorer& scorer,
                    const SearchConfig& config, const std::set<std::string>& excluded_docs = {});

// Trace serialization: one JSON object per line (expansion and checkpoint
// records), self-describing via a "type" field.
std::string serialize_trace(const SearchTrace& trace);
SearchTrace deserialize_trace(const std::string& bytes);

// Re-runs the search feeding recorded observations back instead of calling a
// scorer; reproduces the ranking of the original run.
SearchResult replay_search(const std::string& query, const SemanticTree& tree,
                           const SearchTrace& trace, const SearchConfig& config,
                           const std::set<std::string>& excluded_docs = {});

}  // namespace semtree
