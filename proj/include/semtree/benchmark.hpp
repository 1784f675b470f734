#pragma once

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semtree/ingest.hpp"
#include "semtree/metrics.hpp"
#include "semtree/scorer.hpp"
#include "semtree/traversal.hpp"
#include "semtree/tree.hpp"

namespace semtree {

// Builds the scorer used for one query. Oracle backends need the query's
// judgments; a remote backend typically returns the same shared instance.
using ScorerProvider =
    std::function<std::shared_ptr<ListwiseScorer>(const QueryRecord& query)>;

struct QueryMetrics {
    std::string query_id;
    double ndcg_at_10 = 0.0;
    double recall_at_100 = 0.0;
    std::int64_t scorer_calls = 0;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::int64_t leaf_evaluations = 0;      // leaf slate memberships, with repeats
    std::int64_t distinct_leaves_evaluated = 0;
    int iterations_run = 0;
    bool zero_relevant = false;
    // Some expansion on a gold-document path lost at least half its children
    // to exclusion; summaries above it are stale for this query.
    bool gold_path_heavily_pruned = false;
    std::string error;  // per-query failure; empty on success
};

struct MetricReport {
    std::string label;
    nlohmann::json config_snapshot;
    std::vector<QueryMetrics> per_query;
    double mean_ndcg_at_10 = 0.0;
    double mean_recall_at_100 = 0.0;
    double mean_scorer_calls = 0.0;
    double mean_input_tokens = 0.0;
    double mean_leaf_evaluations = 0.0;

    std::string to_tsv() const;
    nlohmann::json to_json() const;
};

struct BenchmarkOptions {
    int parallelism = 0;      // 0 = hardware concurrency
    bool keep_traces = false; // retain per-query traces for cost curves
    int ndcg_k = 10;
    int recall_k = 100;
    std::string label;
};

struct BenchmarkRun {
    MetricReport report;
    // query_id -> trace, only when keep_traces was set
    std::vector<std::pair<std::string, SearchTrace>> traces;
};

// One search per query; failures are recorded per query and the run
// continues. Deterministic under fixed seeds regardless of parallelism.
BenchmarkRun run_benchmark(const SemanticTree& tree, const EvalBundle& bundle,
                           const ScorerProvider& provider, const SearchConfig& config,
                           const BenchmarkOptions& options = {});

struct GridPoint {
    std::string label;
    SearchConfig config;
};

std::vector<BenchmarkRun> run_benchmark_grid(const SemanticTree& tree, const EvalBundle& bundle,
                                             const ScorerProvider& provider,
                                             const std::vector<GridPoint>& grid,
                                             const BenchmarkOptions& options = {});

struct CostPoint {
    int iteration = 0;
    double cum_input_tokens = 0.0;
    double ndcg_at_10 = 0.0;
};

// Ranking quality of the checkpoint rankings against cumulative token cost.
std::vector<CostPoint> cost_curve(const SearchTrace& trace, const QueryGains& gains,
                                  const std::set<std::string>& excluded, int ndcg_k = 10);

// Per-iteration mean over per-query curves (aligned by iteration index).
std::vector<CostPoint> mean_cost_curve(const std::vector<std::vector<CostPoint>>& curves);

std::string cost_curve_tsv(const std::vector<CostPoint>& curve);

}  // namespace semtree
