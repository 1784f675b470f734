#include "semtree/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "semtree/util.hpp"

namespace semtree {

using nlohmann::json;

namespace {

// Gold-path pruning audit: did any expansion on the path from the root to a
// relevant leaf lose at least half of its children to exclusion?
bool gold_path_pruned(const SemanticTree& tree, const SearchTrace& trace,
                      const QueryGains& gains, const std::set<std::string>& excluded) {
    std::set<std::uint64_t> gold_path_nodes;
    for (const auto& [id, node] : tree.nodes) {
        if (!node.is_leaf() || !node.doc_id) continue;
        auto it = gains.find(*node.doc_id);
        if (it == gains.end() || it->second <= 0 || excluded.count(*node.doc_id)) continue;
        for (NodeId v : path_to_root(tree, id)) gold_path_nodes.insert(v.value);
    }
    for (const auto& event : trace.expansions) {
        if (!gold_path_nodes.count(event.expanded.value)) continue;
        if (event.child_count > 0 && 2 * event.excluded_children >= event.child_count) {
            return true;
        }
    }
    return false;
}

QueryMetrics evaluate_query(const SemanticTree& tree, const QueryRecord& query,
                            const EvalBundle& bundle, const ScorerProvider& provider,
                            const SearchConfig& config, const BenchmarkOptions& options,
                            SearchTrace* trace_out) {
    QueryMetrics qm;
    qm.query_id = query.query_id;
    const QueryGains& gains = bundle.qrels.for_query(query.query_id);
    const auto& excluded = bundle.exclusions_for(query.query_id);
    qm.zero_relevant = has_no_relevant(gains, excluded);

    SearchConfig per_query = config;
    per_query.seed = derive_seed(config.seed, "query", fnv1a64(query.query_id));

    SearchResult result;
    try {
        auto scorer = provider(query);
        result = search(query.text, tree, *scorer, per_query, excluded);
    } catch (const SearchAborted& aborted) {
        qm.error = aborted.what();
        result = aborted.partial;
    } catch (const std::exception& e) {
        qm.error = e.what();
        return qm;
    }

    std::vector<std::string> ranked;
    ranked.reserve(result.ranked.size());
    for (const auto& [doc, rel] : result.ranked) ranked.push_back(doc);

    qm.ndcg_at_10 = ndcg_at_k(ranked, gains, options.ndcg_k, excluded);
    qm.recall_at_100 = recall_at_k(ranked, gains, options.recall_k, excluded);
    qm.scorer_calls = result.cost.scorer_calls;
    qm.input_tokens = result.cost.input_tokens;
    qm.output_tokens = result.cost.output_tokens;
    qm.iterations_run = result.trace.iterations_run;

    std::set<std::uint64_t> distinct_leaves;
    for (const auto& event : result.trace.expansions) {
        for (NodeId member : event.slate) {
            if (tree.node(member).is_leaf()) {
                ++qm.leaf_evaluations;
                distinct_leaves.insert(member.value);
            }
        }
    }
    qm.distinct_leaves_evaluated = static_cast<std::int64_t>(distinct_leaves.size());
    qm.gold_path_heavily_pruned = gold_path_pruned(tree, result.trace, gains, excluded);

    if (trace_out) *trace_out = std::move(result.trace);
    return qm;
}

}  // namespace

BenchmarkRun run_benchmark(const SemanticTree& tree, const EvalBundle& bundle,
                           const ScorerProvider& provider, const SearchConfig& config,
                           const BenchmarkOptions& options) {
    BenchmarkRun run;
    run.report.label = options.label;
    {
        json snapshot;
        snapshot["beam_size"] = config.beam_size;
        snapshot["iterations"] = config.iterations;
        snapshot["ema_alpha"] = config.ema_alpha;
        snapshot["leaf_aug_count"] = config.leaf_aug_count;
        snapshot["top_k"] = config.top_k;
        snapshot["seed"] = config.seed;
        snapshot["scorer_call_budget"] = config.scorer_call_budget;
        snapshot["calibration_mode"] = static_cast<int>(config.calibration.mode);
        run.report.config_snapshot = std::move(snapshot);
    }

    const std::size_t n = bundle.queries.size();
    run.report.per_query.resize(n);
    std::vector<SearchTrace> traces(options.keep_traces ? n : 0);

    int workers = options.parallelism;
    if (workers <= 0) {
        workers = static_cast<int>(std::thread::hardware_concurrency());
        if (workers <= 0) workers = 4;
    }
    workers = std::min<int>(workers, static_cast<int>(n) > 0 ? static_cast<int>(n) : 1);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            run.report.per_query[i] =
                evaluate_query(tree, bundle.queries[i], bundle, provider, config, options,
                               options.keep_traces ? &traces[i] : nullptr);
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    double sum_ndcg = 0.0, sum_recall = 0.0, sum_calls = 0.0, sum_tokens = 0.0, sum_leaves = 0.0;
    for (const auto& qm : run.report.per_query) {
        sum_ndcg += qm.ndcg_at_10;
        sum_recall += qm.recall_at_100;
        sum_calls += static_cast<double>(qm.scorer_calls);
        sum_tokens += static_cast<double>(qm.input_tokens);
        sum_leaves += static_cast<double>(qm.leaf_evaluations);
    }
    if (n > 0) {
        run.report.mean_ndcg_at_10 = sum_ndcg / static_cast<double>(n);
        run.report.mean_recall_at_100 = sum_recall / static_cast<double>(n);
        run.report.mean_scorer_calls = sum_calls / static_cast<double>(n);
        run.report.mean_input_tokens = sum_tokens / static_cast<double>(n);
        run.report.mean_leaf_evaluations = sum_leaves / static_cast<double>(n);
    }

    if (options.keep_traces) {
        run.traces.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            run.traces.emplace_back(bundle.queries[i].query_id, std::move(traces[i]));
        }
    }
    return run;
}

std::vector<BenchmarkRun> run_benchmark_grid(const SemanticTree& tree, const EvalBundle& bundle,
                                             const ScorerProvider& provider,
                                             const std::vector<GridPoint>& grid,
                                             const BenchmarkOptions& options) {
    std::vector<BenchmarkRun> runs;
    runs.reserve(grid.size());
    for (const auto& point : grid) {
        BenchmarkOptions point_options = options;
        point_options.label = point.label;
        runs.push_back(run_benchmark(tree, bundle, provider, point.config, point_options));
    }
    return runs;
}

std::string MetricReport::to_tsv() const {
    std::ostringstream out;
    out << "query_id\tndcg_at_10\trecall_at_100\tscorer_calls\tinput_tokens\toutput_tokens"
        << "\tleaf_evaluations\tdistinct_leaves\titerations\tzero_relevant\tgold_path_pruned"
        << "\terror\n";
    for (const auto& qm : per_query) {
        out << qm.query_id << '\t' << format_fixed(qm.ndcg_at_10) << '\t'
            << format_fixed(qm.recall_at_100) << '\t' << qm.scorer_calls << '\t'
            << qm.input_tokens << '\t' << qm.output_tokens << '\t' << qm.leaf_evaluations << '\t'
            << qm.distinct_leaves_evaluated << '\t' << qm.iterations_run << '\t'
            << (qm.zero_relevant ? 1 : 0) << '\t' << (qm.gold_path_heavily_pruned ? 1 : 0)
            << '\t' << qm.error << '\n';
    }
    out << "mean\t" << format_fixed(mean_ndcg_at_10) << '\t' << format_fixed(mean_recall_at_100)
        << '\t' << format_fixed(mean_scorer_calls, 2) << '\t'
        << format_fixed(mean_input_tokens, 2) << '\t' << '-' << '\t'
        << format_fixed(mean_leaf_evaluations, 2) << "\t-\t-\t-\t-\t\n";
    return out.str();
}

json MetricReport::to_json() const {
    json j;
    j["label"] = label;
    j["config"] = config_snapshot;
    j["aggregate"] = {{"mean_ndcg_at_10", mean_ndcg_at_10},
                      {"mean_recall_at_100", mean_recall_at_100},
                      {"mean_scorer_calls", mean_scorer_calls},
                      {"mean_input_tokens", mean_input_tokens},
                      {"mean_leaf_evaluations", mean_leaf_evaluations}};
    j["per_query"] = json::array();
    for (const auto& qm : per_query) {
        j["per_query"].push_back({{"query_id", qm.query_id},
                                  {"ndcg_at_10", qm.ndcg_at_10},
                                  {"recall_at_100", qm.recall_at_100},
                                  {"scorer_calls", qm.scorer_calls},
                                  {"input_tokens", qm.input_tokens},
                                  {"output_tokens", qm.output_tokens},
                                  {"leaf_evaluations", qm.leaf_evaluations},
                                  {"distinct_leaves_evaluated", qm.distinct_leaves_evaluated},
                                  {"iterations_run", qm.iterations_run},
                                  {"zero_relevant", qm.zero_relevant},
                                  {"gold_path_heavily_pruned", qm.gold_path_heavily_pruned},
                                  {"error", qm.error}});
    }
    return j;
}

std::vector<CostPoint> cost_curve(const SearchTrace& trace, const QueryGains& gains,
                                  const std::set<std::string>& excluded, int ndcg_k) {
    std::vector<CostPoint> curve;
    curve.reserve(trace.checkpoints.size());
    for (const auto& checkpoint : trace.checkpoints) {
        std::vector<std::string> ranked;
        ranked.reserve(checkpoint.top.size());
        for (const auto& [doc, rel] : checkpoint.top) ranked.push_back(doc);
        CostPoint point;
        point.iteration = checkpoint.iteration;
        point.cum_input_tokens = static_cast<double>(checkpoint.cum_input_tokens);
        point.ndcg_at_10 = ndcg_at_k(ranked, gains, ndcg_k, excluded);
        curve.push_back(point);
    }
    return curve;
}

std::vector<CostPoint> mean_cost_curve(const std::vector<std::vector<CostPoint>>& curves) {
    std::size_t longest = 0;
    for (const auto& c : curves) longest = std::max(longest, c.size());
    std::vector<CostPoint> mean(longest);
    if (longest == 0) return mean;
    for (std::size_t i = 0; i < longest; ++i) {
        double tokens = 0.0, ndcg = 0.0;
        std::size_t count = 0;
        for (const auto& c : curves) {
            // Shorter runs (exhausted frontiers) hold their last value.
            if (c.empty()) continue;
            const CostPoint& p = i < c.size() ? c[i] : c.back();
            tokens += p.cum_input_tokens;
            ndcg += p.ndcg_at_10;
            ++count;
        }
        mean[i].iteration = static_cast<int>(i + 1);
        if (count > 0) {
            mean[i].cum_input_tokens = tokens / static_cast<double>(count);
            mean[i].ndcg_at_10 = ndcg / static_cast<double>(count);
        }
    }
    return mean;
}

std::string cost_curve_tsv(const std::vector<CostPoint>& curve) {
    std::ostringstream out;
    out << "iteration\tcum_input_tokens\tndcg_at_10\n";
    for (const auto& point : curve) {
        out << point.iteration << '\t' << format_fixed(point.cum_input_tokens, 2) << '\t'
            << format_fixed(point.ndcg_at_10) << '\n';
    }
    return out.str();
}

}  // namespace semtree
