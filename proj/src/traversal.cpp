#include "semtree/traversal.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace semtree {

using nlohmann::json;

Searcher::Searcher(const SemanticTree& tree, ListwiseScorer& scorer, SearchConfig config,
                   std::string query, std::set<std::string> excluded_docs)
    : tree_(tree),
      scorer_(scorer),
      config_(std::move(config)),
      query_(std::move(query)),
      aug_rng_(derive_seed(config.seed, "leaf-augmentation")) {
    if (config_.beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
    if (config_.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (config_.ema_alpha < 0.0 || config_.ema_alpha > 1.0) {
        throw std::invalid_argument("ema_alpha must lie in [0,1]");
    }
    if (config_.leaf_aug_count < 0) throw std::invalid_argument("leaf_aug_count must be >= 0");
    if (config_.top_k < 1) throw std::invalid_argument("top_k must be >= 1");

    if (!excluded_docs.empty()) {
        for (const auto& [id, node] : tree_.nodes) {
            if (node.is_leaf() && excluded_docs.count(*node.doc_id)) {
                excluded_leaves_.insert(id.value);
            }
        }
    }

    // The root starts the frontier with path relevance pinned at 1.0; it is
    // expanded like any other node but never appears in a slate itself.
    frontier_insert(tree_.root, 1.0);
}

void Searcher::frontier_insert(NodeId v, double priority) {
    auto it = frontier_members_.find(v);
    if (it != frontier_members_.end()) {
        frontier_rank_.erase(FrontierKey{it->second, v});
        it->second = priority;
    } else {
        frontier_members_.emplace(v, priority);
    }
    frontier_rank_.insert(FrontierKey{priority, v});
}

void Searcher::frontier_erase(NodeId v) {
    auto it = frontier_members_.find(v);
    if (it == frontier_members_.end()) return;
    frontier_rank_.erase(FrontierKey{it->second, v});
    frontier_members_.erase(it);
}

bool Searcher::is_excluded_leaf(NodeId v) const { return excluded_leaves_.count(v.value) > 0; }

double Searcher::recompute_path_relevance(
    NodeId v, std::unordered_map<NodeId, double, NodeIdHash>& memo) const {
    if (v == tree_.root) return 1.0;
    if (auto it = memo.find(v); it != memo.end()) return it->second;

    const Node& node = tree_.node(v);
    if (!node.parent) return 1.0;
    const double parent_rel = recompute_path_relevance(*node.parent, memo);
    auto latent = model_.latent_score(v);
    if (!latent) {
        throw std::logic_error("path relevance requested for unscored node " +
                               std::to_string(v.value));
    }
    const double rel = config_.ema_alpha * parent_rel + (1.0 - config_.ema_alpha) * *latent;
    memo.emplace(v, rel);
    return rel;
}

double Searcher::path_relevance(NodeId v) const {
    std::unordered_map<NodeId, double, NodeIdHash> memo;
    return recompute_path_relevance(v, memo);
}

std::vector<NodeId> Searcher::build_slate(NodeId v) {
    const Node& node = tree_.node(v);
    std::vector<NodeId> slate;
    std::unordered_set<std::uint64_t> in_slate;
    int leaf_children = 0;
    for (NodeId c : node.children) {
        if (is_excluded_leaf(c)) continue;
        slate.push_back(c);
        in_slate.insert(c.value);
        if (tree_.node(c).is_leaf()) ++leaf_children;
    }
    if (slate.empty()) return slate;

    // Mixed levels can occur after metadata clustering; the leaf-style
    // augmentation wins when leaves are at least half the surviving children.
    const bool leaf_style = 2 * leaf_children >= static_cast<int>(slate.size());

    if (!leaf_style) {
        // Cross-branch anchor: the already-scored sibling of v with the
        // highest current path relevance. The root has no siblings and the
        // first expansion therefore runs without an anchor.
        if (node.parent) {
            const Node& parent = tree_.node(*node.parent);
            NodeId best{0};
            double best_rel = -std::numeric_limits<double>::infinity();
            bool found = false;
            std::unordered_map<NodeId, double, NodeIdHash> memo;
            for (NodeId sibling : parent.children) {
                if (sibling == v || in_slate.count(sibling.value)) continue;
                if (!model_.latent_score(sibling)) continue;  // never scored
                const double rel = recompute_path_relevance(sibling, memo);
                if (rel > best_rel || (rel == best_rel && found && sibling < best)) {
                    best_rel = rel;
                    best = sibling;
                    found = true;
                }
            }
            if (found) {
                slate.push_back(best);
                in_slate.insert(best.value);
            }
        }
        return slate;
    }

    // Leaf slate: anchor against up to leaf_aug_count leaves sampled from the
    // prediction set, weight proportional to e^{path relevance}.
    if (config_.leaf_aug_count > 0 && !pred_.empty()) {
        std::vector<NodeId> candidates;
        std::vector<double> weights;
        for (const auto& [leaf, rel] : pred_) {  // ascending id order
            if (in_slate.count(leaf.value)) continue;
            candidates.push_back(leaf);
            weights.push_back(std::exp(rel));
        }
        const auto picked = sample_without_replacement(
            weights, static_cast<std::size_t>(config_.leaf_aug_count), aug_rng_);
        for (std::size_t idx : picked) {
            slate.push_back(candidates[idx]);
            in_slate.insert(candidates[idx].value);
        }
    }
    return slate;
}

bool Searcher::done() const {
    if (frontier_rank_.empty()) return true;
    if (config_.scorer_call_budget > 0) {
        return cost_.scorer_calls >= config_.scorer_call_budget;
    }
    return iteration_ >= config_.iterations;
}

bool Searcher::run_iteration() {
    if (done()) return false;

    // --- pop the beam ---
    int beam_quota = config_.beam_size;
    if (config_.scorer_call_budget > 0) {
        beam_quota = std::min<int>(
            beam_quota, config_.scorer_call_budget - static_cast<int>(cost_.scorer_calls));
    }
    std::vector<std::pair<NodeId, double>> beam;
    while (static_cast<int>(beam.size()) < beam_quota && !frontier_rank_.empty()) {
        const FrontierKey top = *frontier_rank_.begin();
        frontier_erase(top.id);
        beam.emplace_back(top.id, top.priority);
    }
    const bool rest_empty = frontier_rank_.empty();
    const double rest_max =
        rest_empty ? -std::numeric_limits<double>::infinity() : frontier_rank_.begin()->priority;

    ++iteration_;
    trace_.iterations_run = iteration_;

    // --- evaluate one slate per beam node ---
    std::vector<PendingExpansion> pending;
    for (const auto& [v, priority_at_pop] : beam) {
        expanded_.insert(v.value);

        ExpansionEvent event;
        event.iteration = iteration_;
        event.expanded = v;
        event.path_relevance_at_pop = priority_at_pop;
        event.frontier_rest_max = rest_max;
        event.frontier_rest_empty = rest_empty;
        event.child_count = static_cast<int>(tree_.node(v).children.size());

        std::vector<NodeId> slate = build_slate(v);
        event.excluded_children =
            event.child_count - static_cast<int>(std::count_if(
                                    tree_.node(v).children.begin(), tree_.node(v).children.end(),
                                    [&](NodeId c) { return !is_excluded_leaf(c); }));

        if (slate.empty()) {
            // Every child was pruned for this query: the beam slot is spent,
            // no scorer call happens, the pop is not refunded.
            event.skipped = true;
            trace_.expansions.push_back(std::move(event));
            continue;
        }

        ScoreRequest request;
        request.query = query_;
        request.relevance_definition = config_.relevance_definition;
        request.slate_id = next_slate_id_;
        request.candidates.reserve(slate.size());
        for (NodeId member : slate) {
            request.candidates.push_back({member, tree_.node(member).text});
        }

        ScoreResponse response;
        try {
            response = scorer_.score(request);
        } catch (const std::exception& e) {
            trace_.aborted = true;
            trace_.abort_reason = e.what();
            SearchResult partial = snapshot_result();
            throw SearchAborted(std::string("scorer failed: ") + e.what(), std::move(partial));
        }
        if (response.scores.size() != slate.size()) {
            trace_.aborted = true;
            trace_.abort_reason = "scorer returned wrong number of scores";
            SearchResult partial = snapshot_result();
            throw SearchAborted(trace_.abort_reason, std::move(partial));
        }

        SlateRecord record;
        record.slate_id = next_slate_id_;
        for (std::size_t i = 0; i < slate.size(); ++i) {
            record.entries.push_back({slate[i], std::clamp(response.scores[i], 0.0, 1.0)});
        }
        record_slate(history_, std::move(record));

        cost_.scorer_calls += 1;
        cost_.input_tokens += response.cost.input_tokens;
        cost_.output_tokens += response.cost.output_tokens;

        event.slate_id = next_slate_id_;
        event.slate = slate;
        event.observed = response.scores;
        trace_.expansions.push_back(std::move(event));
        pending.push_back({v, std::move(slate), trace_.expansions.size() - 1});
        ++next_slate_id_;
    }

    // --- calibrate against the whole history, warm-started ---
    if (!pending.empty()) {
        model_ = solve_mle(history_, config_.calibration, solved_once_ ? &model_ : nullptr);
        solved_once_ = true;
    }

    // --- route newly scored children; pin down fitted scores for the trace ---
    for (const auto& p : pending) {
        auto& event = trace_.expansions[p.event_index];
        event.fitted.reserve(p.slate.size());
        for (NodeId member : p.slate) {
            event.fitted.push_back(model_.latent_score(member).value_or(0.0));
        }
        for (NodeId child : tree_.node(p.node).children) {
            if (is_excluded_leaf(child)) continue;
            if (tree_.node(child).is_leaf()) {
                pred_.emplace(child, 0.0);  // value refreshed below
            } else if (!expanded_.count(child.value)) {
                frontier_insert(child, 0.0);
            }
        }
    }

    // --- refresh path relevance across frontier and prediction set ---
    if (!pending.empty()) refresh_priorities();

    IterationCheckpoint checkpoint;
    checkpoint.iteration = iteration_;
    checkpoint.cum_scorer_calls = cost_.scorer_calls;
    checkpoint.cum_input_tokens = cost_.input_tokens;
    checkpoint.cum_output_tokens = cost_.output_tokens;
    checkpoint.top = current_ranking(static_cast<std::size_t>(config_.top_k));
    trace_.checkpoints.push_back(std::move(checkpoint));
    return true;
}

void Searcher::refresh_priorities() {
    // Re-solving moves latent scores of already-placed nodes, so path
    // relevance is recomputed from the root down for everything still in
    // play. Ancestor chains share the memo.
    std::unordered_map<NodeId, double, NodeIdHash> memo;
    std::vector<std::pair<NodeId, double>> updated;
    updated.reserve(frontier_members_.size());
    for (const auto& [v, old_priority] : frontier_members_) {
        updated.emplace_back(v, recompute_path_relevance(v, memo));
    }
    for (const auto& [v, priority] : updated) frontier_insert(v, priority);
    for (auto& [leaf, rel] : pred_) rel = recompute_path_relevance(leaf, memo);
}

std::vector<std::pair<std::string, double>> Searcher::current_ranking(std::size_t limit) const {
    std::vector<std::pair<NodeId, double>> entries(pred_.begin(), pred_.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (entries.size() > limit) entries.resize(limit);
    std::vector<std::pair<std::string, double>> out;
    out.reserve(entries.size());
    for (const auto& [leaf, rel] : entries) {
        out.emplace_back(*tree_.node(leaf).doc_id, rel);
    }
    return out;
}

SearchResult Searcher::snapshot_result() const {
    SearchResult result;
    result.ranked = current_ranking(static_cast<std::size_t>(config_.top_k));
    result.cost = cost_;
    result.trace = trace_;
    return result;
}

SearchResult Searcher::finish() { return snapshot_result(); }

SearchResult search(const std::string& query, const SemanticTree& tree, ListwiseScorer& scorer,
                    const SearchConfig& config, const std::set<std::string>& excluded_docs) {
    Searcher searcher(tree, scorer, config, query, excluded_docs);
    while (searcher.run_iteration()) {
    }
    return searcher.finish();
}

// ---------------------------------------------------------------------------
// Trace serialization and replay

std::string serialize_trace(const SearchTrace& trace) {
    std::ostringstream out;
    {
        json header;
        header["type"] = "header";
        header["iterations_run"] = trace.iterations_run;
        header["aborted"] = trace.aborted;
        if (!trace.abort_reason.empty()) header["abort_reason"] = trace.abort_reason;
        out << header.dump() << '\n';
    }
    for (const auto& e : trace.expansions) {
        json j;
        j["type"] = "expansion";
        j["iteration"] = e.iteration;
        j["slate_id"] = e.slate_id;
        j["expanded"] = e.expanded.value;
        j["path_relevance_at_pop"] = e.path_relevance_at_pop;
        if (!e.frontier_rest_empty) j["frontier_rest_max"] = e.frontier_rest_max;
        json slate = json::array();
        for (NodeId v : e.slate) slate.push_back(v.value);
        j["slate"] = std::move(slate);
        j["observed"] = e.observed;
        j["fitted"] = e.fitted;
        j["excluded_children"] = e.excluded_children;
        j["child_count"] = e.child_count;
        j["skipped"] = e.skipped;
        out << j.dump() << '\n';
    }
    for (const auto& c : trace.checkpoints) {
        json j;
        j["type"] = "checkpoint";
        j["iteration"] = c.iteration;
        j["cum_scorer_calls"] = c.cum_scorer_calls;
        j["cum_input_tokens"] = c.cum_input_tokens;
        j["cum_output_tokens"] = c.cum_output_tokens;
        json top = json::array();
        for (const auto& [doc, rel] : c.top) top.push_back(json::array({doc, rel}));
        j["top"] = std::move(top);
        out << j.dump() << '\n';
    }
    return out.str();
}

SearchTrace deserialize_trace(const std::string& bytes) {
    SearchTrace trace;
    std::istringstream in(bytes);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw std::runtime_error("trace parse error at line " + std::to_string(line_no));
        }
        const std::string type = j.value("type", "");
        if (type == "header") {
            trace.iterations_run = j.value("iterations_run", 0);
            trace.aborted = j.value("aborted", false);
            trace.abort_reason = j.value("abort_reason", "");
        } else if (type == "expansion") {
            ExpansionEvent e;
            e.iteration = j.at("iteration").get<int>();
            e.slate_id = j.at("slate_id").get<std::int64_t>();
            e.expanded = NodeId{j.at("expanded").get<std::uint64_t>()};
            e.path_relevance_at_pop = j.at("path_relevance_at_pop").get<double>();
            if (j.contains("frontier_rest_max")) {
                e.frontier_rest_max = j["frontier_rest_max"].get<double>();
                e.frontier_rest_empty = false;
            }
            for (const auto& v : j.at("slate")) e.slate.push_back(NodeId{v.get<std::uint64_t>()});
            e.observed = j.at("observed").get<std::vector<double>>();
            e.fitted = j.at("fitted").get<std::vector<double>>();
            e.excluded_children = j.value("excluded_children", 0);
            e.child_count = j.value("child_count", 0);
            e.skipped = j.value("skipped", false);
            trace.expansions.push_back(std::move(e));
        } else if (type == "checkpoint") {
            IterationCheckpoint c;
            c.iteration = j.at("iteration").get<int>();
            c.cum_scorer_calls = j.at("cum_scorer_calls").get<std::int64_t>();
            c.cum_input_tokens = j.at("cum_input_tokens").get<std::int64_t>();
            c.cum_output_tokens = j.at("cum_output_tokens").get<std::int64_t>();
            for (const auto& pair : j.at("top")) {
                c.top.emplace_back(pair[0].get<std::string>(), pair[1].get<double>());
            }
            trace.checkpoints.push_back(std::move(c));
        } else {
            throw std::runtime_error("trace parse error at line " + std::to_string(line_no) +
                                     ": unknown record type '" + type + "'");
        }
    }
    return trace;
}

namespace {

// Feeds recorded observations back in expansion order.
class TraceScorer : public ListwiseScorer {
public:
    explicit TraceScorer(const SearchTrace& trace) {
        for (const auto& e : trace.expansions) {
            if (!e.skipped) events_.push_back(&e);
        }
    }

    ScoreResponse score(const ScoreRequest& request) override {
        if (next_ >= events_.size()) {
            throw std::runtime_error("trace replay: ran out of recorded slates");
        }
        const ExpansionEvent& e = *events_[next_++];
        if (e.slate.size() != request.candidates.size()) {
            throw std::runtime_error("trace replay: slate size mismatch at slate " +
                                     std::to_string(e.slate_id));
        }
        for (std::size_t i = 0; i < e.slate.size(); ++i) {
            if (e.slate[i] != request.candidates[i].node) {
                throw std::runtime_error("trace replay: slate membership mismatch at slate " +
                                         std::to_string(e.slate_id));
            }
        }
        ScoreResponse out;
        out.scores = e.observed;
        return out;
    }

private:
    std::vector<const ExpansionEvent*> events_;
    std::size_t next_ = 0;
};

}  // namespace

SearchResult replay_search(const std::string& query, const SemanticTree& tree,
                           const SearchTrace& trace, const SearchConfig& config,
                           const std::set<std::string>& excluded_docs) {
    TraceScorer scorer(trace);
    return search(query, tree, scorer, config, excluded_docs);
}

}  // namespace semtree
