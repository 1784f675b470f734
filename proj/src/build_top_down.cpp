#include "semtree/build_top_down.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>

#include "semtree/llm_client.hpp"
#include "semtree/util.hpp"

namespace semtree {

namespace {

// Word targets per rubric level (1-2, 3-4, 4-6, 7-10, 11-20 words).
constexpr std::array<std::size_t, 5> kLevelWordTargets = {2, 4, 6, 9, 16};
constexpr std::array<std::pair<std::size_t, std::size_t>, 5> kLevelWordBounds = {
    {{1, 2}, {3, 4}, {4, 6}, {7, 10}, {11, 20}}};

}  // namespace

std::vector<MultiLevelSummary> HeuristicMultiLevelSummarizer::summarize_batch(
    const std::vector<BatchDoc>& docs) {
    std::vector<MultiLevelSummary> out;
    out.reserve(docs.size());
    for (const auto& doc : docs) {
        const auto words = tokenize_words(doc.content);
        MultiLevelSummary summary;
        for (std::size_t level = 0; level < 5; ++level) {
            const std::size_t take = std::min(kLevelWordTargets[level], words.size());
            std::vector<std::string> prefix(words.begin(),
                                            words.begin() + static_cast<std::ptrdiff_t>(take));
            summary.levels[level] = prefix.empty() ? "untitled" : join(prefix, " ");
        }
        out.push_back(std::move(summary));
    }
    return out;
}

struct LlmMultiLevelSummarizer::Impl {
    std::shared_ptr<LlmTransport> transport;
    LlmEndpointConfig config;
    PromptSet prompts;
    PromptOptions options;
};

LlmMultiLevelSummarizer::LlmMultiLevelSummarizer(std::shared_ptr<LlmTransport> transport,
                                                 const LlmEndpointConfig& config,
                                                 PromptSet prompts, PromptOptions options)
    : impl_(new Impl{std::move(transport), config, std::move(prompts), options}) {}

LlmMultiLevelSummarizer::~LlmMultiLevelSummarizer() = default;

std::vector<MultiLevelSummary> LlmMultiLevelSummarizer::summarize_batch(
    const std::vector<BatchDoc>& docs) {
    std::vector<std::pair<int, std::string>> passages;
    passages.reserve(docs.size());
    for (const auto& doc : docs) passages.emplace_back(doc.id, doc.content);

    CompletionRequest creq;
    creq.prompt = build_keyword_prompt(passages, impl_->prompts, impl_->options);
    creq.temperature = impl_->config.temperature;
    creq.thinking_budget = impl_->config.thinking_budget;
    creq.model = impl_->config.model_name;

    auto parse = [&docs](const std::string& text) {
        const auto parsed = parse_keyword_response(text);
        std::unordered_map<int, const ParsedKeywordLevels*> by_id;
        for (const auto& p : parsed) by_id.emplace(p.passage_id, &p);
        std::vector<MultiLevelSummary> out;
        out.reserve(docs.size());
        for (const auto& doc : docs) {
            auto it = by_id.find(doc.id);
            if (it == by_id.end()) {
                throw ResponseParseError(ParseErrorKind::IncompleteCoverage,
                                         "passage " + std::to_string(doc.id) + " missing", text);
            }
            out.push_back(MultiLevelSummary{it->second->levels});
        }
        return out;
    };
    return complete_with_retries<std::vector<MultiLevelSummary>>(
        *impl_->transport, creq, impl_->config.max_retries, impl_->config.retry_backoff_ms,
        nullptr, parse);
}

std::vector<std::string> generate_multilevel_summaries(TreeBuilder& builder,
                                                       const std::vector<NodeId>& leaves,
                                                       MultiLevelSummarizer& summarizer,
                                                       std::size_t batch_size) {
    if (batch_size == 0) batch_size = 1;
    std::vector<std::string> warnings;
    for (std::size_t start = 0; start < leaves.size(); start += batch_size) {
        const std::size_t end = std::min(start + batch_size, leaves.size());
        std::vector<BatchDoc> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            batch.push_back({static_cast<int>(i), builder.node(leaves[i]).text});
        }
        auto results = summarizer.summarize_batch(batch);
        if (results.size() != batch.size()) {
            throw std::runtime_error("multi-level summarizer returned " +
                                     std::to_string(results.size()) + " results for " +
                                     std::to_string(batch.size()) + " documents");
        }
        for (std::size_t i = 0; i < results.size(); ++i) {
            const std::string& doc_id = *builder.node(leaves[start + i]).doc_id;
            for (std::size_t level = 0; level < 5; ++level) {
                const auto& text = results[i].levels[level];
                if (text.empty()) {
                    throw std::runtime_error("empty summary level for doc '" + doc_id + "'");
                }
                const std::size_t words = tokenize_words(text).size();
                const auto [lo, hi] = kLevelWordBounds[level];
                if (words < lo || words > hi) {
                    warnings.push_back("doc '" + doc_id + "' level " +
                                       std::to_string(level + 1) + " has " +
                                       std::to_string(words) + " words, rubric wants " +
                                       std::to_string(lo) + "-" + std::to_string(hi));
                }
            }
            builder.set_summary_levels(leaves[start + i], results[i].levels);
        }
    }
    return warnings;
}

std::vector<TopicCluster> HeuristicTopicClusterer::cluster(
    const std::vector<KeywordCount>& keywords, int min_k, int max_k) {
    std::vector<std::string> sorted;
    sorted.reserve(keywords.size());
    for (const auto& kc : keywords) sorted.push_back(kc.keyword);
    std::sort(sorted.begin(), sorted.end());

    const int n = static_cast<int>(sorted.size());
    const int k = std::max(1, std::min({max_k, n, std::max(min_k, (n + 3) / 4)}));
    std::vector<TopicCluster> clusters(static_cast<std::size_t>(k));
    for (int i = 0; i < n; ++i) {
        clusters[static_cast<std::size_t>(i * k / n)].keywords.push_back(sorted[i]);
    }
    clusters.erase(std::remove_if(clusters.begin(), clusters.end(),
                                  [](const TopicCluster& c) { return c.keywords.empty(); }),
                   clusters.end());
    for (auto& c : clusters) {
        c.name = c.keywords.front();
        std::vector<std::string> sample(c.keywords.begin(),
                                        c.keywords.begin() +
                                            std::min<std::size_t>(3, c.keywords.size()));
        c.description = "Covers: " + join(sample, "; ");
    }
    return clusters;
}

struct LlmTopicClusterer::Impl {
    std::shared_ptr<LlmTransport> transport;
    LlmEndpointConfig config;
    PromptSet prompts;
};

LlmTopicClusterer::LlmTopicClusterer(std::shared_ptr<LlmTransport> transport,
                                     const LlmEndpointConfig& config, PromptSet prompts)
    : impl_(new Impl{std::move(transport), config, std::move(prompts)}) {}

LlmTopicClusterer::~LlmTopicClusterer() = default;

std::vector<TopicCluster> LlmTopicClusterer::cluster(const std::vector<KeywordCount>& keywords,
                                                     int min_k, int max_k) {
    CompletionRequest creq;
    creq.prompt = build_clustering_prompt(keywords, min_k, max_k, impl_->prompts);
    creq.temperature = impl_->config.temperature;
    creq.thinking_budget = impl_->config.thinking_budget;
    creq.model = impl_->config.model_name;

    auto parse = [max_k](const std::string& text) {
        auto parsed = parse_clustering_response(text);
        if (static_cast<int>(parsed.size()) > max_k) {
            throw ResponseParseError(ParseErrorKind::BadType,
                                     "model returned " + std::to_string(parsed.size()) +
                                         " clusters, above the maximum " + std::to_string(max_k),
                                     text);
        }
        std::vector<TopicCluster> out;
        out.reserve(parsed.size());
        for (auto& p : parsed) {
            out.push_back({std::move(p.name), std::move(p.description), std::move(p.keywords)});
        }
        return out;
    };
    return complete_with_retries<std::vector<TopicCluster>>(
        *impl_->transport, creq, impl_->config.max_retries, impl_->config.retry_backoff_ms,
        nullptr, parse);
}

TopicClustering finalize_topic_clustering(std::vector<TopicCluster> raw,
                                          const std::vector<KeywordCount>& inputs, int min_k,
                                          int max_k) {
    if (static_cast<int>(raw.size()) > max_k) {
        throw std::invalid_argument("clusterer returned " + std::to_string(raw.size()) +
                                    " topics, above the maximum " + std::to_string(max_k));
    }
    TopicClustering out;
    std::set<std::string> known;
    for (const auto& kc : inputs) known.insert(kc.keyword);

    for (auto& cluster : raw) {
        std::vector<std::string> kept;
        for (auto& keyword : cluster.keywords) {
            if (!known.count(keyword)) {
                out.flags.push_back("topic '" + cluster.name + "' invented keyword '" + keyword +
                                    "'");
                continue;
            }
            if (out.mapping.count(keyword)) {
                out.flags.push_back("keyword '" + keyword +
                                    "' assigned to several topics; first assignment kept");
                continue;
            }
            out.mapping.emplace(keyword, out.topics.size());
            kept.push_back(keyword);
        }
        if (kept.empty()) {
            out.flags.push_back("topic '" + cluster.name + "' had no valid keywords; dropped");
            continue;
        }
        cluster.keywords = std::move(kept);
        out.topics.push_back(std::move(cluster));
    }

    // Sweep up anything the model failed to place.
    std::vector<std::string> unassigned;
    for (const auto& kc : inputs) {
        if (!out.mapping.count(kc.keyword)) unassigned.push_back(kc.keyword);
    }
    if (!unassigned.empty()) {
        if (static_cast<int>(out.topics.size()) < max_k) {
            TopicCluster misc;
            misc.name = "misc";
            misc.description = "Keywords left unassigned by the clustering response.";
            misc.keywords = unassigned;
            for (const auto& k : unassigned) out.mapping.emplace(k, out.topics.size());
            out.topics.push_back(std::move(misc));
            out.flags.push_back(std::to_string(unassigned.size()) +
                                " unassigned keyword(s) moved to a synthetic 'misc' topic");
        } else {
            // No room for another topic under the branching cap; fold the
            // leftovers into the last cluster instead.
            auto& last = out.topics.back();
            for (const auto& k : unassigned) {
                out.mapping.emplace(k, out.topics.size() - 1);
                last.keywords.push_back(k);
            }
            out.flags.push_back(std::to_string(unassigned.size()) +
                                " unassigned keyword(s) folded into topic '" + last.name + "'");
        }
    }

    if (out.topics.empty()) {
        throw std::runtime_error("topic clustering produced no usable topics");
    }
    if (static_cast<int>(out.topics.size()) < min_k) {
        out.flags.push_back("topic count " + std::to_string(out.topics.size()) +
                            " below requested minimum " + std::to_string(min_k));
    }
    return out;
}

TopicClustering cluster_llm(const std::vector<KeywordCount>& keywords, int min_k, int max_k,
                            TopicClusterer& clusterer) {
    if (keywords.empty()) throw std::invalid_argument("cluster_llm: no keywords");
    return finalize_topic_clustering(clusterer.cluster(keywords, min_k, max_k), keywords, min_k,
                                     max_k);
}

SummaryLevelChoice select_summary_level(const std::vector<const Node*>& leaves,
                                        int max_branching, const TopDownOptions& options) {
    auto level_tokens = [&](int level) {
        std::set<std::string> unique;
        for (const Node* leaf : leaves) {
            unique.insert(leaf->summary_levels->at(static_cast<std::size_t>(level - 1)));
        }
        std::int64_t tokens = 0;
        for (const auto& s : unique) {
            // matches the "- \"...\" (count: N)" row rendering, approximately
            tokens += estimate_tokens(s, options.token_estimate_divisor) + 4;
        }
        return std::pair<std::size_t, std::int64_t>(unique.size(), tokens);
    };

    int best_within_budget = 0;
    for (int level = 1; level <= 5; ++level) {
        const auto [unique, tokens] = level_tokens(level);
        const bool fits = tokens <= static_cast<std::int64_t>(options.max_cluster_tokens);
        if (fits) best_within_budget = level;
        if (fits && static_cast<int>(unique) > max_branching) {
            return {level, false};
        }
    }
    if (best_within_budget > 0) return {best_within_budget, false};
    return {1, true};
}

namespace {

std::vector<KeywordCount> unique_summaries_with_counts(const TreeBuilder& builder,
                                                       const std::vector<NodeId>& leaves,
                                                       int level) {
    std::map<std::string, std::int64_t> counts;  // ordered for determinism
    for (NodeId leaf : leaves) {
        counts[builder.node(leaf).summary_levels->at(static_cast<std::size_t>(level - 1))] += 1;
    }
    std::vector<KeywordCount> out;
    out.reserve(counts.size());
    for (const auto& [keyword, count] : counts) out.push_back({keyword, count});
    return out;
}

}  // namespace

BuildResult build_top_down(const Corpus& corpus, MultiLevelSummarizer& summarizer,
                           TopicClusterer& clusterer, int max_branching,
                           const TopDownOptions& options) {
    if (corpus.documents.empty()) throw std::invalid_argument("corpus is empty");
    if (max_branching < 2) throw std::invalid_argument("max_branching must be >= 2");

    TreeBuilder builder;
    BuildManifest manifest;
    std::vector<NodeId> leaves;
    leaves.reserve(corpus.size());
    for (const auto& doc : corpus.documents) {
        leaves.push_back(builder.add_leaf(doc.doc_id, doc.content));
    }

    manifest.events.push_back("multilevel-summaries");
    const auto rubric_warnings =
        generate_multilevel_summaries(builder, leaves, summarizer, options.summary_batch_size);
    // keep the manifest readable when a generator ignores the rubric wholesale
    for (std::size_t i = 0; i < rubric_warnings.size() && i < 20; ++i) {
        manifest.events.push_back("warn:" + rubric_warnings[i]);
    }
    if (rubric_warnings.size() > 20) {
        manifest.events.push_back("warn:+" + std::to_string(rubric_warnings.size() - 20) +
                                  " more rubric warnings");
    }

    NodeId root = builder.add_internal(leaves, "");

    std::deque<NodeId> queue;
    if (static_cast<int>(leaves.size()) > max_branching) queue.push_back(root);

    const int min_k = std::max(2, max_branching / 2);
    int round = 0;
    while (!queue.empty()) {
        const NodeId v = queue.front();
        queue.pop_front();
        ++round;

        // Children of a queued node are always leaves awaiting partitioning.
        const std::vector<NodeId> members = builder.node(v).children;
        manifest.layers.push_back({round, members.size(), 0, 0});

        std::vector<const Node*> member_nodes;
        member_nodes.reserve(members.size());
        for (NodeId m : members) member_nodes.push_back(&builder.node(m));
        const auto choice = select_summary_level(member_nodes, max_branching, options);
        manifest.events.push_back("select-level:" + std::to_string(choice.level) +
                                  (choice.truncated ? ":truncated" : ""));

        auto keywords = unique_summaries_with_counts(builder, members, choice.level);
        manifest.events.push_back("cluster-llm:" + std::to_string(round));
        TopicClustering clustering = cluster_llm(keywords, min_k, max_branching, clusterer);
        for (const auto& flag : clustering.flags) manifest.events.push_back("flag:" + flag);

        // Leaves sharing a summary string move together.
        std::vector<std::vector<NodeId>> groups(clustering.topics.size());
        for (NodeId m : members) {
            const auto& summary =
                builder.node(m).summary_levels->at(static_cast<std::size_t>(choice.level - 1));
            groups[clustering.mapping.at(summary)].push_back(m);
        }

        std::size_t non_empty = 0;
        for (const auto& g : groups) non_empty += g.empty() ? 0 : 1;

        if (non_empty <= 1) {
            // The model lumped everything together; force balanced groups in
            // lexicographic summary order so every child strictly shrinks.
            manifest.events.push_back("forced-split:" + std::to_string(round));
            std::vector<NodeId> ordered = members;
            std::sort(ordered.begin(), ordered.end(), [&](NodeId a, NodeId b) {
                const auto& sa =
                    builder.node(a).summary_levels->at(static_cast<std::size_t>(choice.level - 1));
                const auto& sb =
                    builder.node(b).summary_levels->at(static_cast<std::size_t>(choice.level - 1));
                if (sa != sb) return sa < sb;
                return a < b;
            });
            // ceil(n/M) groups, capped at M so the branching bound holds even
            // for n > M^2; oversized groups simply go back on the queue.
            const std::size_t k = std::min<std::size_t>(
                static_cast<std::size_t>(max_branching),
                (ordered.size() + static_cast<std::size_t>(max_branching) - 1) /
                    static_cast<std::size_t>(max_branching));
            groups.assign(k, {});
            for (std::size_t i = 0; i < ordered.size(); ++i) {
                groups[i * k / ordered.size()].push_back(ordered[i]);
            }
            clustering.topics.assign(k, {});
            for (std::size_t g = 0; g < k; ++g) {
                clustering.topics[g].name = "split " + std::to_string(g + 1);
                clustering.topics[g].description =
                    "Balanced split " + std::to_string(g + 1) + " of " + std::to_string(k);
            }
        }

        // Disconnect the old children before the new nodes claim them.
        builder.reassign_children(v, {});
        std::vector<NodeId> new_children;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (groups[g].empty()) continue;
            const auto& topic = clustering.topics[g];
            std::string text = topic.description.empty() ? topic.name : topic.description;
            NodeId child = builder.add_internal(groups[g], std::move(text));
            new_children.push_back(child);
        }
        builder.reassign_children(v, new_children);
        manifest.layers.back().clusters = new_children.size();

        for (NodeId child : new_children) {
            if (static_cast<int>(builder.node(child).children.size()) > max_branching) {
                queue.push_back(child);
            }
        }
    }

    SemanticTree tree = std::move(builder).finish(root, max_branching);
    return {std::move(tree), std::move(manifest)};
}

}  // namespace semtree
