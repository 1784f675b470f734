#include "semtree/build_bottom_up.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "semtree/util.hpp"

namespace semtree {

using nlohmann::json;

Summarizer make_extractive_summarizer(std::size_t max_terms) {
    return [max_terms](const std::vector<std::string>& child_texts) -> std::string {
        std::map<std::string, std::size_t> counts;
        for (const auto& text : child_texts) {
            for (auto& word : tokenize_words(text)) {
                if (word.size() >= 3) ++counts[word];
            }
        }
        std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (ranked.size() > max_terms) ranked.resize(max_terms);
        std::vector<std::string> terms;
        terms.reserve(ranked.size());
        for (auto& [word, _] : ranked) terms.push_back(word);
        if (terms.empty()) return "mixed content";
        return "Key terms: " + join(terms, ", ");
    };
}

json BuildManifest::to_json() const {
    json j;
    j["layers"] = json::array();
    for (const auto& layer : layers) {
        j["layers"].push_back({{"index", layer.index},
                               {"input_nodes", layer.input_nodes},
                               {"clusters", layer.clusters},
                               {"summary_calls", layer.summary_calls}});
    }
    j["events"] = events;
    j["total_summary_calls"] = total_summary_calls;
    return j;
}

Partition metadata_initial_clusters(const Corpus& corpus, int max_branching) {
    if (max_branching < 2) throw std::invalid_argument("max_branching must be >= 2");

    // Group by source in order of first appearance.
    std::vector<std::string> source_order;
    std::unordered_map<std::string, std::vector<std::size_t>> by_source;
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
        const Document& doc = corpus.documents[i];
        if (!doc.source_id || !doc.source_position) {
            throw std::invalid_argument("document '" + doc.doc_id +
                                        "' lacks source metadata required for "
                                        "metadata-based clustering");
        }
        auto [it, fresh] = by_source.try_emplace(*doc.source_id);
        if (fresh) source_order.push_back(*doc.source_id);
        it->second.push_back(i);
    }

    Partition parts;
    for (const auto& source : source_order) {
        auto& members = by_source.at(source);
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            const auto pa = *corpus.documents[a].source_position;
            const auto pb = *corpus.documents[b].source_position;
            if (pa != pb) return pa < pb;
            return a < b;
        });
        const std::size_t n = members.size();
        if (static_cast<int>(n) <= max_branching) {
            parts.push_back(members);
            continue;
        }
        // Balanced contiguous runs in position order, sizes within one.
        const std::size_t runs =
            (n + static_cast<std::size_t>(max_branching) - 1) /
            static_cast<std::size_t>(max_branching);
        const std::size_t base = n / runs;
        const std::size_t extra = n % runs;
        std::size_t offset = 0;
        for (std::size_t r = 0; r < runs; ++r) {
            const std::size_t len = base + (r < extra ? 1 : 0);
            parts.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(offset),
                               members.begin() + static_cast<std::ptrdiff_t>(offset + len));
            offset += len;
        }
    }
    return parts;
}

std::vector<NodeId> create_nodes_from_clusters(const std::vector<NodeId>& source_layer,
                                               const Partition& clusters, TreeBuilder& builder) {
    const auto problems = check_partition(clusters, source_layer.size(),
                                          static_cast<int>(source_layer.size()));
    if (!problems.empty()) {
        throw std::invalid_argument("clusters do not partition the layer: " + problems.front());
    }
    std::vector<NodeId> new_layer;
    new_layer.reserve(clusters.size());
    for (const auto& part : clusters) {
        std::vector<NodeId> children;
        children.reserve(part.size());
        for (std::size_t idx : part) children.push_back(source_layer[idx]);
        new_layer.push_back(builder.add_internal(children, ""));
    }
    return new_layer;
}

BuildResult build_bottom_up(const Corpus& corpus, const EmbeddingFn& embed,
                            const ClusteringFn& cluster, const Summarizer& summarize,
                            int max_branching, const std::optional<Partition>& initial_clusters) {
    if (corpus.documents.empty()) throw std::invalid_argument("corpus is empty");
    if (max_branching < 2) throw std::invalid_argument("max_branching must be >= 2");

    TreeBuilder builder;
    BuildManifest manifest;
    std::vector<NodeId> leaves;
    leaves.reserve(corpus.size());
    for (const auto& doc : corpus.documents) {
        leaves.push_back(builder.add_leaf(doc.doc_id, doc.content));
    }

    int layer_index = 0;
    auto record_layer = [&](std::size_t in, std::size_t out, std::size_t summaries) {
        manifest.layers.push_back({layer_index, in, out, summaries});
    };

    // Initial layer formation, from metadata when provided.
    Partition partition;
    if (initial_clusters) {
        partition = *initial_clusters;
        const auto problems = check_partition(partition, leaves.size(), max_branching);
        if (!problems.empty()) {
            throw std::invalid_argument("initial clusters invalid: " + problems.front());
        }
    } else {
        manifest.events.push_back("embed:0");
        std::vector<std::vector<double>> vectors;
        vectors.reserve(leaves.size());
        for (NodeId leaf : leaves) vectors.push_back(embed(builder.node(leaf).text));
        manifest.events.push_back("cluster:0");
        partition = cluster(vectors, max_branching);
        const auto problems = check_partition(partition, leaves.size(), max_branching);
        if (!problems.empty()) {
            throw std::invalid_argument("clustering function violated its contract at layer 0: " +
                                        problems.front());
        }
    }

    // A single part means there is nothing to separate; the leaves sit
    // directly under the root and the first slate scores them all.
    if (partition.size() <= 1) {
        record_layer(leaves.size(), 1, 0);
        NodeId root = builder.add_internal(leaves, "");
        SemanticTree tree = std::move(builder).finish(root, max_branching);
        return {std::move(tree), std::move(manifest)};
    }

    manifest.events.push_back("create:0");
    std::vector<NodeId> current = create_nodes_from_clusters(leaves, partition, builder);
    record_layer(leaves.size(), current.size(), 0);

    while (static_cast<int>(current.size()) > max_branching) {
        ++layer_index;
        // Summarize the current layer before clustering it.
        std::size_t summaries = 0;
        for (NodeId v : current) {
            manifest.events.push_back("summarize:" + std::to_string(layer_index));
            std::vector<std::string> child_texts;
            for (NodeId c : builder.node(v).children) child_texts.push_back(builder.node(c).text);
            std::string summary = summarize(child_texts);
            if (summary.empty()) {
                throw std::runtime_error("summarizer returned empty text at layer " +
                                         std::to_string(layer_index));
            }
            builder.set_text(v, std::move(summary));
            ++summaries;
        }
        manifest.total_summary_calls += summaries;

        manifest.events.push_back("embed:" + std::to_string(layer_index));
        std::vector<std::vector<double>> vectors;
        vectors.reserve(current.size());
        for (NodeId v : current) vectors.push_back(embed(builder.node(v).text));

        manifest.events.push_back("cluster:" + std::to_string(layer_index));
        Partition layer_partition = cluster(vectors, max_branching);
        auto problems = check_partition(layer_partition, current.size(), max_branching);
        if (!problems.empty()) {
            throw std::invalid_argument("clustering function violated its contract at layer " +
                                        std::to_string(layer_index) + ": " + problems.front());
        }
        // Guarantee progress: a clustering that only returns singletons would
        // stall the loop, so adjacent parts are paired up instead.
        if (layer_partition.size() >= current.size()) {
            manifest.events.push_back("forced-merge:" + std::to_string(layer_index));
            Partition merged;
            for (std::size_t i = 0; i < layer_partition.size(); i += 2) {
                auto part = layer_partition[i];
                if (i + 1 < layer_partition.size()) {
                    part.insert(part.end(), layer_partition[i + 1].begin(),
                                layer_partition[i + 1].end());
                }
                merged.push_back(std::move(part));
            }
            layer_partition = std::move(merged);
        }

        manifest.events.push_back("create:" + std::to_string(layer_index));
        std::vector<NodeId> next = create_nodes_from_clusters(current, layer_partition, builder);
        record_layer(current.size(), next.size(), summaries);
        current = std::move(next);
    }

    // The loop never summarizes the final layer (it is never clustered), but
    // these nodes feed the root's slate and need text like any other.
    ++layer_index;
    std::size_t summaries = 0;
    for (NodeId v : current) {
        if (!builder.node(v).text.empty()) continue;
        manifest.events.push_back("summarize:" + std::to_string(layer_index));
        std::vector<std::string> child_texts;
        for (NodeId c : builder.node(v).children) child_texts.push_back(builder.node(c).text);
        builder.set_text(v, summarize(child_texts));
        ++summaries;
    }
    manifest.total_summary_calls += summaries;
    record_layer(current.size(), current.size(), summaries);

    NodeId root = builder.add_internal(current, "");
    SemanticTree tree = std::move(builder).finish(root, max_branching);
    return {std::move(tree), std::move(manifest)};
}

}  // namespace semtree
