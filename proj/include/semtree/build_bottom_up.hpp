#pragma once

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "semtree/clustering.hpp"
#include "semtree/corpus.hpp"
#include "semtree/tree.hpp"

namespace semtree {

// Child texts in, one summary out; must be non-empty for non-empty input.
using Summarizer = std::function<std::string(const std::vector<std::string>&)>;

// Offline summarizer: most frequent content words across the children,
// deterministic. Useful wherever a remote model is unavailable or unwanted.
Summarizer make_extractive_summarizer(std::size_t max_terms = 24);

// Ordered build log: what happened to each layer, in order. Also records the
// event sequence so audits can confirm summaries precede clustering.
struct BuildManifest {
    struct Layer {
        int index = 0;
        std::size_t input_nodes = 0;
        std::size_t clusters = 0;
        std::size_t summary_calls = 0;
    };
    std::vector<Layer> layers;
    std::vector<std::string> events;  // "summarize:L", "embed:L", "cluster:L", "create:L"
    std::size_t total_summary_calls = 0;

    nlohmann::json to_json() const;
};

struct BuildResult {
    SemanticTree tree;
    BuildManifest manifest;
};

// Groups leaves by source document; any oversized group is split into
// balanced contiguous runs (sizes within one of each other) in ascending
// source-position order. Every document must carry source metadata.
Partition metadata_initial_clusters(const Corpus& corpus, int max_branching);

// One new internal node per cluster, wired parent->members; returns the new
// layer. Rejects anything that is not a partition of the source layer.
std::vector<NodeId> create_nodes_from_clusters(const std::vector<NodeId>& source_layer,
                                               const Partition& clusters, TreeBuilder& builder);

// Layer-by-layer agglomerative construction: cluster the current layer,
// create parents, summarize each new layer before clustering it in turn,
// until at most `max_branching` nodes remain; those attach under an
// empty-summary root.
BuildResult build_bottom_up(const Corpus& corpus, const EmbeddingFn& embed,
                            const ClusteringFn& cluster, const Summarizer& summarize,
                            int max_branching,
                            const std::optional<Partition>& initial_clusters = std::nullopt);

}  // namespace semtree
