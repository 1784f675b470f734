#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "semtree/build_bottom_up.hpp"  // BuildResult / BuildManifest
#include "semtree/corpus.hpp"
#include "semtree/prompts.hpp"
#include "semtree/tree.hpp"

namespace semtree {

// Five summaries per document, most abstract first.
struct MultiLevelSummary {
    std::array<std::string, 5> levels;
};

struct BatchDoc {
    int id = 0;
    std::string content;
};

// Batch generator for multi-level document summaries. Implementations own
// their prompt/parse/retry mechanics and must return one entry per input id.
class MultiLevelSummarizer {
public:
    virtual ~MultiLevelSummarizer() = default;
    virtual std::vector<MultiLevelSummary> summarize_batch(const std::vector<BatchDoc>& docs) = 0;
};

// Offline stand-in: level i is a prefix of the document's salient words at
// the rubric's target length.
class HeuristicMultiLevelSummarizer : public MultiLevelSummarizer {
public:
    std::vector<MultiLevelSummary> summarize_batch(const std::vector<BatchDoc>& docs) override;
};

// Remote implementation of the keyword-generation contract.
class LlmTransport;
struct LlmEndpointConfig;

class LlmMultiLevelSummarizer : public MultiLevelSummarizer {
public:
    LlmMultiLevelSummarizer(std::shared_ptr<LlmTransport> transport,
                            const LlmEndpointConfig& config, PromptSet prompts = {},
                            PromptOptions options = {});
    ~LlmMultiLevelSummarizer() override;

    std::vector<MultiLevelSummary> summarize_batch(const std::vector<BatchDoc>& docs) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Assigns summary levels to every leaf through the given generator, batching
// documents. Results are matched by passage id, so shuffled responses are
// fine. Returns lenient warnings for levels that miss the rubric's word
// targets (1-2, 3-4, 4-6, 7-10, 11-20); such summaries are kept.
std::vector<std::string> generate_multilevel_summaries(TreeBuilder& builder,
                                                       const std::vector<NodeId>& leaves,
                                                       MultiLevelSummarizer& summarizer,
                                                       std::size_t batch_size = 8);

struct TopicCluster {
    std::string name;
    std::string description;
    std::vector<std::string> keywords;
};

struct TopicClustering {
    std::vector<TopicCluster> topics;
    std::unordered_map<std::string, std::size_t> mapping;  // summary string -> topic index
    std::vector<std::string> flags;
};

// Conceptual clusterer contract: unique summaries with leaf multiplicities in,
// raw named clusters out. Count must land in [min_k, max_k] where achievable.
class TopicClusterer {
public:
    virtual ~TopicClusterer() = default;
    virtual std::vector<TopicCluster> cluster(const std::vector<KeywordCount>& keywords,
                                              int min_k, int max_k) = 0;
};

// Offline stand-in: balanced contiguous groups in lexicographic order.
class HeuristicTopicClusterer : public TopicClusterer {
public:
    std::vector<TopicCluster> cluster(const std::vector<KeywordCount>& keywords, int min_k,
                                      int max_k) override;
};

class LlmTopicClusterer : public TopicClusterer {
public:
    LlmTopicClusterer(std::shared_ptr<LlmTransport> transport, const LlmEndpointConfig& config,
                      PromptSet prompts = {});
    ~LlmTopicClusterer() override;

    std::vector<TopicCluster> cluster(const std::vector<KeywordCount>& keywords, int min_k,
                                      int max_k) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Validates raw clusters into a usable assignment: duplicate keywords keep
// their first home (flagged), unassigned keywords land in a synthetic "misc"
// topic (flagged), empty topics are dropped.
TopicClustering finalize_topic_clustering(std::vector<TopicCluster> raw,
                                          const std::vector<KeywordCount>& inputs, int min_k,
                                          int max_k);

// Runs the clusterer and finalizes its output.
TopicClustering cluster_llm(const std::vector<KeywordCount>& keywords, int min_k, int max_k,
                            TopicClusterer& clusterer);

struct SummaryLevelChoice {
    int level = 1;        // 1-based
    bool truncated = false;  // even the most abstract level blew the budget
};

struct TopDownOptions {
    std::size_t max_cluster_tokens = 6000;  // budget for the clustering prompt input
    int token_estimate_divisor = 4;         // characters per token
    std::size_t summary_batch_size = 8;
};

// Smallest level whose unique-summary count exceeds max_branching while the
// rendered keyword list stays under the token budget; falls back to the most
// specific level that fits, then to a truncated level 1.
SummaryLevelChoice select_summary_level(const std::vector<const Node*>& leaves,
                                        int max_branching, const TopDownOptions& options);

// Recursive divisive construction: every oversized node is re-partitioned by
// conceptual clustering over its leaves' summaries until the branching cap
// holds everywhere.
BuildResult build_top_down(const Corpus& corpus, MultiLevelSummarizer& summarizer,
                           TopicClusterer& clusterer, int max_branching,
                           const TopDownOptions& options = {});

}  // namespace semtree
