#include "semtree/synthetic.hpp"

#include <algorithm>
#include <stdexcept>

#include "semtree/rng.hpp"
#include "semtree/util.hpp"

namespace semtree {

SyntheticData make_synthetic(const SyntheticSpec& spec) {
    if (spec.topics < 2) throw std::invalid_argument("need at least 2 topics");
    if (spec.docs_per_topic < 1) throw std::invalid_argument("docs_per_topic must be >= 1");
    if (spec.primary_gold + spec.secondary_gold > spec.docs_per_topic) {
        throw std::invalid_argument("more gold documents than a topic holds");
    }
    // peripherals fill whatever room the topic has left
    const int peripheral_gold = std::min(
        spec.peripheral_gold, spec.docs_per_topic - spec.primary_gold - spec.secondary_gold);

    SyntheticData data;
    Rng rng(derive_seed(spec.seed, "synthetic-corpus"));

    auto topic_word = [](int topic, int j) {
        return "topic" + std::to_string(topic) + "word" + std::to_string(j);
    };

    for (int t = 0; t < spec.topics; ++t) {
        for (int d = 0; d < spec.docs_per_topic; ++d) {
            Document doc;
            doc.doc_id = "t" + std::to_string(t) + "d" + std::to_string(d);
            std::vector<std::string> words;
            // Topic vocabulary dominates; a noise tail keeps documents apart.
            for (int j = 0; j < spec.words_per_doc * 2 / 3; ++j) {
                words.push_back(topic_word(t, j % 8));
            }
            while (words.size() < static_cast<std::size_t>(spec.words_per_doc)) {
                words.push_back("noise" + std::to_string(rng.uniform_index(4096)));
            }
            rng.shuffle(words);
            doc.content = join(words, " ");
            doc.source_id = "topic" + std::to_string(t);
            doc.source_position = d;
            data.corpus.documents.push_back(std::move(doc));
        }
    }

    Rng query_rng(derive_seed(spec.seed, "synthetic-queries"));
    for (int q = 0; q < spec.queries; ++q) {
        const int topic = static_cast<int>(query_rng.uniform_index(
            static_cast<std::uint64_t>(spec.topics)));
        const int related = (topic + 1) % spec.topics;

        QueryRecord record;
        record.query_id = "q" + std::to_string(q);
        record.text = "find documents about " + topic_word(topic, 0) + " " +
                      topic_word(topic, 1) + " and " + topic_word(topic, 2);
        data.bundle.queries.push_back(record);

        // Graded judgments inside the target topic, optionally spilling weak
        // positives into the neighbor.
        QueryGains gains;
        std::vector<int> docs(static_cast<std::size_t>(spec.docs_per_topic));
        for (std::size_t i = 0; i < docs.size(); ++i) docs[i] = static_cast<int>(i);
        query_rng.shuffle(docs);
        int cursor = 0;
        auto take = [&](int count, int gain, int from_topic, const std::vector<int>& pool,
                        int& pool_cursor) {
            for (int i = 0; i < count && pool_cursor < static_cast<int>(pool.size());
                 ++i, ++pool_cursor) {
                gains["t" + std::to_string(from_topic) + "d" +
                      std::to_string(pool[static_cast<std::size_t>(pool_cursor)])] = gain;
            }
        };
        take(spec.primary_gold, 3, topic, docs, cursor);
        take(spec.secondary_gold, 2, topic, docs, cursor);
        take(peripheral_gold, 1, topic, docs, cursor);
        if (spec.related_gold > 0) {
            std::vector<int> related_docs(static_cast<std::size_t>(spec.docs_per_topic));
            for (std::size_t i = 0; i < related_docs.size(); ++i) {
                related_docs[i] = static_cast<int>(i);
            }
            query_rng.shuffle(related_docs);
            int related_cursor = 0;
            take(spec.related_gold, 1, related, related_docs, related_cursor);
        }
        data.bundle.qrels.gains[record.query_id] = std::move(gains);
    }
    return data;
}

std::unordered_map<std::string, double> gold_relevance_for(const QueryGains& gains) {
    int max_gain = 0;
    for (const auto& [doc, gain] : gains) max_gain = std::max(max_gain, gain);
    std::unordered_map<std::string, double> rel;
    if (max_gain == 0) return rel;
    for (const auto& [doc, gain] : gains) {
        if (gain > 0) rel[doc] = static_cast<double>(gain) / static_cast<double>(max_gain);
    }
    return rel;
}

SemanticTree make_layered_tree(const std::vector<std::size_t>& widths, int max_branching,
                               std::uint64_t seed) {
    if (widths.size() < 2 || widths.front() != 1) {
        throw std::invalid_argument("widths must start at 1 (the root) and have >= 2 levels");
    }
    for (std::size_t level = 1; level < widths.size(); ++level) {
        if (widths[level] < widths[level - 1] ||
            widths[level] > widths[level - 1] * static_cast<std::size_t>(max_branching)) {
            throw std::invalid_argument("level " + std::to_string(level) +
                                        " width incompatible with branching cap");
        }
    }

    TreeBuilder builder;
    Rng rng(derive_seed(seed, "layered-tree"));

    // Bottom level: leaves.
    const std::size_t leaf_count = widths.back();
    std::vector<NodeId> lower;
    lower.reserve(leaf_count);
    for (std::size_t i = 0; i < leaf_count; ++i) {
        const std::string doc_id = "doc" + std::to_string(i);
        lower.push_back(builder.add_leaf(
            doc_id, "synthetic document " + std::to_string(i) + " body " +
                        std::to_string(rng.uniform_index(100000))));
    }

    // Build upward, spreading children evenly across the level above.
    for (std::size_t level = widths.size() - 1; level >= 1; --level) {
        const std::size_t parents = widths[level - 1];
        std::vector<NodeId> upper;
        upper.reserve(parents);
        const std::size_t n = lower.size();
        std::size_t offset = 0;
        for (std::size_t p = 0; p < parents; ++p) {
            const std::size_t take = (n - offset) / (parents - p) +
                                     (((n - offset) % (parents - p)) > 0 ? 1 : 0);
            std::vector<NodeId> children(
                lower.begin() + static_cast<std::ptrdiff_t>(offset),
                lower.begin() + static_cast<std::ptrdiff_t>(offset + take));
            offset += take;
            const bool is_root_level = (level - 1) == 0;
            upper.push_back(builder.add_internal(
                children, is_root_level ? "" : "group level " + std::to_string(level - 1) +
                                                   " index " + std::to_string(p)));
        }
        lower = std::move(upper);
        if (level == 1) break;
    }

    return std::move(builder).finish(lower.front(), max_branching);
}

}  // namespace semtree
