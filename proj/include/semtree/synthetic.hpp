#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "semtree/corpus.hpp"
#include "semtree/ingest.hpp"
#include "semtree/scorer.hpp"
#include "semtree/tree.hpp"

namespace semtree {

// Topical corpus with planted relevant documents: every document carries its
// topic's vocabulary plus its own noise words, so the hash embedding clusters
// topics cleanly. Each query targets one topic and grades a handful of its
// documents; relevance is graded within the topic so it correlates with the
// hierarchy, with an optional spill of weak positives into the next topic.
struct SyntheticSpec {
    int topics = 16;
    int docs_per_topic = 16;
    int queries = 50;
    int primary_gold = 1;       // gain 3, target topic
    int secondary_gold = 3;     // gain 2, target topic
    int peripheral_gold = 6;    // gain 1, target topic
    int related_gold = 0;       // gain 1, neighboring topic
    int words_per_doc = 24;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    Corpus corpus;
    EvalBundle bundle;
};

SyntheticData make_synthetic(const SyntheticSpec& spec);

// Oracle gold map for one query: gains scaled into [0,1] by the query's
// maximum gain.
std::unordered_map<std::string, double> gold_relevance_for(const QueryGains& gains);

// Fixed-shape tree: level k holds widths[k] nodes (widths[0] must be 1), every
// leaf at the bottom level, children spread evenly. Lets tests pin depth and
// leaf count independently.
SemanticTree make_layered_tree(const std::vector<std::size_t>& widths, int max_branching,
                               std::uint64_t seed);

}  // namespace semtree
