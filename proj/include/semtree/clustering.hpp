#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace semtree {

// text -> fixed-dimension vector; same text must map to the same vector
// within a session.
using EmbeddingFn = std::function<std::vector<double>(const std::string&)>;

// n vectors -> partition into parts of size <= M (disjoint, covering,
// index-based).
using Partition = std::vector<std::vector<std::size_t>>;
using ClusteringFn = std::function<Partition(const std::vector<std::vector<double>>&, int)>;

// Deterministic offline embedding: signed bag-of-words feature hashing,
// L2-normalized. Stands in for a learned embedder behind the same contract.
std::vector<double> hash_embedding(const std::string& text, int dim = 64);

EmbeddingFn make_hash_embedding(int dim = 64);

// Size-capped partition by recursive bisection: 2-means split, recurse on
// oversized halves, then greedily merge small sibling parts while the cap
// allows. Deterministic under the seed.
Partition default_clustering(const std::vector<std::vector<double>>& vectors, int max_part_size,
                             std::uint64_t seed);

ClusteringFn make_default_clustering(std::uint64_t seed);

// Audits a candidate partition of n items: disjoint, covering, size-capped.
// Returns human-readable problems; empty means valid.
std::vector<std::string> check_partition(const Partition& parts, std::size_t n,
                                         int max_part_size);

}  // namespace semtree
