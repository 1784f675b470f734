#include "semtree/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "semtree/rng.hpp"
#include "semtree/util.hpp"

namespace semtree {

std::vector<double> hash_embedding(const std::string& text, int dim) {
    if (dim < 1) throw std::invalid_argument("embedding dim must be >= 1");
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    for (const auto& word : tokenize_words(text)) {
        const std::uint64_t h = fnv1a64(word);
        const std::size_t bucket = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim));
        const double sign = ((h >> 32) & 1ull) ? 1.0 : -1.0;
        v[bucket] += sign;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

EmbeddingFn make_hash_embedding(int dim) {
    return [dim](const std::string& text) { return hash_embedding(text, dim); };
}

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

// Lloyd's algorithm with k=2; the second center starts at the point farthest
// from a seeded random first center. Falls back to a balanced index split
// when one side collapses (duplicate points).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> two_means(
    const std::vector<std::vector<double>>& vectors, const std::vector<std::size_t>& indices,
    Rng& rng) {
    const std::size_t n = indices.size();
    std::vector<double> c0 = vectors[indices[rng.uniform_index(n)]];
    std::size_t far = indices[0];
    double far_dist = -1.0;
    for (std::size_t idx : indices) {
        const double d = squared_distance(vectors[idx], c0);
        if (d > far_dist) {
            far_dist = d;
            far = idx;
        }
    }
    std::vector<double> c1 = vectors[far];

    std::vector<char> assignment(n, 0);
    for (int iter = 0; iter < 50; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const double d0 = squared_distance(vectors[indices[i]], c0);
            const double d1 = squared_distance(vectors[indices[i]], c1);
            const char a = d1 < d0 ? 1 : 0;
            if (a != assignment[i]) {
                assignment[i] = a;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        const std::size_t dim = c0.size();
        std::vector<double> sum0(dim, 0.0), sum1(dim, 0.0);
        std::size_t n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& v = vectors[indices[i]];
            if (assignment[i] == 0) {
                ++n0;
                for (std::size_t d = 0; d < dim; ++d) sum0[d] += v[d];
            } else {
                ++n1;
                for (std::size_t d = 0; d < dim; ++d) sum1[d] += v[d];
            }
        }
        if (n0 == 0 || n1 == 0) break;
        for (std::size_t d = 0; d < dim; ++d) {
            c0[d] = sum0[d] / static_cast<double>(n0);
            c1[d] = sum1[d] / static_cast<double>(n1);
        }
    }

    std::vector<std::size_t> left, right;
    for (std::size_t i = 0; i < n; ++i) {
        (assignment[i] == 0 ? left : right).push_back(indices[i]);
    }
    if (left.empty() || right.empty()) {
        left.assign(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(n / 2));
        right.assign(indices.begin() + static_cast<std::ptrdiff_t>(n / 2), indices.end());
    }
    return {std::move(left), std::move(right)};
}

void bisect(const std::vector<std::vector<double>>& vectors, std::vector<std::size_t> indices,
            int cap, Rng& rng, Partition& out) {
    if (static_cast<int>(indices.size()) <= cap) {
        out.push_back(std::move(indices));
        return;
    }
    auto [left, right] = two_means(vectors, indices, rng);
    const std::size_t before = out.size();
    bisect(vectors, std::move(left), cap, rng, out);
    bisect(vectors, std::move(right), cap, rng, out);

    // Merge small sibling parts produced under this split while they fit.
    auto& parts = out;
    bool merged = true;
    while (merged) {
        merged = false;
        std::size_t best_a = 0, best_b = 0;
        std::size_t best_size = static_cast<std::size_t>(cap) + 1;
        for (std::size_t a = before; a < parts.size(); ++a) {
            for (std::size_t b = a + 1; b < parts.size(); ++b) {
                const std::size_t combined = parts[a].size() + parts[b].size();
                if (combined <= static_cast<std::size_t>(cap) && combined < best_size) {
                    best_size = combined;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        if (best_size <= static_cast<std::size_t>(cap)) {
            parts[best_a].insert(parts[best_a].end(), parts[best_b].begin(),
                                 parts[best_b].end());
            parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(best_b));
            merged = true;
        }
    }
}

}  // namespace

Partition default_clustering(const std::vector<std::vector<double>>& vectors, int max_part_size,
                             std::uint64_t seed) {
    if (vectors.empty()) return {};
    if (max_part_size < 1) throw std::invalid_argument("max_part_size must be >= 1");
    for (const auto& v : vectors) {
        if (v.size() != vectors.front().size()) {
            throw std::invalid_argument("embedding dimensions differ");
        }
    }

    std::vector<std::size_t> all(vectors.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    Partition parts;
    Rng rng(derive_seed(seed, "bisect-clustering"));
    bisect(vectors, std::move(all), max_part_size, rng, parts);

    // Canonical form: members ascending, parts ordered by first member.
    for (auto& p : parts) std::sort(p.begin(), p.end());
    std::sort(parts.begin(), parts.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return parts;
}

ClusteringFn make_default_clustering(std::uint64_t seed) {
    return [seed](const std::vector<std::vector<double>>& vectors, int cap) {
        return default_clustering(vectors, cap, seed);
    };
}

std::vector<std::string> check_partition(const Partition& parts, std::size_t n,
                                         int max_part_size) {
    std::vector<std::string> problems;
    std::vector<int> seen(n, 0);
    for (std::size_t p = 0; p < parts.size(); ++p) {
        if (parts[p].empty()) problems.push_back("part " + std::to_string(p) + " is empty");
        if (static_cast<int>(parts[p].size()) > max_part_size) {
            problems.push_back("part " + std::to_string(p) + " has " +
                               std::to_string(parts[p].size()) + " members > cap " +
                               std::to_string(max_part_size));
        }
        for (std::size_t idx : parts[p]) {
            if (idx >= n) {
                problems.push_back("part " + std::to_string(p) + " references index " +
                                   std::to_string(idx) + " >= n=" + std::to_string(n));
            } else if (++seen[idx] > 1) {
                problems.push_back("index " + std::to_string(idx) + " appears in several parts");
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (seen[i] == 0) problems.push_back("index " + std::to_string(i) + " missing");
    }
    return problems;
}

}  // namespace semtree
