#include "semtree/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semtree {

namespace {

double gain_value(int gain) { return std::exp2(static_cast<double>(gain)) - 1.0; }

double discount(std::size_t rank_one_based) {
    return 1.0 / std::log2(static_cast<double>(rank_one_based) + 1.0);
}

}  // namespace

double ndcg_at_k(const std::vector<std::string>& ranked, const QueryGains& gains, int k,
                 const std::set<std::string>& excluded) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");

    double dcg = 0.0;
    const std::size_t depth = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < depth; ++i) {
        auto it = gains.find(ranked[i]);
        if (it == gains.end() || it->second <= 0) continue;
        dcg += gain_value(it->second) * discount(i + 1);
    }

    std::vector<int> judged;
    for (const auto& [doc, gain] : gains) {
        if (gain > 0 && !excluded.count(doc)) judged.push_back(gain);
    }
    if (judged.empty()) return 0.0;
    std::sort(judged.rbegin(), judged.rend());

    double ideal = 0.0;
    const std::size_t ideal_depth = std::min<std::size_t>(judged.size(),
                                                          static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < ideal_depth; ++i) {
        ideal += gain_value(judged[i]) * discount(i + 1);
    }
    return ideal > 0.0 ? dcg / ideal : 0.0;
}

double recall_at_k(const std::vector<std::string>& ranked, const QueryGains& gains, int k,
                   const std::set<std::string>& excluded) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");

    std::set<std::string> relevant;
    for (const auto& [doc, gain] : gains) {
        if (gain > 0 && !excluded.count(doc)) relevant.insert(doc);
    }
    if (relevant.empty()) return 0.0;

    std::size_t hits = 0;
    const std::size_t depth = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < depth; ++i) {
        if (relevant.count(ranked[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

bool has_no_relevant(const QueryGains& gains, const std::set<std::string>& excluded) {
    for (const auto& [doc, gain] : gains) {
        if (gain > 0 && !excluded.count(doc)) return false;
    }
    return true;
}

}  // namespace semtree
