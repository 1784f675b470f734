#pragma once

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace semtree {

// gain per judged document for one query; absent means gain 0.
using QueryGains = std::unordered_map<std::string, int>;

// Graded nDCG with 2^gain - 1 numerators and log2(rank+1) discounts. The
// ideal ranking is computed over judged, non-excluded documents; queries with
// nothing judged (after exclusion) score 0.
double ndcg_at_k(const std::vector<std::string>& ranked, const QueryGains& gains, int k,
                 const std::set<std::string>& excluded = {});

// |top-k ∩ relevant non-excluded| / |relevant non-excluded|; 0 when the
// denominator is empty.
double recall_at_k(const std::vector<std::string>& ranked, const QueryGains& gains, int k,
                   const std::set<std::string>& excluded = {});

// True when the query has no positively judged, non-excluded document.
bool has_no_relevant(const QueryGains& gains, const std::set<std::string>& excluded);

}  // namespace semtree
