#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace semtree {

// Rough token estimate used for prompt budgeting and cost accounting when the
// transport does not report usage. Divisor is configurable where it matters.
inline std::int64_t estimate_tokens(std::string_view text, int chars_per_token = 4) {
    if (chars_per_token < 1) chars_per_token = 1;
    return static_cast<std::int64_t>((text.size() + chars_per_token - 1) / chars_per_token);
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Splits on non-alphanumeric runs, lowercased.
inline std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

inline constexpr std::string_view kTruncationMarker = "...";

// Cuts text to at most `budget` characters, appending a marker when cut.
inline std::string truncate_with_marker(std::string_view text, std::size_t budget) {
    if (text.size() <= budget) return std::string(text);
    if (budget <= kTruncationMarker.size()) return std::string(kTruncationMarker.substr(0, budget));
    return std::string(text.substr(0, budget - kTruncationMarker.size())) +
           std::string(kTruncationMarker);
}

// Truncates a set of texts to a shared total budget, cutting the longest texts
// first. Finds the largest per-item cap L such that sum(min(len, L)) fits.
inline std::vector<std::string> truncate_longest_first(const std::vector<std::string>& texts,
                                                       std::size_t total_budget) {
    std::size_t total = 0;
    std::size_t longest = 0;
    for (const auto& t : texts) {
        total += t.size();
        longest = std::max(longest, t.size());
    }
    if (total <= total_budget) return texts;

    std::size_t lo = 0, hi = longest;
    auto fits = [&](std::size_t cap) {
        std::size_t s = 0;
        for (const auto& t : texts) s += std::min(t.size(), cap);
        return s <= total_budget;
    };
    while (lo < hi) {
        std::size_t mid = (lo + hi + 1) / 2;
        if (fits(mid)) lo = mid; else hi = mid - 1;
    }
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(truncate_with_marker(t, lo));
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

// Fixed-decimal formatting; all user-facing numeric output goes through this
// so reruns are byte-identical.
std::string format_fixed(double value, int decimals = 6);

}  // namespace semtree
