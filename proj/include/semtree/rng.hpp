#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace semtree {

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Every subsystem draws its stream from the single root seed through a
// purpose tag, so one knob reproduces a whole run.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                 std::uint64_t index = 0) {
    return splitmix64(root ^ fnv1a64(tag) ^ splitmix64(index + 0x51ed270b0a1cefull));
}

// mt19937_64 with hand-rolled distributions. The standard pins the engine but
// not the distributions, and outputs here must be stable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n == 0");
        // modulo bias is irrelevant at these ranges
        return engine_() % n;
    }

    // Box-Muller
    double normal(double mean = 0.0, double sigma = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + sigma * spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + sigma * r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Weighted sampling without replacement. Weights must be > 0. Candidates are
// visited in the order given, so callers pass a deterministically ordered list.
// Returns indices into `weights`.
inline std::vector<std::size_t> sample_without_replacement(
    const std::vector<double>& weights, std::size_t count, Rng& rng) {
    std::vector<std::size_t> alive(weights.size());
    for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
    count = std::min(count, weights.size());

    std::vector<std::size_t> picked;
    picked.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        double total = 0.0;
        for (std::size_t idx : alive) total += weights[idx];
        double u = rng.uniform() * total;
        std::size_t chosen_pos = alive.size() - 1;
        double acc = 0.0;
        for (std::size_t pos = 0; pos < alive.size(); ++pos) {
            acc += weights[alive[pos]];
            if (u < acc) {
                chosen_pos = pos;
                break;
            }
        }
        picked.push_back(alive[chosen_pos]);
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(chosen_pos));
    }
    return picked;
}

}  // namespace semtree
