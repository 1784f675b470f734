#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "semtree/tree.hpp"

namespace semtree {

// One listwise scoring event: which nodes were shown together and what the
// scorer said about each. Scores live in [0,1].
struct SlateEntry {
    NodeId node;
    double observed_score = 0.0;
};

struct SlateRecord {
    std::int64_t slate_id = 0;
    std::vector<SlateEntry> entries;
};

// Append-only within a search session; slate ids strictly increase.
struct ScoreHistory {
    std::vector<SlateRecord> records;

    bool empty() const { return records.empty(); }
    std::size_t size() const { return records.size(); }
};

// Throws std::invalid_argument on malformed slates (scores out of [0,1],
// duplicate node within one slate, empty slate) and on duplicate or
// non-increasing slate ids. Single-entry slates are accepted; their bias is
// pinned to zero at solve time since score and bias are not jointly
// identifiable from one observation.
void record_slate(ScoreHistory& history, SlateRecord slate);

enum class CalibrationMode {
    Full,       // fit scale a, per-slate biases b_i and latents jointly
    MeanOnly,   // a=1, b=0: latent is the exact per-node observation mean
    LastScore,  // latent is the most recent observation of the node
};

struct CalibrationConfig {
    CalibrationMode mode = CalibrationMode::Full;
    double learning_rate = 1e-2;
    int steps = 100;
    // Anchors the scale/shift gauge: penalty gauge_penalty * ((a-1)^2 + sum b_i^2).
    double gauge_penalty = 1e-3;
};

// Fitted observation model: observed ~ a * latent + b_slate. The scale is
// kept positive through an exponential reparameterization so fitted order is
// never inverted. Latents are intentionally not clamped to [0,1].
struct CalibrationModel {
    double scale = 1.0;
    std::unordered_map<std::int64_t, double> slate_bias;
    std::unordered_map<NodeId, double, NodeIdHash> latent;
    CalibrationConfig config;
    // Objective value of the best parameters seen so far, recorded after each
    // solver step; non-increasing by construction.
    std::vector<double> objective_trace;

    std::optional<double> latent_score(NodeId v) const {
        auto it = latent.find(v);
        if (it == latent.end()) return std::nullopt;
        return it->second;
    }
};

// Fits the model to the whole history. Pure function of
// (history, config, warm_start); re-solves deterministically.
CalibrationModel solve_mle(const ScoreHistory& history, const CalibrationConfig& config,
                           const CalibrationModel* warm_start = nullptr);

// Sum of squared residuals plus the gauge penalty, for the given parameters.
double calibration_objective(const ScoreHistory& history, const CalibrationModel& model);

// Debug dump: one row per observation with its fitted value.
std::string calibration_debug_csv(const ScoreHistory& history, const CalibrationModel& model);

}  // namespace semtree
