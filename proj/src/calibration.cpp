#include "semtree/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "semtree/util.hpp"

namespace semtree {

void record_slate(ScoreHistory& history, SlateRecord slate) {
    if (slate.entries.empty()) {
        throw std::invalid_argument("slate " + std::to_string(slate.slate_id) + " is empty");
    }
    std::unordered_set<std::uint64_t> seen;
    for (const auto& e : slate.entries) {
        if (e.observed_score < 0.0 || e.observed_score > 1.0) {
            throw std::invalid_argument("slate " + std::to_string(slate.slate_id) +
                                        ": score out of [0,1] for node " +
                                        std::to_string(e.node.value));
        }
        if (!seen.insert(e.node.value).second) {
            throw std::invalid_argument("slate " + std::to_string(slate.slate_id) +
                                        ": duplicate node " + std::to_string(e.node.value));
        }
    }
    if (!history.records.empty() && slate.slate_id <= history.records.back().slate_id) {
        throw std::invalid_argument("slate id " + std::to_string(slate.slate_id) +
                                    " not strictly increasing (last was " +
                                    std::to_string(history.records.back().slate_id) + ")");
    }
    history.records.push_back(std::move(slate));
}

namespace {

struct Workspace {
    // Deterministic parameter indexing: nodes by ascending id, slates by id.
    std::vector<NodeId> nodes;
    std::unordered_map<NodeId, std::size_t, NodeIdHash> node_index;
    std::vector<std::int64_t> bias_slates;  // multi-entry slates only
    std::unordered_map<std::int64_t, std::size_t> bias_index;
    // Flattened observations: (node_idx, bias_idx or -1, score)
    struct Obs {
        std::size_t node;
        std::ptrdiff_t bias;
        double score;
    };
    std::vector<Obs> observations;
};

Workspace build_workspace(const ScoreHistory& history) {
    Workspace ws;
    std::map<NodeId, std::vector<double>> by_node;  // ordered for determinism
    for (const auto& rec : history.records) {
        for (const auto& e : rec.entries) by_node[e.node];
    }
    ws.nodes.reserve(by_node.size());
    for (const auto& [id, _] : by_node) {
        ws.node_index.emplace(id, ws.nodes.size());
        ws.nodes.push_back(id);
    }
    for (const auto& rec : history.records) {
        std::ptrdiff_t bias = -1;
        if (rec.entries.size() >= 2) {
            bias = static_cast<std::ptrdiff_t>(ws.bias_slates.size());
            ws.bias_index.emplace(rec.slate_id, ws.bias_slates.size());
            ws.bias_slates.push_back(rec.slate_id);
        }
        for (const auto& e : rec.entries) {
            ws.observations.push_back({ws.node_index.at(e.node), bias, e.observed_score});
        }
    }
    return ws;
}

std::unordered_map<NodeId, double, NodeIdHash> observation_means(const ScoreHistory& history) {
    std::unordered_map<NodeId, double, NodeIdHash> sum;
    std::unordered_map<NodeId, std::size_t, NodeIdHash> count;
    for (const auto& rec : history.records) {
        for (const auto& e : rec.entries) {
            sum[e.node] += e.observed_score;
            count[e.node] += 1;
        }
    }
    for (auto& [id, s] : sum) s /= static_cast<double>(count.at(id));
    return sum;
}

double objective_value(const Workspace& ws, double log_scale,
                       const std::vector<double>& biases, const std::vector<double>& latents,
                       double gauge_penalty) {
    const double a = std::exp(log_scale);
    double loss = 0.0;
    for (const auto& obs : ws.observations) {
        const double b = obs.bias >= 0 ? biases[static_cast<std::size_t>(obs.bias)] : 0.0;
        const double r = obs.score - (a * latents[obs.node] + b);
        loss += r * r;
    }
    loss += gauge_penalty * (a - 1.0) * (a - 1.0);
    for (double b : biases) loss += gauge_penalty * b * b;
    return loss;
}

}  // namespace

CalibrationModel solve_mle(const ScoreHistory& history, const CalibrationConfig& config,
                           const CalibrationModel* warm_start) {
    if (history.empty()) {
        throw std::invalid_argument("solve_mle: empty history");
    }

    CalibrationModel model;
    model.config = config;

    if (config.mode == CalibrationMode::MeanOnly) {
        // With a == 1 and b == 0 the squared error decouples per node and the
        // minimizer is the plain observation mean; solve it in closed form.
        model.scale = 1.0;
        model.latent = observation_means(history);
        model.objective_trace.push_back(calibration_objective(history, model));
        return model;
    }
    if (config.mode == CalibrationMode::LastScore) {
        model.scale = 1.0;
        for (const auto& rec : history.records) {
            for (const auto& e : rec.entries) model.latent[e.node] = e.observed_score;
        }
        model.objective_trace.push_back(calibration_objective(history, model));
        return model;
    }

    Workspace ws = build_workspace(history);
    const auto means = observation_means(history);

    // Initial point: latent at the running mean, unit scale, zero biases;
    // warm-start values take precedence where available.
    double log_scale = 0.0;
    if (warm_start && warm_start->scale > 0.0) log_scale = std::log(warm_start->scale);
    std::vector<double> biases(ws.bias_slates.size(), 0.0);
    if (warm_start) {
        for (std::size_t i = 0; i < ws.bias_slates.size(); ++i) {
            auto it = warm_start->slate_bias.find(ws.bias_slates[i]);
            if (it != warm_start->slate_bias.end()) biases[i] = it->second;
        }
    }
    std::vector<double> latents(ws.nodes.size(), 0.0);
    for (std::size_t i = 0; i < ws.nodes.size(); ++i) {
        if (warm_start) {
            if (auto s = warm_start->latent_score(ws.nodes[i])) {
                latents[i] = *s;
                continue;
            }
        }
        latents[i] = means.at(ws.nodes[i]);
    }

    // Adam over [log_scale, biases..., latents...].
    const std::size_t dim = 1 + biases.size() + latents.size();
    std::vector<double> grad(dim, 0.0), m(dim, 0.0), v(dim, 0.0);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    double best_loss = objective_value(ws, log_scale, biases, latents, config.gauge_penalty);
    double best_log_scale = log_scale;
    std::vector<double> best_biases = biases;
    std::vector<double> best_latents = latents;

    model.objective_trace.reserve(static_cast<std::size_t>(config.steps) + 1);
    model.objective_trace.push_back(best_loss);

    for (int step = 1; step <= config.steps; ++step) {
        std::fill(grad.begin(), grad.end(), 0.0);
        const double a = std::exp(log_scale);
        double da = 2.0 * config.gauge_penalty * (a - 1.0);
        for (const auto& obs : ws.observations) {
            const std::size_t bi = static_cast<std::size_t>(obs.bias);
            const double b = obs.bias >= 0 ? biases[bi] : 0.0;
            const double r = obs.score - (a * latents[obs.node] + b);
            da += -2.0 * r * latents[obs.node];
            if (obs.bias >= 0) grad[1 + bi] += -2.0 * r;
            grad[1 + biases.size() + obs.node] += -2.0 * r * a;
        }
        for (std::size_t i = 0; i < biases.size(); ++i) {
            grad[1 + i] += 2.0 * config.gauge_penalty * biases[i];
        }
        grad[0] = da * a;  // chain rule through a = exp(log_scale)

        const double bc1 = 1.0 - std::pow(beta1, step);
        const double bc2 = 1.0 - std::pow(beta2, step);
        auto adam_step = [&](std::size_t i, double& param) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            param -= config.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        };
        adam_step(0, log_scale);
        for (std::size_t i = 0; i < biases.size(); ++i) adam_step(1 + i, biases[i]);
        for (std::size_t i = 0; i < latents.size(); ++i) {
            adam_step(1 + biases.size() + i, latents[i]);
        }

        const double loss = objective_value(ws, log_scale, biases, latents, config.gauge_penalty);
        if (loss < best_loss) {
            best_loss = loss;
            best_log_scale = log_scale;
            best_biases = biases;
            best_latents = latents;
        }
        model.objective_trace.push_back(best_loss);
    }

    model.scale = std::exp(best_log_scale);
    for (std::size_t i = 0; i < ws.bias_slates.size(); ++i) {
        model.slate_bias.emplace(ws.bias_slates[i], best_biases[i]);
    }
    for (const auto& rec : history.records) {
        if (rec.entries.size() < 2) model.slate_bias.emplace(rec.slate_id, 0.0);
    }
    for (std::size_t i = 0; i < ws.nodes.size(); ++i) {
        model.latent.emplace(ws.nodes[i], best_latents[i]);
    }
    return model;
}

double calibration_objective(const ScoreHistory& history, const CalibrationModel& model) {
    double loss = 0.0;
    for (const auto& rec : history.records) {
        double b = 0.0;
        if (rec.entries.size() >= 2) {
            auto it = model.slate_bias.find(rec.slate_id);
            if (it != model.slate_bias.end()) b = it->second;
        }
        for (const auto& e : rec.entries) {
            auto s = model.latent_score(e.node);
            const double fitted = model.scale * (s ? *s : 0.0) + b;
            const double r = e.observed_score - fitted;
            loss += r * r;
        }
    }
    loss += model.config.gauge_penalty * (model.scale - 1.0) * (model.scale - 1.0);
    for (const auto& rec : history.records) {
        if (rec.entries.size() < 2) continue;
        auto it = model.slate_bias.find(rec.slate_id);
        if (it != model.slate_bias.end()) {
            loss += model.config.gauge_penalty * it->second * it->second;
        }
    }
    return loss;
}

std::string calibration_debug_csv(const ScoreHistory& history, const CalibrationModel& model) {
    std::ostringstream out;
    out << "slate_id,node,observed,fitted\n";
    for (const auto& rec : history.records) {
        double b = 0.0;
        if (auto it = model.slate_bias.find(rec.slate_id); it != model.slate_bias.end()) {
            b = it->second;
        }
        for (const auto& e : rec.entries) {
            auto s = model.latent_score(e.node);
            const double fitted = model.scale * (s ? *s : 0.0) + b;
            out << rec.slate_id << ',' << e.node.value << ','
                << format_fixed(e.observed_score) << ',' << format_fixed(fitted) << '\n';
        }
    }
    return out.str();
}

}  // namespace semtree
