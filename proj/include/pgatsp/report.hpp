#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "convergence.hpp"
#include "tsplib.hpp"

namespace pgatsp {

/// Outcome of one SGA or PGA run.
struct RunReport {
    std::string algorithm; // "sga" or "pga"
    std::string instance;
    std::size_t dimension = 0;
    std::uint64_t seed = 0;
    nlohmann::json params = nlohmann::json::object();
    Cost best_length = 0;
    Tour best_tour;
    /// Best length at generation 0 and after every generation (SGA) or round (PGA).
    std::vector<Cost> trajectory;
    std::uint64_t generations = 0;
    double wall_seconds = 0.0;
    StopReason stop_reason = StopReason::none;
    std::optional<double> accuracy;
};

/// 100 * optimum / best, so 100 means optimal.
inline double accuracy_percent(Cost optimum, Cost best) {
    if (best <= 0) {
        return optimum <= 0 ? 100.0 : 0.0;
    }
    return 100.0 * static_cast<double>(optimum) / static_cast<double>(best);
}

inline void attach_reference(RunReport& report, std::optional<Cost> optimum) {
    if (optimum) {
        report.accuracy = accuracy_percent(*optimum, report.best_length);
    }
}

inline bool trajectory_non_increasing(const std::vector<Cost>& t) {
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i] > t[i - 1]) {
            return false;
        }
    }
    return true;
}

inline nlohmann::json to_json(const RunReport& r) {
    nlohmann::json j;
    j["algo"] = r.algorithm;
    j["instance"] = r.instance;
    j["n"] = r.dimension;
    j["seed"] = r.seed;
    j["params"] = r.params;
    j["best_length"] = r.best_length;
    j["best_tour"] = r.best_tour;
    j["trajectory"] = r.trajectory;
    j["generations"] = r.generations;
    j["wall_seconds"] = r.wall_seconds;
    j["stop_reason"] = std::string(to_string(r.stop_reason));
    j["accuracy"] = r.accuracy ? nlohmann::json(*r.accuracy) : nlohmann::json(nullptr);
    return j;
}

} // namespace pgatsp
