#pragma once

/// @file convergence.hpp
/// @brief Stopping policy shared by the sequential and the island GA.
///
/// Both drivers evaluate the policy between rounds: a round is one migration
/// interval for the island GA and an equally long block of generations for the
/// sequential GA.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "tsplib.hpp"

namespace pgatsp {

enum class StopReason { none, budget, stagnation, target };

inline std::string_view to_string(StopReason r) noexcept {
    switch (r) {
    case StopReason::none:
        return "none";
    case StopReason::budget:
        return "budget";
    case StopReason::stagnation:
        return "stagnation";
    case StopReason::target:
        return "target";
    }
    return "none";
}

struct ConvergencePolicy {
    std::uint64_t max_generations = 50'000;
    /// Consecutive rounds with an unchanged best before stopping; 0 disables.
    std::uint64_t patience = 20;
    std::optional<Cost> target_length;
};

/// State of a run after a round.
struct Checkpoint {
    std::uint64_t cumulative_generations = 0;
    Cost best_length = 0;
};

struct StopDecision {
    bool stop = false;
    StopReason reason = StopReason::none;

    static StopDecision proceed() { return {}; }
    static StopDecision halt(StopReason r) { return {true, r}; }
};

/// Precedence when several conditions hold: target, budget, stagnation.
inline StopDecision check_convergence(std::span<const Checkpoint> history,
                                      const ConvergencePolicy& policy) {
    if (history.empty()) {
        return StopDecision::proceed();
    }
    const Checkpoint& last = history.back();
    if (policy.target_length && last.best_length <= *policy.target_length) {
        return StopDecision::halt(StopReason::target);
    }
    if (last.cumulative_generations >= policy.max_generations) {
        return StopDecision::halt(StopReason::budget);
    }
    if (policy.patience > 0) {
        std::uint64_t unchanged = 0;
        for (auto it = history.rbegin(); it != history.rend(); ++it) {
            if (it->best_length != last.best_length) {
                break;
            }
            ++unchanged;
        }
        if (unchanged >= policy.patience) {
            return StopDecision::halt(StopReason::stagnation);
        }
    }
    return StopDecision::proceed();
}

} // namespace pgatsp
