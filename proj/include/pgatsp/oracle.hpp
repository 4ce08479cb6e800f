#pragma once

/// @file oracle.hpp
/// @brief Exact solvers used as ground truth: full enumeration for tiny
/// instances and Held-Karp dynamic programming up to 18 cities.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsplib.hpp"

namespace pgatsp::oracle {

inline constexpr std::size_t brute_force_max_cities = 11;
inline constexpr std::size_t held_karp_max_cities = 18;

struct ExactResult {
    Cost optimum_length = 0;
    Tour optimum_tour;
};

class CapacityError : public std::invalid_argument {
  public:
    CapacityError(const std::string& solver, std::size_t n, std::size_t cap)
        : std::invalid_argument(solver + ": instance has " + std::to_string(n) +
                                " cities, cap is " + std::to_string(cap)) {}
};

/// Enumerates the (N-1)! directed tours starting at city 0 and returns the
/// lexicographically first shortest one.
inline ExactResult brute_force(const Instance& inst) {
    const std::size_t n = inst.dimension();
    if (n > brute_force_max_cities) {
        throw CapacityError("brute_force", n, brute_force_max_cities);
    }
    Tour tour(n);
    std::iota(tour.begin(), tour.end(), City{0});

    ExactResult best{std::numeric_limits<Cost>::max(), tour};
    do {
        Cost len = 0;
        for (std::size_t k = 0; k < n; ++k) {
            len += inst(tour[k], tour[(k + 1) % n]);
        }
        if (len < best.optimum_length) {
            best.optimum_length = len;
            best.optimum_tour = tour;
        }
    } while (std::next_permutation(tour.begin() + 1, tour.end()));
    return best;
}

/// Held-Karp over (visited subset of cities 1..N-1, last city). Memory is
/// 2^(N-1) * (N-1) costs plus one predecessor byte per state.
inline ExactResult held_karp(const Instance& inst) {
    const std::size_t n = inst.dimension();
    if (n > held_karp_max_cities) {
        throw CapacityError("held_karp", n, held_karp_max_cities);
    }
    constexpr Cost inf = std::numeric_limits<Cost>::max() / 4;
    const std::size_t m = n - 1; // cities 1..n-1 map to bits 0..m-1
    const std::size_t subsets = std::size_t{1} << m;

    std::vector<Cost> cost(subsets * m, inf);
    std::vector<std::uint8_t> parent(subsets * m, 0);
    auto at = [m](std::size_t set, std::size_t last) { return set * m + last; };

    for (std::size_t j = 0; j < m; ++j) {
        cost[at(std::size_t{1} << j, j)] = inst(0, j + 1);
        parent[at(std::size_t{1} << j, j)] = 0;
    }
    for (std::size_t set = 1; set < subsets; ++set) {
        for (std::size_t last = 0; last < m; ++last) {
            if (!(set & (std::size_t{1} << last))) {
                continue;
            }
            const std::size_t prev_set = set ^ (std::size_t{1} << last);
            if (prev_set == 0) {
                continue;
            }
            Cost best = inf;
            std::uint8_t best_prev = 0;
            for (std::size_t prev = 0; prev < m; ++prev) {
                if (!(prev_set & (std::size_t{1} << prev))) {
                    continue;
                }
                const Cost c = cost[at(prev_set, prev)] + inst(prev + 1, last + 1);
                if (c < best) {
                    best = c;
                    best_prev = static_cast<std::uint8_t>(prev + 1);
                }
            }
            cost[at(set, last)] = best;
            parent[at(set, last)] = best_prev;
        }
    }

    const std::size_t full = subsets - 1;
    Cost best = inf;
    std::size_t best_last = 0;
    for (std::size_t last = 0; last < m; ++last) {
        const Cost c = cost[at(full, last)] + inst(last + 1, 0);
        if (c < best) {
            best = c;
            best_last = last;
        }
    }

    // Walk predecessors back from the last city; parent value 0 means "came from city 0".
    Tour reversed;
    reversed.reserve(n);
    std::size_t set = full;
    std::size_t last = best_last;
    while (true) {
        reversed.push_back(static_cast<City>(last + 1));
        const std::uint8_t p = parent[at(set, last)];
        set ^= std::size_t{1} << last;
        if (p == 0) {
            break;
        }
        last = p - 1u;
    }
    reversed.push_back(0);
    return ExactResult{best, Tour(reversed.rbegin(), reversed.rend())};
}

/// Enumeration for very small instances, Held-Karp otherwise. Throws
/// CapacityError beyond 18 cities.
inline ExactResult solve_exact(const Instance& inst) {
    if (inst.dimension() <= 8) {
        return brute_force(inst);
    }
    return held_karp(inst);
}

} // namespace pgatsp::oracle
