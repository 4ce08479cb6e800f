#pragma once

/// @file ga.hpp
/// @brief Genetic operators for permutation-encoded TSP tours and the
/// sequential GA built from them.
///
/// Lengths are minimized. A member's fitness is its share of the population's
/// total length (lower is better) and is kept for reporting only; parent
/// selection works on ranks, worst tour = rank 1, best tour = rank N.
///
/// Every operator takes its random generator explicitly, so a population can
/// be evolved on any worker thread and still reproduce bit-for-bit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "convergence.hpp"
#include "report.hpp"
#include "tsplib.hpp"

namespace pgatsp {

using Rng = std::mt19937_64;

struct Chromosome {
    Tour genes;
    Cost length = 0;
    double fitness = 0.0;
    std::uint32_t pop_id = 0;

    friend bool operator==(const Chromosome&, const Chromosome&) = default;
};

struct GaParams {
    std::size_t population_size = 100;
    double crossover_prob = 0.99;
    double mutation_prob = 0.021;
    /// Parent pairs more similar than this are rejected.
    double similarity_threshold = 0.80;
    std::size_t elite_count = 1;
    std::size_t max_parent_retries = 32;

    void validate() const {
        auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (population_size < 2) {
            throw std::invalid_argument("population_size must be at least 2");
        }
        if (!probability(crossover_prob) || !probability(mutation_prob) ||
            !probability(similarity_threshold)) {
            throw std::invalid_argument(
                "crossover, mutation and similarity values must lie in [0, 1]");
        }
        if (elite_count == 0 || elite_count >= population_size) {
            throw std::invalid_argument("elite_count must satisfy 0 < elite_count < population_size");
        }
    }
};

struct Population {
    std::uint32_t id = 0;
    std::vector<Chromosome> members;
    std::size_t best = 0;

    [[nodiscard]] const Chromosome& best_member() const { return members.at(best); }
};

inline bool is_permutation_of_n(std::span<const City> genes, std::size_t n) {
    if (genes.size() != n) {
        return false;
    }
    std::vector<bool> seen(n, false);
    for (City c : genes) {
        if (c >= n || seen[c]) {
            return false;
        }
        seen[c] = true;
    }
    return true;
}

/// Uniform random permutation of 0..n-1 (Fisher-Yates).
inline Tour random_tour(std::size_t n, Rng& rng) {
    Tour t(n);
    std::iota(t.begin(), t.end(), City{0});
    for (std::size_t i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(t[i], t[pick(rng)]);
    }
    return t;
}

/// Sum of directed edge costs including the closing edge back to genes[0].
inline Cost tour_length(std::span<const City> genes, const Instance& inst) {
    const std::size_t n = genes.size();
    Cost total = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        total += inst(genes[k], genes[k + 1]);
    }
    if (n > 0) {
        total += inst(genes[n - 1], genes[0]);
    }
    return total;
}

inline Chromosome make_chromosome(Tour genes, const Instance& inst, std::uint32_t pop_id = 0) {
    Chromosome c;
    c.length = tour_length(genes, inst);
    c.genes = std::move(genes);
    c.pop_id = pop_id;
    return c;
}

inline std::size_t index_of_best(std::span<const Chromosome> members) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < members.size(); ++i) {
        if (members[i].length < members[best].length) {
            best = i;
        }
    }
    return best;
}

inline void assign_fitness(Population& pop) {
    if (pop.members.empty()) {
        throw std::invalid_argument("assign_fitness: population is empty");
    }
    long double total = 0;
    for (const auto& m : pop.members) {
        total += static_cast<long double>(m.length);
    }
    for (auto& m : pop.members) {
        m.fitness = total > 0 ? static_cast<double>(static_cast<long double>(m.length) / total)
                              : 1.0 / static_cast<double>(pop.members.size());
    }
    pop.best = index_of_best(pop.members);
}

inline Population make_population(std::uint32_t id, std::vector<Chromosome> members) {
    Population pop;
    pop.id = id;
    pop.members = std::move(members);
    for (auto& m : pop.members) {
        m.pop_id = id;
    }
    assign_fitness(pop);
    return pop;
}

/// Selection probability of each rank 1..N: r / (N(N+1)/2).
inline std::vector<double> rank_probabilities(std::size_t population_size) {
    if (population_size < 2) {
        throw std::invalid_argument("rank_probabilities: population_size must be at least 2");
    }
    const double total =
        static_cast<double>(population_size) * static_cast<double>(population_size + 1) / 2.0;
    std::vector<double> p(population_size);
    for (std::size_t r = 1; r <= population_size; ++r) {
        p[r - 1] = static_cast<double>(r) / total;
    }
    return p;
}

/// Member indices ordered from rank 1 (longest) to rank N (shortest). Equal
/// lengths keep member order, so the earlier member gets the lower rank.
inline std::vector<std::size_t> rank_order(std::span<const Chromosome> members) {
    std::vector<std::size_t> order(members.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return members[a].length > members[b].length;
    });
    return order;
}

/// Rotation that puts city 0 first.
inline Tour canonical_rotation(std::span<const City> genes) {
    Tour out(genes.begin(), genes.end());
    const auto zero = std::find(out.begin(), out.end(), City{0});
    if (zero != out.end()) {
        std::rotate(out.begin(), zero, out.end());
    }
    return out;
}

namespace detail {

inline double positional_match(std::span<const City> a, std::span<const City> b) {
    if (a.empty()) {
        return 1.0;
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        same += a[i] == b[i] ? 1 : 0;
    }
    return static_cast<double>(same) / static_cast<double>(a.size());
}

} // namespace detail

/// Fraction of positions holding the same city once both tours are rotated to
/// start at city 0. Direction is not normalized: tours are directed.
inline double similarity(std::span<const City> a, std::span<const City> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("similarity: tours differ in length");
    }
    return detail::positional_match(canonical_rotation(a), canonical_rotation(b));
}

inline double similarity(const Chromosome& a, const Chromosome& b) {
    return similarity(a.genes, b.genes);
}

/// Rank-proportional sampler over a fixed population snapshot. Caches the rank
/// order and each member's canonical rotation so that repeated parent draws in
/// one generation cost O(N) each.
class ParentSelector {
  public:
    explicit ParentSelector(std::span<const Chromosome> members)
        : by_rank_(rank_order(members)) {
        if (members.size() < 2) {
            throw std::invalid_argument("ParentSelector: need at least two members");
        }
        const std::uint64_t n = members.size();
        total_weight_ = n * (n + 1) / 2;
        canonical_.reserve(members.size());
        for (const auto& m : members) {
            canonical_.push_back(canonical_rotation(m.genes));
        }
    }

    /// One member index, drawn with probability rank / (N(N+1)/2).
    std::size_t sample(Rng& rng) const {
        std::uniform_int_distribution<std::uint64_t> ticket(1, total_weight_);
        const std::uint64_t t = ticket(rng);
        // Smallest rank r with r(r+1)/2 >= t.
        auto r = static_cast<std::uint64_t>(
            std::ceil((std::sqrt(8.0 * static_cast<double>(t) + 1.0) - 1.0) / 2.0));
        while (r > 1 && (r - 1) * r / 2 >= t) {
            --r;
        }
        while (r * (r + 1) / 2 < t) {
            ++r;
        }
        return by_rank_[r - 1];
    }

    /// Two distinct members whose similarity does not exceed the threshold.
    /// After `max_parent_retries` rejected draws the constraint is waived and the
    /// last pair is returned.
    std::pair<std::size_t, std::size_t> pick(Rng& rng, const GaParams& params) const {
        std::pair<std::size_t, std::size_t> pair{0, 0};
        for (std::size_t attempt = 0; attempt <= params.max_parent_retries; ++attempt) {
            pair.first = sample(rng);
            do {
                pair.second = sample(rng);
            } while (pair.second == pair.first);
            if (detail::positional_match(canonical_[pair.first], canonical_[pair.second]) <=
                params.similarity_threshold) {
                return pair;
            }
        }
        return pair;
    }

  private:
    std::vector<std::size_t> by_rank_;
    std::vector<Tour> canonical_;
    std::uint64_t total_weight_ = 0;
};

inline std::pair<std::size_t, std::size_t> select_parents(const Population& pop, Rng& rng,
                                                          const GaParams& params) {
    return ParentSelector(pop.members).pick(rng, params);
}

/// Greedy crossover. Starting from parent_a's first city, repeatedly follow
/// the cheaper of the two parental successor edges that leads to an unvisited
/// city (ties favour parent_a). When both successors are already in the child,
/// continue from a uniformly random unvisited city.
inline Tour greedy_crossover(std::span<const City> parent_a, std::span<const City> parent_b,
                             const Instance& inst, Rng& rng) {
    const std::size_t n = parent_a.size();
    if (parent_b.size() != n || n == 0) {
        throw std::invalid_argument("greedy_crossover: parents must have equal, non-zero length");
    }
    std::vector<City> succ_a(n), succ_b(n);
    for (std::size_t k = 0; k < n; ++k) {
        succ_a[parent_a[k]] = parent_a[(k + 1) % n];
        succ_b[parent_b[k]] = parent_b[(k + 1) % n];
    }

    // Unvisited cities with O(1) removal: `pool` holds them, `slot` maps
    // city -> position in pool (n once visited).
    std::vector<City> pool(n);
    std::iota(pool.begin(), pool.end(), City{0});
    std::vector<std::size_t> slot(n);
    std::iota(slot.begin(), slot.end(), std::size_t{0});
    auto visit = [&](City c) {
        const std::size_t at = slot[c];
        const City moved = pool.back();
        pool[at] = moved;
        slot[moved] = at;
        pool.pop_back();
        slot[c] = n;
    };
    auto unvisited = [&](City c) { return slot[c] != n; };

    Tour child;
    child.reserve(n);
    City current = parent_a[0];
    child.push_back(current);
    visit(current);
    while (!pool.empty()) {
        const City ea = succ_a[current];
        const City eb = succ_b[current];
        const bool a_ok = unvisited(ea);
        const bool b_ok = unvisited(eb);
        City next;
        if (a_ok && b_ok) {
            next = inst(current, eb) < inst(current, ea) ? eb : ea;
        } else if (a_ok) {
            next = ea;
        } else if (b_ok) {
            next = eb;
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            next = pool[pick(rng)];
        }
        child.push_back(next);
        visit(next);
        current = next;
    }
    return child;
}

inline void swap_genes(Tour& genes, std::size_t i, std::size_t j) {
    std::swap(genes.at(i), genes.at(j));
}

/// With probability `mutation_prob`, swap two distinct uniformly chosen
/// positions. Returns whether a swap happened.
inline bool mutate(Tour& genes, Rng& rng, double mutation_prob) {
    if (genes.size() < 2) {
        return false;
    }
    std::bernoulli_distribution fire(mutation_prob);
    if (!fire(rng)) {
        return false;
    }
    std::uniform_int_distribution<std::size_t> first(0, genes.size() - 1);
    std::uniform_int_distribution<std::size_t> second(0, genes.size() - 2);
    const std::size_t i = first(rng);
    std::size_t j = second(rng);
    if (j >= i) {
        ++j;
    }
    swap_genes(genes, i, j);
    return true;
}

/// One generation: the `elite_count` shortest members are copied unchanged,
/// every other slot gets a (possibly mutated) offspring of a rank-selected
/// parent pair.
inline Population next_generation(const Population& pop, const Instance& inst, Rng& rng,
                                  const GaParams& params) {
    const std::size_t size = pop.members.size();
    if (size < 2) {
        throw std::invalid_argument("next_generation: population needs at least two members");
    }
    const std::size_t elites = std::min(params.elite_count, size - 1);

    std::vector<std::size_t> by_length(size);
    std::iota(by_length.begin(), by_length.end(), std::size_t{0});
    std::stable_sort(by_length.begin(), by_length.end(), [&](std::size_t a, std::size_t b) {
        return pop.members[a].length < pop.members[b].length;
    });

    std::vector<Chromosome> next;
    next.reserve(size);
    for (std::size_t e = 0; e < elites; ++e) {
        next.push_back(pop.members[by_length[e]]);
    }

    const ParentSelector selector(pop.members);
    std::bernoulli_distribution crossover(params.crossover_prob);
    while (next.size() < size) {
        const auto [ia, ib] = selector.pick(rng, params);
        const Chromosome& a = pop.members[ia];
        const Chromosome& b = pop.members[ib];
        Tour child = crossover(rng) ? greedy_crossover(a.genes, b.genes, inst, rng)
                                    : (b.length < a.length ? b.genes : a.genes);
        mutate(child, rng, params.mutation_prob);
        next.push_back(make_chromosome(std::move(child), inst, pop.id));
    }
    return make_population(pop.id, std::move(next));
}

inline Population random_population(std::uint32_t id, const Instance& inst, std::size_t size,
                                    Rng& rng) {
    std::vector<Chromosome> members;
    members.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        members.push_back(make_chromosome(random_tour(inst.dimension(), rng), inst, id));
    }
    return make_population(id, std::move(members));
}

struct SgaParams {
    GaParams ga;
    std::uint64_t max_generations = 10'000;
    /// Generations between convergence checks; matches the island GA's
    /// migration interval so both drivers share one stopping rule.
    std::uint64_t round_length = 50;
    std::uint64_t patience = 20;
    std::optional<Cost> target_length;

    void validate() const {
        ga.validate();
        if (max_generations < 1) {
            throw std::invalid_argument("max_generations must be at least 1");
        }
        if (round_length < 1) {
            throw std::invalid_argument("round_length must be at least 1");
        }
    }
};

inline nlohmann::json to_json(const GaParams& p) {
    return {{"population_size", p.population_size},
            {"crossover_prob", p.crossover_prob},
            {"mutation_prob", p.mutation_prob},
            {"similarity_threshold", p.similarity_threshold},
            {"elite_count", p.elite_count},
            {"max_parent_retries", p.max_parent_retries}};
}

inline nlohmann::json to_json(const SgaParams& p) {
    nlohmann::json j = to_json(p.ga);
    j["max_generations"] = p.max_generations;
    j["round_length"] = p.round_length;
    j["patience"] = p.patience;
    j["target_length"] = p.target_length ? nlohmann::json(*p.target_length) : nlohmann::json();
    return j;
}

/// Sequential GA over a single population (pop_id 0).
inline RunReport run_sga(const Instance& inst, const SgaParams& params, std::uint64_t seed) {
    params.validate();
    const auto started = std::chrono::steady_clock::now();
    Rng rng(seed);

    RunReport report;
    report.algorithm = "sga";
    report.instance = inst.name();
    report.dimension = inst.dimension();
    report.seed = seed;
    report.params = to_json(params);

    Population pop = random_population(0, inst, params.ga.population_size, rng);
    report.trajectory.push_back(pop.best_member().length);

    const ConvergencePolicy policy{params.max_generations, params.patience, params.target_length};
    std::vector<Checkpoint> history{{0, pop.best_member().length}};
    StopDecision decision = check_convergence(history, policy);

    std::uint64_t generation = 0;
    while (!decision.stop) {
        pop = next_generation(pop, inst, rng, params.ga);
        ++generation;
        report.trajectory.push_back(pop.best_member().length);
        if (generation % params.round_length == 0 || generation >= params.max_generations) {
            history.push_back({generation, pop.best_member().length});
            decision = check_convergence(history, policy);
        }
    }

    report.generations = generation;
    report.best_length = pop.best_member().length;
    report.best_tour = pop.best_member().genes;
    report.stop_reason = decision.reason;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    attach_reference(report, inst.known_optimum());
    return report;
}

} // namespace pgatsp
