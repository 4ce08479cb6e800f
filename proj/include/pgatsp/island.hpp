#pragma once

/// @file island.hpp
/// @brief Island-model GA ("static populations with migration") run as a
/// sequence of map/reduce jobs.
///
/// Job 0 creates every island's random population, one reduce task per
/// island. Each later job is one migration round:
///
///   map     identity; records are already keyed by island id
///   shuffle key mod num_islands, so island i lands on reduce task i
///   reduce  trim the island's residents plus inbound migrants back to
///           population_size by dropping the longest tours, evolve for one
///           migration interval, emit the population keyed i and one copy of
///           the island's best tour keyed to every other island
///
/// The driver reads each round's output, records a RoundSummary and decides
/// between rounds whether to stop.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "codec.hpp"
#include "convergence.hpp"
#include "ga.hpp"
#include "mapreduce.hpp"
#include "report.hpp"
#include "tsplib.hpp"

namespace pgatsp {

struct IslandParams {
    std::size_t num_islands = 10;
    std::uint64_t migration_interval = 50;
    GaParams ga;
    /// Per-island generation budget summed over rounds.
    std::uint64_t max_total_generations = 50'000;
    std::uint64_t convergence_patience = 20;
    std::optional<Cost> target_length;

    void validate() const {
        ga.validate();
        if (num_islands < 2) {
            throw std::invalid_argument("num_islands must be at least 2");
        }
        if (num_islands > static_cast<std::size_t>(std::numeric_limits<mr::Key>::max())) {
            throw std::invalid_argument("num_islands too large");
        }
        if (migration_interval < 1) {
            throw std::invalid_argument("migration_interval must be at least 1");
        }
        if (max_total_generations < migration_interval) {
            throw std::invalid_argument("max_total_generations must be >= migration_interval");
        }
    }

    [[nodiscard]] ConvergencePolicy policy() const {
        return {max_total_generations, convergence_patience, target_length};
    }
};

inline nlohmann::json to_json(const IslandParams& p) {
    nlohmann::json j = to_json(p.ga);
    j["num_islands"] = p.num_islands;
    j["migration_interval"] = p.migration_interval;
    j["max_total_generations"] = p.max_total_generations;
    j["convergence_patience"] = p.convergence_patience;
    j["target_length"] = p.target_length ? nlohmann::json(*p.target_length) : nlohmann::json();
    return j;
}

struct RoundSummary {
    std::uint64_t round = 0;
    std::vector<Cost> island_best;
    Tour best_tour;
    Cost best_length = 0;
    std::uint64_t cumulative_generations = 0;
    double wall_seconds = 0.0;
    mr::RecordSetHandle output;
};

/// Records emitted by one evolve round: every island's population plus one
/// migrant to each other island.
inline std::size_t evolve_output_size(const IslandParams& p) {
    return p.num_islands * (p.ga.population_size + p.num_islands - 1);
}

/// Keeps the `capacity` shortest tours. Among equal lengths the earlier member
/// survives; survivors keep their relative order.
inline void trim_to_capacity(std::vector<Chromosome>& members, std::size_t capacity) {
    if (members.size() <= capacity) {
        return;
    }
    std::vector<std::size_t> order(members.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return members[a].length < members[b].length;
    });
    std::vector<bool> keep(members.size(), false);
    for (std::size_t k = 0; k < capacity; ++k) {
        keep[order[k]] = true;
    }
    std::vector<Chromosome> kept;
    kept.reserve(capacity);
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (keep[i]) {
            kept.push_back(std::move(members[i]));
        }
    }
    members = std::move(kept);
}

inline mr::Record to_record(const Chromosome& c, mr::Key key) {
    return mr::Record{key, codec::encode(c)};
}

/// Job 0: one empty seed record per island; reduce task i emits
/// population_size random tours keyed i.
inline mr::JobResult init_job(mr::Engine& engine, const Instance& inst, const IslandParams& params,
                              std::uint64_t master_seed) {
    params.validate();
    std::vector<mr::Record> seeds;
    for (std::size_t i = 0; i < params.num_islands; ++i) {
        seeds.push_back(mr::Record{static_cast<mr::Key>(i), {}});
    }
    const auto input = engine.seal_input("input", std::move(seeds));

    mr::JobSpec spec;
    spec.job_id = 0;
    spec.input = input;
    spec.num_map_tasks = params.num_islands;
    spec.num_reduce_tasks = params.num_islands;
    spec.master_seed = master_seed;
    spec.reducer = [&inst, &params](mr::Key key, std::span<const mr::Bytes>, mr::Rng& rng) {
        std::vector<mr::Record> out;
        out.reserve(params.ga.population_size);
        for (std::size_t k = 0; k < params.ga.population_size; ++k) {
            out.push_back(to_record(
                make_chromosome(random_tour(inst.dimension(), rng), inst,
                                static_cast<std::uint32_t>(key)),
                key));
        }
        return out;
    };
    return engine.run_job(spec);
}

/// One migration round (job id = round). `generations` is normally the
/// migration interval; the driver shortens the last round to fit the budget.
inline mr::JobResult evolve_job(mr::Engine& engine, const mr::RecordSetHandle& input,
                                const Instance& inst, const IslandParams& params,
                                std::uint64_t round, std::uint64_t generations,
                                std::uint64_t master_seed) {
    params.validate();
    const std::size_t islands = params.num_islands;

    std::vector<std::size_t> inbound(islands, 0);
    for (const auto& rec : engine.store().read_all(input)) {
        if (rec.key < 0 || static_cast<std::size_t>(rec.key) >= islands) {
            throw std::runtime_error("record keyed " + std::to_string(rec.key) +
                                     " does not belong to any island");
        }
        ++inbound[static_cast<std::size_t>(rec.key)];
    }
    for (std::size_t i = 0; i < islands; ++i) {
        if (inbound[i] == 0) {
            throw std::runtime_error("island " + std::to_string(i) + " has no input records");
        }
    }

    mr::JobSpec spec;
    spec.job_id = round;
    spec.input = input;
    spec.num_map_tasks = islands;
    spec.num_reduce_tasks = islands;
    spec.master_seed = master_seed;
    spec.reducer = [&inst, &params, islands, generations](mr::Key key,
                                                         std::span<const mr::Bytes> values,
                                                         mr::Rng& rng) {
        if (values.size() < 2) {
            throw std::runtime_error("island " + std::to_string(key) + " received " +
                                     std::to_string(values.size()) + " records");
        }
        std::vector<Chromosome> members;
        members.reserve(values.size());
        for (const auto& v : values) {
            Chromosome c = codec::decode(v);
            if (c.genes.size() != inst.dimension()) {
                throw std::runtime_error("island " + std::to_string(key) +
                                         ": chromosome size does not match instance");
            }
            members.push_back(std::move(c));
        }
        trim_to_capacity(members, params.ga.population_size);

        Population pop = make_population(static_cast<std::uint32_t>(key), std::move(members));
        for (std::uint64_t g = 0; g < generations; ++g) {
            pop = next_generation(pop, inst, rng, params.ga);
        }

        std::vector<mr::Record> out;
        out.reserve(pop.members.size() + islands - 1);
        for (const auto& m : pop.members) {
            out.push_back(to_record(m, key));
        }
        Chromosome migrant = pop.best_member();
        for (std::size_t other = 0; other < islands; ++other) {
            if (static_cast<mr::Key>(other) == key) {
                continue;
            }
            migrant.pop_id = static_cast<std::uint32_t>(other);
            out.push_back(to_record(migrant, static_cast<mr::Key>(other)));
        }
        return out;
    };
    return engine.run_job(spec);
}

/// Resident records of island i are the records in part i keyed i; everything
/// else in part i is a migrant sent by island i.
inline RoundSummary summarize_round(const mr::RecordStore& store, const mr::RecordSetHandle& set,
                                    const IslandParams& params, std::uint64_t round,
                                    std::uint64_t cumulative_generations) {
    RoundSummary s;
    s.round = round;
    s.output = set;
    s.cumulative_generations = cumulative_generations;
    s.island_best.assign(params.num_islands, std::numeric_limits<Cost>::max());
    s.best_length = std::numeric_limits<Cost>::max();
    for (std::size_t part = 0; part < set.num_parts; ++part) {
        for (const auto& rec : store.read_part(set, part)) {
            if (static_cast<std::size_t>(rec.key) != part) {
                continue;
            }
            Chromosome c = codec::decode(rec.value);
            if (c.length < s.island_best[part]) {
                s.island_best[part] = c.length;
            }
            if (c.length < s.best_length) {
                s.best_length = c.length;
                s.best_tour = std::move(c.genes);
            }
        }
    }
    return s;
}

inline StopDecision check_convergence(std::span<const RoundSummary> history,
                                      const IslandParams& params) {
    std::vector<Checkpoint> points;
    points.reserve(history.size());
    for (const auto& r : history) {
        points.push_back({r.cumulative_generations, r.best_length});
    }
    return check_convergence(points, params.policy());
}

/// Text dump, one tour per line: `pop_id length c0 c1 ... c{N-1}`.
inline void write_population_dump(std::ostream& out, std::span<const mr::Record> records) {
    for (const auto& rec : records) {
        const Chromosome c = codec::decode(rec.value);
        out << c.pop_id << ' ' << c.length;
        for (City g : c.genes) {
            out << ' ' << g;
        }
        out << '\n';
    }
}

/// Residents of every island in a round's output (migrants excluded).
inline std::vector<mr::Record> resident_records(const mr::RecordStore& store,
                                                const mr::RecordSetHandle& set) {
    std::vector<mr::Record> out;
    for (std::size_t part = 0; part < set.num_parts; ++part) {
        for (auto& rec : store.read_part(set, part)) {
            if (static_cast<std::size_t>(rec.key) == part) {
                out.push_back(std::move(rec));
            }
        }
    }
    return out;
}

struct PgaRun {
    RunReport report;
    std::vector<RoundSummary> rounds;
};

/// Driver loop on a caller-supplied engine (and therefore store).
inline PgaRun run_pga(mr::Engine& engine, const Instance& inst, const IslandParams& params,
                      std::uint64_t master_seed) {
    params.validate();
    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };

    PgaRun run;
    RunReport& report = run.report;
    report.algorithm = "pga";
    report.instance = inst.name();
    report.dimension = inst.dimension();
    report.seed = master_seed;
    report.params = to_json(params);

    mr::JobResult job;
    try {
        job = init_job(engine, inst, params, master_seed);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("round 0: ") + e.what());
    }
    run.rounds.push_back(summarize_round(engine.store(), job.output, params, 0, 0));
    run.rounds.back().wall_seconds = elapsed();
    report.trajectory.push_back(run.rounds.back().best_length);

    StopDecision decision = check_convergence(run.rounds, params);
    std::uint64_t generations = 0;
    std::uint64_t round = 0;
    while (!decision.stop) {
        ++round;
        const std::uint64_t this_round =
            std::min(params.migration_interval, params.max_total_generations - generations);
        try {
            job = evolve_job(engine, job.output, inst, params, round, this_round, master_seed);
        } catch (const std::exception& e) {
            throw std::runtime_error("round " + std::to_string(round) + ": " + e.what());
        }
        generations += this_round;
        run.rounds.push_back(summarize_round(engine.store(), job.output, params, round, generations));
        run.rounds.back().wall_seconds = elapsed();
        report.trajectory.push_back(run.rounds.back().best_length);
        decision = check_convergence(run.rounds, params);
    }

    const RoundSummary& last = run.rounds.back();
    report.best_length = last.best_length;
    report.best_tour = last.best_tour;
    report.generations = generations;
    report.stop_reason = decision.reason;
    report.wall_seconds = elapsed();
    attach_reference(report, inst.known_optimum());
    return run;
}

struct PgaOptions {
    std::size_t workers = WorkerPool::default_size();
    /// Directory-backed store when set, in-memory otherwise.
    std::optional<std::filesystem::path> store_dir;
    /// Readable dump of the final populations.
    std::optional<std::filesystem::path> dump_path;
};

inline RunReport run_pga(const Instance& inst, const IslandParams& params,
                         std::uint64_t master_seed, const PgaOptions& options = {}) {
    std::unique_ptr<mr::RecordStore> store;
    if (options.store_dir) {
        store = std::make_unique<mr::DirectoryStore>(*options.store_dir);
    } else {
        store = std::make_unique<mr::MemoryStore>();
    }
    mr::Engine engine(*store, options.workers);
    PgaRun run = run_pga(engine, inst, params, master_seed);

    const auto& final_set = run.rounds.back().output;
    const auto residents = resident_records(*store, final_set);
    auto dump_to = [&](const std::filesystem::path& path) {
        if (path.has_parent_path()) {
            std::filesystem::create_directories(path.parent_path());
        }
        std::ofstream out(path, std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write population dump '" + path.string() + "'");
        }
        write_population_dump(out, residents);
    };
    if (options.store_dir) {
        dump_to(*options.store_dir / "final.txt");
    }
    if (options.dump_path) {
        dump_to(*options.dump_path);
    }
    return std::move(run.report);
}

} // namespace pgatsp
