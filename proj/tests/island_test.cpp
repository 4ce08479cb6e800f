#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include <pgatsp/island.hpp>
#include <pgatsp/oracle.hpp>

#include "test_util.hpp"

using namespace pgatsp;

namespace {

IslandParams small_params(std::size_t islands = 4, std::size_t pop = 20) {
    IslandParams p;
    p.num_islands = islands;
    p.ga.population_size = pop;
    p.migration_interval = 5;
    p.max_total_generations = 20;
    p.convergence_patience = 0;
    return p;
}

Chromosome with_length(Cost length, City first) {
    Chromosome c;
    c.genes = {first, 1 - first};
    c.length = length;
    return c;
}

} // namespace

TEST(IslandParams, Validation) {
    IslandParams p;
    EXPECT_NO_THROW(p.validate());
    p.num_islands = 1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = IslandParams{};
    p.migration_interval = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = IslandParams{};
    p.ga.population_size = 1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(EvolveOutputSize, IslandsTimesResidentsPlusMigrants) {
    IslandParams p;
    EXPECT_EQ(evolve_output_size(p), 1090u);
    p.num_islands = 2;
    p.ga.population_size = 3;
    EXPECT_EQ(evolve_output_size(p), 8u);
}

TEST(TrimToCapacity, DropsLongestAndKeepsOrder) {
    std::vector<Chromosome> m{with_length(5, 0), with_length(9, 1), with_length(3, 0),
                              with_length(9, 0), with_length(7, 1)};
    trim_to_capacity(m, 3);
    ASSERT_EQ(m.size(), 3u);
    EXPECT_EQ(m[0].length, 5);
    EXPECT_EQ(m[1].length, 3);
    EXPECT_EQ(m[2].length, 7);

    std::vector<Chromosome> ties{with_length(4, 0), with_length(4, 1), with_length(4, 0)};
    trim_to_capacity(ties, 2);
    EXPECT_EQ(ties[0].genes.front(), 0u);
    EXPECT_EQ(ties[1].genes.front(), 1u);

    std::vector<Chromosome> small{with_length(1, 0)};
    trim_to_capacity(small, 5);
    EXPECT_EQ(small.size(), 1u);
}

TEST(InitJob, SeedsEveryIsland) {
    const Instance inst = random_instance(12, {1, 99}, 1);
    const IslandParams params = small_params();
    mr::MemoryStore store;
    mr::Engine engine(store, 2);
    const auto job = init_job(engine, inst, params, 42);
    EXPECT_EQ(job.output.num_parts, 4u);
    EXPECT_EQ(job.map_invocations, 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto part = store.read_part(job.output, i);
        ASSERT_EQ(part.size(), 20u);
        for (const auto& rec : part) {
            EXPECT_EQ(rec.key, static_cast<mr::Key>(i));
            const Chromosome c = codec::decode(rec.value);
            EXPECT_EQ(c.pop_id, i);
            EXPECT_TRUE(is_permutation_of_n(c.genes, 12));
            EXPECT_EQ(c.length, tour_length(c.genes, inst));
        }
    }
}

TEST(EvolveJob, RecordAccounting) {
    const Instance inst = random_instance(15, {1, 99}, 2);
    IslandParams params = small_params(10, 100);
    mr::MemoryStore store;
    mr::Engine engine(store, 3);
    const auto init = init_job(engine, inst, params, 9);
    const auto r1 = evolve_job(engine, init.output, inst, params, 1, 2, 9);
    EXPECT_EQ(r1.output_records, 1090u);
    EXPECT_EQ(r1.map_invocations, 1000u);
    const auto r2 = evolve_job(engine, r1.output, inst, params, 2, 2, 9);
    EXPECT_EQ(r2.map_invocations, 1090u);
    EXPECT_EQ(r2.output_records, 1090u);
    for (const auto& t : r2.reduce_tasks) {
        EXPECT_EQ(t.input_records, 109u);
        EXPECT_EQ(t.output_records, 109u);
    }

    // Part i holds 100 residents keyed i, then one migrant for each other island.
    for (std::size_t i = 0; i < 10; ++i) {
        const auto part = store.read_part(r2.output, i);
        std::map<mr::Key, int> by_key;
        Cost best = std::numeric_limits<Cost>::max();
        for (std::size_t k = 0; k < 100; ++k) {
            ++by_key[part[k].key];
            best = std::min(best, codec::decode(part[k].value).length);
        }
        EXPECT_EQ(by_key.size(), 1u);
        EXPECT_EQ(by_key.begin()->first, static_cast<mr::Key>(i));
        for (std::size_t k = 100; k < 109; ++k) {
            const Chromosome m = codec::decode(part[k].value);
            EXPECT_NE(part[k].key, static_cast<mr::Key>(i));
            EXPECT_EQ(m.pop_id, static_cast<std::uint32_t>(part[k].key));
            EXPECT_EQ(m.length, best);
        }
    }
}

TEST(EvolveJob, MissingIslandFailsBeforeRunning) {
    const Instance inst = random_instance(6, {1, 9}, 3);
    const IslandParams params = small_params(3, 4);
    mr::MemoryStore store;
    mr::Engine engine(store, 1);
    std::vector<mr::Record> recs;
    Rng rng(1);
    for (int k = 0; k < 4; ++k) {
        recs.push_back(to_record(make_chromosome(random_tour(6, rng), inst, 0), 0));
        recs.push_back(to_record(make_chromosome(random_tour(6, rng), inst, 1), 1));
    }
    const auto input = engine.seal_input("partial", recs);
    EXPECT_THROW(evolve_job(engine, input, inst, params, 1, 1, 1), std::runtime_error);
}

TEST(EvolveJob, SingleRecordIslandFails) {
    const Instance inst = random_instance(6, {1, 9}, 3);
    const IslandParams params = small_params(2, 4);
    mr::MemoryStore store;
    mr::Engine engine(store, 1);
    Rng rng(1);
    std::vector<mr::Record> recs{
        to_record(make_chromosome(random_tour(6, rng), inst, 0), 0),
        to_record(make_chromosome(random_tour(6, rng), inst, 0), 0),
        to_record(make_chromosome(random_tour(6, rng), inst, 1), 1)};
    const auto input = engine.seal_input("thin", recs);
    EXPECT_THROW(evolve_job(engine, input, inst, params, 1, 1, 1), mr::JobError);
}

TEST(RunPga, TrajectoryAndBudget) {
    const Instance inst = random_instance(14, {1, 200}, 4);
    IslandParams params = small_params();
    params.max_total_generations = 23; // rounds of 5,5,5,5,3
    mr::MemoryStore store;
    mr::Engine engine(store, 2);
    const PgaRun run = run_pga(engine, inst, params, 7);
    ASSERT_EQ(run.rounds.size(), 6u);
    EXPECT_EQ(run.rounds.back().cumulative_generations, 23u);
    EXPECT_EQ(run.report.generations, 23u);
    EXPECT_EQ(run.report.stop_reason, StopReason::budget);
    EXPECT_EQ(run.report.trajectory.size(), 6u);
    EXPECT_TRUE(trajectory_non_increasing(run.report.trajectory));
    EXPECT_EQ(run.report.best_length, tour_length(run.report.best_tour, inst));
    for (std::size_t r = 1; r < run.rounds.size(); ++r) {
        for (std::size_t i = 0; i < params.num_islands; ++i) {
            EXPECT_LE(run.rounds[r].island_best[i], run.rounds[r - 1].island_best[i]);
        }
    }
    EXPECT_EQ(store.names().size(), 7u); // input + job0..job5
}

TEST(RunPga, DeterministicAcrossWorkerCounts) {
    const Instance inst = random_instance(16, {1, 300}, 5);
    const IslandParams params = small_params();
    std::vector<mr::Bytes> finals;
    std::vector<Cost> bests;
    for (std::size_t workers : {1u, 3u, 8u}) {
        mr::MemoryStore store;
        mr::Engine engine(store, workers);
        const PgaRun run = run_pga(engine, inst, params, 11);
        bests.push_back(run.report.best_length);
        mr::Bytes all;
        for (const auto& name : store.names()) {
            const auto img = store.serialized(store.handle(name));
            all.insert(all.end(), img.begin(), img.end());
        }
        finals.push_back(std::move(all));
    }
    EXPECT_EQ(finals[0], finals[1]);
    EXPECT_EQ(finals[0], finals[2]);
    EXPECT_EQ(bests[0], bests[2]);
}

TEST(RunPga, StopsAtTarget) {
    const Instance inst = random_instance(8, {1, 100}, 6);
    const Cost opt = oracle::brute_force(inst).optimum_length;
    IslandParams params = small_params();
    params.max_total_generations = 5000;
    params.target_length = opt;
    mr::MemoryStore store;
    mr::Engine engine(store, 1);
    const PgaRun run = run_pga(engine, inst, params, 3);
    EXPECT_EQ(run.report.stop_reason, StopReason::target);
    EXPECT_EQ(run.report.best_length, opt);
}

TEST(RunPga, StopsOnStagnation) {
    const Instance inst = random_instance(7, {1, 50}, 8);
    IslandParams params = small_params();
    params.max_total_generations = 100'000;
    params.convergence_patience = 4;
    mr::MemoryStore store;
    mr::Engine engine(store, 1);
    const PgaRun run = run_pga(engine, inst, params, 3);
    EXPECT_EQ(run.report.stop_reason, StopReason::stagnation);
    const auto& t = run.report.trajectory;
    // Patience 4: the last four rounds share one best length.
    ASSERT_GE(t.size(), 4u);
    for (std::size_t k = t.size() - 4; k < t.size(); ++k) {
        EXPECT_EQ(t[k], t.back());
    }
}

TEST(RunPga, DirectoryStoreAndDump) {
    pgatsp::testing::TempDir dir("pga");
    const Instance inst = random_instance(10, {1, 100}, 12);
    const IslandParams params = small_params(3, 6);
    PgaOptions opts;
    opts.workers = 2;
    opts.store_dir = dir.path() / "store";
    opts.dump_path = dir.path() / "dump.txt";
    const RunReport report = run_pga(inst, params, 5, opts);

    EXPECT_TRUE(std::filesystem::exists(dir.path() / "store" / "job0" / "_SUCCESS"));
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "store" / "final.txt"));
    std::ifstream in(dir.path() / "dump.txt");
    std::string line;
    std::size_t lines = 0;
    Cost best = std::numeric_limits<Cost>::max();
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::uint32_t pop = 0;
        Cost length = 0;
        ss >> pop >> length;
        Tour t;
        City c;
        while (ss >> c) {
            t.push_back(c);
        }
        EXPECT_LT(pop, 3u);
        EXPECT_TRUE(is_permutation_of_n(t, 10));
        EXPECT_EQ(tour_length(t, inst), length);
        best = std::min(best, length);
        ++lines;
    }
    EXPECT_EQ(lines, 18u);
    EXPECT_EQ(best, report.best_length);

    // Same seed, in-memory store: same answer.
    const RunReport again = run_pga(inst, params, 5, PgaOptions{1, std::nullopt, std::nullopt});
    EXPECT_EQ(again.best_tour, report.best_tour);
    EXPECT_EQ(again.trajectory, report.trajectory);
}

TEST(RunPga, ErrorsNameTheRound) {
    const Instance inst = random_instance(6, {1, 9}, 3);
    const IslandParams params = small_params(2, 4);
    mr::MemoryStore store;
    store.seal("job2", {});
    mr::Engine engine(store, 1);
    try {
        run_pga(engine, inst, params, 1);
        FAIL() << "expected the second round to fail";
    } catch (const std::runtime_error& e) {
        EXPECT_EQ(std::string(e.what()).rfind("round 2: ", 0), 0u) << e.what();
    }
}
