// pgatsp: solve TSPLIB instances with the sequential or island GA, run
// paired benchmark suites and query the exact solvers.
//
//   pgatsp solve --algo pga --instance data/br17.atsp --seed 3
//   pgatsp bench --config data/suite.conf --out-dir out/
//   pgatsp exact --instance data/br17.atsp --registry data/optima.txt --write-registry

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <pgatsp/pgatsp.hpp>

namespace fs = std::filesystem;
using namespace pgatsp;

namespace {

/// Long flags shared by solve and bench; each maps onto a settings key of the
/// same name.
const std::vector<std::string> kRunFlags = {
    "algo",          "islands",       "pop-size",             "migration-interval",
    "max-generations", "crossover-prob", "mutation-prob",     "similarity-threshold",
    "patience",      "seed",          "workers",
};

struct FlagSink {
    std::map<std::string, std::string> values;
    std::vector<std::string> instances;
    std::string config;
    std::string out_dir;
    std::string registry;
};

void add_run_flags(CLI::App& cmd, FlagSink& sink) {
    for (const auto& name : kRunFlags) {
        cmd.add_option("--" + name, sink.values[name]);
    }
    cmd.add_option("--instance", sink.instances, "TSPLIB instance file (repeatable for bench)");
    cmd.add_option("--config", sink.config, "key = value settings file; flags override it");
    cmd.add_option("--out-dir", sink.out_dir, "directory for reports and CSV output");
    cmd.add_option("--registry", sink.registry, "known-optima registry file");
}

bench::KeyValues collect(const CLI::App& cmd, const FlagSink& sink) {
    bench::KeyValues flags;
    for (const auto& name : kRunFlags) {
        if (cmd.count("--" + name) > 0) {
            flags[name] = {sink.values.at(name)};
        }
    }
    if (!sink.instances.empty()) {
        flags["instance"] = sink.instances;
    }
    if (!sink.registry.empty()) {
        flags["registry"] = {sink.registry};
    }
    bench::KeyValues base;
    if (!sink.config.empty()) {
        base = bench::load_config(sink.config);
    }
    return bench::merge(std::move(base), flags);
}

std::optional<std::string> last_value(const bench::KeyValues& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) {
        return std::nullopt;
    }
    return it->second.back();
}

int cmd_solve(const CLI::App& cmd, const FlagSink& sink) {
    const auto kv = collect(cmd, sink);
    const auto instances = kv.find("instance");
    if (instances == kv.end() || instances->second.size() != 1) {
        std::cerr << "solve: exactly one --instance is required\n";
        return 2;
    }
    const std::string algo = last_value(kv, "algo").value_or("sga");
    const bench::RunSettings settings = bench::run_settings(kv, algo);
    settings.validate();

    const fs::path instance_path = instances->second.front();
    if (!fs::exists(instance_path)) {
        std::cerr << "solve: unknown instance '" << instance_path.string() << "'\n";
        return 2;
    }
    Instance inst = parse_instance_file(instance_path);
    const OptimaRegistry registry =
        last_value(kv, "registry") ? OptimaRegistry::load(*last_value(kv, "registry"))
                                   : OptimaRegistry{};
    inst = inst.with_known_optimum(bench::reference_optimum(inst, registry));

    bench::SolveOptions opts;
    fs::path out_dir;
    if (!sink.out_dir.empty()) {
        out_dir = sink.out_dir;
        fs::create_directories(out_dir);
        if (algo == "pga") {
            const fs::path store = out_dir / ("store-" + inst.name() + "-" +
                                              std::to_string(settings.seed));
            fs::remove_all(store);
            opts.store_dir = store;
            opts.dump_path = out_dir / ("population-" + inst.name() + "-" +
                                        std::to_string(settings.seed) + ".txt");
        }
    }

    const RunReport report = bench::solve(inst, settings, opts);
    std::cout << bench::summary_line(report) << '\n';
    if (!out_dir.empty()) {
        std::ofstream out(out_dir / "reports.jsonl", std::ios::app);
        out << to_json(report).dump() << '\n';
    }
    return 0;
}

int cmd_bench(const CLI::App& cmd, const FlagSink& sink, bool equal_evaluations,
              bool parallel_cells, const std::string& repeats) {
    auto kv = collect(cmd, sink);
    if (cmd.count("--equal-evaluations") > 0) {
        kv["equal-evaluations"] = {equal_evaluations ? "true" : "false"};
    }
    if (cmd.count("--parallel-cells") > 0) {
        kv["parallel-cells"] = {parallel_cells ? "true" : "false"};
    }
    if (cmd.count("--repeats") > 0) {
        kv["repeats"] = {repeats};
    }
    if (cmd.count("--algo") > 0) {
        kv["algos"] = kv["algo"];
    }
    const bench::SuiteConfig cfg = bench::suite_config(kv);
    const fs::path out_dir = sink.out_dir.empty() ? fs::path("bench-out") : fs::path(sink.out_dir);
    const auto outcome = bench::run_bench(cfg, out_dir, &std::cerr);
    std::cout << "wrote " << outcome.rows.size() << " runs to " << (out_dir / "results.csv").string()
              << '\n';
    if (outcome.any_failed) {
        std::cerr << "bench: at least one run failed; see the error column\n";
        return 1;
    }
    return 0;
}

int cmd_exact(const std::string& instance_path, const std::string& registry_path,
              bool write_registry) {
    if (!fs::exists(instance_path)) {
        std::cerr << "exact: unknown instance '" << instance_path << "'\n";
        return 2;
    }
    const Instance inst = parse_instance_file(instance_path);
    if (inst.dimension() > oracle::held_karp_max_cities) {
        std::cerr << "exact: " << inst.name() << " has " << inst.dimension()
                  << " cities; the exact solver cap is " << oracle::held_karp_max_cities << '\n';
        return 2;
    }
    const auto result = oracle::solve_exact(inst);
    std::cout << inst.name() << " optimum " << result.optimum_length << "\ntour";
    for (City c : result.optimum_tour) {
        std::cout << ' ' << c;
    }
    std::cout << '\n';

    if (!registry_path.empty()) {
        OptimaRegistry reg = OptimaRegistry::load(registry_path);
        if (const auto known = reg.lookup(inst.name()); known && *known != result.optimum_length) {
            std::cout << "registry value " << *known << " disagrees with the exact optimum\n";
        }
        if (write_registry) {
            reg.set(inst.name(), result.optimum_length);
            reg.save(registry_path);
        }
    } else if (write_registry) {
        std::cerr << "exact: --write-registry needs --registry\n";
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential and island-model genetic algorithms for the asymmetric TSP"};
    app.require_subcommand(1);

    FlagSink solve_flags;
    auto* solve = app.add_subcommand("solve", "run one algorithm on one instance");
    add_run_flags(*solve, solve_flags);

    FlagSink bench_flags;
    bool equal_evaluations = false;
    bool parallel_cells = false;
    std::string repeats;
    auto* bench_cmd = app.add_subcommand("bench", "run a paired benchmark suite");
    add_run_flags(*bench_cmd, bench_flags);
    bench_cmd->add_flag("--equal-evaluations", equal_evaluations,
                        "give the SGA islands x the PGA generation budget");
    bench_cmd->add_flag("--parallel-cells", parallel_cells,
                        "run cells concurrently (quality-only suites)");
    bench_cmd->add_option("--repeats", repeats, "seeds per (instance, algorithm) cell");

    std::string exact_instance;
    std::string exact_registry;
    bool write_registry = false;
    auto* exact = app.add_subcommand("exact", "solve an instance exactly (N <= 18)");
    exact->add_option("--instance", exact_instance)->required();
    exact->add_option("--registry", exact_registry, "known-optima registry file");
    exact->add_flag("--write-registry", write_registry, "record the optimum in the registry");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve) {
            return cmd_solve(*solve, solve_flags);
        }
        if (*bench_cmd) {
            return cmd_bench(*bench_cmd, bench_flags, equal_evaluations, parallel_cells, repeats);
        }
        if (*exact) {
            return cmd_exact(exact_instance, exact_registry, write_registry);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
