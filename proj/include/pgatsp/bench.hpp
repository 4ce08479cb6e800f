#pragma once

/// @file bench.hpp
/// @brief Run settings, suite configuration files and the benchmark runner
/// behind the `pgatsp` command line tool.
///
/// Settings are plain key/value pairs whose keys are the long flag names
/// without the leading dashes (`max-generations`, `islands`, ...). A config
/// file holds one `key = value` per line with `#` comments; `instance` may be
/// repeated. Command line flags override the file.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "ga.hpp"
#include "island.hpp"
#include "oracle.hpp"
#include "report.hpp"
#include "tsplib.hpp"

namespace pgatsp::bench {

/// Multi-valued key/value settings; later values override earlier ones for
/// scalar keys, `instance` accumulates.
using KeyValues = std::map<std::string, std::vector<std::string>>;

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Parses `key = value` lines. Relative `instance` and `registry` paths are
/// resolved against the config file's directory.
inline KeyValues parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
    KeyValues kv;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = pgatsp::detail::trim(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = pgatsp::detail::trim(line.substr(0, hash));
        }
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key(pgatsp::detail::trim(line.substr(0, eq)));
        std::string value(pgatsp::detail::trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        if ((key == "instance" || key == "registry") && !base_dir.empty() &&
            std::filesystem::path(value).is_relative()) {
            value = (base_dir / value).lexically_normal().string();
        }
        kv[key].push_back(value);
    }
    return kv;
}

inline KeyValues load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path.string() + "'");
    }
    return parse_config(in, path.parent_path());
}

/// Flags win over config values; `instance` from flags replaces the file's list.
inline KeyValues merge(KeyValues base, const KeyValues& overrides) {
    for (const auto& [k, v] : overrides) {
        base[k] = v;
    }
    return base;
}

namespace detail {

inline const std::string* last(const KeyValues& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) {
        return nullptr;
    }
    return &it->second.back();
}

template <class T>
T number(const KeyValues& kv, const std::string& key, T fallback) {
    const std::string* v = last(kv, key);
    if (!v) {
        return fallback;
    }
    std::istringstream ss(*v);
    T out{};
    if constexpr (std::is_unsigned_v<T>) {
        if (!v->empty() && v->front() == '-') {
            throw ConfigError("--" + key + ": expected a non-negative integer, got '" + *v + "'");
        }
    }
    if (!(ss >> out) || !(ss >> std::ws).eof()) {
        throw ConfigError("--" + key + ": cannot parse '" + *v + "'");
    }
    return out;
}

inline bool flag(const KeyValues& kv, const std::string& key, bool fallback) {
    const std::string* v = last(kv, key);
    if (!v) {
        return fallback;
    }
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
        return true;
    }
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
        return false;
    }
    throw ConfigError("--" + key + ": expected a boolean, got '" + *v + "'");
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto t = pgatsp::detail::trim(item);
        if (!t.empty()) {
            out.emplace_back(t);
        }
    }
    return out;
}

} // namespace detail

/// Fully resolved parameters for one algorithm run.
struct RunSettings {
    std::string algo = "sga";
    std::size_t islands = 10;
    std::size_t pop_size = 100;
    std::uint64_t migration_interval = 50;
    /// SGA: generations; PGA: per-island generations over all rounds.
    std::uint64_t max_generations = 10'000;
    double crossover_prob = 0.99;
    double mutation_prob = 0.021;
    double similarity_threshold = 0.80;
    std::uint64_t patience = 20;
    std::uint64_t seed = 1;
    std::size_t workers = WorkerPool::default_size();

    [[nodiscard]] GaParams ga() const {
        GaParams p;
        p.population_size = pop_size;
        p.crossover_prob = crossover_prob;
        p.mutation_prob = mutation_prob;
        p.similarity_threshold = similarity_threshold;
        return p;
    }

    [[nodiscard]] SgaParams sga() const {
        SgaParams p;
        p.ga = ga();
        p.max_generations = max_generations;
        p.round_length = migration_interval;
        p.patience = patience;
        return p;
    }

    [[nodiscard]] IslandParams pga() const {
        IslandParams p;
        p.num_islands = islands;
        p.migration_interval = migration_interval;
        p.ga = ga();
        p.max_total_generations = max_generations;
        p.convergence_patience = patience;
        return p;
    }

    void validate() const {
        if (algo == "sga") {
            sga().validate();
        } else if (algo == "pga") {
            pga().validate();
        } else {
            throw ConfigError("--algo must be 'sga' or 'pga', got '" + algo + "'");
        }
    }
};

/// Default generation budget: 10,000 for the SGA, 50,000 for the PGA.
inline std::uint64_t default_generations(const std::string& algo) {
    return algo == "pga" ? 50'000 : 10'000;
}

inline RunSettings run_settings(const KeyValues& kv, const std::string& algo) {
    RunSettings s;
    s.algo = algo;
    s.islands = detail::number<std::size_t>(kv, "islands", s.islands);
    s.pop_size = detail::number<std::size_t>(kv, "pop-size", s.pop_size);
    s.migration_interval =
        detail::number<std::uint64_t>(kv, "migration-interval", s.migration_interval);
    s.max_generations = detail::number<std::uint64_t>(kv, "max-generations", default_generations(algo));
    s.crossover_prob = detail::number<double>(kv, "crossover-prob", s.crossover_prob);
    s.mutation_prob = detail::number<double>(kv, "mutation-prob", s.mutation_prob);
    s.similarity_threshold =
        detail::number<double>(kv, "similarity-threshold", s.similarity_threshold);
    s.patience = detail::number<std::uint64_t>(kv, "patience", s.patience);
    s.seed = detail::number<std::uint64_t>(kv, "seed", s.seed);
    s.workers = detail::number<std::size_t>(kv, "workers", s.workers);
    if (s.workers == 0) {
        throw ConfigError("--workers must be at least 1");
    }
    return s;
}

/// Reference optimum for accuracy: Held-Karp when the instance is small enough,
/// otherwise the registry entry, otherwise none.
inline std::optional<Cost> reference_optimum(const Instance& inst, const OptimaRegistry& registry) {
    if (inst.dimension() <= oracle::held_karp_max_cities) {
        return oracle::solve_exact(inst).optimum_length;
    }
    return registry.lookup(inst.name());
}

struct SolveOptions {
    std::optional<std::filesystem::path> store_dir;
    std::optional<std::filesystem::path> dump_path;
};

inline RunReport solve(const Instance& inst, const RunSettings& s, const SolveOptions& opts = {}) {
    s.validate();
    if (s.algo == "sga") {
        return run_sga(inst, s.sga(), s.seed);
    }
    PgaOptions p;
    p.workers = s.workers;
    p.store_dir = opts.store_dir;
    p.dump_path = opts.dump_path;
    return run_pga(inst, s.pga(), s.seed, p);
}

inline std::string summary_line(const RunReport& r) {
    std::ostringstream out;
    out << r.algorithm << ' ' << r.instance << " n=" << r.dimension << " seed=" << r.seed
        << " best=" << r.best_length << " generations=" << r.generations
        << " stop=" << to_string(r.stop_reason) << std::fixed << std::setprecision(3)
        << " seconds=" << r.wall_seconds;
    if (r.accuracy) {
        out << " accuracy=" << std::setprecision(2) << *r.accuracy << '%';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Benchmark suites

struct SuiteConfig {
    std::vector<std::filesystem::path> instances;
    std::vector<std::string> algos{"sga", "pga"};
    std::size_t repeats = 10;
    std::uint64_t base_seed = 1;
    /// Scale the SGA's generation budget by the island count so both
    /// algorithms create the same number of offspring.
    bool equal_evaluations = false;
    bool parallel_cells = false;
    std::optional<std::filesystem::path> registry;
    KeyValues settings;
};

inline SuiteConfig suite_config(const KeyValues& kv) {
    SuiteConfig c;
    if (const auto it = kv.find("instance"); it != kv.end()) {
        for (const auto& p : it->second) {
            c.instances.emplace_back(p);
        }
    }
    if (c.instances.empty()) {
        throw ConfigError("suite lists no instances");
    }
    if (const std::string* a = detail::last(kv, "algos")) {
        c.algos = detail::split_list(*a);
    } else if (const std::string* one = detail::last(kv, "algo")) {
        c.algos = {*one};
    }
    for (const auto& a : c.algos) {
        if (a != "sga" && a != "pga") {
            throw ConfigError("unknown algorithm '" + a + "' in suite");
        }
    }
    c.repeats = detail::number<std::size_t>(kv, "repeats", c.repeats);
    if (c.repeats == 0) {
        throw ConfigError("repeats must be at least 1");
    }
    c.base_seed = detail::number<std::uint64_t>(kv, "seed", c.base_seed);
    c.equal_evaluations = detail::flag(kv, "equal-evaluations", false);
    c.parallel_cells = detail::flag(kv, "parallel-cells", false);
    if (const std::string* r = detail::last(kv, "registry")) {
        c.registry = *r;
    }
    c.settings = kv;
    return c;
}

struct ResultRow {
    std::string instance;
    std::size_t n = 0;
    std::string algo;
    std::uint64_t seed = 0;
    std::optional<Cost> best;
    std::optional<double> accuracy;
    double seconds = 0.0;
    std::uint64_t generations = 0;
    std::string error;
    std::vector<Cost> trajectory;
};

struct SummaryRow {
    std::string instance;
    std::size_t n = 0;
    std::string algo;
    std::size_t runs = 0;
    std::size_t failed = 0;
    double mean_best = 0.0;
    Cost min_best = 0;
    std::optional<double> mean_accuracy;
    double mean_seconds = 0.0;
};

struct BenchOutcome {
    std::vector<ResultRow> rows;
    std::vector<SummaryRow> summary;
    bool any_failed = false;
};

inline const char* results_header() {
    return "instance,n,algo,seed,best,accuracy,seconds,generations,error";
}

inline const char* summary_header() {
    return "instance,n,algo,runs,failed,mean_best,min_best,mean_accuracy,mean_seconds";
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return out + "\"";
}

inline std::string fixed(double v, int digits) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << v;
    return out.str();
}

} // namespace detail

inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << results_header() << '\n';
    for (const auto& r : rows) {
        out << detail::csv_field(r.instance) << ',' << r.n << ',' << r.algo << ',' << r.seed << ','
            << (r.best ? std::to_string(*r.best) : "") << ','
            << (r.accuracy ? detail::fixed(*r.accuracy, 6) : "") << ','
            << detail::fixed(r.seconds, 6) << ',' << r.generations << ','
            << detail::csv_field(r.error) << '\n';
    }
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << summary_header() << '\n';
    for (const auto& s : rows) {
        out << detail::csv_field(s.instance) << ',' << s.n << ',' << s.algo << ',' << s.runs << ','
            << s.failed << ',' << detail::fixed(s.mean_best, 6) << ','
            << (s.runs > s.failed ? std::to_string(s.min_best) : "") << ','
            << (s.mean_accuracy ? detail::fixed(*s.mean_accuracy, 6) : "") << ','
            << detail::fixed(s.mean_seconds, 6) << '\n';
    }
}

inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    std::vector<SummaryRow> out;
    for (const auto& r : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
            return s.instance == r.instance && s.algo == r.algo;
        });
        if (it == out.end()) {
            SummaryRow s;
            s.instance = r.instance;
            s.n = r.n;
            s.algo = r.algo;
            out.push_back(std::move(s));
            it = out.end() - 1;
        }
        ++it->runs;
        if (!r.best) {
            ++it->failed;
        }
    }
    for (auto& s : out) {
        double best_sum = 0.0;
        double acc_sum = 0.0;
        double sec_sum = 0.0;
        std::size_t ok = 0;
        std::size_t with_acc = 0;
        s.min_best = std::numeric_limits<Cost>::max();
        for (const auto& r : rows) {
            if (r.instance != s.instance || r.algo != s.algo || !r.best) {
                continue;
            }
            ++ok;
            best_sum += static_cast<double>(*r.best);
            sec_sum += r.seconds;
            s.min_best = std::min(s.min_best, *r.best);
            if (r.accuracy) {
                acc_sum += *r.accuracy;
                ++with_acc;
            }
        }
        if (ok > 0) {
            s.mean_best = best_sum / static_cast<double>(ok);
            s.mean_seconds = sec_sum / static_cast<double>(ok);
        }
        if (with_acc > 0) {
            s.mean_accuracy = acc_sum / static_cast<double>(with_acc);
        }
    }
    return out;
}

/// Python/matplotlib script drawing mean accuracy and mean wall time per
/// instance, one bar group per algorithm.
inline std::string plot_script() {
    return R"PY(#!/usr/bin/env python3
"""Plot accuracy and run time per instance from summary.csv."""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "summary.csv")
with open(path, newline="") as f:
    rows = list(csv.DictReader(f))

instances = []
for r in rows:
    if r["instance"] not in instances:
        instances.append(r["instance"])
algos = sorted({r["algo"] for r in rows})


def series(column):
    out = {}
    for a in algos:
        values = []
        for inst in instances:
            match = [r for r in rows if r["instance"] == inst and r["algo"] == a]
            values.append(float(match[0][column]) if match and match[0][column] else 0.0)
        out[a] = values
    return out


def bars(column, ylabel, filename):
    data = series(column)
    width = 0.8 / max(1, len(algos))
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(instances)), 4))
    for k, a in enumerate(algos):
        xs = [i + k * width for i in range(len(instances))]
        ax.bar(xs, data[a], width=width, label=a.upper())
    ax.set_xticks([i + width * (len(algos) - 1) / 2 for i in range(len(instances))])
    ax.set_xticklabels(instances, rotation=30, ha="right")
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(os.path.dirname(os.path.abspath(path)), filename), dpi=120)


bars("mean_accuracy", "mean accuracy (%)", "accuracy.png")
bars("mean_seconds", "mean wall time (s)", "time.png")
)PY";
}

/// Runs every (instance, algorithm, seed) cell. Seeds are base_seed ..
/// base_seed + repeats - 1 for every algorithm, so runs are paired by seed.
inline BenchOutcome run_bench(const SuiteConfig& cfg, const std::filesystem::path& out_dir,
                              std::ostream* progress = nullptr) {
    std::filesystem::create_directories(out_dir);
    const OptimaRegistry registry =
        cfg.registry ? OptimaRegistry::load(*cfg.registry) : OptimaRegistry{};

    struct Cell {
        std::size_t instance;
        std::string algo;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < cfg.instances.size(); ++i) {
        for (const auto& algo : cfg.algos) {
            for (std::size_t k = 0; k < cfg.repeats; ++k) {
                cells.push_back({i, algo, cfg.base_seed + k});
            }
        }
    }

    // Instances are parsed once; a parse failure marks all of its cells failed.
    std::vector<std::optional<Instance>> instances;
    std::vector<std::string> load_errors;
    std::vector<std::optional<Cost>> references;
    for (const auto& path : cfg.instances) {
        try {
            Instance inst = parse_instance_file(path);
            references.push_back(reference_optimum(inst, registry));
            instances.emplace_back(inst.with_known_optimum(references.back()));
            load_errors.emplace_back();
        } catch (const std::exception& e) {
            instances.emplace_back(std::nullopt);
            references.emplace_back(std::nullopt);
            load_errors.emplace_back(e.what());
        }
    }

    BenchOutcome outcome;
    outcome.rows.resize(cells.size());
    std::vector<nlohmann::json> reports(cells.size());
    std::mutex progress_mu;

    auto run_cell = [&](std::size_t c) {
        const Cell& cell = cells[c];
        ResultRow& row = outcome.rows[c];
        row.instance = instances[cell.instance] ? instances[cell.instance]->name()
                                                : cfg.instances[cell.instance].stem().string();
        row.n = instances[cell.instance] ? instances[cell.instance]->dimension() : 0;
        row.algo = cell.algo;
        row.seed = cell.seed;
        try {
            if (!instances[cell.instance]) {
                throw std::runtime_error(load_errors[cell.instance]);
            }
            RunSettings s = run_settings(cfg.settings, cell.algo);
            s.seed = cell.seed;
            if (cfg.parallel_cells) {
                s.workers = 1;
            }
            if (cfg.equal_evaluations && cell.algo == "sga") {
                s.max_generations = run_settings(cfg.settings, "pga").max_generations * s.islands;
            }
            const RunReport r = solve(*instances[cell.instance], s);
            row.best = r.best_length;
            row.accuracy = r.accuracy;
            row.seconds = r.wall_seconds;
            row.generations = r.generations;
            row.trajectory = r.trajectory;
            reports[c] = to_json(r);
        } catch (const std::exception& e) {
            row.error = e.what();
            reports[c] = {{"algo", cell.algo}, {"instance", row.instance}, {"seed", cell.seed},
                          {"error", row.error}};
        }
        if (progress) {
            std::lock_guard lock(progress_mu);
            *progress << row.algo << ' ' << row.instance << " seed=" << row.seed << ' '
                      << (row.best ? "best=" + std::to_string(*row.best) : "error: " + row.error)
                      << '\n';
        }
    };

    if (cfg.parallel_cells) {
        WorkerPool pool;
        pool.parallel_for(cells.size(), run_cell);
    } else {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            run_cell(c);
        }
    }

    outcome.any_failed = std::any_of(outcome.rows.begin(), outcome.rows.end(),
                                     [](const ResultRow& r) { return !r.best; });
    outcome.summary = summarize(outcome.rows);

    {
        std::ofstream out(out_dir / "results.csv", std::ios::trunc);
        write_results_csv(out, outcome.rows);
    }
    {
        std::ofstream out(out_dir / "summary.csv", std::ios::trunc);
        write_summary_csv(out, outcome.summary);
    }
    {
        std::ofstream out(out_dir / "reports.jsonl", std::ios::trunc);
        for (const auto& j : reports) {
            out << j.dump() << '\n';
        }
    }
    {
        std::ofstream out(out_dir / "plot_results.py", std::ios::trunc);
        out << plot_script();
    }
    return outcome;
}

} // namespace pgatsp::bench
