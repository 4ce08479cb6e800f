#pragma once

/// @file mapreduce.hpp
/// @brief Iterative map -> partition -> group -> reduce over keyed records.
///
/// A job reads one sealed record set, runs its map tasks on a worker pool,
/// routes every intermediate record through the partitioner, waits for all
/// map tasks, then runs one reduce task per partition. Each reduce task sees
/// its keys in ascending order and, for each key, all values in input order.
/// The reducers' outputs are sealed as `job<id>` with one part per reduce task.
///
/// Grouping and value order are fully deterministic, which is stricter than a
/// distributed shuffle. Together with per-task random streams this makes a
/// job's sealed output independent of the worker count.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "worker_pool.hpp"

namespace pgatsp::mr {

using Key = std::int32_t;
using Bytes = std::vector<std::uint8_t>;

struct Record {
    Key key = 0;
    Bytes value;

    friend bool operator==(const Record&, const Record&) = default;
};

// ---------------------------------------------------------------------------
// Record files: repeated [key: 4-byte LE][value length: 4-byte LE][value].

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline bool get_u32(std::istream& in, std::uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        return false;
    }
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

} // namespace detail

inline void write_records(std::ostream& out, std::span<const Record> records) {
    for (const auto& r : records) {
        detail::put_u32(out, static_cast<std::uint32_t>(r.key));
        detail::put_u32(out, static_cast<std::uint32_t>(r.value.size()));
        out.write(reinterpret_cast<const char*>(r.value.data()),
                  static_cast<std::streamsize>(r.value.size()));
    }
}

inline std::vector<Record> read_records(std::istream& in) {
    std::vector<Record> out;
    while (true) {
        std::uint32_t key = 0;
        if (!detail::get_u32(in, key)) {
            if (in.gcount() != 0) {
                throw std::runtime_error("record file: truncated key");
            }
            break;
        }
        std::uint32_t len = 0;
        if (!detail::get_u32(in, len)) {
            throw std::runtime_error("record file: truncated value length");
        }
        Record r{static_cast<Key>(key), Bytes(len)};
        if (len > 0 && !in.read(reinterpret_cast<char*>(r.value.data()), len)) {
            throw std::runtime_error("record file: truncated value");
        }
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Record stores

struct RecordSetHandle {
    std::string name;
    std::size_t num_parts = 0;

    friend bool operator==(const RecordSetHandle&, const RecordSetHandle&) = default;
};

/// Named record sets. A set is written once by seal() and never changes
/// afterwards. seal() calls are serialized.
class RecordStore {
  public:
    virtual ~RecordStore() = default;

    virtual RecordSetHandle seal(const std::string& name,
                                 std::vector<std::vector<Record>> parts) = 0;
    [[nodiscard]] virtual std::vector<Record> read_part(const RecordSetHandle& set,
                                                        std::size_t part) const = 0;
    [[nodiscard]] virtual std::vector<std::string> names() const = 0;
    [[nodiscard]] virtual RecordSetHandle handle(const std::string& name) const = 0;

    [[nodiscard]] std::vector<Record> read_all(const RecordSetHandle& set) const {
        std::vector<Record> all;
        for (std::size_t p = 0; p < set.num_parts; ++p) {
            auto part = read_part(set, p);
            all.insert(all.end(), std::make_move_iterator(part.begin()),
                       std::make_move_iterator(part.end()));
        }
        return all;
    }

    /// Byte image of a whole set: each part in record-file format, in order.
    [[nodiscard]] Bytes serialized(const RecordSetHandle& set) const {
        std::ostringstream out(std::ios::binary);
        for (std::size_t p = 0; p < set.num_parts; ++p) {
            const auto part = read_part(set, p);
            detail::put_u32(out, static_cast<std::uint32_t>(p));
            detail::put_u32(out, static_cast<std::uint32_t>(part.size()));
            write_records(out, part);
        }
        const std::string s = out.str();
        return Bytes(s.begin(), s.end());
    }
};

class MemoryStore final : public RecordStore {
  public:
    RecordSetHandle seal(const std::string& name,
                         std::vector<std::vector<Record>> parts) override {
        std::lock_guard lock(mu_);
        if (sets_.contains(name)) {
            throw std::logic_error("record set '" + name + "' is already sealed");
        }
        RecordSetHandle h{name, parts.size()};
        sets_.emplace(name, std::make_shared<const Parts>(std::move(parts)));
        return h;
    }

    [[nodiscard]] std::vector<Record> read_part(const RecordSetHandle& set,
                                                std::size_t part) const override {
        const auto parts = lookup(set.name);
        if (part >= parts->size()) {
            throw std::out_of_range("record set '" + set.name + "' has no part " +
                                    std::to_string(part));
        }
        return (*parts)[part];
    }

    [[nodiscard]] std::vector<std::string> names() const override {
        std::lock_guard lock(mu_);
        std::vector<std::string> out;
        for (const auto& [name, _] : sets_) {
            out.push_back(name);
        }
        return out;
    }

    [[nodiscard]] RecordSetHandle handle(const std::string& name) const override {
        return {name, lookup(name)->size()};
    }

  private:
    using Parts = std::vector<std::vector<Record>>;

    std::shared_ptr<const Parts> lookup(const std::string& name) const {
        std::lock_guard lock(mu_);
        const auto it = sets_.find(name);
        if (it == sets_.end()) {
            throw std::out_of_range("no sealed record set '" + name + "'");
        }
        return it->second;
    }

    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<const Parts>> sets_;
};

/// One directory per set holding `part-<k>` record files and a `_SUCCESS`
/// marker written last.
class DirectoryStore final : public RecordStore {
  public:
    explicit DirectoryStore(std::filesystem::path root) : root_(std::move(root)) {
        std::filesystem::create_directories(root_);
    }

    [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }

    RecordSetHandle seal(const std::string& name,
                         std::vector<std::vector<Record>> parts) override {
        std::lock_guard lock(mu_);
        const auto dir = root_ / name;
        if (std::filesystem::exists(dir / "_SUCCESS")) {
            throw std::logic_error("record set '" + name + "' is already sealed");
        }
        std::filesystem::create_directories(dir);
        for (std::size_t p = 0; p < parts.size(); ++p) {
            std::ofstream out(dir / ("part-" + std::to_string(p)), std::ios::binary | std::ios::trunc);
            write_records(out, parts[p]);
            if (!out) {
                throw std::runtime_error("failed writing " + (dir / ("part-" + std::to_string(p))).string());
            }
        }
        std::ofstream(dir / "_SUCCESS") << parts.size() << '\n';
        return {name, parts.size()};
    }

    [[nodiscard]] std::vector<Record> read_part(const RecordSetHandle& set,
                                                std::size_t part) const override {
        const auto file = root_ / set.name / ("part-" + std::to_string(part));
        std::ifstream in(file, std::ios::binary);
        if (!in || !std::filesystem::exists(root_ / set.name / "_SUCCESS")) {
            throw std::out_of_range("no sealed part " + file.string());
        }
        return read_records(in);
    }

    [[nodiscard]] std::vector<std::string> names() const override {
        std::vector<std::string> out;
        for (const auto& entry : std::filesystem::directory_iterator(root_)) {
            if (entry.is_directory() && std::filesystem::exists(entry.path() / "_SUCCESS")) {
                out.push_back(entry.path().filename().string());
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    [[nodiscard]] RecordSetHandle handle(const std::string& name) const override {
        std::ifstream in(root_ / name / "_SUCCESS");
        std::size_t parts = 0;
        if (!(in >> parts)) {
            throw std::out_of_range("no sealed record set '" + name + "'");
        }
        return {name, parts};
    }

  private:
    std::filesystem::path root_;
    std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Jobs

using Rng = std::mt19937_64;

enum class TaskKind : std::uint8_t { map = 0, reduce = 1 };

inline const char* to_string(TaskKind k) noexcept { return k == TaskKind::map ? "map" : "reduce"; }

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Generator for one task, seeded by a stable hash of its identity.
inline Rng task_rng(std::uint64_t master_seed, std::uint64_t job_id, TaskKind kind,
                    std::uint64_t task_index) {
    std::uint64_t h = detail::splitmix64(master_seed);
    h = detail::splitmix64(h ^ job_id);
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(kind));
    h = detail::splitmix64(h ^ task_index);
    std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    return Rng(seq);
}

/// key mod num_reduce_tasks.
inline std::size_t default_partition(Key key, std::size_t num_reduce_tasks) {
    if (num_reduce_tasks == 0) {
        throw std::invalid_argument("default_partition: num_reduce_tasks must be >= 1");
    }
    if (key < 0) {
        throw std::invalid_argument("default_partition: negative key " + std::to_string(key));
    }
    return static_cast<std::size_t>(key) % num_reduce_tasks;
}

using Mapper = std::function<std::vector<Record>(const Record&)>;
using Partitioner = std::function<std::size_t(Key, std::size_t)>;
using Reducer = std::function<std::vector<Record>(Key, std::span<const Bytes>, Rng&)>;

inline std::vector<Record> identity_map(const Record& r) { return {r}; }

struct JobSpec {
    std::uint64_t job_id = 0;
    RecordSetHandle input;
    std::size_t num_map_tasks = 1;
    std::size_t num_reduce_tasks = 1;
    Mapper mapper = identity_map;
    Partitioner partitioner = default_partition;
    Reducer reducer;
    std::uint64_t master_seed = 0;
    /// Retries after a task's first failed attempt.
    unsigned retry_limit = 2;
    /// Output set name; defaults to "job<id>".
    std::string output_name;
#ifdef PGATSP_FAULT_INJECTION
    /// Called at the start of every task attempt; throwing fails that attempt.
    std::function<void(TaskKind, std::size_t task, unsigned attempt)> fault_hook;
#endif
};

struct TaskStats {
    TaskKind kind = TaskKind::map;
    std::size_t index = 0;
    unsigned attempts = 0;
    std::size_t input_records = 0;
    std::size_t output_records = 0;
    std::chrono::steady_clock::time_point started;
    std::chrono::steady_clock::time_point finished;
};

struct JobResult {
    RecordSetHandle output;
    std::vector<TaskStats> map_tasks;
    std::vector<TaskStats> reduce_tasks;
    /// Mapper calls in committed attempts; equals the input record count.
    std::size_t map_invocations = 0;
    std::size_t intermediate_records = 0;
    std::size_t output_records = 0;
};

class JobError : public std::runtime_error {
  public:
    JobError(std::uint64_t job_id, TaskKind kind, std::size_t task, unsigned attempts,
             const std::string& cause)
        : std::runtime_error("job " + std::to_string(job_id) + " " + to_string(kind) + " task " +
                             std::to_string(task) + " failed after " + std::to_string(attempts) +
                             " attempt(s): " + cause),
          job_id_(job_id), kind_(kind), task_(task) {}

    [[nodiscard]] std::uint64_t job_id() const noexcept { return job_id_; }
    [[nodiscard]] TaskKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t task() const noexcept { return task_; }

  private:
    std::uint64_t job_id_;
    TaskKind kind_;
    std::size_t task_;
};

/// Runs jobs against a store on a bounded worker pool.
class Engine {
  public:
    explicit Engine(RecordStore& store, std::size_t workers = WorkerPool::default_size())
        : store_(store), pool_(workers) {}

    [[nodiscard]] RecordStore& store() noexcept { return store_; }
    [[nodiscard]] std::size_t workers() const noexcept { return pool_.size(); }

    RecordSetHandle seal_input(const std::string& name, std::vector<Record> records) {
        std::vector<std::vector<Record>> parts;
        parts.push_back(std::move(records));
        return store_.seal(name, std::move(parts));
    }

    JobResult run_job(const JobSpec& spec) {
        if (spec.num_map_tasks == 0 || spec.num_reduce_tasks == 0) {
            throw std::invalid_argument("job " + std::to_string(spec.job_id) +
                                        ": task counts must be >= 1");
        }
        if (!spec.mapper || !spec.partitioner || !spec.reducer) {
            throw std::invalid_argument("job " + std::to_string(spec.job_id) +
                                        ": mapper, partitioner and reducer are required");
        }

        const std::vector<Record> input = store_.read_all(spec.input);
        const std::size_t maps = spec.num_map_tasks;
        const std::size_t reduces = spec.num_reduce_tasks;

        // Map phase. Task m owns a contiguous slice of the input and writes
        // only to buckets[m][*].
        std::vector<std::vector<std::vector<Record>>> buckets(
            maps, std::vector<std::vector<Record>>(reduces));
        JobResult result;
        result.map_tasks.resize(maps);
        std::vector<std::size_t> invocations(maps, 0);

        pool_.parallel_for(maps, [&](std::size_t m) {
            const std::size_t begin = input.size() * m / maps;
            const std::size_t end = input.size() * (m + 1) / maps;
            TaskStats& stats = result.map_tasks[m];
            stats.kind = TaskKind::map;
            stats.index = m;
            stats.input_records = end - begin;
            stats.started = std::chrono::steady_clock::now();
            run_with_retries(spec, TaskKind::map, m, stats, [&](unsigned) {
                std::vector<std::vector<Record>> local(reduces);
                std::size_t calls = 0;
                std::size_t emitted = 0;
                for (std::size_t i = begin; i < end; ++i) {
                    auto out = spec.mapper(input[i]);
                    ++calls;
                    for (auto& r : out) {
                        const std::size_t target = spec.partitioner(r.key, reduces);
                        if (target >= reduces) {
                            throw std::out_of_range("partitioner returned " +
                                                    std::to_string(target) + " for key " +
                                                    std::to_string(r.key));
                        }
                        local[target].push_back(std::move(r));
                        ++emitted;
                    }
                }
                buckets[m] = std::move(local);
                invocations[m] = calls;
                stats.output_records = emitted;
            });
            stats.finished = std::chrono::steady_clock::now();
        });
        for (std::size_t m = 0; m < maps; ++m) {
            result.map_invocations += invocations[m];
            result.intermediate_records += result.map_tasks[m].output_records;
        }

        // Reduce phase; starts only after every map task has finished.
        std::vector<std::vector<Record>> outputs(reduces);
        result.reduce_tasks.resize(reduces);
        pool_.parallel_for(reduces, [&](std::size_t r) {
            // Gather in (map task, emission) order, then stable-sort by key so
            // values within a key keep input order.
            std::vector<const Record*> inbox;
            for (std::size_t m = 0; m < maps; ++m) {
                for (const auto& rec : buckets[m][r]) {
                    inbox.push_back(&rec);
                }
            }
            std::stable_sort(inbox.begin(), inbox.end(),
                             [](const Record* a, const Record* b) { return a->key < b->key; });

            TaskStats& stats = result.reduce_tasks[r];
            stats.kind = TaskKind::reduce;
            stats.index = r;
            stats.input_records = inbox.size();
            stats.started = std::chrono::steady_clock::now();
            run_with_retries(spec, TaskKind::reduce, r, stats, [&](unsigned) {
                Rng rng = task_rng(spec.master_seed, spec.job_id, TaskKind::reduce, r);
                std::vector<Record> out;
                std::vector<Bytes> values;
                std::size_t i = 0;
                while (i < inbox.size()) {
                    const Key key = inbox[i]->key;
                    values.clear();
                    for (; i < inbox.size() && inbox[i]->key == key; ++i) {
                        values.push_back(inbox[i]->value);
                    }
                    auto produced = spec.reducer(key, values, rng);
                    out.insert(out.end(), std::make_move_iterator(produced.begin()),
                               std::make_move_iterator(produced.end()));
                }
                stats.output_records = out.size();
                outputs[r] = std::move(out);
            });
            stats.finished = std::chrono::steady_clock::now();
        });
        for (const auto& o : outputs) {
            result.output_records += o.size();
        }

        const std::string name =
            spec.output_name.empty() ? "job" + std::to_string(spec.job_id) : spec.output_name;
        result.output = store_.seal(name, std::move(outputs));
        return result;
    }

  private:
    template <class Body>
    static void run_with_retries(const JobSpec& spec, TaskKind kind, std::size_t task,
                                 TaskStats& stats, Body&& body) {
        const unsigned max_attempts = spec.retry_limit + 1;
        std::string last_error;
        for (unsigned attempt = 0; attempt < max_attempts; ++attempt) {
            stats.attempts = attempt + 1;
            try {
#ifdef PGATSP_FAULT_INJECTION
                if (spec.fault_hook) {
                    spec.fault_hook(kind, task, attempt);
                }
#endif
                body(attempt);
                return;
            } catch (const std::exception& e) {
                last_error = e.what();
            } catch (...) {
                last_error = "unknown exception";
            }
        }
        throw JobError(spec.job_id, kind, task, max_attempts, last_error);
    }

    RecordStore& store_;
    WorkerPool pool_;
};

} // namespace pgatsp::mr
