#pragma once

/// @file tsplib.hpp
/// @brief TSP instances: TSPLIB text parsing, FULL_MATRIX writing, random
/// instance generation and the local registry of known optima.
///
/// Supported TSPLIB subset:
///   - EDGE_WEIGHT_TYPE: EXPLICIT with EDGE_WEIGHT_FORMAT: FULL_MATRIX
///   - EDGE_WEIGHT_TYPE: EUC_2D with a NODE_COORD_SECTION
/// Everything else is rejected with a ParseError naming the keyword.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pgatsp {

using City = std::uint32_t;
using Cost = std::int64_t;
using Tour = std::vector<City>;

/// Complete directed graph with non-negative integral edge weights.
/// Immutable after construction; safe to share between worker threads.
class Instance {
  public:
    Instance(std::string name, std::size_t dimension, std::vector<Cost> distances,
             std::optional<Cost> known_optimum = std::nullopt)
        : name_(std::move(name)), dimension_(dimension), distances_(std::move(distances)),
          known_optimum_(known_optimum) {
        if (dimension_ < 2) {
            throw std::invalid_argument("instance dimension must be at least 2");
        }
        if (distances_.size() != dimension_ * dimension_) {
            throw std::invalid_argument("distance matrix must be dimension x dimension");
        }
        for (Cost d : distances_) {
            if (d < 0) {
                throw std::invalid_argument("distance matrix entries must be non-negative");
            }
        }
        if (known_optimum_ && *known_optimum_ < 0) {
            throw std::invalid_argument("known optimum must be non-negative");
        }
    }

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
    [[nodiscard]] std::optional<Cost> known_optimum() const noexcept { return known_optimum_; }

    /// Cost of the directed edge from -> to.
    [[nodiscard]] Cost operator()(std::size_t from, std::size_t to) const noexcept {
        return distances_[from * dimension_ + to];
    }

    [[nodiscard]] const std::vector<Cost>& matrix() const noexcept { return distances_; }

    [[nodiscard]] Instance with_known_optimum(std::optional<Cost> optimum) const {
        return Instance(name_, dimension_, distances_, optimum);
    }

    friend bool operator==(const Instance& a, const Instance& b) {
        return a.dimension_ == b.dimension_ && a.distances_ == b.distances_;
    }

  private:
    std::string name_;
    std::size_t dimension_;
    std::vector<Cost> distances_;
    std::optional<Cost> known_optimum_;
};

/// Parse failure. `line()` is 0 when the problem is not tied to a line
/// (for example a keyword that never appeared).
class ParseError : public std::runtime_error {
  public:
    enum class Kind {
        missing_dimension,
        bad_dimension,
        unsupported_edge_weight_type,
        unsupported_edge_weight_format,
        missing_section,
        token_count,
        non_numeric,
        invalid_value,
    };

    ParseError(Kind kind, std::size_t line, const std::string& what)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          kind_(kind), line_(line) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    Kind kind_;
    std::size_t line_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'a' && c <= 'z') {
            c = static_cast<char>(c - 'a' + 'A');
        }
    }
    return out;
}

struct Token {
    std::string text;
    std::size_t line;
};

inline double parse_number(const Token& tok) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(tok.text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != tok.text.size() || !std::isfinite(value)) {
        throw ParseError(ParseError::Kind::non_numeric, tok.line,
                         "non-numeric token '" + tok.text + "'");
    }
    return value;
}

inline Cost parse_weight(const Token& tok) {
    const double v = parse_number(tok);
    if (v < 0.0 || v != std::floor(v) ||
        v > static_cast<double>(std::numeric_limits<Cost>::max() / 4)) {
        throw ParseError(ParseError::Kind::invalid_value, tok.line,
                         "edge weight '" + tok.text + "' is not a non-negative integer");
    }
    return static_cast<Cost>(v);
}

} // namespace detail

/// Parse a TSPLIB instance. Diagonal entries of an explicit matrix are kept
/// as read; no consumer looks at them.
inline Instance parse_instance(std::istream& in) {
    using detail::Token;
    using Kind = ParseError::Kind;

    std::string name;
    std::optional<std::size_t> dimension;
    std::string weight_type;
    std::size_t weight_type_line = 0;
    std::string weight_format;
    std::size_t weight_format_line = 0;

    enum class Section { none, weights, coords, other };
    Section section = Section::none;
    std::vector<Token> weight_tokens;
    std::vector<Token> coord_tokens;
    bool saw_weight_section = false;
    bool saw_coord_section = false;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = detail::trim(raw);
        if (line.empty()) {
            continue;
        }

        // Keyword lines look like "KEY : value" or "KEY: value" or a bare
        // section name. Numeric data lines start with a digit, sign or dot.
        const char lead = line.front();
        const bool numeric_line =
            (lead >= '0' && lead <= '9') || lead == '-' || lead == '+' || lead == '.';
        if (numeric_line && (section == Section::weights || section == Section::coords)) {
            std::istringstream ss{std::string(line)};
            std::string tok;
            auto& sink = section == Section::weights ? weight_tokens : coord_tokens;
            while (ss >> tok) {
                sink.push_back(Token{tok, line_no});
            }
            continue;
        }

        std::string key;
        std::string value;
        if (const auto colon = line.find(':'); colon != std::string_view::npos) {
            key = detail::upper(detail::trim(line.substr(0, colon)));
            value = std::string(detail::trim(line.substr(colon + 1)));
        } else {
            std::istringstream ss{std::string(line)};
            ss >> key;
            key = detail::upper(key);
            std::getline(ss, value);
            value = std::string(detail::trim(value));
        }

        if (key == "EOF") {
            break;
        }
        if (key == "EDGE_WEIGHT_SECTION") {
            section = Section::weights;
            saw_weight_section = true;
        } else if (key == "NODE_COORD_SECTION") {
            section = Section::coords;
            saw_coord_section = true;
        } else if (key.ends_with("_SECTION")) {
            section = Section::other;
        } else if (section == Section::weights || section == Section::coords) {
            throw ParseError(Kind::non_numeric, line_no,
                             "non-numeric token '" + std::string(line) + "' in data section");
        } else if (key == "NAME") {
            name = value;
        } else if (key == "DIMENSION") {
            std::size_t used = 0;
            long long n = 0;
            try {
                n = std::stoll(value, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != value.size() || n < 2) {
                throw ParseError(Kind::bad_dimension, line_no,
                                 "DIMENSION must be an integer >= 2, got '" + value + "'");
            }
            dimension = static_cast<std::size_t>(n);
        } else if (key == "EDGE_WEIGHT_TYPE") {
            weight_type = detail::upper(value);
            weight_type_line = line_no;
        } else if (key == "EDGE_WEIGHT_FORMAT") {
            weight_format = detail::upper(value);
            weight_format_line = line_no;
        }
        // TYPE, COMMENT, DISPLAY_DATA_TYPE and friends carry nothing we need.
    }

    if (!dimension) {
        throw ParseError(Kind::missing_dimension, 0, "missing DIMENSION keyword");
    }
    const std::size_t n = *dimension;

    std::vector<Cost> distances(n * n, 0);
    if (weight_type == "EXPLICIT") {
        if (weight_format != "FULL_MATRIX") {
            throw ParseError(Kind::unsupported_edge_weight_format, weight_format_line,
                             "unsupported EDGE_WEIGHT_FORMAT '" + weight_format +
                                 "' (only FULL_MATRIX)");
        }
        if (!saw_weight_section) {
            throw ParseError(Kind::missing_section, 0, "missing EDGE_WEIGHT_SECTION");
        }
        if (weight_tokens.size() != n * n) {
            throw ParseError(Kind::token_count,
                             weight_tokens.empty() ? 0 : weight_tokens.back().line,
                             "EDGE_WEIGHT_SECTION has " + std::to_string(weight_tokens.size()) +
                                 " tokens, expected " + std::to_string(n * n));
        }
        for (std::size_t k = 0; k < n * n; ++k) {
            distances[k] = detail::parse_weight(weight_tokens[k]);
        }
    } else if (weight_type == "EUC_2D") {
        if (!saw_coord_section) {
            throw ParseError(Kind::missing_section, 0, "missing NODE_COORD_SECTION");
        }
        if (coord_tokens.size() != 3 * n) {
            throw ParseError(Kind::token_count,
                             coord_tokens.empty() ? 0 : coord_tokens.back().line,
                             "NODE_COORD_SECTION has " + std::to_string(coord_tokens.size()) +
                                 " tokens, expected " + std::to_string(3 * n));
        }
        std::vector<double> xs(n), ys(n);
        std::vector<bool> seen(n, false);
        for (std::size_t k = 0; k < n; ++k) {
            const double id = detail::parse_number(coord_tokens[3 * k]);
            const auto idx = static_cast<long long>(id) - 1;
            if (id != std::floor(id) || idx < 0 || idx >= static_cast<long long>(n) ||
                seen[static_cast<std::size_t>(idx)]) {
                throw ParseError(Kind::invalid_value, coord_tokens[3 * k].line,
                                 "bad node index '" + coord_tokens[3 * k].text + "'");
            }
            seen[static_cast<std::size_t>(idx)] = true;
            xs[static_cast<std::size_t>(idx)] = detail::parse_number(coord_tokens[3 * k + 1]);
            ys[static_cast<std::size_t>(idx)] = detail::parse_number(coord_tokens[3 * k + 2]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) {
                    continue;
                }
                // TSPLIB nint(): round half up.
                const double d = std::hypot(xs[i] - xs[j], ys[i] - ys[j]);
                distances[i * n + j] = static_cast<Cost>(d + 0.5);
            }
        }
    } else {
        throw ParseError(Kind::unsupported_edge_weight_type, weight_type_line,
                         weight_type.empty()
                             ? std::string("missing EDGE_WEIGHT_TYPE")
                             : "unsupported EDGE_WEIGHT_TYPE '" + weight_type + "'");
    }

    return Instance(name, n, std::move(distances));
}

inline Instance parse_instance_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open instance file '" + path.string() + "'");
    }
    Instance inst = parse_instance(in);
    if (inst.name().empty()) {
        return Instance(path.stem().string(), inst.dimension(), inst.matrix());
    }
    return inst;
}

/// Write an instance as EXPLICIT / FULL_MATRIX; parse_instance reads it back
/// to the same matrix.
inline void write_full_matrix(std::ostream& out, const Instance& inst) {
    const std::size_t n = inst.dimension();
    out << "NAME: " << inst.name() << '\n'
        << "TYPE: ATSP\n"
        << "DIMENSION: " << n << '\n'
        << "EDGE_WEIGHT_TYPE: EXPLICIT\n"
        << "EDGE_WEIGHT_FORMAT: FULL_MATRIX\n"
        << "EDGE_WEIGHT_SECTION\n";
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out << (j == 0 ? "" : " ") << inst(i, j);
        }
        out << '\n';
    }
    out << "EOF\n";
}

struct WeightRange {
    Cost low;
    Cost high;
};

/// Random asymmetric instance; off-diagonal weights uniform in [low, high],
/// diagonal zero. Deterministic in (n, range, seed).
inline Instance random_instance(std::size_t n, WeightRange range, std::uint64_t seed) {
    if (n < 2 || n > 64) {
        throw std::invalid_argument("random_instance: n must be in [2, 64], got " +
                                    std::to_string(n));
    }
    if (range.low < 0 || range.high < range.low) {
        throw std::invalid_argument("random_instance: weight range must be non-empty and >= 0");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Cost> weight(range.low, range.high);
    std::vector<Cost> d(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                d[i * n + j] = weight(rng);
            }
        }
    }
    return Instance("random" + std::to_string(n) + "-" + std::to_string(seed), n, std::move(d));
}

/// Editable `name value` file of reference optima. Comments (`#`) and line
/// order survive a load/save cycle, so rewriting an unchanged entry leaves the
/// file byte-identical.
class OptimaRegistry {
  public:
    OptimaRegistry() = default;

    static OptimaRegistry load(const std::filesystem::path& path) {
        OptimaRegistry reg;
        std::ifstream in(path);
        if (!in) {
            return reg;
        }
        std::string raw;
        std::size_t line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            reg.lines_.push_back(raw);
            std::string_view line = detail::trim(raw);
            if (const auto hash = line.find('#'); hash != std::string_view::npos) {
                line = detail::trim(line.substr(0, hash));
            }
            if (line.empty()) {
                continue;
            }
            std::istringstream ss{std::string(line)};
            std::string name;
            std::string value;
            std::string extra;
            if (!(ss >> name >> value) || (ss >> extra)) {
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": expected 'name value'");
            }
            const Cost v = detail::parse_weight(detail::Token{value, line_no});
            reg.entries_[name] = Entry{v, reg.lines_.size() - 1};
        }
        return reg;
    }

    [[nodiscard]] std::optional<Cost> lookup(const std::string& name) const {
        if (auto it = entries_.find(name); it != entries_.end()) {
            return it->second.value;
        }
        return std::nullopt;
    }

    void set(const std::string& name, Cost value) {
        std::string line = name + " " + std::to_string(value);
        if (auto it = entries_.find(name); it != entries_.end()) {
            it->second.value = value;
            lines_[it->second.line] = std::move(line);
        } else {
            lines_.push_back(std::move(line));
            entries_[name] = Entry{value, lines_.size() - 1};
        }
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write registry '" + path.string() + "'");
        }
        for (const auto& l : lines_) {
            out << l << '\n';
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

  private:
    struct Entry {
        Cost value;
        std::size_t line;
    };
    std::vector<std::string> lines_;
    std::map<std::string, Entry> entries_;
};

} // namespace pgatsp
