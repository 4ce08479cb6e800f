#pragma once

/// @file codec.hpp
/// @brief Binary chromosome format carried in record values.
///
/// Layout, all little-endian:
///
///     offset 0       pop_id   u32
///     offset 4       N        u32
///     offset 8       genes    N x u32
///     offset 8+4N    length   u64
///
/// Fitness is not stored; it is relative to a population and is recomputed by
/// whoever assembles one.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ga.hpp"
#include "mapreduce.hpp"

namespace pgatsp::codec {

class DecodeError : public std::runtime_error {
  public:
    enum class Kind { truncated, trailing_bytes, gene_out_of_range, duplicate_gene };

    DecodeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

namespace detail {

inline void put_le(mr::Bytes& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
    }
}

inline std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        v |= static_cast<std::uint64_t>(in[at + static_cast<std::size_t>(i)]) << (8 * i);
    }
    return v;
}

} // namespace detail

inline std::size_t encoded_size(std::size_t n) { return 4 + 4 + 4 * n + 8; }

inline mr::Bytes encode(const Chromosome& c) {
    mr::Bytes out;
    out.reserve(encoded_size(c.genes.size()));
    detail::put_le(out, c.pop_id, 4);
    detail::put_le(out, c.genes.size(), 4);
    for (City g : c.genes) {
        detail::put_le(out, g, 4);
    }
    detail::put_le(out, static_cast<std::uint64_t>(c.length), 8);
    return out;
}

inline Chromosome decode(std::span<const std::uint8_t> bytes) {
    using Kind = DecodeError::Kind;
    if (bytes.size() < 8) {
        throw DecodeError(Kind::truncated, "chromosome buffer shorter than its header");
    }
    const auto n = static_cast<std::size_t>(detail::get_le(bytes, 4, 4));
    const std::size_t want = encoded_size(n);
    if (bytes.size() < want) {
        throw DecodeError(Kind::truncated, "chromosome buffer truncated: " +
                                               std::to_string(bytes.size()) + " of " +
                                               std::to_string(want) + " bytes");
    }
    if (bytes.size() > want) {
        throw DecodeError(Kind::trailing_bytes, "chromosome buffer has " +
                                                    std::to_string(bytes.size() - want) +
                                                    " trailing bytes");
    }

    Chromosome c;
    c.pop_id = static_cast<std::uint32_t>(detail::get_le(bytes, 0, 4));
    c.genes.resize(n);
    std::vector<bool> seen(n, false);
    for (std::size_t k = 0; k < n; ++k) {
        const auto g = detail::get_le(bytes, 8 + 4 * k, 4);
        if (g >= n) {
            throw DecodeError(Kind::gene_out_of_range,
                              "gene " + std::to_string(g) + " out of range for N=" + std::to_string(n));
        }
        if (seen[g]) {
            throw DecodeError(Kind::duplicate_gene, "duplicate gene " + std::to_string(g));
        }
        seen[g] = true;
        c.genes[k] = static_cast<City>(g);
    }
    c.length = static_cast<Cost>(detail::get_le(bytes, 8 + 4 * n, 8));
    return c;
}

} // namespace pgatsp::codec
