#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <pgatsp/tsplib.hpp>

#include "test_util.hpp"

using namespace pgatsp;
using pgatsp::testing::data_dir;
using pgatsp::testing::fixture_dir;

namespace {

std::vector<std::vector<Cost>> rows_of(const Instance& inst) {
    std::vector<std::vector<Cost>> rows(inst.dimension());
    for (std::size_t i = 0; i < inst.dimension(); ++i) {
        for (std::size_t j = 0; j < inst.dimension(); ++j) {
            rows[i].push_back(inst(i, j));
        }
    }
    return rows;
}

Instance parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_instance(in);
}

ParseError::Kind parse_error_kind(const std::string& text) {
    try {
        parse_text(text);
    } catch (const ParseError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected a ParseError";
    return ParseError::Kind::invalid_value;
}

// Minimal independent reader: everything after EDGE_WEIGHT_SECTION up to EOF,
// whitespace separated, as integers.
std::vector<long long> reread_full_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string line;
    bool in_section = false;
    std::vector<long long> values;
    while (std::getline(in, line)) {
        if (line.find("EDGE_WEIGHT_SECTION") != std::string::npos) {
            in_section = true;
            continue;
        }
        if (line.find("EOF") != std::string::npos) {
            break;
        }
        if (in_section) {
            std::istringstream ss(line);
            long long v;
            while (ss >> v) {
                values.push_back(v);
            }
        }
    }
    return values;
}

} // namespace

TEST(ParseInstance, ThreeCityFullMatrixIsRowMajor) {
    const Instance inst = parse_instance_file(fixture_dir() / "tiny3.atsp");
    EXPECT_EQ(inst.name(), "tiny3");
    ASSERT_EQ(inst.dimension(), 3u);
    const std::vector<std::vector<Cost>> want{{0, 1, 2}, {2, 0, 3}, {4, 5, 0}};
    EXPECT_EQ(rows_of(inst), want);
}

TEST(ParseInstance, Euc2dUsesRoundedEuclideanDistance) {
    const Instance two = parse_instance_file(fixture_dir() / "euc2.tsp");
    EXPECT_EQ(two(0, 1), 5);
    EXPECT_EQ(two(1, 0), 5);

    // 12.5 and 7.5 round half up, as TSPLIB's nint does.
    const Instance four = parse_instance_file(fixture_dir() / "euc4.tsp");
    const std::vector<std::vector<Cost>> want{
        {0, 10, 13, 8}, {10, 0, 8, 13}, {13, 8, 0, 10}, {8, 13, 10, 0}};
    EXPECT_EQ(rows_of(four), want);
}

TEST(ParseInstance, Br17MatchesIndependentReader) {
    const auto path = data_dir() / "br17.atsp";
    const Instance inst = parse_instance_file(path);
    ASSERT_EQ(inst.dimension(), 17u);
    EXPECT_EQ(inst.name(), "br17");
    const auto tokens = reread_full_matrix(path);
    ASSERT_EQ(tokens.size(), 17u * 17u);
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        EXPECT_EQ(inst(k / 17, k % 17), tokens[k]) << "entry " << k;
    }
    // Asymmetric somewhere.
    bool asymmetric = false;
    for (std::size_t i = 0; i < 17; ++i) {
        for (std::size_t j = 0; j < 17; ++j) {
            asymmetric |= inst(i, j) != inst(j, i);
        }
    }
    EXPECT_TRUE(asymmetric);
}

TEST(ParseInstance, KeywordSpacingAndCaseAreTolerated) {
    const Instance inst = parse_text("name : x\nDimension : 2\nedge_weight_type : explicit\n"
                                     "EDGE_WEIGHT_FORMAT:FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 3\n7 0\n");
    EXPECT_EQ(inst(0, 1), 3);
    EXPECT_EQ(inst(1, 0), 7);
}

TEST(ParseInstance, ErrorsAreDistinct) {
    using K = ParseError::Kind;
    EXPECT_EQ(parse_error_kind("NAME: a\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: "
                               "FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 1 1 0\nEOF\n"),
              K::missing_dimension);
    EXPECT_EQ(parse_error_kind("DIMENSION: 2\nEDGE_WEIGHT_TYPE: GEO\nNODE_COORD_SECTION\n"
                               "1 0 0\n2 1 1\nEOF\n"),
              K::unsupported_edge_weight_type);
    EXPECT_EQ(parse_error_kind("DIMENSION: 2\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: "
                               "UPPER_ROW\nEDGE_WEIGHT_SECTION\n1\nEOF\n"),
              K::unsupported_edge_weight_format);
    EXPECT_EQ(parse_error_kind("DIMENSION: 2\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: "
                               "FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 1 1\nEOF\n"),
              K::token_count);
    EXPECT_EQ(parse_error_kind("DIMENSION: 2\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: "
                               "FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 1 x1 0\nEOF\n"),
              K::non_numeric);
    EXPECT_EQ(parse_error_kind("DIMENSION: 2\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: "
                               "FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 1\nabc 0\nEOF\n"),
              K::non_numeric);
    EXPECT_EQ(parse_error_kind("DIMENSION: two\n"), K::bad_dimension);
    EXPECT_EQ(parse_error_kind("DIMENSION: 2\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: "
                               "FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 1.5 1 0\nEOF\n"),
              K::invalid_value);
}

TEST(ParseInstance, ErrorMessagesNameLineOrKeyword) {
    try {
        parse_text("DIMENSION: 2\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: FULL_MATRIX\n"
                   "EDGE_WEIGHT_SECTION\n0 1\n1 zz\nEOF\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 6u);
        EXPECT_NE(std::string(e.what()).find("line 6"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("zz"), std::string::npos);
    }
    try {
        parse_text("DIMENSION: 3\nEDGE_WEIGHT_TYPE: ATT\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("EDGE_WEIGHT_TYPE"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("ATT"), std::string::npos);
    }
}

TEST(ParseInstance, FullMatrixRoundTripProperty) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const std::size_t n = 2 + seed % 20;
        const Instance original = random_instance(n, {0, 1000}, seed);
        std::stringstream buf;
        write_full_matrix(buf, original);
        const Instance back = parse_instance(buf);
        EXPECT_EQ(back, original) << "seed " << seed;
        EXPECT_EQ(back.name(), original.name());
    }
}

TEST(RandomInstance, DegenerateRangeFillsOffDiagonal) {
    const Instance inst = random_instance(2, {5, 5}, 12345);
    EXPECT_EQ(inst(0, 1), 5);
    EXPECT_EQ(inst(1, 0), 5);
}

TEST(RandomInstance, DeterministicPerSeed) {
    EXPECT_EQ(random_instance(8, {1, 100}, 42), random_instance(8, {1, 100}, 42));
    EXPECT_FALSE(random_instance(8, {1, 100}, 42) == random_instance(8, {1, 100}, 43));
}

TEST(RandomInstance, EntriesStayInRange) {
    const Instance inst = random_instance(30, {7, 19}, 3);
    for (std::size_t i = 0; i < 30; ++i) {
        for (std::size_t j = 0; j < 30; ++j) {
            if (i == j) {
                continue;
            }
            EXPECT_GE(inst(i, j), 7);
            EXPECT_LE(inst(i, j), 19);
        }
    }
}

TEST(RandomInstance, RejectsOutOfBoundsSize) {
    EXPECT_THROW(random_instance(1, {1, 2}, 0), std::invalid_argument);
    EXPECT_THROW(random_instance(65, {1, 2}, 0), std::invalid_argument);
    EXPECT_THROW(random_instance(5, {3, 2}, 0), std::invalid_argument);
    EXPECT_THROW(random_instance(5, {-1, 2}, 0), std::invalid_argument);
}

TEST(Instance, RejectsMalformedMatrices) {
    EXPECT_THROW(Instance("x", 2, {0, 1, 1}), std::invalid_argument);
    EXPECT_THROW(Instance("x", 2, {0, -1, 1, 0}), std::invalid_argument);
    EXPECT_THROW(Instance("x", 1, {0}), std::invalid_argument);
}

TEST(OptimaRegistry, LoadLookupAndIdempotentSave) {
    pgatsp::testing::TempDir dir("registry");
    const auto path = dir.path() / "optima.txt";
    {
        std::ofstream out(path);
        out << "# reference optima\nbr17 39\n\nftv33 1286  # trailing comment\n";
    }
    OptimaRegistry reg = OptimaRegistry::load(path);
    EXPECT_EQ(reg.size(), 2u);
    EXPECT_EQ(reg.lookup("br17"), 39);
    EXPECT_EQ(reg.lookup("ftv33"), 1286);
    EXPECT_FALSE(reg.lookup("nope"));

    reg.set("br17", 39);
    reg.save(path);
    std::ifstream a(path);
    const std::string first((std::istreambuf_iterator<char>(a)), {});
    OptimaRegistry again = OptimaRegistry::load(path);
    again.set("br17", 39);
    again.save(path);
    std::ifstream b(path);
    const std::string second((std::istreambuf_iterator<char>(b)), {});
    EXPECT_EQ(first, second);
    EXPECT_NE(first.find("# reference optima"), std::string::npos);

    again.set("tiny3", 8);
    EXPECT_EQ(again.lookup("tiny3"), 8);
}

TEST(OptimaRegistry, MissingFileIsEmptyAndBadLineThrows) {
    pgatsp::testing::TempDir dir("registry-bad");
    EXPECT_EQ(OptimaRegistry::load(dir.path() / "absent.txt").size(), 0u);
    const auto bad = dir.path() / "bad.txt";
    std::ofstream(bad) << "br17\n";
    EXPECT_THROW(OptimaRegistry::load(bad), std::runtime_error);
}
