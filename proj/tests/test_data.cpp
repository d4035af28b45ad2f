#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>

#include "rfassign/data.hpp"
#include "rfassign/errors.hpp"
#include "support/oracles.hpp"

namespace rfassign {
namespace {

TEST(Friedman1, HandValues) {
  EXPECT_EQ(friedman1(std::array{0.0, 0.0, 0.5, 0.0, 0.0}), 0.0);
  EXPECT_NEAR(friedman1(std::array{1.0, 0.5, 0.0, 0.0, 0.0}), 15.0, 1e-12);
  EXPECT_NEAR(friedman1(std::array{0.5, 0.5, 0.5, 1.0, 1.0}), 22.0710678118654755, 1e-12);
}

TEST(Friedman1, RejectsWrongDimension) {
  EXPECT_THROW(friedman1(std::array{0.1, 0.2, 0.3, 0.4}), InvalidInput);
  EXPECT_THROW(friedman1(std::array{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}), InvalidInput);
}

TEST(GenerateSample, EmptyAndDeterministic) {
  EXPECT_TRUE(generate_sample(0, 1.0, 3).empty());
  EXPECT_EQ(generate_sample(50, 1.0, 7), generate_sample(50, 1.0, 7));
  EXPECT_NE(generate_sample(50, 1.0, 7), generate_sample(50, 1.0, 8));
  EXPECT_THROW(generate_sample(5, -0.1, 1), InvalidInput);
}

TEST(GenerateSample, TruthIsFriedmanRowwise) {
  const Dataset d = generate_sample(200, 1.0, 11);
  ASSERT_TRUE(d.has_truth());
  EXPECT_EQ(d.missing_count(), 0u);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    EXPECT_EQ(d.truth()[i], friedman1(d.row(i).values));
  }
  const Dataset noiseless = generate_sample(20, 0.0, 11);
  for (std::size_t i = 0; i < noiseless.rows(); ++i) {
    EXPECT_EQ(noiseless.response(i), noiseless.truth()[i]);
  }
}

TEST(GenerateSample, ColumnMeansNearHalf) {
  const Dataset d = generate_sample(100000, 1.0, 5);
  for (std::size_t h = 0; h < d.cols(); ++h) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.rows(); ++i) s += d.observed(i, h);
    EXPECT_NEAR(s / static_cast<double>(d.rows()), 0.5, 0.01) << "column " << h;
  }
}

TEST(InjectMcar, ZeroRatesIsIdentity) {
  const Dataset d = generate_sample(100, 1.0, 1);
  EXPECT_EQ(inject_mcar(d, MissRates(std::vector<double>(5, 0.0)), 9), d);
}

TEST(InjectMcar, RejectsBadRates) {
  const Dataset d = generate_sample(10, 1.0, 1);
  EXPECT_THROW(MissRates({0.1, 1.0}), InvalidInput);
  EXPECT_THROW(MissRates({-0.1}), InvalidInput);
  EXPECT_THROW(inject_mcar(d, MissRates({0.1, 0.1}), 1), InvalidInput);
}

TEST(InjectMcar, KeepsObservedValuesAndResponse) {
  const Dataset d = generate_sample(500, 1.0, 2);
  const Dataset m = inject_mcar(d, MissRates({0.3, 0.5, 0.1, 0.9, 0.0}), 4);
  EXPECT_EQ(m, inject_mcar(d, MissRates({0.3, 0.5, 0.1, 0.9, 0.0}), 4));
  for (std::size_t i = 0; i < d.rows(); ++i) {
    EXPECT_EQ(m.response(i), d.response(i));
    for (std::size_t h = 0; h < d.cols(); ++h) {
      if (m.is_missing(i, h)) {
        EXPECT_FALSE(m.value(i, h).has_value());
      } else {
        EXPECT_EQ(m.observed(i, h), d.observed(i, h));
      }
    }
  }
  EXPECT_EQ(m.missing_count(4), 0u);
}

TEST(InjectMcar, RateConcentration) {
  const Dataset d = generate_sample(10000, 1.0, 3);
  const Dataset m = inject_mcar(d, MissRates({0.0, 0.0, 0.0, 0.2, 0.0}), 17);
  const double frac = static_cast<double>(m.missing_count(3)) / 10000.0;
  EXPECT_GE(frac, 0.19);
  EXPECT_LE(frac, 0.21);
}

TEST(InjectMcar, MaskIndependentOfResponseQuartile) {
  const Dataset d = generate_sample(10000, 1.0, 21);
  const Dataset m = inject_mcar(d, MissRates({0.0, 0.0, 0.0, 0.2, 0.0}), 22);
  std::vector<double> y(d.response().begin(), d.response().end());
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = sorted[2500], q2 = sorted[5000], q3 = sorted[7500];
  double table[2][4] = {};
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const int q = y[i] < q1 ? 0 : y[i] < q2 ? 1 : y[i] < q3 ? 2 : 3;
    table[m.is_missing(i, 3) ? 1 : 0][q] += 1.0;
  }
  double stat = 0.0;
  for (int r = 0; r < 2; ++r) {
    const double row = table[r][0] + table[r][1] + table[r][2] + table[r][3];
    for (int c = 0; c < 4; ++c) {
      const double expected = row * (table[0][c] + table[1][c]) / 10000.0;
      stat += (table[r][c] - expected) * (table[r][c] - expected) / expected;
    }
  }
  EXPECT_GT(testing::chi2_sf_3(stat), 0.001);
}

TEST(Csv, ParsesNaAsMissing) {
  const Dataset d = parse_csv("x1,x2,y\n0.1,0.2,1\n0.3,0.4,2\n0.5,NA,3\n");
  EXPECT_EQ(d.rows(), 3u);
  EXPECT_EQ(d.cols(), 2u);
  EXPECT_TRUE(d.is_missing(2, 1));
  EXPECT_FALSE(d.is_missing(2, 0));
  EXPECT_FALSE(d.has_truth());
}

TEST(Csv, RoundTripWithTruthAndMissing) {
  const Dataset d = inject_mcar(generate_sample(40, 1.0, 5), MissRates({0.2, 0, 0.1, 0.5, 0}), 6);
  EXPECT_EQ(parse_csv(format_csv(d)), d);

  const auto path = std::filesystem::temp_directory_path() / "rfassign_roundtrip.csv";
  write_csv(d, path);
  EXPECT_EQ(read_csv(path), d);
  std::filesystem::remove(path);
}

TEST(Csv, ErrorsCarryPosition) {
  try {
    parse_csv("x1,x2,y\n0.1,0.2,1\n0.3,abc,2\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
    EXPECT_EQ(e.column(), 2u);
  }
  EXPECT_THROW(parse_csv("x1,x2,y\n0.1,0.2\n"), ParseError);
  EXPECT_THROW(parse_csv("x1,x3,y\n0.1,0.2,1\n"), ParseError);
  EXPECT_THROW(parse_csv("x1,x2,y\n0.1,0.2,NA\n"), ParseError);
  EXPECT_THROW(parse_csv("x1,x2,y\n0.1,1.5,1\n"), ParseError);
  EXPECT_THROW(parse_csv("x1,x2,y\n0.1,0.2,1\n", 3), ParseError);
  EXPECT_NO_THROW(parse_csv("x1,x2,y\n0.1,0.2,1\n", 2));
  EXPECT_THROW(read_csv("/nonexistent/file.csv"), IoError);
}

TEST(Dataset, RejectsInconsistentParts) {
  EXPECT_THROW(Dataset(2, {0.1, 0.2, 0.3}, {0, 0, 0}, {1.0, 2.0}), InvalidInput);
  EXPECT_THROW(Dataset(1, {0.1}, {0}, {1.0}, std::vector<double>{1.0, 2.0}), InvalidInput);
  EXPECT_THROW(Dataset(1, {1.1}, {0}, {1.0}), InvalidInput);
  // A masked slot may hold anything; it is scrubbed.
  const Dataset d(1, {7.0}, {1}, {1.0});
  EXPECT_EQ(d.raw_features()[0], 0.0);
}

}  // namespace
}  // namespace rfassign
