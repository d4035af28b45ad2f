#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rfassign {

/// A point with possibly missing coordinates: `values[h]` is meaningful only
/// when `missing[h] == 0`.
struct PointView {
  std::span<const double> values;
  std::span<const std::uint8_t> missing;

  std::size_t size() const noexcept { return values.size(); }
  bool is_missing(std::size_t h) const noexcept { return missing[h] != 0; }
};

/// Owning query point, convenient for callers building points by hand.
struct Point {
  std::vector<double> values;
  std::vector<std::uint8_t> missing;

  Point() = default;
  explicit Point(const std::vector<std::optional<double>>& coords);

  PointView view() const noexcept { return {values, missing}; }
};

/// n x p feature matrix with a missingness mask, a fully observed response and
/// an optional noiseless regression target. Immutable once built; masked
/// entries hold no readable value.
class Dataset {
 public:
  Dataset() = default;

  /// Validates and takes ownership. `features` and `mask` are row-major n*p;
  /// masked feature slots are overwritten with zero.
  Dataset(std::size_t cols, std::vector<double> features,
          std::vector<std::uint8_t> mask, std::vector<double> response,
          std::optional<std::vector<double>> truth = std::nullopt);

  std::size_t rows() const noexcept { return response_.size(); }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return response_.empty(); }

  bool is_missing(std::size_t i, std::size_t h) const noexcept {
    return mask_[i * cols_ + h] != 0;
  }
  std::optional<double> value(std::size_t i, std::size_t h) const noexcept;
  /// Caller guarantees (i, h) is observed.
  double observed(std::size_t i, std::size_t h) const noexcept {
    return features_[i * cols_ + h];
  }

  PointView row(std::size_t i) const noexcept {
    return {std::span(features_).subspan(i * cols_, cols_),
            std::span(mask_).subspan(i * cols_, cols_)};
  }

  std::span<const double> response() const noexcept { return response_; }
  double response(std::size_t i) const noexcept { return response_[i]; }
  bool has_truth() const noexcept { return truth_.has_value(); }
  std::span<const double> truth() const;

  std::size_t missing_count(std::size_t h) const noexcept;
  std::size_t missing_count() const noexcept;

  std::span<const double> raw_features() const noexcept { return features_; }
  std::span<const std::uint8_t> raw_mask() const noexcept { return mask_; }

  /// Copy with a new response (and no truth); features and mask unchanged.
  Dataset with_response(std::vector<double> response) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t cols_ = 0;
  std::vector<double> features_;
  std::vector<std::uint8_t> mask_;
  std::vector<double> response_;
  std::optional<std::vector<double>> truth_;
};

/// Per-column MCAR missingness probabilities, each in [0, 1).
class MissRates {
 public:
  explicit MissRates(std::vector<double> rates);
  std::span<const double> values() const noexcept { return rates_; }
  std::size_t size() const noexcept { return rates_.size(); }
  double operator[](std::size_t h) const noexcept { return rates_[h]; }

 private:
  std::vector<double> rates_;
};

inline constexpr std::size_t kFriedmanDims = 5;

double friedman1(std::span<const double> x);

/// n rows uniform on [0,1]^5, Y = friedman1(X) + N(0, sigma^2), truth = friedman1(X).
Dataset generate_sample(std::size_t n, double sigma, std::uint64_t seed);

/// Masks each entry (i, h) independently with probability rates[h].
Dataset inject_mcar(const Dataset& data, const MissRates& rates,
                    std::uint64_t seed);

/// Header `x1,...,xp,y[,m]`; "NA" marks a missing feature. When
/// `expected_cols` is given the header must declare exactly that many features.
Dataset read_csv(const std::filesystem::path& path,
                 std::optional<std::size_t> expected_cols = std::nullopt);
Dataset parse_csv(std::string_view text,
                  std::optional<std::size_t> expected_cols = std::nullopt);
void write_csv(const Dataset& data, const std::filesystem::path& path);
std::string format_csv(const Dataset& data);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

}  // namespace rfassign
