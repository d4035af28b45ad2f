#include "rfassign/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rfassign/errors.hpp"
#include "rfassign/rng.hpp"

namespace rfassign {

Point::Point(const std::vector<std::optional<double>>& coords) {
  values.reserve(coords.size());
  missing.reserve(coords.size());
  for (const auto& c : coords) {
    values.push_back(c.value_or(0.0));
    missing.push_back(c.has_value() ? 0 : 1);
  }
}

Dataset::Dataset(std::size_t cols, std::vector<double> features,
                 std::vector<std::uint8_t> mask, std::vector<double> response,
                 std::optional<std::vector<double>> truth)
    : cols_(cols),
      features_(std::move(features)),
      mask_(std::move(mask)),
      response_(std::move(response)),
      truth_(std::move(truth)) {
  const std::size_t n = response_.size();
  if (features_.size() != n * cols_ || mask_.size() != features_.size()) {
    throw InvalidInput("dataset: feature/mask dimensions do not match n x p");
  }
  if (truth_ && truth_->size() != n) {
    throw InvalidInput("dataset: truth vector length differs from response");
  }
  for (double y : response_) {
    if (!std::isfinite(y)) throw InvalidInput("dataset: response must be finite");
  }
  for (std::size_t k = 0; k < features_.size(); ++k) {
    if (mask_[k] != 0) {
      mask_[k] = 1;
      features_[k] = 0.0;
    } else if (!(features_[k] >= 0.0 && features_[k] <= 1.0)) {
      throw InvalidInput("dataset: observed feature outside [0,1] at row " +
                         std::to_string(k / cols_) + ", column " +
                         std::to_string(k % cols_));
    }
  }
}

std::optional<double> Dataset::value(std::size_t i, std::size_t h) const noexcept {
  if (is_missing(i, h)) return std::nullopt;
  return features_[i * cols_ + h];
}

std::span<const double> Dataset::truth() const {
  if (!truth_) throw ConfigError("dataset carries no noiseless truth vector");
  return *truth_;
}

std::size_t Dataset::missing_count(std::size_t h) const noexcept {
  std::size_t c = 0;
  for (std::size_t i = 0; i < rows(); ++i) c += is_missing(i, h) ? 1 : 0;
  return c;
}

std::size_t Dataset::missing_count() const noexcept {
  std::size_t c = 0;
  for (auto m : mask_) c += m;
  return c;
}

Dataset Dataset::with_response(std::vector<double> response) const {
  return Dataset(cols_, features_, mask_, std::move(response));
}

MissRates::MissRates(std::vector<double> rates) : rates_(std::move(rates)) {
  for (double r : rates_) {
    if (!(r >= 0.0 && r < 1.0)) {
      throw InvalidInput("missing rate must lie in [0,1), got " + format_double(r));
    }
  }
}

double friedman1(std::span<const double> x) {
  if (x.size() != kFriedmanDims) {
    throw InvalidInput("friedman1 expects 5 coordinates, got " +
                       std::to_string(x.size()));
  }
  const double t = x[2] - 0.5;
  return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * t * t +
         10.0 * x[3] + 5.0 * x[4];
}

Dataset generate_sample(std::size_t n, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidInput("noise sigma must be non-negative");
  Rng rng(derive_seed(seed, {0x5a3b1e}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<double> features(n * kFriedmanDims);
  std::vector<double> response(n);
  std::vector<double> truth(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = std::span(features).subspan(i * kFriedmanDims, kFriedmanDims);
    for (double& v : row) v = unif(rng);
    truth[i] = friedman1(row);
    response[i] = truth[i] + sigma * noise(rng);
  }
  return Dataset(kFriedmanDims, std::move(features),
                 std::vector<std::uint8_t>(n * kFriedmanDims, 0),
                 std::move(response), std::move(truth));
}

Dataset inject_mcar(const Dataset& data, const MissRates& rates,
                    std::uint64_t seed) {
  const std::size_t p = data.cols();
  if (rates.size() != p) {
    throw InvalidInput("inject_mcar: " + std::to_string(rates.size()) +
                       " rates for " + std::to_string(p) + " columns");
  }
  Rng rng(derive_seed(seed, {0x6d636172}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> features(data.raw_features().begin(), data.raw_features().end());
  std::vector<std::uint8_t> mask(data.raw_mask().begin(), data.raw_mask().end());
  // One uniform draw per entry in row-major order, whatever the rate, so the
  // mask of column h does not depend on the rates of the other columns.
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t h = 0; h < p; ++h) {
      if (unif(rng) < rates[h]) mask[i * p + h] = 1;
    }
  }
  std::optional<std::vector<double>> truth;
  if (data.has_truth()) truth.emplace(data.truth().begin(), data.truth().end());
  return Dataset(p, std::move(features), std::move(mask),
                 std::vector<double>(data.response().begin(), data.response().end()),
                 std::move(truth));
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::optional<double> parse_number(std::string_view token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || token.empty()) return std::nullopt;
  return v;
}

}  // namespace

Dataset parse_csv(std::string_view text, std::optional<std::size_t> expected_cols) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError(1, 1, "missing header row");

  const auto header = split_fields(lines.front());
  std::size_t p = 0;
  while (p < header.size() && header[p] == "x" + std::to_string(p + 1)) ++p;
  if (p >= header.size() || header[p] != "y") {
    throw ParseError(1, p + 1, "expected header x1,...,xp,y[,m]");
  }
  const bool has_truth = header.size() == p + 2;
  if (header.size() > p + 2 || (has_truth && header[p + 1] != "m")) {
    throw ParseError(1, p + 2, "expected header x1,...,xp,y[,m]");
  }
  if (expected_cols && *expected_cols != p) {
    throw ParseError(1, 1, "header declares " + std::to_string(p) +
                               " features, expected " + std::to_string(*expected_cols));
  }

  const std::size_t width = header.size();
  const std::size_t n = lines.size() - 1;
  std::vector<double> features(n * p, 0.0);
  std::vector<std::uint8_t> mask(n * p, 0);
  std::vector<double> response(n);
  std::vector<double> truth(has_truth ? n : 0);

  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t line_no = r + 2;
    const auto fields = split_fields(lines[r + 1]);
    if (fields.size() != width) {
      throw ParseError(line_no, std::min(fields.size(), width) + 1,
                       "expected " + std::to_string(width) + " fields, got " +
                           std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < width; ++c) {
      if (c < p && fields[c] == "NA") {
        mask[r * p + c] = 1;
        continue;
      }
      const auto v = parse_number(fields[c]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(line_no, c + 1, "not a number: '" + std::string(fields[c]) + "'");
      }
      if (c < p) {
        if (*v < 0.0 || *v > 1.0) throw ParseError(line_no, c + 1, "feature outside [0,1]");
        features[r * p + c] = *v;
      } else if (c == p) {
        response[r] = *v;
      } else {
        truth[r] = *v;
      }
    }
  }
  std::optional<std::vector<double>> t;
  if (has_truth) t = std::move(truth);
  return Dataset(p, std::move(features), std::move(mask), std::move(response), std::move(t));
}

Dataset read_csv(const std::filesystem::path& path, std::optional<std::size_t> expected_cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), expected_cols);
}

std::string format_csv(const Dataset& data) {
  std::string out;
  for (std::size_t h = 0; h < data.cols(); ++h) out += "x" + std::to_string(h + 1) + ",";
  out += data.has_truth() ? "y,m\n" : "y\n";
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t h = 0; h < data.cols(); ++h) {
      out += data.is_missing(i, h) ? std::string("NA") : format_double(data.observed(i, h));
      out += ',';
    }
    out += format_double(data.response(i));
    if (data.has_truth()) {
      out += ',';
      out += format_double(data.truth()[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_csv(data);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace rfassign
