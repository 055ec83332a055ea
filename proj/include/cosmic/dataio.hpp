#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cosmic {

/// Raised when an input file cannot be parsed. Carries the 1-based line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Raised when a value violates a documented invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for argument values outside an operation's domain.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The nine equidistant quantile levels 0.1, ..., 0.9.
inline constexpr std::size_t kNumQuantiles = 9;
inline constexpr std::array<double, kNumQuantiles> kQuantileLevels = {
    0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
inline constexpr std::size_t kMedianIndex = 4;

enum class CovariateKind { kPastAndFuture, kPastOnly };

const char* to_string(CovariateKind kind);
CovariateKind covariate_kind_from_string(const std::string& s);

struct Covariate {
  std::string name;
  CovariateKind kind = CovariateKind::kPastAndFuture;
  std::vector<double> values;
};

/// One target series with its covariates and forecast split.
///
/// `target` holds the context (first `context_length` values) followed, when
/// known, by the horizon truth. Covariates are kept in insertion order; the
/// model's token layout depends on that order.
struct TimeSeriesSample {
  std::string id;
  std::vector<double> target;
  int context_length = 1;
  int horizon = 1;
  int period = 1;
  std::vector<Covariate> covariates;
  /// true = observed. Empty means fully observed.
  std::vector<bool> missing_mask;

  bool observed(std::size_t t) const { return missing_mask.empty() || missing_mask[t]; }
  const Covariate* find_covariate(const std::string& name) const;
  /// Throws ValidationError naming the sample id and offending field.
  void validate() const;
};

/// Quantile forecast for one task, values in original target scale.
class QuantileForecast {
 public:
  QuantileForecast() = default;
  explicit QuantileForecast(std::size_t horizon) : rows_(horizon) {}

  std::size_t horizon() const { return rows_.size(); }
  std::array<double, kNumQuantiles>& row(std::size_t t) { return rows_[t]; }
  const std::array<double, kNumQuantiles>& row(std::size_t t) const { return rows_[t]; }
  double& at(std::size_t t, std::size_t q) { return rows_[t][q]; }
  double at(std::size_t t, std::size_t q) const { return rows_[t][q]; }
  std::vector<double> median() const;
  /// Broadcasts a point forecast to every quantile level.
  static QuantileForecast from_point(const std::vector<double>& point);

  bool operator==(const QuantileForecast&) const = default;

 private:
  std::vector<std::array<double, kNumQuantiles>> rows_;
};

struct ForecastRecord {
  std::string sample_id;
  int origin = 0;
  QuantileForecast forecast;

  void validate() const;
  bool operator==(const ForecastRecord&) const = default;
};

std::vector<TimeSeriesSample> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::vector<TimeSeriesSample>& samples, const std::filesystem::path& path);

std::vector<ForecastRecord> load_forecasts(const std::filesystem::path& path);
void save_forecasts(const std::vector<ForecastRecord>& records, const std::filesystem::path& path);

/// Single-line JSON encodings used by the files above.
std::string to_json_line(const TimeSeriesSample& sample);
std::string to_json_line(const ForecastRecord& record);
TimeSeriesSample sample_from_json_line(const std::string& line, std::size_t line_number = 1);
ForecastRecord forecast_from_json_line(const std::string& line, std::size_t line_number = 1);

}  // namespace cosmic
