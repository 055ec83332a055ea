#include "cosmic/dataio.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

namespace cosmic {

using ordered_json = nlohmann::ordered_json;

const char* to_string(CovariateKind kind) {
  return kind == CovariateKind::kPastOnly ? "past_only" : "past_and_future";
}

CovariateKind covariate_kind_from_string(const std::string& s) {
  if (s == "past_and_future") return CovariateKind::kPastAndFuture;
  if (s == "past_only") return CovariateKind::kPastOnly;
  throw ValidationError("unknown covariate kind '" + s + "'");
}

const Covariate* TimeSeriesSample::find_covariate(const std::string& name) const {
  for (const auto& c : covariates) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

void fail(const std::string& id, const std::string& field, const std::string& what) {
  throw ValidationError("sample '" + id + "', field '" + field + "': " + what);
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

void TimeSeriesSample::validate() const {
  if (context_length < 1) fail(id, "context_length", "must be >= 1");
  if (horizon < 1) fail(id, "horizon", "must be >= 1");
  if (period < 1) fail(id, "period", "must be >= 1");
  const auto needed = static_cast<std::size_t>(context_length) + static_cast<std::size_t>(horizon);
  if (target.size() < needed) {
    fail(id, "target", "length " + std::to_string(target.size()) +
                           " is shorter than context_length + horizon = " + std::to_string(needed));
  }
  if (!all_finite(target)) fail(id, "target", "contains non-finite values");
  if (!missing_mask.empty() && missing_mask.size() != target.size()) {
    fail(id, "missing_mask", "length differs from target length");
  }
  std::set<std::string> names;
  for (const auto& c : covariates) {
    const std::string field = "covariates." + c.name;
    if (!names.insert(c.name).second) fail(id, field, "duplicate covariate name");
    const std::size_t required =
        c.kind == CovariateKind::kPastAndFuture ? needed : static_cast<std::size_t>(context_length);
    if (c.values.size() < required) {
      fail(id, field, std::string("length ") + std::to_string(c.values.size()) + " < " +
                          std::to_string(required) + " required for kind " + to_string(c.kind));
    }
    if (!all_finite(c.values)) fail(id, field, "contains non-finite values");
  }
}

std::vector<double> QuantileForecast::median() const {
  std::vector<double> out(rows_.size());
  for (std::size_t t = 0; t < rows_.size(); ++t) out[t] = rows_[t][kMedianIndex];
  return out;
}

QuantileForecast QuantileForecast::from_point(const std::vector<double>& point) {
  QuantileForecast f(point.size());
  for (std::size_t t = 0; t < point.size(); ++t) f.row(t).fill(point[t]);
  return f;
}

void ForecastRecord::validate() const {
  if (forecast.horizon() == 0) {
    throw ValidationError("forecast '" + sample_id + "': empty horizon");
  }
  for (std::size_t t = 0; t < forecast.horizon(); ++t) {
    for (double v : forecast.row(t)) {
      if (!std::isfinite(v)) {
        throw ValidationError("forecast '" + sample_id + "': non-finite value at step " +
                              std::to_string(t));
      }
    }
  }
}

std::string to_json_line(const TimeSeriesSample& s) {
  ordered_json j;
  j["id"] = s.id;
  j["period"] = s.period;
  j["context_length"] = s.context_length;
  j["horizon"] = s.horizon;
  j["target"] = s.target;
  if (!s.missing_mask.empty()) j["missing_mask"] = s.missing_mask;
  ordered_json covs = ordered_json::object();
  for (const auto& c : s.covariates) {
    covs[c.name] = ordered_json{{"kind", to_string(c.kind)}, {"values", c.values}};
  }
  j["covariates"] = std::move(covs);
  return j.dump();
}

std::string to_json_line(const ForecastRecord& r) {
  ordered_json j;
  j["sample_id"] = r.sample_id;
  j["origin"] = r.origin;
  j["levels"] = kQuantileLevels;
  ordered_json values = ordered_json::array();
  for (std::size_t t = 0; t < r.forecast.horizon(); ++t) values.push_back(r.forecast.row(t));
  j["values"] = std::move(values);
  return j.dump();
}

namespace {

template <typename T>
T required(const ordered_json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line, std::string("field '") + key + "': " + e.what());
  }
}

ordered_json parse_line(const std::string& line, std::size_t line_number) {
  try {
    auto j = ordered_json::parse(line);
    if (!j.is_object()) throw ParseError(line_number, "expected a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_number, e.what());
  }
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

TimeSeriesSample sample_from_json_line(const std::string& line, std::size_t line_number) {
  const auto j = parse_line(line, line_number);
  TimeSeriesSample s;
  s.id = required<std::string>(j, "id", line_number);
  s.period = required<int>(j, "period", line_number);
  s.context_length = required<int>(j, "context_length", line_number);
  s.horizon = required<int>(j, "horizon", line_number);
  s.target = required<std::vector<double>>(j, "target", line_number);
  if (j.contains("missing_mask")) {
    s.missing_mask = required<std::vector<bool>>(j, "missing_mask", line_number);
  }
  if (j.contains("covariates")) {
    const auto& covs = j.at("covariates");
    if (!covs.is_object()) throw ParseError(line_number, "field 'covariates' must be an object");
    for (const auto& [name, body] : covs.items()) {
      Covariate c;
      c.name = name;
      if (!body.is_object()) throw ParseError(line_number, "covariate '" + name + "' must be an object");
      c.values = required<std::vector<double>>(body, "values", line_number);
      if (body.contains("kind")) {
        try {
          c.kind = covariate_kind_from_string(required<std::string>(body, "kind", line_number));
        } catch (const ValidationError& e) {
          throw ParseError(line_number, e.what());
        }
      }
      s.covariates.push_back(std::move(c));
    }
  }
  return s;
}

ForecastRecord forecast_from_json_line(const std::string& line, std::size_t line_number) {
  const auto j = parse_line(line, line_number);
  ForecastRecord r;
  r.sample_id = required<std::string>(j, "sample_id", line_number);
  r.origin = required<int>(j, "origin", line_number);
  const auto levels = required<std::vector<double>>(j, "levels", line_number);
  if (levels.size() != kNumQuantiles) {
    throw ParseError(line_number, "expected 9 quantile levels");
  }
  for (std::size_t q = 0; q < kNumQuantiles; ++q) {
    if (std::abs(levels[q] - kQuantileLevels[q]) > 1e-12) {
      throw ParseError(line_number, "quantile levels must be 0.1, 0.2, ..., 0.9");
    }
  }
  const auto values = required<std::vector<std::vector<double>>>(j, "values", line_number);
  r.forecast = QuantileForecast(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (values[t].size() != kNumQuantiles) {
      throw ParseError(line_number, "row " + std::to_string(t) + " does not have 9 values");
    }
    std::copy(values[t].begin(), values[t].end(), r.forecast.row(t).begin());
  }
  return r;
}

std::vector<TimeSeriesSample> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file '" + path.string() + "'");
  std::vector<TimeSeriesSample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (blank(line)) continue;
    auto s = sample_from_json_line(line, n);
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

void save_corpus(const std::vector<TimeSeriesSample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (const auto& s : samples) out << to_json_line(s) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::vector<ForecastRecord> load_forecasts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open forecast file '" + path.string() + "'");
  std::vector<ForecastRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (blank(line)) continue;
    auto r = forecast_from_json_line(line, n);
    r.validate();
    out.push_back(std::move(r));
  }
  return out;
}

void save_forecasts(const std::vector<ForecastRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (const auto& r : records) {
    r.validate();
    out << to_json_line(r) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace cosmic
