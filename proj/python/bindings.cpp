#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cosmic/baselines.hpp"
#include "cosmic/checkpoint.hpp"
#include "cosmic/config.hpp"
#include "cosmic/dataio.hpp"
#include "cosmic/evaluation.hpp"
#include "cosmic/model.hpp"
#include "cosmic/train.hpp"

namespace py = pybind11;
using namespace cosmic;

namespace {

using Rows = std::vector<std::vector<double>>;

Rows to_rows(const QuantileForecast& f) {
  Rows out;
  for (std::size_t t = 0; t < f.horizon(); ++t) out.emplace_back(f.row(t).begin(), f.row(t).end());
  return out;
}

QuantileForecast from_rows(const Rows& rows) {
  QuantileForecast f(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != kNumQuantiles) throw DomainError("forecast rows must have 9 quantiles");
    std::copy(rows[t].begin(), rows[t].end(), f.row(t).begin());
  }
  return f;
}

class Model {
 public:
  explicit Model(const std::string& path) : checkpoint_(load_checkpoint(path)) {}

  Rows predict(const std::string& sample_json, bool use_covariates) const {
    const auto sample = sample_from_json_line(sample_json);
    return to_rows(model::predict(checkpoint_.params, sample, checkpoint_.config.model, use_covariates));
  }
  std::size_t num_parameters() const { return checkpoint_.params.num_values(); }
  std::string config() const { return render_config(checkpoint_.config); }

 private:
  Checkpoint checkpoint_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Covariate-aware forecasting core";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);
  py::register_exception<baselines::CapabilityError>(m, "CapabilityError", PyExc_ValueError);

  m.attr("QUANTILE_LEVELS") = std::vector<double>(kQuantileLevels.begin(), kQuantileLevels.end());

  m.def("render_config", [](const std::string& text) { return render_config(parse_config(text)); },
        py::arg("text") = "", "Resolve a config text against the defaults.");

  m.def("seasonal_naive",
        [](const std::vector<double>& context, int period, int horizon) {
          return to_rows(baselines::seasonal_naive(context, period, horizon));
        },
        py::arg("context"), py::arg("period"), py::arg("horizon"));

  m.def("mase",
        [](const std::vector<double>& forecast_median, const std::vector<double>& truth,
           const std::vector<double>& context, int period) {
          return evaluation::mase(forecast_median, truth, context, period);
        },
        py::arg("forecast_median"), py::arg("truth"), py::arg("context"), py::arg("period"));
  m.def("wql", [](const Rows& forecast, const std::vector<double>& truth) {
    return evaluation::wql(from_rows(forecast), truth);
  }, py::arg("forecast"), py::arg("truth"));

  m.def("roll_count", &evaluation::roll_count, py::arg("n"), py::arg("horizon"), py::arg("rolling_fraction") = 0.1);

  m.def("fit_in_context",
        [](const std::string& sample_json, double ridge_lambda) {
          const auto fit = baselines::fit_in_context(sample_from_json_line(sample_json), ridge_lambda);
          py::dict d;
          d["coefficients"] = fit.coefficients;
          d["intercept"] = fit.intercept;
          d["ridge_lambda"] = fit.ridge_lambda;
          return d;
        },
        py::arg("sample_json"), py::arg("ridge_lambda") = 1.0);

  m.def("ridge_forecast",
        [](const std::string& sample_json, double ridge_lambda) {
          const auto sample = sample_from_json_line(sample_json);
          const auto fit = baselines::fit_in_context(sample, ridge_lambda);
          return to_rows(baselines::in_context_forecast(fit, sample, baselines::seasonal_naive_forecaster()));
        },
        py::arg("sample_json"), py::arg("ridge_lambda") = 1.0,
        "In-context ridge forecast with seasonal naive on the residuals.");

  m.def("gradient_check",
        [](const std::string& config_text, const std::string& sample_json, std::uint64_t seed, int entries,
           double epsilon) {
          const auto config = parse_config(config_text);
          Rng rng = make_rng(seed);
          Rng init = rng.substream("init");
          const auto params = model::init_params(config.model, init).cast<double>();
          Rng pick = rng.substream("entries");
          const auto r = train::gradient_check(params, sample_from_json_line(sample_json), config.model, epsilon,
                                               entries, pick);
          py::dict d;
          d["max_relative_error"] = r.max_relative_error;
          d["checked"] = r.checked;
          d["skipped"] = r.skipped;
          return d;
        },
        py::arg("config_text"), py::arg("sample_json"), py::arg("seed"), py::arg("entries") = 200,
        py::arg("epsilon") = 1e-5);

  m.def("init_checkpoint",
        [](const std::string& config_text, std::uint64_t seed, const std::string& path) {
          Checkpoint ck{parse_config(config_text), {}};
          Rng rng = make_rng(seed).substream("init");
          ck.params = model::init_params(ck.config.model, rng, {ck.config.train.init_std, false});
          save_checkpoint(path, ck);
        },
        py::arg("config_text"), py::arg("seed"), py::arg("path"), "Write an untrained checkpoint.");

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("path"))
      .def("predict", &Model::predict, py::arg("sample_json"), py::arg("use_covariates") = true)
      .def_property_readonly("num_parameters", &Model::num_parameters)
      .def_property_readonly("config", &Model::config);
}
