#include "cosmic/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace cosmic {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool is_probability(double p) { return p > 0.0 && p < 1.0; }
bool in_unit_interval(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void SynthGenConfig::validate() const {
  require(max_events >= 1, "augment.max_events must be >= 1");
  require(max_changepoints >= 0, "augment.max_changepoints must be >= 0");
  require(changepoint_std > 0.0, "augment.changepoint_std must be > 0");
  require(bell_width_min > 0.0 && bell_width_max >= bell_width_min,
          "augment.bell_width_min/max must be positive and ordered");
  require(amplitude_std >= 0.0, "augment.amplitude_std must be >= 0");
}

void AugmentationConfig::validate() const {
  require(is_probability(p), "augment.p must lie in (0, 1)");
  require(is_probability(p_fo), "augment.p_fo must lie in (0, 1)");
  require(is_probability(p_pw), "augment.p_pw must lie in (0, 1)");
  require(is_probability(p_lagcount), "augment.p_lagcount must lie in (0, 1)");
  require(is_probability(p_lagpos), "augment.p_lagpos must lie in (0, 1)");
  require(k_max >= 1, "augment.k_max must be >= 1");
  require(max_lag >= 0, "augment.max_lag must be >= 0");
  require(noise_scale >= 0.0, "augment.noise_scale must be >= 0");
  require(in_unit_interval(synth_fraction), "augment.synth_fraction must lie in [0, 1]");
  require(in_unit_interval(past_only_prob), "augment.past_only_prob must lie in [0, 1]");
  synth.validate();
}

void ModelConfig::validate() const {
  require(d_model >= 2, "model.d_model must be >= 2");
  require(n_heads >= 1, "model.n_heads must be >= 1");
  require(d_model % (2 * n_heads) == 0, "model.d_model must be divisible by 2 * model.n_heads");
  require(n_layers_enc >= 1 && n_layers_dec >= 1, "model layer counts must be >= 1");
  require(d_ff >= 1, "model.d_ff must be >= 1");
  require(m_in >= 1 && m_out >= 1, "model.m_in and model.m_out must be >= 1");
  require(max_context_patches >= 1 && max_horizon_patches >= 1,
          "model.max_context_patches and model.max_horizon_patches must be >= 1");
  require(max_covariates >= 0, "model.max_covariates must be >= 0");
  require(rope_base > 1.0, "model.rope_base must be > 1");
}

void TrainConfig::validate() const {
  require(steps >= 0, "train.steps must be >= 0");
  require(batch_size >= 1, "train.batch_size must be >= 1");
  require(learning_rate >= 0.0, "train.learning_rate must be >= 0");
  require(weight_decay >= 0.0, "train.weight_decay must be >= 0");
  require(in_unit_interval(warmup_fraction), "train.warmup_fraction must lie in [0, 1]");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "train.beta1/beta2 must lie in [0, 1)");
  require(adam_eps > 0.0, "train.adam_eps must be > 0");
  require(grad_clip >= 0.0, "train.grad_clip must be >= 0");
  require(context_length >= 1 && horizon >= 1, "train.context_length and train.horizon must be >= 1");
  require(init_std > 0.0, "train.init_std must be > 0");
}

void EvalConfig::validate() const {
  require(!horizon_periods.empty(), "eval.horizon_periods must not be empty");
  for (int p : horizon_periods) require(p >= 1, "eval.horizon_periods entries must be >= 1");
  require(rolling_fraction > 0.0 && rolling_fraction <= 1.0, "eval.rolling_fraction must lie in (0, 1]");
  require(ridge_lambda >= 0.0, "eval.ridge_lambda must be >= 0");
  require(!baseline.empty(), "eval.baseline must not be empty");
}

void ExperimentConfig::validate() const {
  require(corpus_size >= 1, "experiment.corpus_size must be >= 1");
  require(context_length >= 2 && horizon >= 1, "experiment.context_length/horizon out of range");
  require(base_length >= context_length + horizon,
          "experiment.base_length must be >= context_length + horizon");
  require(eval_samples >= 1, "experiment.eval_samples must be >= 1");
  require(ablation_events >= 0, "experiment.ablation_events must be >= 0");
  require(!event_counts.empty() && !covariate_counts.empty(), "experiment grids must not be empty");
  for (int e : event_counts) require(e >= 0, "experiment.event_counts entries must be >= 0");
  for (int c : covariate_counts) require(c >= 1, "experiment.covariate_counts entries must be >= 1");
  require(lag_mode == "fixed0" || lag_mode == "geometric", "experiment.lag_mode must be fixed0 or geometric");
  require(is_probability(lag_geometric_p), "experiment.lag_geometric_p must lie in (0, 1)");
  require(bell_width_min > 0.0 && bell_width_max >= bell_width_min, "experiment bell widths out of range");
  require(impact_min >= 0.0 && impact_max >= impact_min, "experiment impact range out of order");
  require(base_noise >= 0.0, "experiment.base_noise must be >= 0");
}

void Config::validate() const {
  augment.validate();
  model.validate();
  train.validate();
  eval.validate();
  experiment.validate();
  require(augment.k_max <= model.max_covariates, "augment.k_max must not exceed model.max_covariates");
  for (int c : experiment.covariate_counts) {
    require(c <= model.max_covariates, "experiment.covariate_counts entries must not exceed model.max_covariates");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  int x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  return out;
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

std::string format_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Field {
  std::function<void(Config&, const std::string&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

template <typename M>
Field double_field(M member) {
  return {[member](Config& c, const std::string& k, const std::string& v) { member(c) = parse_double(k, v); },
          [member](const Config& c) { return format_double(member(c)); }};
}
template <typename M>
Field int_field(M member) {
  return {[member](Config& c, const std::string& k, const std::string& v) { member(c) = parse_int(k, v); },
          [member](const Config& c) { return std::to_string(member(c)); }};
}
template <typename M>
Field bool_field(M member) {
  return {[member](Config& c, const std::string& k, const std::string& v) { member(c) = parse_bool(k, v); },
          [member](const Config& c) { return std::string(member(c) ? "true" : "false"); }};
}
template <typename M>
Field string_field(M member) {
  return {[member](Config& c, const std::string&, const std::string& v) { member(c) = v; },
          [member](const Config& c) { return member(c); }};
}
template <typename M>
Field list_field(M member) {
  return {[member](Config& c, const std::string& k, const std::string& v) { member(c) = parse_int_list(k, v); },
          [member](const Config& c) { return format_list(member(c)); }};
}

#define COSMIC_MEMBER(path) [](auto& c) -> auto& { return c.path; }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"augment.p", double_field(COSMIC_MEMBER(augment.p))},
      {"augment.p_fo", double_field(COSMIC_MEMBER(augment.p_fo))},
      {"augment.p_pw", double_field(COSMIC_MEMBER(augment.p_pw))},
      {"augment.k_max", int_field(COSMIC_MEMBER(augment.k_max))},
      {"augment.p_lagcount", double_field(COSMIC_MEMBER(augment.p_lagcount))},
      {"augment.p_lagpos", double_field(COSMIC_MEMBER(augment.p_lagpos))},
      {"augment.max_lag", int_field(COSMIC_MEMBER(augment.max_lag))},
      {"augment.noise_scale", double_field(COSMIC_MEMBER(augment.noise_scale))},
      {"augment.synth_fraction", double_field(COSMIC_MEMBER(augment.synth_fraction))},
      {"augment.past_only_prob", double_field(COSMIC_MEMBER(augment.past_only_prob))},
      {"augment.max_events", int_field(COSMIC_MEMBER(augment.synth.max_events))},
      {"augment.max_changepoints", int_field(COSMIC_MEMBER(augment.synth.max_changepoints))},
      {"augment.changepoint_std", double_field(COSMIC_MEMBER(augment.synth.changepoint_std))},
      {"augment.bell_width_min", double_field(COSMIC_MEMBER(augment.synth.bell_width_min))},
      {"augment.bell_width_max", double_field(COSMIC_MEMBER(augment.synth.bell_width_max))},
      {"augment.amplitude_std", double_field(COSMIC_MEMBER(augment.synth.amplitude_std))},
      {"model.d_model", int_field(COSMIC_MEMBER(model.d_model))},
      {"model.n_layers_enc", int_field(COSMIC_MEMBER(model.n_layers_enc))},
      {"model.n_layers_dec", int_field(COSMIC_MEMBER(model.n_layers_dec))},
      {"model.n_heads", int_field(COSMIC_MEMBER(model.n_heads))},
      {"model.d_ff", int_field(COSMIC_MEMBER(model.d_ff))},
      {"model.m_in", int_field(COSMIC_MEMBER(model.m_in))},
      {"model.m_out", int_field(COSMIC_MEMBER(model.m_out))},
      {"model.max_context_patches", int_field(COSMIC_MEMBER(model.max_context_patches))},
      {"model.max_horizon_patches", int_field(COSMIC_MEMBER(model.max_horizon_patches))},
      {"model.max_covariates", int_field(COSMIC_MEMBER(model.max_covariates))},
      {"model.rope_base", double_field(COSMIC_MEMBER(model.rope_base))},
      {"train.steps", int_field(COSMIC_MEMBER(train.steps))},
      {"train.batch_size", int_field(COSMIC_MEMBER(train.batch_size))},
      {"train.learning_rate", double_field(COSMIC_MEMBER(train.learning_rate))},
      {"train.weight_decay", double_field(COSMIC_MEMBER(train.weight_decay))},
      {"train.warmup_fraction", double_field(COSMIC_MEMBER(train.warmup_fraction))},
      {"train.beta1", double_field(COSMIC_MEMBER(train.beta1))},
      {"train.beta2", double_field(COSMIC_MEMBER(train.beta2))},
      {"train.adam_eps", double_field(COSMIC_MEMBER(train.adam_eps))},
      {"train.grad_clip", double_field(COSMIC_MEMBER(train.grad_clip))},
      {"train.context_length", int_field(COSMIC_MEMBER(train.context_length))},
      {"train.horizon", int_field(COSMIC_MEMBER(train.horizon))},
      {"train.augment", bool_field(COSMIC_MEMBER(train.augment))},
      {"train.init_std", double_field(COSMIC_MEMBER(train.init_std))},
      {"eval.horizon_periods", list_field(COSMIC_MEMBER(eval.horizon_periods))},
      {"eval.rolling_fraction", double_field(COSMIC_MEMBER(eval.rolling_fraction))},
      {"eval.ridge_lambda", double_field(COSMIC_MEMBER(eval.ridge_lambda))},
      {"eval.baseline", string_field(COSMIC_MEMBER(eval.baseline))},
      {"experiment.corpus_size", int_field(COSMIC_MEMBER(experiment.corpus_size))},
      {"experiment.base_length", int_field(COSMIC_MEMBER(experiment.base_length))},
      {"experiment.context_length", int_field(COSMIC_MEMBER(experiment.context_length))},
      {"experiment.horizon", int_field(COSMIC_MEMBER(experiment.horizon))},
      {"experiment.eval_samples", int_field(COSMIC_MEMBER(experiment.eval_samples))},
      {"experiment.ablation_events", int_field(COSMIC_MEMBER(experiment.ablation_events))},
      {"experiment.event_counts", list_field(COSMIC_MEMBER(experiment.event_counts))},
      {"experiment.covariate_counts", list_field(COSMIC_MEMBER(experiment.covariate_counts))},
      {"experiment.lag_mode", string_field(COSMIC_MEMBER(experiment.lag_mode))},
      {"experiment.lag_geometric_p", double_field(COSMIC_MEMBER(experiment.lag_geometric_p))},
      {"experiment.bell_amplitude", double_field(COSMIC_MEMBER(experiment.bell_amplitude))},
      {"experiment.bell_width_min", double_field(COSMIC_MEMBER(experiment.bell_width_min))},
      {"experiment.bell_width_max", double_field(COSMIC_MEMBER(experiment.bell_width_max))},
      {"experiment.impact_min", double_field(COSMIC_MEMBER(experiment.impact_min))},
      {"experiment.impact_max", double_field(COSMIC_MEMBER(experiment.impact_max))},
      {"experiment.level", double_field(COSMIC_MEMBER(experiment.level))},
      {"experiment.base_noise", double_field(COSMIC_MEMBER(experiment.base_noise))},
  };
  return table;
}

#undef COSMIC_MEMBER

}  // namespace

Config parse_config(const std::string& text) {
  Config config;
  std::stringstream in(text);
  std::string raw;
  std::size_t line_number = 0;
  while (std::getline(in, raw)) {
    ++line_number;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_number) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) {
      throw ConfigError("line " + std::to_string(line_number) + ": unknown key '" + key + "'");
    }
    it->second.set(config, key, value);
  }
  config.validate();
  return config;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const Config& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(config) + "\n";
  return out;
}

}  // namespace cosmic
