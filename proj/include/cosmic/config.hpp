#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cosmic {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters of the synthetic covariate generator.
struct SynthGenConfig {
  int max_events = 20;        // c_e^max
  int max_changepoints = 8;   // c_cp^max
  double changepoint_std = 2.0;
  /// Gaussian event width bounds as fractions of the series length.
  double bell_width_min = 0.01;
  double bell_width_max = 0.1;
  double amplitude_std = 1.0;

  void validate() const;
};

/// Sampling distributions of the covariate augmentation.
struct AugmentationConfig {
  double p = 0.25;            // covariate count geometric parameter
  double p_fo = 0.2;
  double p_pw = 0.15;
  int k_max = 10;
  double p_lagcount = 0.85;
  double p_lagpos = 0.15;
  int max_lag = 500;
  double noise_scale = 0.02;  // s_eps
  double synth_fraction = 0.5;
  double past_only_prob = 0.5;
  SynthGenConfig synth;

  void validate() const;
};

struct ModelConfig {
  int d_model = 64;
  int n_layers_enc = 2;
  int n_layers_dec = 2;
  int n_heads = 4;
  int d_ff = 128;
  int m_in = 32;
  int m_out = 64;
  /// Learned time positions available before / after the forecast origin,
  /// in units of input patches.
  int max_context_patches = 16;
  int max_horizon_patches = 8;
  int max_covariates = 10;
  double rope_base = 10000.0;

  int max_time_positions() const { return max_context_patches + max_horizon_patches; }
  int head_dim() const { return d_model / n_heads; }
  void validate() const;
};

struct TrainConfig {
  int steps = 1000;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double warmup_fraction = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Global gradient-norm clip; 0 disables clipping.
  double grad_clip = 0.0;
  int context_length = 512;
  int horizon = 64;
  bool augment = true;
  double init_std = 0.02;

  void validate() const;
};

struct EvalConfig {
  std::vector<int> horizon_periods = {1, 2};
  double rolling_fraction = 0.1;
  double ridge_lambda = 1.0;
  std::string baseline = "seasonal-naive";

  void validate() const;
};

/// Sizes and data-generation knobs of the scripted desk-scale studies.
struct ExperimentConfig {
  int corpus_size = 5000;
  int base_length = 256;
  int context_length = 128;
  int horizon = 32;
  int eval_samples = 200;
  /// Context events per covariate in the ablation evaluation set.
  int ablation_events = 4;
  std::vector<int> event_counts = {0, 1, 2, 4, 8};
  std::vector<int> covariate_counts = {1, 2, 3};
  std::string lag_mode = "fixed0";  // fixed0 | geometric
  double lag_geometric_p = 0.85;
  double bell_amplitude = 1.0;
  double bell_width_min = 1.5;
  double bell_width_max = 4.0;
  double impact_min = 0.75;
  double impact_max = 1.5;
  double level = 10.0;
  double base_noise = 0.2;

  void validate() const;
};

struct Config {
  AugmentationConfig augment;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  ExperimentConfig experiment;

  void validate() const;
};

/// Parses the flat `section.key = value` format. Unknown keys and
/// out-of-range values raise ConfigError; absent keys keep their defaults.
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);
/// Renders every key with its resolved value, in a form parse_config accepts.
std::string render_config(const Config& config);

}  // namespace cosmic
