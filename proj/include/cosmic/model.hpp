#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "cosmic/autodiff.hpp"
#include "cosmic/config.hpp"
#include "cosmic/dataio.hpp"
#include "cosmic/preprocess.hpp"
#include "cosmic/rng.hpp"

namespace cosmic::model {

/// Named tensors of the forecaster, all stored as 2-D matrices.
///
/// Order of insertion is the canonical order used by checkpoints and by the
/// flat views the optimizer and gradient checker work on.
template <typename T>
class ParamStore {
 public:
  using Mat = ad::Matrix<T>;

  void add(const std::string& name, Mat value) {
    if (index_.contains(name)) throw std::logic_error("duplicate parameter '" + name + "'");
    index_[name] = tensors_.size();
    names_.push_back(name);
    tensors_.push_back(std::move(value));
  }
  std::size_t size() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Mat& operator[](std::size_t i) { return tensors_[i]; }
  const Mat& operator[](std::size_t i) const { return tensors_[i]; }
  Mat& at(const std::string& name) { return tensors_[lookup(name)]; }
  const Mat& at(const std::string& name) const { return tensors_[lookup(name)]; }
  bool contains(const std::string& name) const { return index_.contains(name); }
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
    return it->second;
  }
  std::size_t num_values() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += static_cast<std::size_t>(t.size());
    return n;
  }
  bool all_finite() const {
    for (const auto& t : tensors_) {
      if (!t.allFinite()) return false;
    }
    return true;
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], tensors_[i].template cast<U>());
    return out;
  }

  bool operator==(const ParamStore& o) const {
    if (names_ != o.names_) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (tensors_[i].rows() != o.tensors_[i].rows() || tensors_[i].cols() != o.tensors_[i].cols() ||
          tensors_[i] != o.tensors_[i]) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Mat> tensors_;
  std::map<std::string, std::size_t> index_;
};

/// Training runs in single precision.
using ModelParams = ParamStore<float>;

/// Shapes of every parameter for a configuration, in canonical order.
std::vector<std::pair<std::string, std::pair<int, int>>> parameter_shapes(const ModelConfig& config);

struct InitOptions {
  double embedding_std = 0.02;
  /// Zero the output residual block so every forecast is 0.
  bool zero_head = false;
};

ModelParams init_params(const ModelConfig& config, Rng& rng, const InitOptions& options = {});

enum class TokenKind { kCovariateSeparator, kTargetSeparator, kPatch };

struct TokenInfo {
  TokenKind kind = TokenKind::kPatch;
  /// Covariate index, or -1 for the target.
  int variate = -1;
  /// Learned time-embedding row, -1 for separators.
  int time_position = -1;
  /// Row of TokenizedInput::patch_inputs, -1 for separators.
  int patch_row = -1;
};

/// Parameter-free part of input construction.
struct TokenizedInput {
  /// One row per patch token: [normalized values || observed mask], 2 * m_in wide.
  ad::Matrix<double> patch_inputs;
  std::vector<TokenInfo> tokens;
  std::vector<int> decoder_time_positions;
  int horizon = 0;
  preprocess::ScalerState target_scaler;
};

/// Normalizes, patches and lays out tokens as
/// [sep_c, cov_1 patches, sep_c, cov_2 patches, ..., sep_t, target patches].
/// Target patches cover the context only; covariates cover context plus
/// horizon, with the horizon of past-only covariates masked.
TokenizedInput tokenize(const TimeSeriesSample& sample, const ModelConfig& config, bool use_covariates = true);

/// Encoder input embeddings plus per-token metadata.
struct TokenSequence {
  ad::Matrix<double> embeddings;
  std::vector<TokenInfo> tokens;
};

TokenSequence build_input(const ModelParams& params, const TimeSeriesSample& sample, const ModelConfig& config,
                          bool use_covariates = true);

/// Binds a parameter store to a tape and evaluates the network.
template <typename T>
class Network {
 public:
  Network(ad::Tape<T>& tape, const ParamStore<T>& params, const ModelConfig& config, bool requires_grad);

  /// Encoder input embeddings (n_tokens x d).
  ad::Var embed(const TokenizedInput& input);
  /// Quantile predictions in normalized space (horizon x 9).
  ad::Var forward(const TokenizedInput& input);

  ad::Var param(const std::string& name) const { return vars_[params_.lookup(name)]; }
  ad::Var param(std::size_t i) const { return vars_[i]; }
  std::size_t num_params() const { return vars_.size(); }

 private:
  ad::Var residual_block(ad::Var x, const std::string& prefix);
  ad::Var feed_forward(ad::Var x, const std::string& prefix);
  ad::Var attention(ad::Var queries, ad::Var keys_values, std::span<const int> q_positions,
                    std::span<const int> kv_positions, const std::string& prefix);
  void check_finite(ad::Var v, const std::string& where) const;

  ad::Tape<T>& tape_;
  const ParamStore<T>& params_;
  const ModelConfig& config_;
  std::vector<ad::Var> vars_;
};

extern template class Network<float>;
extern template class Network<double>;

/// Forward pass on a recording-free tape; returns horizon x 9 normalized values.
template <typename T>
ad::Matrix<double> forward(const ParamStore<T>& params, const TokenizedInput& input, const ModelConfig& config);

/// Mean pinball loss over observed timesteps and the nine levels.
double quantile_loss(const ad::Matrix<double>& pred, std::span<const double> truth,
                     const std::vector<bool>& observed = {});

/// Forecast in the original target scale.
template <typename T>
QuantileForecast predict(const ParamStore<T>& params, const TimeSeriesSample& sample, const ModelConfig& config,
                         bool use_covariates = true, bool sort_quantiles = true);

/// Normalized future truth and its observation mask for a sample.
struct FutureTruth {
  std::vector<double> values;
  std::vector<bool> observed;
};
FutureTruth normalized_future(const TimeSeriesSample& sample, const preprocess::ScalerState& scaler);

/// Loss of one sample, recorded on a tape for training and gradient checks.
template <typename T>
ad::Var sample_loss(Network<T>& net, ad::Tape<T>& tape, const TimeSeriesSample& sample, const ModelConfig& config);

}  // namespace cosmic::model
