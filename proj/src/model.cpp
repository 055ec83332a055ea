#include "cosmic/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cosmic::model {

namespace {

using Shape = std::pair<int, int>;

void add_attention_shapes(std::vector<std::pair<std::string, Shape>>& out, const std::string& prefix, int d) {
  for (const char* w : {"wq", "wk", "wv", "wo"}) out.push_back({prefix + "." + w, {d, d}});
}

void add_ff_shapes(std::vector<std::pair<std::string, Shape>>& out, const std::string& prefix, int d, int ff) {
  out.push_back({prefix + ".w1", {d, ff}});
  out.push_back({prefix + ".b1", {1, ff}});
  out.push_back({prefix + ".w2", {ff, d}});
  out.push_back({prefix + ".b2", {1, d}});
}

void add_residual_block_shapes(std::vector<std::pair<std::string, Shape>>& out, const std::string& prefix, int in,
                               int hidden, int width) {
  out.push_back({prefix + ".w1", {in, hidden}});
  out.push_back({prefix + ".b1", {1, hidden}});
  out.push_back({prefix + ".w2", {hidden, width}});
  out.push_back({prefix + ".b2", {1, width}});
  out.push_back({prefix + ".skip", {in, width}});
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int floor_div_round(int offset, int m) {
  return static_cast<int>(std::floor(static_cast<double>(offset) / m + 0.5));
}

}  // namespace

std::vector<std::pair<std::string, std::pair<int, int>>> parameter_shapes(const ModelConfig& c) {
  c.validate();
  const int d = c.d_model;
  const int q = static_cast<int>(kNumQuantiles);
  std::vector<std::pair<std::string, Shape>> out;
  add_residual_block_shapes(out, "patch", 2 * c.m_in, c.d_ff, d);
  out.push_back({"time_embedding", {c.max_time_positions(), d}});
  out.push_back({"sep_covariate", {1, d}});
  out.push_back({"sep_target", {1, d}});
  for (int l = 0; l < c.n_layers_enc; ++l) {
    const std::string p = "enc." + std::to_string(l);
    out.push_back({p + ".norm1", {1, d}});
    add_attention_shapes(out, p + ".attn", d);
    out.push_back({p + ".norm2", {1, d}});
    add_ff_shapes(out, p + ".ff", d, c.d_ff);
  }
  out.push_back({"enc.norm", {1, d}});
  out.push_back({"decoder_query", {1, d}});
  for (int l = 0; l < c.n_layers_dec; ++l) {
    const std::string p = "dec." + std::to_string(l);
    out.push_back({p + ".norm1", {1, d}});
    add_attention_shapes(out, p + ".self", d);
    out.push_back({p + ".norm2", {1, d}});
    add_attention_shapes(out, p + ".cross", d);
    out.push_back({p + ".norm3", {1, d}});
    add_ff_shapes(out, p + ".ff", d, c.d_ff);
  }
  out.push_back({"dec.norm", {1, d}});
  add_residual_block_shapes(out, "head", d, c.d_ff, c.m_out * q);
  return out;
}

ModelParams init_params(const ModelConfig& config, Rng& rng, const InitOptions& options) {
  ModelParams params;
  for (const auto& [name, shape] : parameter_shapes(config)) {
    const auto [rows, cols] = shape;
    ad::Matrix<float> m = ad::Matrix<float>::Zero(rows, cols);
    const bool head = name.starts_with("head.");
    if (head && options.zero_head) {
      // stays zero
    } else if (name.find("norm") != std::string::npos) {
      m.setOnes();
    } else if (ends_with(name, ".b1") || ends_with(name, ".b2")) {
      // biases start at zero
    } else if (name == "time_embedding" || name.starts_with("sep_") || name == "decoder_query") {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal(0.0, options.embedding_std));
    } else {
      const double std = 1.0 / std::sqrt(static_cast<double>(rows));
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal(0.0, std));
    }
    params.add(name, std::move(m));
  }
  return params;
}

TokenizedInput tokenize(const TimeSeriesSample& sample, const ModelConfig& config, bool use_covariates) {
  sample.validate();
  const int T = sample.context_length;
  const int h = sample.horizon;
  const int m = config.m_in;
  const int origin = config.max_context_patches;
  const int limit = config.max_time_positions();
  const std::size_t n_cov = use_covariates ? sample.covariates.size() : 0;
  if (n_cov > static_cast<std::size_t>(config.max_covariates)) {
    throw DomainError("sample '" + sample.id + "' has " + std::to_string(n_cov) +
                      " covariates, model supports at most " + std::to_string(config.max_covariates));
  }

  TokenizedInput out;
  out.horizon = h;
  std::vector<std::vector<double>> rows;

  auto check_position = [&](int pos) {
    if (pos < 0 || pos >= limit) {
      throw DomainError("sample '" + sample.id + "' needs time position " + std::to_string(pos) +
                        " outside the model's " + std::to_string(limit) +
                        " learned positions (context or horizon too long for max_time_positions)");
    }
  };
  auto emit_patches = [&](const preprocess::PatchGrid& grid, int variate, auto position_of) {
    for (int p = 0; p < grid.num_patches; ++p) {
      std::vector<double> row(static_cast<std::size_t>(2 * m));
      for (int i = 0; i < m; ++i) {
        row[static_cast<std::size_t>(i)] = grid.value(p, i);
        row[static_cast<std::size_t>(m + i)] = grid.observed(p, i) ? 1.0 : 0.0;
      }
      const int pos = position_of(p);
      check_position(pos);
      out.tokens.push_back({TokenKind::kPatch, variate, pos, static_cast<int>(rows.size())});
      rows.push_back(std::move(row));
    }
  };

  for (std::size_t i = 0; i < n_cov; ++i) {
    const auto& cov = sample.covariates[i];
    const auto span_len = static_cast<std::size_t>(T + h);
    std::vector<double> values(span_len, 0.0);
    std::vector<bool> mask(span_len, true);
    const std::size_t known = cov.kind == CovariateKind::kPastAndFuture ? span_len : static_cast<std::size_t>(T);
    std::copy_n(cov.values.begin(), known, values.begin());
    for (std::size_t t = known; t < span_len; ++t) mask[t] = false;
    const auto scaler = preprocess::fit_scaler(std::span<const double>(values.data(), known));
    auto normalized = preprocess::normalize(values, scaler);
    const auto grid = preprocess::patchify(normalized, mask, m);
    out.tokens.push_back({TokenKind::kCovariateSeparator, static_cast<int>(i), -1, -1});
    emit_patches(grid, static_cast<int>(i), [&](int p) {
      const int end = T + h - m * (grid.num_patches - 1 - p);
      return origin - 1 + floor_div_round(end - T, m);
    });
  }

  const std::span<const double> context(sample.target.data(), static_cast<std::size_t>(T));
  std::vector<bool> context_mask;
  if (!sample.missing_mask.empty()) {
    context_mask.assign(sample.missing_mask.begin(), sample.missing_mask.begin() + T);
  }
  out.target_scaler = preprocess::fit_scaler(context, context_mask);
  const auto target_grid = preprocess::patchify(preprocess::normalize(context, out.target_scaler), context_mask, m);
  out.tokens.push_back({TokenKind::kTargetSeparator, -1, -1, -1});
  emit_patches(target_grid, -1, [&](int p) { return origin - (target_grid.num_patches - p); });

  const int n_dec = (h + config.m_out - 1) / config.m_out;
  for (int k = 0; k < n_dec; ++k) {
    const int pos = origin + (k * config.m_out) / m;
    check_position(pos);
    out.decoder_time_positions.push_back(pos);
  }

  out.patch_inputs.resize(static_cast<Eigen::Index>(rows.size()), 2 * m);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < 2 * m; ++c) {
      out.patch_inputs(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    }
  }
  return out;
}

// ---- network -----------------------------------------------------------------

template <typename T>
Network<T>::Network(ad::Tape<T>& tape, const ParamStore<T>& params, const ModelConfig& config, bool requires_grad)
    : tape_(tape), params_(params), config_(config) {
  vars_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) vars_.push_back(tape.leaf(params[i], requires_grad));
}

template <typename T>
void Network<T>::check_finite(ad::Var v, const std::string& where) const {
  if (!tape_.value(v).allFinite()) throw std::runtime_error("non-finite activations in " + where);
}

template <typename T>
ad::Var Network<T>::residual_block(ad::Var x, const std::string& prefix) {
  auto hidden = tape_.silu(tape_.add_row(tape_.matmul(x, param(prefix + ".w1")), param(prefix + ".b1")));
  auto y = tape_.add_row(tape_.matmul(hidden, param(prefix + ".w2")), param(prefix + ".b2"));
  return tape_.add(y, tape_.matmul(x, param(prefix + ".skip")));
}

template <typename T>
ad::Var Network<T>::feed_forward(ad::Var x, const std::string& prefix) {
  auto hidden = tape_.silu(tape_.add_row(tape_.matmul(x, param(prefix + ".w1")), param(prefix + ".b1")));
  return tape_.add_row(tape_.matmul(hidden, param(prefix + ".w2")), param(prefix + ".b2"));
}

template <typename T>
ad::Var Network<T>::attention(ad::Var queries, ad::Var keys_values, std::span<const int> q_positions,
                              std::span<const int> kv_positions, const std::string& prefix) {
  auto q = tape_.matmul(queries, param(prefix + ".wq"));
  auto k = tape_.matmul(keys_values, param(prefix + ".wk"));
  auto v = tape_.matmul(keys_values, param(prefix + ".wv"));
  q = tape_.rotary(q, q_positions, config_.n_heads, config_.rope_base);
  k = tape_.rotary(k, kv_positions, config_.n_heads, config_.rope_base);
  auto o = tape_.attention(q, k, v, config_.n_heads);
  return tape_.matmul(o, param(prefix + ".wo"));
}

template <typename T>
ad::Var Network<T>::embed(const TokenizedInput& input) {
  const auto time_table = param("time_embedding");
  std::vector<std::pair<ad::Var, Eigen::Index>> sequence;
  sequence.reserve(input.tokens.size());

  ad::Var patches{};
  if (input.patch_inputs.rows() > 0) {
    auto x = tape_.leaf(input.patch_inputs.template cast<T>(), false);
    auto embedded = residual_block(x, "patch");
    std::vector<std::pair<ad::Var, Eigen::Index>> times;
    for (const auto& tok : input.tokens) {
      if (tok.kind == TokenKind::kPatch) times.emplace_back(time_table, tok.time_position);
    }
    patches = tape_.add(embedded, tape_.gather_rows(times));
    check_finite(patches, "patch embedding");
  }
  const auto sep_c = param("sep_covariate");
  const auto sep_t = param("sep_target");
  for (const auto& tok : input.tokens) {
    switch (tok.kind) {
      case TokenKind::kCovariateSeparator: sequence.emplace_back(sep_c, 0); break;
      case TokenKind::kTargetSeparator: sequence.emplace_back(sep_t, 0); break;
      case TokenKind::kPatch: sequence.emplace_back(patches, tok.patch_row); break;
    }
  }
  return tape_.gather_rows(sequence);
}

template <typename T>
ad::Var Network<T>::forward(const TokenizedInput& input) {
  auto x = embed(input);
  const auto n = static_cast<int>(tape_.value(x).rows());
  std::vector<int> enc_pos(static_cast<std::size_t>(n));
  std::iota(enc_pos.begin(), enc_pos.end(), 0);

  for (int l = 0; l < config_.n_layers_enc; ++l) {
    const std::string p = "enc." + std::to_string(l);
    auto h = tape_.rms_norm(x, param(p + ".norm1"));
    x = tape_.add(x, attention(h, h, enc_pos, enc_pos, p + ".attn"));
    h = tape_.rms_norm(x, param(p + ".norm2"));
    x = tape_.add(x, feed_forward(h, p + ".ff"));
    check_finite(x, "encoder layer " + std::to_string(l));
  }
  const auto memory = tape_.rms_norm(x, param("enc.norm"));

  const auto n_dec = input.decoder_time_positions.size();
  std::vector<std::pair<ad::Var, Eigen::Index>> query_rows, time_rows;
  std::vector<int> dec_pos(n_dec);
  const auto query = param("decoder_query");
  const auto time_table = param("time_embedding");
  for (std::size_t k = 0; k < n_dec; ++k) {
    query_rows.emplace_back(query, 0);
    time_rows.emplace_back(time_table, input.decoder_time_positions[k]);
    dec_pos[k] = n + static_cast<int>(k);
  }
  auto y = tape_.add(tape_.gather_rows(query_rows), tape_.gather_rows(time_rows));
  for (int l = 0; l < config_.n_layers_dec; ++l) {
    const std::string p = "dec." + std::to_string(l);
    auto h = tape_.rms_norm(y, param(p + ".norm1"));
    y = tape_.add(y, attention(h, h, dec_pos, dec_pos, p + ".self"));
    h = tape_.rms_norm(y, param(p + ".norm2"));
    y = tape_.add(y, attention(h, memory, dec_pos, enc_pos, p + ".cross"));
    h = tape_.rms_norm(y, param(p + ".norm3"));
    y = tape_.add(y, feed_forward(h, p + ".ff"));
    check_finite(y, "decoder layer " + std::to_string(l));
  }
  y = tape_.rms_norm(y, param("dec.norm"));

  auto out = residual_block(y, "head");
  check_finite(out, "output block");
  const auto q = static_cast<Eigen::Index>(kNumQuantiles);
  out = tape_.reshape(out, static_cast<Eigen::Index>(n_dec) * config_.m_out, q);
  return tape_.top_rows(out, input.horizon);
}

template class Network<float>;
template class Network<double>;

template <typename T>
ad::Matrix<double> forward(const ParamStore<T>& params, const TokenizedInput& input, const ModelConfig& config) {
  ad::Tape<T> tape(false);
  Network<T> net(tape, params, config, false);
  return tape.value(net.forward(input)).template cast<double>();
}

template ad::Matrix<double> forward(const ParamStore<float>&, const TokenizedInput&, const ModelConfig&);
template ad::Matrix<double> forward(const ParamStore<double>&, const TokenizedInput&, const ModelConfig&);

TokenSequence build_input(const ModelParams& params, const TimeSeriesSample& sample, const ModelConfig& config,
                          bool use_covariates) {
  const auto input = tokenize(sample, config, use_covariates);
  ad::Tape<float> tape(false);
  Network<float> net(tape, params, config, false);
  TokenSequence seq;
  seq.embeddings = tape.value(net.embed(input)).cast<double>();
  seq.tokens = input.tokens;
  return seq;
}

double quantile_loss(const ad::Matrix<double>& pred, std::span<const double> truth, const std::vector<bool>& observed) {
  if (static_cast<std::size_t>(pred.rows()) != truth.size() || pred.cols() != static_cast<Eigen::Index>(kNumQuantiles)) {
    throw DomainError("quantile_loss: prediction must be horizon x 9");
  }
  double total = 0.0;
  std::size_t rows = 0;
  for (Eigen::Index t = 0; t < pred.rows(); ++t) {
    if (!observed.empty() && !observed[static_cast<std::size_t>(t)]) continue;
    ++rows;
    const double y = truth[static_cast<std::size_t>(t)];
    for (std::size_t j = 0; j < kNumQuantiles; ++j) {
      const double q = kQuantileLevels[j];
      const double yhat = pred(t, static_cast<Eigen::Index>(j));
      total += yhat <= y ? q * (y - yhat) : (1.0 - q) * (yhat - y);
    }
  }
  return rows == 0 ? 0.0 : total / static_cast<double>(rows * kNumQuantiles);
}

template <typename T>
QuantileForecast predict(const ParamStore<T>& params, const TimeSeriesSample& sample, const ModelConfig& config,
                         bool use_covariates, bool sort_quantiles) {
  const auto input = tokenize(sample, config, use_covariates);
  const auto normalized = forward(params, input, config);
  QuantileForecast f(static_cast<std::size_t>(input.horizon));
  for (int t = 0; t < input.horizon; ++t) {
    auto& row = f.row(static_cast<std::size_t>(t));
    for (std::size_t q = 0; q < kNumQuantiles; ++q) {
      row[q] = normalized(t, static_cast<Eigen::Index>(q)) * input.target_scaler.std + input.target_scaler.mean;
    }
    if (sort_quantiles) std::sort(row.begin(), row.end());
  }
  return f;
}

template QuantileForecast predict(const ParamStore<float>&, const TimeSeriesSample&, const ModelConfig&, bool, bool);
template QuantileForecast predict(const ParamStore<double>&, const TimeSeriesSample&, const ModelConfig&, bool, bool);

FutureTruth normalized_future(const TimeSeriesSample& sample, const preprocess::ScalerState& scaler) {
  FutureTruth f;
  const auto T = static_cast<std::size_t>(sample.context_length);
  const auto h = static_cast<std::size_t>(sample.horizon);
  f.values.resize(h);
  f.observed.resize(h);
  for (std::size_t t = 0; t < h; ++t) {
    f.values[t] = (sample.target[T + t] - scaler.mean) / scaler.std;
    f.observed[t] = sample.observed(T + t);
  }
  return f;
}

template <typename T>
ad::Var sample_loss(Network<T>& net, ad::Tape<T>& tape, const TimeSeriesSample& sample, const ModelConfig& config) {
  const auto input = tokenize(sample, config);
  const auto pred = net.forward(input);
  const auto future = normalized_future(sample, input.target_scaler);
  std::vector<T> truth(future.values.begin(), future.values.end());
  return tape.quantile_loss(pred, truth, kQuantileLevels, future.observed);
}

template ad::Var sample_loss(Network<float>&, ad::Tape<float>&, const TimeSeriesSample&, const ModelConfig&);
template ad::Var sample_loss(Network<double>&, ad::Tape<double>&, const TimeSeriesSample&, const ModelConfig&);

}  // namespace cosmic::model
