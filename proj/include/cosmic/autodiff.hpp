#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cosmic::ad {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Reverse-mode tape over dense row-major matrices.
///
/// Every op appends a node holding its value and a closure that propagates
/// the node's gradient to its inputs. backward() walks the tape once in
/// reverse. A tape is single-use and not thread-safe; separate tapes may run
/// concurrently.
template <typename T>
class Tape {
 public:
  using Mat = Matrix<T>;

  explicit Tape(bool record = true) : record_(record) {}

  Var leaf(Mat value, bool requires_grad = false) {
    return push(std::move(value), requires_grad, nullptr);
  }

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  /// Gradient of the last backward() root w.r.t. v; zero-sized if v did not
  /// receive any gradient.
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(root)/d(root) = 1 for a 1x1 root and propagates.
  void backward(Var root) {
    if (value(root).size() != 1) throw std::logic_error("backward() requires a scalar root");
    auto& r = nodes_[root.id];
    r.grad = Mat::Ones(1, 1);
    for (std::size_t i = root.id + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (n.backward && n.grad.size() != 0) n.backward(*this, n.grad);
    }
  }

  // ---- ops -----------------------------------------------------------------

  Var matmul(Var a, Var b) {
    Mat out = value(a) * value(b);
    return push(std::move(out), needs(a, b), [a, b](Tape& t, const Mat& g) {
      if (t.requires_grad(a)) t.accumulate(a, g * t.value(b).transpose());
      if (t.requires_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
    });
  }

  Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Mat out = value(a) + value(b);
    return push(std::move(out), needs(a, b), [a, b](Tape& t, const Mat& g) {
      if (t.requires_grad(a)) t.accumulate(a, g);
      if (t.requires_grad(b)) t.accumulate(b, g);
    });
  }

  /// a (n x m) + row (1 x m) broadcast over rows.
  Var add_row(Var a, Var row) {
    if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
      throw std::invalid_argument("add_row: shape mismatch");
    }
    Mat out = value(a).rowwise() + value(row).row(0);
    return push(std::move(out), needs(a, row), [a, row](Tape& t, const Mat& g) {
      if (t.requires_grad(a)) t.accumulate(a, g);
      if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
    });
  }

  Var scale(Var a, T s) {
    Mat out = value(a) * s;
    return push(std::move(out), needs(a), [a, s](Tape& t, const Mat& g) { t.accumulate(a, g * s); });
  }

  /// x * sigmoid(x), elementwise.
  Var silu(Var a) {
    const Mat& x = value(a);
    Mat sig = (T(1) + (-x.array()).exp()).inverse().matrix();
    Mat out = (x.array() * sig.array()).matrix();
    return push(std::move(out), needs(a), [a, sig = std::move(sig)](Tape& t, const Mat& g) {
      const auto& x = t.value(a).array();
      t.accumulate(a, (g.array() * sig.array() * (T(1) + x * (T(1) - sig.array()))).matrix());
    });
  }

  /// Row-wise RMS normalization with a learned gain (1 x m).
  Var rms_norm(Var a, Var gain, T eps = T(1e-6)) {
    const Mat& x = value(a);
    const auto m = static_cast<T>(x.cols());
    Eigen::Matrix<T, Eigen::Dynamic, 1> inv = ((x.array().square().rowwise().sum() / m) + eps).rsqrt();
    Mat normed = x.array().colwise() * inv.array();
    Mat out = normed.array().rowwise() * value(gain).row(0).array();
    return push(std::move(out), needs(a, gain),
                [a, gain, inv = std::move(inv), normed = std::move(normed), m](Tape& t, const Mat& g) {
                  if (t.requires_grad(gain)) {
                    t.accumulate(gain, (g.array() * normed.array()).colwise().sum().matrix());
                  }
                  if (t.requires_grad(a)) {
                    const auto& x = t.value(a);
                    Mat u = g.array().rowwise() * t.value(gain).row(0).array();
                    Eigen::Matrix<T, Eigen::Dynamic, 1> xu = (x.array() * u.array()).rowwise().sum();
                    Mat dx = u.array().colwise() * inv.array();
                    dx.array() -= x.array().colwise() * (inv.array().cube() * xu.array() / m);
                    t.accumulate(a, dx);
                  }
                });
  }

  /// Rotary position encoding on consecutive pairs inside each head.
  Var rotary(Var a, std::span<const int> positions, int n_heads, double base) {
    const Mat& x = value(a);
    if (static_cast<std::size_t>(x.rows()) != positions.size()) {
      throw std::invalid_argument("rotary: one position per row required");
    }
    const auto d = static_cast<int>(x.cols());
    const int head_dim = d / n_heads;
    Mat cos(x.rows(), d / 2), sin(x.rows(), d / 2);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (int h = 0; h < n_heads; ++h) {
        for (int i = 0; i < head_dim / 2; ++i) {
          const double freq = std::pow(base, -2.0 * i / head_dim);
          const double angle = positions[static_cast<std::size_t>(r)] * freq;
          cos(r, h * head_dim / 2 + i) = static_cast<T>(std::cos(angle));
          sin(r, h * head_dim / 2 + i) = static_cast<T>(std::sin(angle));
        }
      }
    }
    Mat out = rotate(x, cos, sin, T(1));
    return push(std::move(out), needs(a), [a, cos = std::move(cos), sin = std::move(sin)](Tape& t, const Mat& g) {
      t.accumulate(a, rotate(g, cos, sin, T(-1)));
    });
  }

  /// Multi-head scaled dot-product attention without masking.
  /// q: n_q x d, k and v: n_k x d.
  Var attention(Var q, Var k, Var v, int n_heads) {
    const Mat& Q = value(q);
    const Mat& K = value(k);
    const Mat& V = value(v);
    const auto d = Q.cols();
    const auto hd = d / n_heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    Mat out(Q.rows(), d);
    std::vector<Mat> probs(static_cast<std::size_t>(n_heads));
    for (int h = 0; h < n_heads; ++h) {
      Mat s = (Q.middleCols(h * hd, hd) * K.middleCols(h * hd, hd).transpose()) * scale;
      Eigen::Matrix<T, Eigen::Dynamic, 1> mx = s.rowwise().maxCoeff();
      s = (s.colwise() - mx).array().exp().matrix();
      Eigen::Matrix<T, Eigen::Dynamic, 1> z = s.rowwise().sum();
      s.array().colwise() /= z.array();
      out.middleCols(h * hd, hd) = s * V.middleCols(h * hd, hd);
      probs[static_cast<std::size_t>(h)] = std::move(s);
    }
    return push(std::move(out), needs(q, k, v),
                [q, k, v, n_heads, hd, scale, probs = std::move(probs)](Tape& t, const Mat& g) {
                  const Mat& Q = t.value(q);
                  const Mat& K = t.value(k);
                  const Mat& V = t.value(v);
                  Mat dQ = Mat::Zero(Q.rows(), Q.cols());
                  Mat dK = Mat::Zero(K.rows(), K.cols());
                  Mat dV = Mat::Zero(V.rows(), V.cols());
                  for (int h = 0; h < n_heads; ++h) {
                    const Mat& P = probs[static_cast<std::size_t>(h)];
                    const auto gO = g.middleCols(h * hd, hd);
                    dV.middleCols(h * hd, hd) = P.transpose() * gO;
                    Mat dP = gO * V.middleCols(h * hd, hd).transpose();
                    Eigen::Matrix<T, Eigen::Dynamic, 1> rs = (dP.array() * P.array()).rowwise().sum();
                    Mat dS = (P.array() * (dP.colwise() - rs).array()).matrix() * scale;
                    dQ.middleCols(h * hd, hd) = dS * K.middleCols(h * hd, hd);
                    dK.middleCols(h * hd, hd) = dS.transpose() * Q.middleCols(h * hd, hd);
                  }
                  if (t.requires_grad(q)) t.accumulate(q, dQ);
                  if (t.requires_grad(k)) t.accumulate(k, dK);
                  if (t.requires_grad(v)) t.accumulate(v, dV);
                });
  }

  /// Builds a matrix whose i-th row is row `rows[i].second` of `rows[i].first`.
  Var gather_rows(const std::vector<std::pair<Var, Eigen::Index>>& rows) {
    if (rows.empty()) throw std::invalid_argument("gather_rows: no rows");
    const auto cols = value(rows.front().first).cols();
    Mat out(static_cast<Eigen::Index>(rows.size()), cols);
    bool grad = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& src = value(rows[i].first);
      if (src.cols() != cols) throw std::invalid_argument("gather_rows: column mismatch");
      out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i].second);
      grad = grad || requires_grad(rows[i].first);
    }
    return push(std::move(out), grad, [rows](Tape& t, const Mat& g) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto [src, r] = rows[i];
        if (!t.requires_grad(src)) continue;
        t.ensure_grad(src).row(r) += g.row(static_cast<Eigen::Index>(i));
      }
    });
  }

  /// Row-major reshape.
  Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
    const Mat& x = value(a);
    if (rows * cols != x.size()) throw std::invalid_argument("reshape: size mismatch");
    Mat out = Eigen::Map<const Mat>(x.data(), rows, cols);
    const auto r0 = x.rows(), c0 = x.cols();
    return push(std::move(out), needs(a), [a, r0, c0](Tape& t, const Mat& g) {
      t.accumulate(a, Eigen::Map<const Mat>(g.data(), r0, c0));
    });
  }

  Var top_rows(Var a, Eigen::Index n) {
    const Mat& x = value(a);
    if (n > x.rows()) throw std::invalid_argument("top_rows: out of range");
    Mat out = x.topRows(n);
    return push(std::move(out), needs(a), [a, n](Tape& t, const Mat& g) { t.ensure_grad(a).topRows(n) += g; });
  }

  /// Mean pinball loss over observed rows and all columns.
  /// pred: h x Q, truth: h values, levels: Q values. Returns a 1x1 node.
  Var quantile_loss(Var pred, std::span<const T> truth, std::span<const double> levels,
                    const std::vector<bool>& observed = {}) {
    const Mat& p = value(pred);
    if (static_cast<std::size_t>(p.rows()) != truth.size() || static_cast<std::size_t>(p.cols()) != levels.size()) {
      throw std::invalid_argument("quantile_loss: shape mismatch");
    }
    Mat dpred = Mat::Zero(p.rows(), p.cols());
    T total = 0;
    std::size_t rows = 0;
    for (Eigen::Index t = 0; t < p.rows(); ++t) {
      if (!observed.empty() && !observed[static_cast<std::size_t>(t)]) continue;
      ++rows;
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const T q = static_cast<T>(levels[static_cast<std::size_t>(j)]);
        const T y = truth[static_cast<std::size_t>(t)];
        const T yhat = p(t, j);
        if (yhat <= y) {
          total += q * (y - yhat);
          dpred(t, j) = -q;
        } else {
          total += (T(1) - q) * (yhat - y);
          dpred(t, j) = T(1) - q;
        }
      }
    }
    const T norm = rows == 0 ? T(0) : T(1) / static_cast<T>(rows * static_cast<std::size_t>(p.cols()));
    Mat out(1, 1);
    out(0, 0) = total * norm;
    dpred *= norm;
    return push(std::move(out), needs(pred), [pred, dpred = std::move(dpred)](Tape& t, const Mat& g) {
      t.accumulate(pred, dpred * g(0, 0));
    });
  }

  /// Mean of several 1x1 nodes.
  Var mean(const std::vector<Var>& scalars) {
    Mat out = Mat::Zero(1, 1);
    bool grad = false;
    for (Var s : scalars) {
      out += value(s);
      grad = grad || requires_grad(s);
    }
    const T w = T(1) / static_cast<T>(scalars.size());
    out *= w;
    return push(std::move(out), grad, [scalars, w](Tape& t, const Mat& g) {
      for (Var s : scalars) {
        if (t.requires_grad(s)) t.accumulate(s, g * w);
      }
    });
  }

 private:
  using Backward = std::function<void(Tape&, const Mat&)>;

  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Mat value, bool requires_grad, Backward backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad && record_;
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  template <typename... Vs>
  bool needs(Vs... vs) const {
    return (requires_grad(vs) || ...);
  }

  void check_same_shape(Var a, Var b, const char* op) const {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
      throw std::invalid_argument(std::string(op) + ": shape mismatch");
    }
  }

  Mat& ensure_grad(Var v) {
    auto& n = nodes_[v.id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  template <typename Expr>
  void accumulate(Var v, const Expr& g) {
    if (!requires_grad(v)) return;
    ensure_grad(v) += g;
  }

  static Mat rotate(const Mat& x, const Mat& cos, const Mat& sin, T sign) {
    Mat out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index i = 0; i < x.cols() / 2; ++i) {
        const T a = x(r, 2 * i), b = x(r, 2 * i + 1);
        const T c = cos(r, i), s = sign * sin(r, i);
        out(r, 2 * i) = a * c - b * s;
        out(r, 2 * i + 1) = a * s + b * c;
      }
    }
    return out;
  }

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace cosmic::ad
