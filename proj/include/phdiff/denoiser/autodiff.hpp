//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_DENOISER_AUTODIFF_HPP_
#define PHDIFF_DENOISER_AUTODIFF_HPP_

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "phdiff/core.hpp"

namespace phdiff {

using Matrix = Eigen::MatrixXd;

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  Tape *tape = nullptr;
  int id = -1;

  const Matrix &value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

// Reverse-mode tape over dense float64 matrices. Values that depend only on
// constants carry no adjoint closure, so a tape built from constant
// parameters doubles as a plain forward evaluator.
class Tape {
public:
  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var constant(Matrix value) { return push(std::move(value), false, {}); }

  // Borrowed constant; `value` must outlive the tape.
  Var constant_ref(const Matrix &value) {
    Var v = push(Matrix(), false, {});
    nodes_.back().ext = &value;
    return v;
  }

  Var leaf_ref(const Matrix &value, int slot = -1) {
    Var v = push(Matrix(), true, {});
    nodes_.back().ext = &value;
    nodes_.back().slot = slot;
    return v;
  }

  // Leaf tracked for gradients; `slot` is an opaque caller tag (e.g. a
  // parameter index) returned by leaf_slot().
  Var leaf(Matrix value, int slot = -1) {
    Var v = push(std::move(value), true, {});
    nodes_.back().slot = slot;
    return v;
  }

  const Matrix &value(Var v) const {
    const Node &n = node(v);
    return n.ext ? *n.ext : n.value;
  }
  bool requires_grad(Var v) const { return node(v).req; }
  int leaf_slot(Var v) const { return node(v).slot; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Adjoint of v after backward(); zero matrix if v did not influence loss.
  Matrix grad(Var v) const {
    const Node &n = node(v);
    if (n.grad.size() == 0)
      return Matrix::Zero(value(v).rows(), value(v).cols());
    return n.grad;
  }

  void backward(Var loss) {
    const Node &l = node(loss);
    if (value(loss).rows() != 1 || value(loss).cols() != 1)
      throw Error(ErrorKind::kUnrecordedOperation,
                  "backward needs a 1x1 scalar on this tape");
    for (Node &n: nodes_)
      n.grad.resize(0, 0);
    nodes_[loss.id].grad = Matrix::Ones(1, 1);
    for (int i = loss.id; i >= 0; --i) {
      Node &n = nodes_[i];
      if (n.req && n.back && n.grad.size() != 0)
        n.back(n.grad);
    }
  }

  // --- primitive recording, used by the op functions below ---

  template <class F>
  Var record(Matrix value, std::initializer_list<Var> inputs, F &&back) {
    bool req = false;
    for (Var in: inputs) {
      check(in);
      req = req || nodes_[in.id].req;
    }
    return finish(std::move(value), req, std::forward<F>(back));
  }

  template <class F>
  Var record(Matrix value, const std::vector<Var> &inputs, F &&back) {
    bool req = false;
    for (Var in: inputs) {
      check(in);
      req = req || nodes_[in.id].req;
    }
    return finish(std::move(value), req, std::forward<F>(back));
  }

  void accumulate(Var v, const Matrix &g) {
    Node &n = nodes_[v.id];
    if (!n.req)
      return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  template <class F>
  void accumulate_with(Var v, F &&fill) {
    Node &n = nodes_[v.id];
    if (!n.req)
      return;
    if (n.grad.size() == 0)
      n.grad = Matrix::Zero(value(v).rows(), value(v).cols());
    fill(n.grad);
  }

  void check(Var v) const {
    if (v.tape != this || v.id < 0 || v.id >= size())
      throw Error(ErrorKind::kUnrecordedOperation,
                  "value was not recorded on this tape");
  }

private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(const Matrix &)> back;
    bool req = false;
    int slot = -1;
    const Matrix *ext = nullptr;
  };

  const Node &node(Var v) const {
    check(v);
    return nodes_[v.id];
  }

  // The closure is only materialized when an input needs a gradient.
  template <class F>
  Var finish(Matrix value, bool req, F &&back) {
    if (!req)
      return push(std::move(value), false, {});
    return push(std::move(value), true, std::function<void(const Matrix &)>(std::forward<F>(back)));
  }

  Var push(Matrix value, bool req, std::function<void(const Matrix &)> back) {
    nodes_.push_back({ std::move(value), Matrix(), std::move(back), req, -1, nullptr });
    return { this, static_cast<int>(nodes_.size()) - 1 };
  }

  std::vector<Node> nodes_;
};

inline const Matrix &Var::value() const {
  if (!tape)
    throw Error(ErrorKind::kUnrecordedOperation, "unbound variable");
  return tape->value(*this);
}

namespace ad {
namespace internal {
inline Tape &same_tape(Var a, Var b) {
  if (!a.tape || a.tape != b.tape)
    throw Error(ErrorKind::kUnrecordedOperation, "operands live on different tapes");
  return *a.tape;
}

inline void require_shape(bool ok, const char *what) {
  if (!ok)
    throw Error(ErrorKind::kShapeMismatch, what);
}
}  // namespace internal

inline Var matmul(Var a, Var b) {
  Tape &t = internal::same_tape(a, b);
  internal::require_shape(a.cols() == b.rows(), "matmul inner dimensions");
  return t.record(a.value() * b.value(), { a, b }, [&t, a, b](const Matrix &g) {
    if (t.requires_grad(a))
      t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b))
      t.accumulate(b, a.value().transpose() * g);
  });
}

// a * b^T
inline Var matmul_nt(Var a, Var b) {
  Tape &t = internal::same_tape(a, b);
  internal::require_shape(a.cols() == b.cols(), "matmul_nt inner dimensions");
  return t.record(a.value() * b.value().transpose(), { a, b },
                  [&t, a, b](const Matrix &g) {
                    if (t.requires_grad(a))
                      t.accumulate(a, g * b.value());
                    if (t.requires_grad(b))
                      t.accumulate(b, g.transpose() * a.value());
                  });
}

inline Var add(Var a, Var b) {
  Tape &t = internal::same_tape(a, b);
  internal::require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add shapes");
  return t.record(a.value() + b.value(), { a, b }, [&t, a, b](const Matrix &g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

inline Var sub(Var a, Var b) {
  Tape &t = internal::same_tape(a, b);
  internal::require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub shapes");
  return t.record(a.value() - b.value(), { a, b }, [&t, a, b](const Matrix &g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

inline Var mul(Var a, Var b) {
  Tape &t = internal::same_tape(a, b);
  internal::require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "mul shapes");
  return t.record(a.value().cwiseProduct(b.value()), { a, b },
                  [&t, a, b](const Matrix &g) {
                    if (t.requires_grad(a))
                      t.accumulate(a, g.cwiseProduct(b.value()));
                    if (t.requires_grad(b))
                      t.accumulate(b, g.cwiseProduct(a.value()));
                  });
}

inline Var scale(Var a, double c) {
  Tape &t = *a.tape;
  return t.record(c * a.value(), { a },
                  [&t, a, c](const Matrix &g) { t.accumulate(a, c * g); });
}

// a (n x k) + row vector b (1 x k) broadcast over rows.
inline Var add_row(Var a, Var b) {
  Tape &t = internal::same_tape(a, b);
  internal::require_shape(b.rows() == 1 && a.cols() == b.cols(), "add_row shapes");
  Matrix out = a.value().rowwise() + b.value().row(0);
  return t.record(std::move(out), { a, b }, [&t, a, b](const Matrix &g) {
    t.accumulate(a, g);
    if (t.requires_grad(b))
      t.accumulate(b, g.colwise().sum());
  });
}

// a (n x k) scaled row-wise by column vector c (n x 1).
inline Var mul_col(Var a, Var c) {
  Tape &t = internal::same_tape(a, c);
  internal::require_shape(c.cols() == 1 && a.rows() == c.rows(), "mul_col shapes");
  Matrix out = a.value().array().colwise() * c.value().col(0).array();
  return t.record(std::move(out), { a, c }, [&t, a, c](const Matrix &g) {
    if (t.requires_grad(a))
      t.accumulate(a, g.array().colwise() * c.value().col(0).array());
    if (t.requires_grad(c))
      t.accumulate(c, g.cwiseProduct(a.value()).rowwise().sum());
  });
}

inline Var silu(Var a) {
  Tape &t = *a.tape;
  const Matrix &x = a.value();
  Matrix sig = (1.0 + (-x.array()).exp()).inverse().matrix();
  Matrix out = x.cwiseProduct(sig);
  return t.record(std::move(out), { a }, [&t, a, sig = std::move(sig)](const Matrix &g) {
    const auto &xv = a.value().array();
    t.accumulate(a, (g.array() * sig.array() * (1.0 + xv * (1.0 - sig.array())))
                        .matrix());
  });
}

inline Var tanh(Var a) {
  Tape &t = *a.tape;
  Matrix out = a.value().array().tanh().matrix();
  const int id = t.size();
  return t.record(std::move(out), { a }, [&t, a, id](const Matrix &g) {
    const Matrix &y = t.value({ &t, id });
    t.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

inline Var exp(Var a) {
  Tape &t = *a.tape;
  Matrix out = a.value().array().exp().matrix();
  const int id = t.size();
  return t.record(std::move(out), { a }, [&t, a, id](const Matrix &g) {
    t.accumulate(a, g.cwiseProduct(t.value({ &t, id })));
  });
}

namespace internal {
inline Matrix softmax_rows(const Matrix &x) {
  Matrix y = x.colwise() - x.rowwise().maxCoeff();
  y = y.array().exp().matrix();
  y.array().colwise() /= y.rowwise().sum().array();
  return y;
}
}  // namespace internal

inline Var softmax_rows(Var a) {
  Tape &t = *a.tape;
  const int id = t.size();
  return t.record(internal::softmax_rows(a.value()), { a },
                  [&t, a, id](const Matrix &g) {
                    const Matrix &y = t.value({ &t, id });
                    Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
                    t.accumulate(a, (y.array() * (g.array().colwise() - dot.array()))
                                        .matrix());
                  });
}

inline Var log_softmax_rows(Var a) {
  Tape &t = *a.tape;
  const Matrix &x = a.value();
  Eigen::VectorXd mx = x.rowwise().maxCoeff();
  Matrix shifted = x.colwise() - mx;
  Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log().matrix();
  Matrix out = shifted.colwise() - lse;
  const int id = t.size();
  return t.record(std::move(out), { a }, [&t, a, id](const Matrix &g) {
    Matrix p = t.value({ &t, id }).array().exp().matrix();
    Eigen::VectorXd gs = g.rowwise().sum();
    t.accumulate(a, g - (p.array().colwise() * gs.array()).matrix());
  });
}

// Row-wise layer normalization with learned gain and bias (1 x k each).
inline Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5) {
  Tape &t = internal::same_tape(a, gain);
  internal::same_tape(a, bias);
  const Matrix &x = a.value();
  const Eigen::Index k = x.cols();
  internal::require_shape(gain.cols() == k && bias.cols() == k, "layer_norm shapes");
  Eigen::VectorXd mu = x.rowwise().mean();
  Matrix xc = x.colwise() - mu;
  Eigen::VectorXd inv =
      ((xc.array().square().rowwise().sum() / static_cast<double>(k)) + eps)
          .rsqrt()
          .matrix();
  Matrix xhat = xc.array().colwise() * inv.array();
  Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  return t.record(std::move(out), { a, gain, bias },
                  [&t, a, gain, bias, xhat = std::move(xhat), inv = std::move(inv),
                   k](const Matrix &g) {
                    if (t.requires_grad(gain))
                      t.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
                    if (t.requires_grad(bias))
                      t.accumulate(bias, g.colwise().sum());
                    if (!t.requires_grad(a))
                      return;
                    Matrix dxh = g.array().rowwise() * gain.value().row(0).array();
                    Eigen::VectorXd m1 = dxh.rowwise().mean();
                    Eigen::VectorXd m2 =
                        dxh.cwiseProduct(xhat).rowwise().sum() / static_cast<double>(k);
                    Matrix dx = dxh.colwise() - m1;
                    dx -= (xhat.array().colwise() * m2.array()).matrix();
                    dx.array().colwise() *= inv.array();
                    t.accumulate(a, dx);
                  });
}

inline Var gather_rows(Var a, std::vector<int> idx) {
  Tape &t = *a.tape;
  Matrix out(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (size_t k = 0; k < idx.size(); ++k)
    out.row(k) = a.value().row(idx[k]);
  return t.record(std::move(out), { a }, [&t, a, idx](const Matrix &g) {
    t.accumulate_with(a, [&](Matrix &ga) {
      for (size_t k = 0; k < idx.size(); ++k)
        ga.row(idx[k]) += g.row(k);
    });
  });
}

// Copy of a with rows idx[k] replaced by b.row(k).
inline Var replace_rows(Var a, std::vector<int> idx, Var b) {
  Tape &t = internal::same_tape(a, b);
  internal::require_shape(b.rows() == static_cast<Eigen::Index>(idx.size())
                              && a.cols() == b.cols(),
                          "replace_rows shapes");
  Matrix out = a.value();
  for (size_t k = 0; k < idx.size(); ++k)
    out.row(idx[k]) = b.value().row(k);
  return t.record(std::move(out), { a, b }, [&t, a, b, idx](const Matrix &g) {
    if (t.requires_grad(a)) {
      Matrix ga = g;
      for (int i: idx)
        ga.row(i).setZero();
      t.accumulate(a, ga);
    }
    if (t.requires_grad(b)) {
      Matrix gb(b.rows(), b.cols());
      for (size_t k = 0; k < idx.size(); ++k)
        gb.row(k) = g.row(idx[k]);
      t.accumulate(b, gb);
    }
  });
}

inline Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  Tape &t = *a.tape;
  internal::require_shape(start >= 0 && start + count <= a.cols(), "slice_cols range");
  return t.record(a.value().middleCols(start, count), { a },
                  [&t, a, start, count](const Matrix &g) {
                    t.accumulate_with(a, [&](Matrix &ga) {
                      ga.middleCols(start, count) += g;
                    });
                  });
}

inline Var concat_cols(const std::vector<Var> &parts) {
  if (parts.empty())
    throw Error(ErrorKind::kShapeMismatch, "concat of nothing");
  Tape &t = *parts[0].tape;
  Eigen::Index cols = 0;
  for (Var p: parts) {
    internal::same_tape(parts[0], p);
    internal::require_shape(p.rows() == parts[0].rows(), "concat_cols rows");
    cols += p.cols();
  }
  Matrix out(parts[0].rows(), cols);
  Eigen::Index c = 0;
  for (Var p: parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return t.record(std::move(out), parts, [&t, parts](const Matrix &g) {
    Eigen::Index off = 0;
    for (Var p: parts) {
      if (t.requires_grad(p))
        t.accumulate(p, g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

// (n x k) -> (n*n x k), row i*n+j = a[i].
inline Var pair_rows_i(Var a) {
  Tape &t = *a.tape;
  const Eigen::Index n = a.rows();
  Matrix out(n * n, a.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    out.middleRows(i * n, n).rowwise() = a.value().row(i);
  return t.record(std::move(out), { a }, [&t, a, n](const Matrix &g) {
    t.accumulate_with(a, [&](Matrix &ga) {
      for (Eigen::Index i = 0; i < n; ++i)
        ga.row(i) += g.middleRows(i * n, n).colwise().sum();
    });
  });
}

// (n x k) -> (n*n x k), row i*n+j = a[j].
inline Var pair_rows_j(Var a) {
  Tape &t = *a.tape;
  const Eigen::Index n = a.rows();
  Matrix out(n * n, a.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    out.middleRows(i * n, n) = a.value();
  return t.record(std::move(out), { a }, [&t, a, n](const Matrix &g) {
    t.accumulate_with(a, [&](Matrix &ga) {
      for (Eigen::Index i = 0; i < n; ++i)
        ga += g.middleRows(i * n, n);
    });
  });
}

// (n*n x k) -> (n x k), out[i] = sum_j a[i*n+j].
inline Var sum_over_j(Var a, Eigen::Index n) {
  Tape &t = *a.tape;
  internal::require_shape(a.rows() == n * n, "sum_over_j rows");
  Matrix out(n, a.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    out.row(i) = a.value().middleRows(i * n, n).colwise().sum();
  return t.record(std::move(out), { a }, [&t, a, n](const Matrix &g) {
    t.accumulate_with(a, [&](Matrix &ga) {
      for (Eigen::Index i = 0; i < n; ++i)
        ga.middleRows(i * n, n).rowwise() += g.row(i);
    });
  });
}

// Column c of a pair-row tensor as an n x n matrix.
inline Var pair_to_square(Var a, Eigen::Index n, Eigen::Index c = 0) {
  Tape &t = *a.tape;
  internal::require_shape(a.rows() == n * n && c < a.cols(), "pair_to_square shapes");
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = a.value()(i * n + j, c);
  return t.record(std::move(out), { a }, [&t, a, n, c](const Matrix &g) {
    t.accumulate_with(a, [&](Matrix &ga) {
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          ga(i * n + j, c) += g(i, j);
    });
  });
}

// out[ij] = (a[ij] + a[ji]) / 2; bit-exact symmetric since + commutes.
inline Var symmetrize_pairs(Var a, Eigen::Index n) {
  Tape &t = *a.tape;
  internal::require_shape(a.rows() == n * n, "symmetrize_pairs rows");
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out.row(i * n + j) = 0.5 * (a.value().row(i * n + j) + a.value().row(j * n + i));
  return t.record(std::move(out), { a }, [&t, a, n](const Matrix &g) {
    t.accumulate_with(a, [&](Matrix &ga) {
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          ga.row(i * n + j) += 0.5 * (g.row(i * n + j) + g.row(j * n + i));
    });
  });
}

// (n x k) -> (n x 1)
inline Var row_sum(Var a) {
  Tape &t = *a.tape;
  return t.record(a.value().rowwise().sum(), { a }, [&t, a](const Matrix &g) {
    t.accumulate(a, g.col(0).replicate(1, a.cols()));
  });
}

// (n x k) -> (1 x k) column means.
inline Var mean_rows(Var a) {
  Tape &t = *a.tape;
  internal::require_shape(a.rows() > 0, "mean of no rows");
  const double inv = 1.0 / static_cast<double>(a.rows());
  return t.record(a.value().colwise().mean(), { a }, [&t, a, inv](const Matrix &g) {
    t.accumulate(a, (inv * g.row(0)).replicate(a.rows(), 1));
  });
}

inline Var center_rows(Var a) { return add_row(a, scale(mean_rows(a), -1.0)); }

inline Var sum_all(Var a) {
  Tape &t = *a.tape;
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record(std::move(out), { a }, [&t, a](const Matrix &g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

inline Var add_scalar_terms(const std::vector<std::pair<double, Var>> &terms) {
  if (terms.empty())
    throw Error(ErrorKind::kShapeMismatch, "no terms to add");
  Var acc = scale(terms[0].second, terms[0].first);
  for (size_t k = 1; k < terms.size(); ++k)
    acc = add(acc, scale(terms[k].second, terms[k].first));
  return acc;
}

}  // namespace ad
}  // namespace phdiff

#endif  // PHDIFF_DENOISER_AUTODIFF_HPP_
