#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "crossview/core/errors.hpp"

namespace crossview {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Graph is a tape: every operation appends a node holding its value and a
// closure that routes the node's gradient to its parents. Creation order is a
// topological order, so backward() just walks the tape in reverse. The scalar
// type is a template parameter — float for production, double for finite-
// difference gradient verification.
template <typename S>
class Graph {
 public:
  using Matrix = Mat<S>;

  int leaf(Matrix value, bool requires_grad = false) {
    return push(std::move(value), requires_grad, {});
  }

  // C = A · B
  int matmul(int a, int b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.cols() != B.rows()) throw InputDomainError("matmul: inner dims disagree");
    return push(A * B, tracked(a) || tracked(b), [a, b](Graph& g, const Matrix& dC) {
      if (g.tracked(a)) g.grad_ref(a).noalias() += dC * g.value(b).transpose();
      if (g.tracked(b)) g.grad_ref(b).noalias() += g.value(a).transpose() * dC;
    });
  }

  // C = A · Bᵀ  (used for attention scores)
  int matmul_nt(int a, int b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.cols() != B.cols()) throw InputDomainError("matmul_nt: inner dims disagree");
    return push(A * B.transpose(), tracked(a) || tracked(b), [a, b](Graph& g, const Matrix& dC) {
      if (g.tracked(a)) g.grad_ref(a).noalias() += dC * g.value(b);
      if (g.tracked(b)) g.grad_ref(b).noalias() += dC.transpose() * g.value(a);
    });
  }

  int add(int a, int b) {
    require_same(a, b, "add");
    return push(value(a) + value(b), tracked(a) || tracked(b),
                [a, b](Graph& g, const Matrix& dC) {
                  if (g.tracked(a)) g.grad_ref(a) += dC;
                  if (g.tracked(b)) g.grad_ref(b) += dC;
                });
  }

  int sub(int a, int b) {
    require_same(a, b, "sub");
    return push(value(a) - value(b), tracked(a) || tracked(b),
                [a, b](Graph& g, const Matrix& dC) {
                  if (g.tracked(a)) g.grad_ref(a) += dC;
                  if (g.tracked(b)) g.grad_ref(b) -= dC;
                });
  }

  // A (n×d) plus a broadcast 1×d row vector.
  int add_rowvec(int a, int b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (B.rows() != 1 || B.cols() != A.cols()) {
      throw InputDomainError("add_rowvec: expected 1x" + std::to_string(A.cols()) + " row");
    }
    Matrix out = A;
    out.rowwise() += B.row(0);
    return push(std::move(out), tracked(a) || tracked(b), [a, b](Graph& g, const Matrix& dC) {
      if (g.tracked(a)) g.grad_ref(a) += dC;
      if (g.tracked(b)) g.grad_ref(b) += dC.colwise().sum();
    });
  }

  int scale(int a, S factor) {
    return push(value(a) * factor, tracked(a), [a, factor](Graph& g, const Matrix& dC) {
      if (g.tracked(a)) g.grad_ref(a) += dC * factor;
    });
  }

  // Per-row layer normalization with learned 1×d gain/bias.
  int layernorm(int x, int gamma, int beta, S eps = S(1e-5)) {
    const Matrix& X = value(x);
    const Matrix& G = value(gamma);
    const Matrix& B = value(beta);
    const auto d = X.cols();
    if (G.rows() != 1 || G.cols() != d || B.rows() != 1 || B.cols() != d) {
      throw InputDomainError("layernorm: gain/bias must be 1x" + std::to_string(d));
    }
    Matrix xhat(X.rows(), d);
    Matrix rstd(X.rows(), 1);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const S mu = X.row(r).mean();
      const S var = (X.row(r).array() - mu).square().mean();
      const S rs = S(1) / std::sqrt(var + eps);
      rstd(r, 0) = rs;
      xhat.row(r) = (X.row(r).array() - mu) * rs;
    }
    Matrix out = xhat;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      out.row(r) = xhat.row(r).cwiseProduct(G.row(0)) + B.row(0);
    }
    return push(std::move(out), tracked(x) || tracked(gamma) || tracked(beta),
                [x, gamma, beta, xhat, rstd](Graph& g, const Matrix& dY) {
                  const Matrix& G = g.value(gamma);
                  if (g.tracked(beta)) g.grad_ref(beta) += dY.colwise().sum();
                  if (g.tracked(gamma)) g.grad_ref(gamma) += dY.cwiseProduct(xhat).colwise().sum();
                  if (g.tracked(x)) {
                    Matrix& dX = g.grad_ref(x);
                    const S d = S(dY.cols());
                    for (Eigen::Index r = 0; r < dY.rows(); ++r) {
                      // dxhat = dy ⊙ γ; dx = rstd·(dxhat − mean(dxhat) − xhat·mean(dxhat⊙xhat))
                      const Matrix dxhat = dY.row(r).cwiseProduct(G.row(0));
                      const S m1 = dxhat.sum() / d;
                      const S m2 = dxhat.cwiseProduct(xhat.row(r)).sum() / d;
                      dX.row(r) += rstd(r, 0) *
                                   (dxhat.array() - m1 - xhat.row(r).array() * m2).matrix();
                    }
                  }
                });
  }

  int softmax_rows(int a) {
    const Matrix& A = value(a);
    Matrix out(A.rows(), A.cols());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      const S m = A.row(r).maxCoeff();
      out.row(r) = (A.row(r).array() - m).exp();
      out.row(r) /= out.row(r).sum();
    }
    return push(Matrix(out), tracked(a), [a, out](Graph& g, const Matrix& dY) {
      if (!g.tracked(a)) return;
      Matrix& dX = g.grad_ref(a);
      for (Eigen::Index r = 0; r < dY.rows(); ++r) {
        const S dot = dY.row(r).cwiseProduct(out.row(r)).sum();
        dX.row(r) += out.row(r).cwiseProduct((dY.row(r).array() - dot).matrix());
      }
    });
  }

  // Exact (erf-based) GELU.
  int gelu(int a) {
    const Matrix& A = value(a);
    Matrix out = A.unaryExpr([](S x) {
      return S(0.5) * x * (S(1) + std::erf(x / std::sqrt(S(2))));
    });
    return push(std::move(out), tracked(a), [a](Graph& g, const Matrix& dC) {
      if (!g.tracked(a)) return;
      const Matrix& X = g.value(a);
      const S inv_sqrt2pi = S(1) / std::sqrt(S(2) * S(M_PI));
      Matrix d = X.unaryExpr([inv_sqrt2pi](S x) {
        const S cdf = S(0.5) * (S(1) + std::erf(x / std::sqrt(S(2))));
        const S pdf = inv_sqrt2pi * std::exp(S(-0.5) * x * x);
        return cdf + x * pdf;
      });
      g.grad_ref(a) += dC.cwiseProduct(d);
    });
  }

  int sigmoid(int a) {
    const Matrix& A = value(a);
    Matrix out = A.unaryExpr([](S x) { return S(1) / (S(1) + std::exp(-x)); });
    return push(Matrix(out), tracked(a), [a, out](Graph& g, const Matrix& dC) {
      if (!g.tracked(a)) return;
      g.grad_ref(a) += dC.cwiseProduct(
          out.cwiseProduct((Matrix::Constant(out.rows(), out.cols(), S(1)) - out)));
    });
  }

  // Column slice [col0, col0 + cols).
  int col_block(int a, int col0, int cols) {
    const Matrix& A = value(a);
    if (col0 < 0 || cols < 1 || col0 + cols > A.cols()) {
      throw InputDomainError("col_block: slice out of range");
    }
    return push(A.middleCols(col0, cols), tracked(a),
                [a, col0, cols](Graph& g, const Matrix& dC) {
                  if (g.tracked(a)) g.grad_ref(a).middleCols(col0, cols) += dC;
                });
  }

  int concat_cols(int a, int b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.rows() != B.rows()) throw InputDomainError("concat_cols: row counts disagree");
    Matrix out(A.rows(), A.cols() + B.cols());
    out.leftCols(A.cols()) = A;
    out.rightCols(B.cols()) = B;
    const int ca = static_cast<int>(A.cols());
    return push(std::move(out), tracked(a) || tracked(b), [a, b, ca](Graph& g, const Matrix& dC) {
      if (g.tracked(a)) g.grad_ref(a) += dC.leftCols(ca);
      if (g.tracked(b)) g.grad_ref(b) += dC.rightCols(dC.cols() - ca);
    });
  }

  // Row-major reshape to rows×cols (element count preserved).
  int reshape(int a, int rows, int cols) {
    const Matrix& A = value(a);
    if (static_cast<long long>(rows) * cols != static_cast<long long>(A.size())) {
      throw InputDomainError("reshape: element count mismatch");
    }
    Matrix out(rows, cols);
    std::copy(A.data(), A.data() + A.size(), out.data());
    return push(std::move(out), tracked(a), [a](Graph& g, const Matrix& dC) {
      if (!g.tracked(a)) return;
      Matrix& dA = g.grad_ref(a);
      for (Eigen::Index i = 0; i < dC.size(); ++i) dA.data()[i] += dC.data()[i];
    });
  }

  // Select rows by index; duplicates allowed (gradient scatter-adds).
  int gather_rows(int a, std::vector<int> rows) {
    const Matrix& A = value(a);
    Matrix out(static_cast<Eigen::Index>(rows.size()), A.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] < 0 || rows[i] >= A.rows()) throw InputDomainError("gather_rows: index range");
      out.row(static_cast<Eigen::Index>(i)) = A.row(rows[i]);
    }
    return push(std::move(out), tracked(a), [a, rows](Graph& g, const Matrix& dC) {
      if (!g.tracked(a)) return;
      Matrix& dA = g.grad_ref(a);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        dA.row(rows[i]) += dC.row(static_cast<Eigen::Index>(i));
      }
    });
  }

  // factor · Σ aᵢⱼ²  → 1×1. mean-square = factor 1/(rows·cols).
  int sum_sq_scaled(int a, S factor) {
    const Matrix& A = value(a);
    Matrix out(1, 1);
    out(0, 0) = A.squaredNorm() * factor;
    return push(std::move(out), tracked(a), [a, factor](Graph& g, const Matrix& dC) {
      if (g.tracked(a)) g.grad_ref(a) += (S(2) * factor * dC(0, 0)) * g.value(a);
    });
  }

  // factor · Σ |aᵢⱼ|  → 1×1. Subgradient at 0 is taken as 0.
  int sum_abs_scaled(int a, S factor) {
    const Matrix& A = value(a);
    Matrix out(1, 1);
    out(0, 0) = A.cwiseAbs().sum() * factor;
    return push(std::move(out), tracked(a), [a, factor](Graph& g, const Matrix& dC) {
      if (!g.tracked(a)) return;
      const Matrix sign = g.value(a).unaryExpr(
          [](S x) { return x > S(0) ? S(1) : (x < S(0) ? S(-1) : S(0)); });
      g.grad_ref(a) += (factor * dC(0, 0)) * sign;
    });
  }

  // Mean squared error between two same-shape nodes → 1×1.
  int mse(int a, int b) {
    require_same(a, b, "mse");
    const auto n = value(a).size();
    return sum_sq_scaled(sub(a, b), S(1) / S(n));
  }

  // Mean over rows of −log softmax(logits_r)[target_r]  → 1×1.
  int softmax_ce_rows(int logits, std::vector<int> targets) {
    const Matrix& L = value(logits);
    if (static_cast<Eigen::Index>(targets.size()) != L.rows()) {
      throw InputDomainError("softmax_ce_rows: one target per row required");
    }
    Matrix probs(L.rows(), L.cols());
    S total = 0;
    for (Eigen::Index r = 0; r < L.rows(); ++r) {
      const int t = targets[static_cast<std::size_t>(r)];
      if (t < 0 || t >= L.cols()) throw InputDomainError("softmax_ce_rows: target class range");
      const S m = L.row(r).maxCoeff();
      const S lse = m + std::log((L.row(r).array() - m).exp().sum());
      probs.row(r) = (L.row(r).array() - lse).exp();
      total += lse - L(r, t);
    }
    Matrix out(1, 1);
    out(0, 0) = total / S(L.rows());
    return push(std::move(out), tracked(logits),
                [logits, targets, probs](Graph& g, const Matrix& dC) {
                  if (!g.tracked(logits)) return;
                  Matrix& dL = g.grad_ref(logits);
                  const S w = dC(0, 0) / S(probs.rows());
                  dL += w * probs;
                  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
                    dL(r, targets[static_cast<std::size_t>(r)]) -= w;
                  }
                });
  }

  const Matrix& value(int id) const { return nodes_[check(id)].value; }
  S value_scalar(int id) const {
    const Matrix& v = value(id);
    if (v.size() != 1) throw InputDomainError("value_scalar: node is not 1x1");
    return v(0, 0);
  }
  bool tracked(int id) const { return nodes_[check(id)].tracked; }

  // Gradient of the last backward() root w.r.t. this node (zero matrix if the
  // node was never reached).
  const Matrix& grad(int id) const {
    Node& n = const_cast<Node&>(nodes_[check(id)]);
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  // Reverse sweep from a 1×1 root node.
  void backward(int root) {
    if (value(root).size() != 1) throw InputDomainError("backward: root must be 1x1");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    grad_ref(root)(0, 0) = S(1);
    for (int id = root; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.backward || n.grad.size() == 0) continue;
      n.backward(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

  Matrix& grad_ref(int id) {
    Node& n = nodes_[check(id)];
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Graph&, const Matrix&)> backward;
    bool tracked = false;
  };

  std::size_t check(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
      throw InputDomainError("graph: node id out of range");
    }
    return static_cast<std::size_t>(id);
  }

  void require_same(int a, int b, const char* op) const {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
      throw InputDomainError(std::string(op) + ": shapes disagree");
    }
  }

  int push(Matrix value, bool tracked, std::function<void(Graph&, const Matrix&)> backward) {
    Node n;
    n.value = std::move(value);
    n.tracked = tracked;
    if (tracked) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

}  // namespace crossview
