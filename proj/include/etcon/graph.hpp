#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "etcon/errors.hpp"

namespace etcon {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/**
 * Weighted digraph with its degree vectors and Laplacian L = D_out - W.
 *
 * An edge (i, j) exists iff w_ij > 0, and j is then an out-neighbour of i:
 * agent i listens to j. Diagonal weights are accepted. They count towards both
 * degrees and cancel on the Laplacian diagonal, and they are excluded from the
 * neighbour lists since an agent never receives messages from itself.
 *
 * Immutable after construction.
 */
template <typename Scalar = double>
class Digraph {
public:
  using MatrixType = Matrix<Scalar>;
  using VectorType = Vector<Scalar>;

  explicit Digraph(MatrixType weights) : weights_(std::move(weights)) {
    if (weights_.rows() != weights_.cols())
      throw ConfigError("adjacency matrix is not square (" + std::to_string(weights_.rows()) + "x" +
                        std::to_string(weights_.cols()) + ")");
    const Index n = weights_.rows();
    if (n < 2) throw ConfigError("a network needs at least 2 agents");
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (!(weights_(i, j) >= Scalar(0)) || !std::isfinite(static_cast<double>(weights_(i, j))))
          throw ConfigError("weight w(" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                            ") must be finite and non-negative");

    out_degree_ = weights_.rowwise().sum();
    in_degree_ = weights_.colwise().sum().transpose();

    laplacian_ = -weights_;
    out_neighbors_.resize(static_cast<std::size_t>(n));
    in_neighbors_.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      // Off-diagonal row sum in column order, so every row of L sums to zero up to one rounding.
      Scalar off = 0;
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        off += weights_(i, j);
        if (weights_(i, j) > Scalar(0)) {
          out_neighbors_[static_cast<std::size_t>(i)].push_back(j);
          in_neighbors_[static_cast<std::size_t>(j)].push_back(i);
        }
      }
      laplacian_(i, i) = off;
    }
  }

  Index size() const { return weights_.rows(); }
  const MatrixType& weights() const { return weights_; }
  Scalar weight(Index i, Index j) const { return weights_(i, j); }
  const VectorType& out_degree() const { return out_degree_; }
  const VectorType& in_degree() const { return in_degree_; }
  const MatrixType& laplacian() const { return laplacian_; }

  /// Agents j != i with w_ij > 0, ascending.
  const std::vector<Index>& out_neighbors(Index i) const {
    return out_neighbors_[static_cast<std::size_t>(i)];
  }
  /// Agents k != i with w_ki > 0, ascending. These hear i's broadcasts.
  const std::vector<Index>& in_neighbors(Index i) const {
    return in_neighbors_[static_cast<std::size_t>(i)];
  }

  /// Largest weight towards an out-neighbour, 0 when there is none.
  Scalar max_out_weight(Index i) const {
    Scalar m = 0;
    for (Index j : out_neighbors(i)) m = std::max(m, weights_(i, j));
    return m;
  }

private:
  MatrixType weights_;
  VectorType out_degree_;
  VectorType in_degree_;
  MatrixType laplacian_;
  std::vector<std::vector<Index>> out_neighbors_;
  std::vector<std::vector<Index>> in_neighbors_;
};

template <typename Derived>
Digraph<typename Derived::Scalar> build_digraph(const Eigen::MatrixBase<Derived>& weights) {
  return Digraph<typename Derived::Scalar>(weights.eval());
}

template <typename Scalar>
bool is_weight_balanced(const Digraph<Scalar>& g, Scalar tol = Scalar(1e-12)) {
  return (g.out_degree() - g.in_degree()).cwiseAbs().maxCoeff() <= tol;
}

namespace detail {

template <typename Scalar>
std::vector<bool> reachable_from(const Digraph<Scalar>& g, Index source, bool reverse) {
  std::vector<bool> seen(static_cast<std::size_t>(g.size()), false);
  std::vector<Index> stack{source};
  seen[static_cast<std::size_t>(source)] = true;
  while (!stack.empty()) {
    const Index v = stack.back();
    stack.pop_back();
    for (Index w : reverse ? g.in_neighbors(v) : g.out_neighbors(v)) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

}  // namespace detail

/// Every vertex reaches every other along positive-weight edges.
template <typename Scalar>
bool is_strongly_connected(const Digraph<Scalar>& g) {
  for (bool reverse : {false, true}) {
    const auto seen = detail::reachable_from(g, 0, reverse);
    for (bool s : seen)
      if (!s) return false;
  }
  return true;
}

template <typename Scalar = double>
struct Spectrum {
  Scalar lambda2;  ///< second-smallest eigenvalue of (L + L^T) / 2
  Scalar lambdaN;  ///< largest eigenvalue of (L + L^T) / 2
  Scalar l_norm;   ///< induced 2-norm of L
};

/// Symmetrised Laplacian (L + L^T) / 2, the matrix behind x^T L^T x.
template <typename Scalar>
Matrix<Scalar> symmetric_laplacian(const Digraph<Scalar>& g) {
  return (g.laplacian() + g.laplacian().transpose()) / Scalar(2);
}

/**
 * Spectral quantities used by convergence certificates.
 *
 * For a directed L the eigenvalues may be complex, so lambda2 and lambdaN are
 * taken from the symmetric part, which is the operator in every quadratic form
 * x^T L^T x the certificates use.
 */
template <typename Scalar>
Spectrum<Scalar> laplacian_spectrum(const Digraph<Scalar>& g) {
  if (!is_weight_balanced(g, Scalar(1e-10)))
    throw ConfigError("laplacian_spectrum requires a weight-balanced digraph");
  if (!is_strongly_connected(g))
    throw ConfigError("laplacian_spectrum requires a strongly connected digraph");

  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(symmetric_laplacian(g), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw ConfigError("symmetric eigensolve failed");
  const auto& ev = eig.eigenvalues();

  Eigen::JacobiSVD<Matrix<Scalar>> svd(g.laplacian());
  return Spectrum<Scalar>{ev(1), ev(ev.size() - 1), svd.singularValues()(0)};
}

}  // namespace etcon
