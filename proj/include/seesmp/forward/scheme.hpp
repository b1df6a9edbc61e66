#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/core/brownian.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/galerkin_system.hpp"

namespace seesmp {

/// (I - dt A(t_{i+1}))^{-1} for every step; the drift-implicit part of the scheme.
inline std::vector<Eigen::MatrixXd> implicit_inverses(const GalerkinSystem& system, const TimeGrid& grid) {
  system.require();
  const int n = system.dim;
  std::vector<Eigen::MatrixXd> inv(grid.n_steps());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd last_A;
  for (std::size_t i = 0; i < grid.n_steps(); ++i) {
    const Eigen::MatrixXd A = system.A_at(grid.node(i + 1));
    if (i > 0 && A.rows() == last_A.rows() && A == last_A) {
      inv[i] = inv[i - 1];
      continue;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(I - grid.dt() * A);
    if (!lu.isInvertible()) throw NumericalError("implicit step matrix I - dt*A is singular", i);
    inv[i] = lu.inverse();
    last_A = A;
  }
  return inv;
}

/// Brownian increments of one step laid out per column, where consecutive
/// groups of cols_per_path columns belong to the same path.
inline Eigen::RowVectorXd column_increments(const BrownianEnsemble& bm, std::size_t step,
                                            std::size_t cols_per_path) {
  const auto dw = bm.step_increments(step);
  if (cols_per_path == 1) return dw;
  Eigen::RowVectorXd out(dw.size() * static_cast<Eigen::Index>(cols_per_path));
  for (Eigen::Index p = 0; p < dw.size(); ++p) {
    out.segment(p * static_cast<Eigen::Index>(cols_per_path), static_cast<Eigen::Index>(cols_per_path))
        .setConstant(dw(p));
  }
  return out;
}

/// Semi-implicit Euler-Maruyama:
///   X_{i+1} = (I - dt A_{i+1})^{-1} [X_i + dt F_i + G_i dw_i]
/// where coefficients(i, X, F, G) fills the explicit drift F and the full
/// diffusion G column-wise. Nodes before `start` are zero; node `start`
/// holds x0.
template <class Coefficients>
std::vector<Eigen::MatrixXd> integrate_semi_implicit(const std::vector<Eigen::MatrixXd>& inv,
                                                     const BrownianEnsemble& bm, const Eigen::MatrixXd& x0,
                                                     std::size_t start, std::size_t cols_per_path,
                                                     Coefficients&& coefficients) {
  const TimeGrid& grid = bm.grid();
  if (inv.size() != grid.n_steps()) throw InvalidArgument("integrate: step operators do not match the grid");
  if (static_cast<std::size_t>(x0.cols()) != bm.n_paths() * cols_per_path) {
    throw InvalidArgument("integrate: initial state has the wrong number of columns");
  }
  if (start > grid.n_steps()) throw InvalidArgument("integrate: start node beyond the horizon");
  const double dt = grid.dt();
  std::vector<Eigen::MatrixXd> nodes(grid.n_nodes());
  for (std::size_t i = 0; i < start; ++i) nodes[i] = Eigen::MatrixXd::Zero(x0.rows(), x0.cols());
  nodes[start] = x0;
  Eigen::MatrixXd F, G;
  for (std::size_t i = start; i < grid.n_steps(); ++i) {
    const Eigen::MatrixXd& X = nodes[i];
    F.setZero(X.rows(), X.cols());
    G.setZero(X.rows(), X.cols());
    coefficients(i, X, F, G);
    G.array().rowwise() *= column_increments(bm, i, cols_per_path).array();
    Eigen::MatrixXd rhs = X + dt * F + G;
    nodes[i + 1].noalias() = inv[i] * rhs;
    if (!nodes[i + 1].allFinite()) throw NumericalError("state blow-up (non-finite value)", i + 1);
  }
  return nodes;
}

}  // namespace seesmp
