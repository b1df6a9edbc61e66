#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/bsde/regression.hpp"
#include "seesmp/bsie/operator_process.hpp"
#include "seesmp/bsie/picard.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/galerkin_system.hpp"
#include "seesmp/core/parallel.hpp"
#include "seesmp/forward/flow.hpp"

namespace seesmp {

struct MatrixBsdeOptions {
  RegressionEngine engine;
  bool symmetrize = true;
};

namespace detail {

// I - dt (I (x) A' + A' (x) I): the column-major vec of X - dt (A' X + X A).
inline Eigen::MatrixXd lyapunov_operator(const Eigen::MatrixXd& A, double dt) {
  const Eigen::Index n = A.rows();
  const Eigen::MatrixXd At = A.transpose();
  Eigen::MatrixXd K = Eigen::MatrixXd::Identity(n * n, n * n);
  for (Eigen::Index c = 0; c < n; ++c) {
    K.block(c * n, c * n, n, n) -= dt * At;  // A' X, column c of X
    for (Eigen::Index d = 0; d < n; ++d) {
      K.block(c * n, d * n, n, n).diagonal().array() -= dt * A(d, c);  // X A, column c = sum_d X_d A(d, c)
    }
  }
  return K;
}

}  // namespace detail

/// dP = -[A~'P + P A~ + B~'P B~ + B~'Q + Q B~ + f(P)] dt + Q dw,  P(T) = xi,
/// where A~, B~ are the flow's operators. Backward Euler with the stiff
/// A'P + P A part (A the implicit matrix of the flow) solved as a Sylvester
/// system; the rest of the drift and the driver use E_i[P_{i+1}].
/// Q_i = E_i[(P_{i+1} - E_i P_{i+1}) dw_i] / dt entrywise.
inline OperatorProcess matrix_bsde_backward(const LinearFlow& flow, const TerminalMatrix& xi,
                                            const MatrixGenerator& f, const BrownianEnsemble& bm,
                                            const MatrixBsdeOptions& opt = {}, const PathEnsemble* features = nullptr) {
  const TimeGrid& grid = bm.grid();
  if (!(flow.grid() == grid)) throw InvalidArgument("matrix_bsde_backward: flow and ensemble grids differ");
  const int n = flow.dim();
  const std::size_t N = bm.n_paths();
  const bool det = !flow.path_dependent() && !xi.random() && !f.path_dependent;
  if (!det && (features == nullptr || !(features->grid == grid) || features->n_paths != N)) {
    throw ConfigurationError("matrix_bsde_backward: path-dependent data need state features on the same ensemble");
  }
  const double dt = grid.dt();
  const std::size_t steps = grid.n_steps();
  OperatorProcess out = OperatorProcess::zeros(grid, n, det ? 1 : N);
  out.Q.assign(steps, Eigen::MatrixXd::Zero(n, n * static_cast<Eigen::Index>(det ? 1 : N)));
  if (det) {
    out.P[steps] = xi.constant;
  } else {
    Eigen::MatrixXd& T = out.P[steps];
    for (std::size_t p = 0; p < N; ++p) T.middleCols(static_cast<Eigen::Index>(p) * n, n) = xi.at(p);
  }
  if (out.P[steps].rows() != n) throw InvalidArgument("matrix_bsde_backward: terminal matrix has the wrong size");

  Eigen::MatrixXd last_A;
  Eigen::FullPivLU<Eigen::MatrixXd> lu;
  for (std::size_t i = steps; i-- > 0;) {
    const Eigen::MatrixXd& A = flow.implicit_matrix(i);
    if (last_A.size() == 0 || !(A == last_A)) {
      lu.compute(detail::lyapunov_operator(A, dt));
      if (!lu.isInvertible()) throw NumericalError("matrix_bsde_backward: Sylvester system is singular", i);
      last_A = A;
    }
    if (det) {
      const Eigen::MatrixXd& P = out.P[i + 1];
      const Eigen::MatrixXd& D = flow.explicit_drift(i);
      const Eigen::MatrixXd& G = flow.diffusion(i);
      Eigen::MatrixXd rhs = P + dt * (D.transpose() * P + P * D + G.transpose() * P * G + f(i, 0, P));
      Eigen::VectorXd x = lu.solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size()));
      Eigen::MatrixXd X = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
      if (opt.symmetrize) X = (0.5 * (X + X.transpose())).eval();
      if (!X.allFinite()) throw NumericalError("matrix_bsde_backward: non-finite P", i);
      out.P[i] = std::move(X);
      continue;
    }
    const Projection proj(opt.engine, features->node(i));
    const Eigen::MatrixXd next_rows = detail::blocks_to_rows(out.P[i + 1], n);
    const Eigen::MatrixXd cond_rows = proj.apply(next_rows);
    const Eigen::RowVectorXd dw = bm.step_increments(i);
    Eigen::MatrixXd q_rows(n * n, static_cast<Eigen::Index>(N));
    for (Eigen::Index r = 0; r < n * n; ++r) {
      const Eigen::RowVectorXd centered = next_rows.row(r) - cond_rows.row(r);
      if (centered.isZero(0.0)) {
        q_rows.row(r).setZero();
      } else {
        q_rows.row(r) = proj.apply_row((centered.array() * dw.array() / dt).matrix());
      }
    }
    const Eigen::MatrixXd Ph = detail::rows_to_blocks(cond_rows, n);
    Eigen::MatrixXd Qb = detail::rows_to_blocks(q_rows, n);
    if (opt.symmetrize) detail::symmetrize_blocks(Qb, n);
    Eigen::MatrixXd rhs_rows(n * n, static_cast<Eigen::Index>(N));
    parallel_for(N, [&](std::size_t p) {
      const Eigen::Index c = static_cast<Eigen::Index>(p) * n;
      const auto [D, G] = flow.step_coefficients(i, p);
      const Eigen::MatrixXd P = Ph.middleCols(c, n);
      const Eigen::MatrixXd Q = Qb.middleCols(c, n);
      Eigen::MatrixXd rhs =
          P + dt * (D.transpose() * P + P * D + G.transpose() * P * G + G.transpose() * Q + Q * G + f(i, p, P));
      rhs_rows.col(static_cast<Eigen::Index>(p)) = Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size());
    });
    Eigen::MatrixXd X = detail::rows_to_blocks(lu.solve(rhs_rows), n);
    if (opt.symmetrize) detail::symmetrize_blocks(X, n);
    if (!X.allFinite()) throw NumericalError("matrix_bsde_backward: non-finite P", i);
    out.P[i] = std::move(X);
    out.Q[i] = std::move(Qb);
  }
  return out;
}

inline OperatorProcess matrix_bsde_backward(const GalerkinSystem& system, const TerminalMatrix& xi,
                                            const MatrixGenerator& f, const StepProcess& beta,
                                            const BrownianEnsemble& bm, const MatrixBsdeOptions& opt = {},
                                            const PathEnsemble* features = nullptr,
                                            BetaConvention convention = BetaConvention::kQDrift) {
  const LinearFlow flow = LinearFlow::from_system(system, bm.grid()).beta_transformed(beta, convention);
  return matrix_bsde_backward(flow, xi, f, bm, opt, features);
}

}  // namespace seesmp
