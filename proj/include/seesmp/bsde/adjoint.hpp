#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/bsde/lsmc.hpp"
#include "seesmp/bsde/regression.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/core/coefficients.hpp"
#include "seesmp/core/galerkin_system.hpp"
#include "seesmp/core/parallel.hpp"
#include "seesmp/forward/path_ensemble.hpp"

namespace seesmp {

/// (p, q) of the first-order adjoint. p lives on nodes (n x N each); q on
/// steps (n x N each).
struct AdjointFirstOrder {
  PathEnsemble p;
  std::vector<Eigen::MatrixXd> q;
  // Per-coordinate regression standard errors (path averages of the robust
  // prediction stderr). For p they accumulate in quadrature backwards.
  std::vector<Eigen::VectorXd> p_std_error;
  std::vector<Eigen::VectorXd> q_std_error;
};

/// Reference trajectory bundle: the optimal state, utility pair and control.
struct Trajectory {
  PathEnsemble x;
  BsdePair yz;
  ControlProcess u;
};

/// -dp = {[A_bar' + k_y + k_z B_bar'] p + [B_bar' + k_z] q + k_x} dt - q dw,
/// p(T) = h_x(x_bar(T)), A_bar = A + a_x, B_bar = B + b_x along the reference.
/// Backward Euler implicit in A' only; every other term uses E_i[p_{i+1}].
inline AdjointFirstOrder solve_first_order_adjoint(const GalerkinSystem& system, const CoefficientSet& coeffs,
                                                   const Trajectory& ref, const BrownianEnsemble& bm,
                                                   const RegressionEngine& engine = {}) {
  system.require();
  coeffs.require_complete();
  const TimeGrid& grid = bm.grid();
  const std::size_t N = bm.n_paths();
  const int n = system.dim;
  if (!(ref.x.grid == grid) || ref.x.n_paths != N || ref.x.dim != n) {
    throw InvalidArgument("solve_first_order_adjoint: reference state does not match the ensemble");
  }
  const std::size_t steps = grid.n_steps();
  const double dt = grid.dt();

  AdjointFirstOrder out{PathEnsemble(grid, N, n), std::vector<Eigen::MatrixXd>(steps),
                        std::vector<Eigen::VectorXd>(steps + 1, Eigen::VectorXd::Zero(n)),
                        std::vector<Eigen::VectorXd>(steps, Eigen::VectorXd::Zero(n))};
  {
    Eigen::MatrixXd& pT = out.p.values[steps];
    for (std::size_t p = 0; p < N; ++p) pT.col(static_cast<Eigen::Index>(p)) = coeffs.h_x(ref.x.state(steps, p));
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd last_A, inv;
  for (std::size_t ii = steps; ii-- > 0;) {
    const double t = grid.node(ii);
    const Eigen::MatrixXd A = system.A_at(t);
    const Eigen::MatrixXd B = system.B_at(t);
    if (last_A.size() == 0 || !(A == last_A)) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(I - dt * A.transpose());
      if (!lu.isInvertible()) throw NumericalError("solve_first_order_adjoint: singular implicit step", ii);
      inv = lu.inverse();
      last_A = A;
    }
    const Projection proj(engine, ref.x.node(ii));
    const Eigen::MatrixXd& next = out.p.values[ii + 1];
    const Eigen::MatrixXd cond = proj.apply(next);
    const Eigen::RowVectorXd dw = bm.step_increments(ii);
    Eigen::MatrixXd q(n, static_cast<Eigen::Index>(N));
    const Eigen::MatrixXd centered = next - cond;
    for (int r = 0; r < n; ++r) {
      if (centered.row(r).isZero(0.0)) {
        q.row(r).setZero();
        out.p_std_error[ii](r) = out.p_std_error[ii + 1](r);
      } else {
        const Eigen::RowVectorXd target = (centered.row(r).array() * dw.array() / dt).matrix();
        q.row(r) = proj.apply_row(target);
        out.q_std_error[ii](r) = proj.prediction_stderr(target).mean();
        out.p_std_error[ii](r) = std::hypot(out.p_std_error[ii + 1](r), proj.prediction_stderr(next.row(r)).mean());
      }
    }
    Eigen::MatrixXd rhs(n, static_cast<Eigen::Index>(N));
    parallel_for(N, [&](std::size_t p) {
      const Eigen::Index c = static_cast<Eigen::Index>(p);
      const Eigen::VectorXd x = ref.x.state(ii, p);
      const double u = ref.u.at(ii, p);
      const double y = ref.yz.y.at(ii, p);
      const double z = ref.yz.z(static_cast<Eigen::Index>(ii), c);
      const Eigen::MatrixXd Bbar = B + coeffs.b_x(t, x, u);
      const double ky = coeffs.k_y(t, x, y, z, u);
      const double kz = coeffs.k_z(t, x, y, z, u);
      const Eigen::VectorXd ph = cond.col(c);
      const Eigen::VectorXd qc = q.col(c);
      Eigen::VectorXd drift = coeffs.a_x(t, x, u).transpose() * ph + ky * ph + kz * (Bbar.transpose() * ph) +
                              Bbar.transpose() * qc + kz * qc + coeffs.k_x(t, x, y, z, u);
      rhs.col(c) = ph + dt * drift;
    });
    out.p.values[ii].noalias() = inv * rhs;
    out.q[ii] = std::move(q);
    if (!out.p.values[ii].allFinite()) throw NumericalError("solve_first_order_adjoint: non-finite p", ii);
  }
  return out;
}

}  // namespace seesmp
