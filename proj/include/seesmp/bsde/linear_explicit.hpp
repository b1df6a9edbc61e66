#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "seesmp/bsde/lsmc.hpp"
#include "seesmp/bsde/regression.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/forward/path_ensemble.hpp"
#include "seesmp/forward/stochastic_exponential.hpp"

namespace seesmp {

/// Linear BSDE  -dy = (k0 + k_y y + k_z z) dt - z dw,  y(T) = terminal,
/// through the representation
///   y(t_i) = E_i[(G_N / G_i) terminal + sum_{j >= i} (G_j / G_i) k0_j dt],
/// G = stochastic_exponential(k_z, k_y). z comes from the martingale
/// increment of G y: G_i (z_i + k_z y_i) dt = E_i[(G_{i+1} y_{i+1} - E_i[.]) dw_i].
inline BsdePair solve_linear_bsde_explicit(const StepProcess& k0, const StepProcess& k_y, const StepProcess& k_z,
                                           const Eigen::RowVectorXd& terminal, const PathEnsemble& x,
                                           const BrownianEnsemble& bm, const RegressionEngine& engine = {}) {
  const TimeGrid& grid = bm.grid();
  const std::size_t N = bm.n_paths();
  if (static_cast<std::size_t>(terminal.size()) != N) {
    throw InvalidArgument("solve_linear_bsde_explicit: one terminal value per path");
  }
  if (!(x.grid == grid) || x.n_paths != N) {
    throw InvalidArgument("solve_linear_bsde_explicit: state paths do not match the ensemble");
  }
  if (!k0.empty() && k0.n_steps() != grid.n_steps()) throw InvalidArgument("solve_linear_bsde_explicit: k0 length");
  const double dt = grid.dt();
  const PathEnsemble gamma = stochastic_exponential(k_z, k_y, bm);
  const std::size_t n = grid.n_steps();

  BsdePair out{PathEnsemble(grid, N, 1),
               Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(N))};
  out.y.values[n].row(0) = terminal;
  // Running sum G_N terminal + sum_{j >= i} G_j k0_j dt.
  Eigen::RowVectorXd acc = gamma.values[n].row(0).cwiseProduct(terminal);
  for (std::size_t ii = n; ii-- > 0;) {
    const Eigen::RowVectorXd g = gamma.values[ii].row(0);
    const Eigen::RowVectorXd g_next = gamma.values[ii + 1].row(0);
    if (!k0.is_zero()) {
      for (std::size_t p = 0; p < N; ++p) acc(static_cast<Eigen::Index>(p)) += g(static_cast<Eigen::Index>(p)) * k0.at(ii, p) * dt;
    }
    const Projection proj(engine, x.node(ii));
    const Eigen::RowVectorXd y = proj.apply_row(acc.cwiseQuotient(g));
    out.y.values[ii].row(0) = y;
    // Martingale increment of G y over the step, divided by G_i.
    const Eigen::RowVectorXd d = g_next.cwiseProduct(out.y.values[ii + 1].row(0)).cwiseQuotient(g);
    const Eigen::RowVectorXd cond = proj.apply_row(d);
    Eigen::RowVectorXd z = detail::martingale_integrand(proj, d, cond, bm.step_increments(ii), dt);
    if (!k_z.is_zero()) {
      for (std::size_t p = 0; p < N; ++p) z(static_cast<Eigen::Index>(p)) -= k_z.at(ii, p) * y(static_cast<Eigen::Index>(p));
    }
    out.z.row(static_cast<Eigen::Index>(ii)) = z;
  }
  return out;
}

}  // namespace seesmp
