#pragma once

#include <cmath>
#include <cstddef>
#include <functional>

#include <Eigen/Dense>

#include "seesmp/bsde/regression.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/core/coefficients.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/parallel.hpp"
#include "seesmp/forward/path_ensemble.hpp"

namespace seesmp {

/// Scalar BSDE solution. y lives on nodes; z lives on steps (n_steps x n_paths).
struct BsdePair {
  PathEnsemble y;
  Eigen::MatrixXd z;

  double y0() const { return y.values.front()(0, 0); }
};

/// k(step, path, t, x, y, z). The step and path indices let a generator read
/// adapted inputs such as the control or a reference trajectory.
using Generator =
    std::function<double(std::size_t step, std::size_t path, double t, const Eigen::VectorXd& x, double y, double z)>;

struct LsmcOptions {
  RegressionEngine engine;
  int inner_iterations = 5;
  // Declared bound on |k_y|; 0 means unknown (the fixed point is then only monitored).
  double ky_bound = 0.0;
};

/// Recursive utility generator k(t, x, y, z, u) along a control process.
inline Generator utility_generator(const CoefficientSet& coeffs, const ControlProcess& control) {
  if (!coeffs.k) throw ConfigurationError("utility_generator: k is required");
  return [&coeffs, control](std::size_t i, std::size_t p, double t, const Eigen::VectorXd& x, double y, double z) {
    return coeffs.k(t, x, y, z, control.at(i, p));
  };
}

namespace detail {

// (target - E[target]) dw / dt projected on the same features.
inline Eigen::RowVectorXd martingale_integrand(const Projection& proj, const Eigen::RowVectorXd& target,
                                               const Eigen::RowVectorXd& predicted, const Eigen::RowVectorXd& dw,
                                               double dt) {
  const Eigen::RowVectorXd centered = target - predicted;
  if (centered.isZero(0.0)) return Eigen::RowVectorXd::Zero(target.size());
  return proj.apply_row((centered.array() * dw.array() / dt).matrix());
}

}  // namespace detail

/// Backward Euler regression scheme, implicit in y and explicit in z:
///   z_i = E_i[(y_{i+1} - E_i y_{i+1}) dw_i] / dt
///   y_i = E_i[y_{i+1}] + dt k(t_i, x_i, y_i, z_i)
/// The y equation is solved per path by at most `inner_iterations` fixed-point steps.
inline BsdePair solve_bsde_lsmc(const Eigen::RowVectorXd& terminal, const Generator& generator,
                                const PathEnsemble& x, const BrownianEnsemble& bm, const LsmcOptions& opt = {}) {
  const TimeGrid& grid = bm.grid();
  const std::size_t N = bm.n_paths();
  if (static_cast<std::size_t>(terminal.size()) != N) throw InvalidArgument("solve_bsde_lsmc: one terminal value per path");
  if (!(x.grid == grid) || x.n_paths != N) throw InvalidArgument("solve_bsde_lsmc: state paths do not match the ensemble");
  const double dt = grid.dt();
  if (opt.ky_bound * dt >= 1.0) {
    throw NumericalError("solve_bsde_lsmc: step size too large for the implicit y step (|k_y| dt >= 1)");
  }
  BsdePair out{PathEnsemble(grid, N, 1), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.n_steps()),
                                                               static_cast<Eigen::Index>(N))};
  out.y.values.back().row(0) = terminal;
  for (std::size_t ii = grid.n_steps(); ii-- > 0;) {
    const Projection proj(opt.engine, x.node(ii));
    const Eigen::RowVectorXd next = out.y.values[ii + 1].row(0);
    const Eigen::RowVectorXd cond = proj.apply_row(next);
    const Eigen::RowVectorXd z = detail::martingale_integrand(proj, next, cond, bm.step_increments(ii), dt);
    out.z.row(static_cast<Eigen::Index>(ii)) = z;
    Eigen::RowVectorXd y(static_cast<Eigen::Index>(N));
    if (generator) {
      const double t = grid.node(ii);
      parallel_for(N, [&](std::size_t p) {
        const Eigen::Index c = static_cast<Eigen::Index>(p);
        const Eigen::VectorXd xp = x.node(ii).col(c);
        double cur = cond(c) + dt * generator(ii, p, t, xp, cond(c), z(c));
        double last_step = std::abs(cur - cond(c));
        for (int k = 1; k < opt.inner_iterations; ++k) {
          const double nxt = cond(c) + dt * generator(ii, p, t, xp, cur, z(c));
          const double step = std::abs(nxt - cur);
          cur = nxt;
          if (step == 0.0) break;
          if (step > last_step && last_step > 0.0) {
            throw NumericalError("solve_bsde_lsmc: implicit y iteration does not contract (|k_y| dt >= 1?)", ii);
          }
          last_step = step;
        }
        y(c) = cur;
      });
    } else {
      y = cond;
    }
    if (!y.allFinite()) throw NumericalError("solve_bsde_lsmc: non-finite y", ii);
    out.y.values[ii].row(0) = y;
  }
  return out;
}

}  // namespace seesmp
