#pragma once

#include <cstddef>
#include <functional>
#include <utility>

#include <Eigen/Dense>

#include "seesmp/core/brownian.hpp"
#include "seesmp/core/coefficients.hpp"
#include "seesmp/core/galerkin_system.hpp"
#include "seesmp/core/parallel.hpp"
#include "seesmp/forward/path_ensemble.hpp"
#include "seesmp/forward/scheme.hpp"

namespace seesmp {

/// Controlled SEE dx = [A x + a(t,x,u)] dt + [B x + b(t,x,u)] dw by the
/// semi-implicit scheme (A implicit, everything else explicit).
inline PathEnsemble solve_see(const GalerkinSystem& system, const CoefficientSet& coeffs,
                              const ControlProcess& control, const BrownianEnsemble& bm,
                              const Eigen::VectorXd& x0) {
  system.require();
  const TimeGrid& grid = bm.grid();
  if (x0.size() != system.dim || coeffs.dim != system.dim) {
    throw InvalidArgument("solve_see: dimension mismatch between x0, system and coefficients");
  }
  if (!coeffs.a || !coeffs.b) throw ConfigurationError("solve_see: coefficients a and b are required");
  if (control.n_steps() != grid.n_steps()) throw InvalidArgument("solve_see: control does not match the grid");
  const auto inv = implicit_inverses(system, grid);
  std::vector<Eigen::MatrixXd> B(grid.n_steps());
  for (std::size_t i = 0; i < grid.n_steps(); ++i) B[i] = system.B_at(grid.node(i));
  auto coefficients = [&](std::size_t i, const Eigen::MatrixXd& X, Eigen::MatrixXd& F, Eigen::MatrixXd& G) {
    const double t = grid.node(i);
    G.noalias() = B[i] * X;
    parallel_for(static_cast<std::size_t>(X.cols()), [&](std::size_t p) {
      const Eigen::VectorXd x = X.col(static_cast<Eigen::Index>(p));
      const double u = control.at(i, p);
      F.col(static_cast<Eigen::Index>(p)) = coeffs.a(t, x, u);
      G.col(static_cast<Eigen::Index>(p)) += coeffs.b(t, x, u);
    });
  };
  Eigen::MatrixXd X0 = x0.replicate(1, static_cast<Eigen::Index>(bm.n_paths()));
  return PathEnsemble::from_nodes(grid, integrate_semi_implicit(inv, bm, X0, 0, 1, coefficients));
}

using FeedbackLaw = std::function<double(double t, const Eigen::VectorXd& x)>;

/// Closed-loop simulation u_i = law(t_i, x_i); returns the path and the realized control.
inline std::pair<PathEnsemble, ControlProcess> solve_see_feedback(const GalerkinSystem& system,
                                                                  const CoefficientSet& coeffs,
                                                                  const FeedbackLaw& law,
                                                                  const BrownianEnsemble& bm,
                                                                  const Eigen::VectorXd& x0) {
  system.require();
  const TimeGrid& grid = bm.grid();
  if (x0.size() != system.dim || coeffs.dim != system.dim) {
    throw InvalidArgument("solve_see_feedback: dimension mismatch");
  }
  const auto inv = implicit_inverses(system, grid);
  Eigen::MatrixXd u(static_cast<Eigen::Index>(grid.n_steps()), static_cast<Eigen::Index>(bm.n_paths()));
  auto coefficients = [&](std::size_t i, const Eigen::MatrixXd& X, Eigen::MatrixXd& F, Eigen::MatrixXd& G) {
    const double t = grid.node(i);
    G.noalias() = system.B_at(t) * X;
    parallel_for(static_cast<std::size_t>(X.cols()), [&](std::size_t p) {
      const Eigen::VectorXd x = X.col(static_cast<Eigen::Index>(p));
      const double v = law(t, x);
      u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = v;
      F.col(static_cast<Eigen::Index>(p)) = coeffs.a(t, x, v);
      G.col(static_cast<Eigen::Index>(p)) += coeffs.b(t, x, v);
    });
  };
  Eigen::MatrixXd X0 = x0.replicate(1, static_cast<Eigen::Index>(bm.n_paths()));
  auto nodes = integrate_semi_implicit(inv, bm, X0, 0, 1, coefficients);
  return {PathEnsemble::from_nodes(grid, std::move(nodes)), ControlProcess(std::move(u))};
}

}  // namespace seesmp
