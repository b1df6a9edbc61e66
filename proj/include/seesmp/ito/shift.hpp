#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/core/brownian.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/galerkin_system.hpp"
#include "seesmp/core/order_report.hpp"
#include "seesmp/core/spike.hpp"
#include "seesmp/forward/flow.hpp"
#include "seesmp/forward/moments.hpp"
#include "seesmp/forward/path_ensemble.hpp"
#include "seesmp/ito/sigma.hpp"

namespace seesmp {

struct ShiftResult {
  PathEnsemble y;
  PathEnsemble scaled_z;  // sqrt(rho) z
  PathEnsemble difference;
  Estimate error;  // E[sup_t ||y - sqrt(rho) z||^{2 alpha}]
};

/// y solves the spiked-diffusion equation from 0; z is 0 before t0, eta on the
/// window and the homogeneous flow of eta(t0 + rho) afterwards, where
/// eta(t) = zeta0 (w(t) - w(t0)) / sqrt(rho). sqrt(rho) z is built directly so
/// that no 1/sqrt(rho) round trip enters.
inline ShiftResult shift_diffusion_inhomogeneity(const GalerkinSystem& system, const Eigen::VectorXd& zeta0,
                                                 const SpikeSpec& spike, const BrownianEnsemble& bm,
                                                 double alpha = 1.0) {
  if (zeta0.size() != system.dim) throw InvalidArgument("shift_diffusion_inhomogeneity: zeta0 has the wrong size");
  const TimeGrid& grid = bm.grid();
  const SpikeWindow w = spike_window(spike, grid);
  const std::size_t N = bm.n_paths();
  ShiftResult r;
  r.y = spiked_state(system, zeta0, w, bm);

  std::vector<Eigen::MatrixXd> z(grid.n_nodes(), Eigen::MatrixXd::Zero(system.dim, static_cast<Eigen::Index>(N)));
  for (std::size_t i = w.first; i < w.end(); ++i) {
    z[i + 1] = z[i] + zeta0 * bm.step_increments(i);
  }
  if (w.end() < grid.n_steps()) {
    const LinearFlow flow = LinearFlow::from_system(system, grid);
    auto tail = flow.propagate(bm, z[w.end()], w.end());
    for (std::size_t i = w.end() + 1; i < grid.n_nodes(); ++i) z[i] = std::move(tail[i]);
  }
  r.scaled_z = PathEnsemble::from_nodes(grid, std::move(z));
  r.difference = r.y - r.scaled_z;
  r.error = moment_estimate(r.difference, alpha);
  return r;
}

/// Sweep over rho at fixed t0; the claim is O(rho^{2 alpha}).
inline OrderReport shift_order_sweep(const GalerkinSystem& system, const Eigen::VectorXd& zeta0, double t0,
                                     const std::vector<double>& rho_list, const BrownianEnsemble& bm,
                                     double alpha = 1.0, const OrderCriteria& crit = {}) {
  std::vector<double> e, se;
  for (double rho : rho_list) {
    const ShiftResult r = shift_diffusion_inhomogeneity(system, zeta0, SpikeSpec{t0, rho, 0.0, {}}, bm, alpha);
    e.push_back(r.error.value);
    se.push_back(r.error.std_error);
  }
  return evaluate_order("E sup||y - sqrt(rho) z||^(2 alpha)", rho_list, e, se, 2.0 * alpha, OrderClaim::BigO, crit);
}

}  // namespace seesmp
