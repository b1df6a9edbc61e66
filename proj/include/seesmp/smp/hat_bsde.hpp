#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/bsde/linear_explicit.hpp"
#include "seesmp/bsde/lsmc.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/order_report.hpp"
#include "seesmp/core/parallel.hpp"
#include "seesmp/core/spike.hpp"
#include "seesmp/forward/moments.hpp"
#include "seesmp/forward/stochastic_exponential.hpp"
#include "seesmp/smp/hamiltonian.hpp"
#include "seesmp/smp/reference.hpp"
#include "seesmp/smp/spike_control.hpp"
#include "seesmp/smp/variation.hpp"

namespace seesmp {

/// Spike bracket <p, da> + <q, db> + k(.., z + <p, db>, v) - k(.., z, u) + <P db, db>/2
/// on E_rho (zero elsewhere), one entry per step and path.
inline StepProcess spike_bracket(const CoefficientSet& coeffs, const Trajectory& ref, const AdjointBundle& adj,
                                 const SpikeSpec& spike, const BrownianEnsemble& bm) {
  const TimeGrid& grid = bm.grid();
  const std::size_t N = bm.n_paths();
  const SpikeWindow w = spike_window(spike, grid);
  Eigen::MatrixXd k0 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.n_steps()), static_cast<Eigen::Index>(N));
  for (std::size_t i = w.first; i < w.end(); ++i) {
    const double t = grid.node(i);
    parallel_for(N, [&](std::size_t p) {
      const Eigen::Index c = static_cast<Eigen::Index>(p);
      k0(static_cast<Eigen::Index>(i), c) =
          verdict_expression(t, ref.x.state(i, p), ref.yz.y.at(i, p), ref.yz.z(static_cast<Eigen::Index>(i), c),
                             ref.u.at(i, p), spike.value(i, p), adj.first.p.state(i, p), adj.first.q[i].col(c),
                             adj.P.at(i, p), coeffs);
    });
  }
  return StepProcess(std::move(k0));
}

/// k_y and k_z along the reference, one entry per step and path.
inline std::pair<StepProcess, StepProcess> utility_derivatives(const CoefficientSet& coeffs, const Trajectory& ref,
                                                              const TimeGrid& grid) {
  const auto steps = static_cast<Eigen::Index>(grid.n_steps());
  const auto N = static_cast<Eigen::Index>(ref.x.n_paths);
  Eigen::MatrixXd ky(steps, N), kz(steps, N);
  for (Eigen::Index i = 0; i < steps; ++i) {
    const double t = grid.node(static_cast<std::size_t>(i));
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t p) {
      const Eigen::Index c = static_cast<Eigen::Index>(p);
      const auto ii = static_cast<std::size_t>(i);
      const Eigen::VectorXd x = ref.x.state(ii, p);
      const double y = ref.yz.y.at(ii, p), z = ref.yz.z(i, c), u = ref.u.at(ii, p);
      ky(i, c) = coeffs.k_y(t, x, y, z, u);
      kz(i, c) = coeffs.k_z(t, x, y, z, u);
    });
  }
  auto compress = [](Eigen::MatrixXd m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!(m.row(i).array() == m(i, 0)).all()) return StepProcess(std::move(m));
    }
    return StepProcess(Eigen::MatrixXd(m.col(0)));
  };
  return {compress(std::move(ky)), compress(std::move(kz))};
}

/// -dy^ = [k_y y^ + k_z z^ + bracket 1_E] dt - z^ dw, y^(T) = 0, by the explicit
/// linear representation. `features` (default: the reference state) feeds the regressions.
inline BsdePair solve_hat_bsde(const CoefficientSet& coeffs, const Trajectory& ref, const AdjointBundle& adj,
                               const SpikeSpec& spike, const BrownianEnsemble& bm, const RegressionEngine& engine = {},
                               const PathEnsemble* features = nullptr) {
  const StepProcess k0 = spike_bracket(coeffs, ref, adj, spike, bm);
  const auto [ky, kz] = utility_derivatives(coeffs, ref, bm.grid());
  const Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(bm.n_paths()));
  return solve_linear_bsde_explicit(k0, ky, kz, zero, features ? *features : ref.x, bm, engine);
}

/// E sum_i l_i bracket_i dt with l = stochastic_exponential(k_z, k_y) from 0.
inline Estimate duality_value(const CoefficientSet& coeffs, const Trajectory& ref, const AdjointBundle& adj,
                              const SpikeSpec& spike, const BrownianEnsemble& bm) {
  const StepProcess k0 = spike_bracket(coeffs, ref, adj, spike, bm);
  const auto [ky, kz] = utility_derivatives(coeffs, ref, bm.grid());
  const PathEnsemble lambda = stochastic_exponential(kz, ky, bm);
  const double dt = bm.grid().dt();
  Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(bm.n_paths()));
  for (std::size_t i = 0; i < bm.n_steps(); ++i) {
    s += (lambda.values[i].row(0).array() * k0.values.row(static_cast<Eigen::Index>(i)).array() * dt).matrix();
  }
  return mean_estimate(s);
}

/// Pieces of one spike: the hat pair, the assembled y^rho-expansion and the
/// utility difference, all regressed on the common features (x_bar, x^rho - x_bar).
struct HatComparison {
  BsdePair yhat;
  PathEnsemble yhat_rho;  // y^rho - y_bar - <p, x1 + x2> - <P x1, x1>/2
  Estimate duality;
  double yhat0_stderr = 0.0;
};

inline PathEnsemble stacked_features(const PathEnsemble& xbar, const PathEnsemble& xrho) {
  PathEnsemble f(xbar.grid, xbar.n_paths, xbar.dim + xrho.dim);
  for (std::size_t i = 0; i < xbar.n_nodes(); ++i) {
    f.values[i].topRows(xbar.dim) = xbar.values[i];
    f.values[i].bottomRows(xrho.dim) = xrho.values[i] - xbar.values[i];
  }
  return f;
}

inline HatComparison compare_hat(const ControlProblem& pb, const Trajectory& ref, const AdjointBundle& adj,
                                 const SpikeSpec& spike, const BrownianEnsemble& bm, const LsmcOptions& opt = {}) {
  const TimeGrid& grid = bm.grid();
  const std::size_t N = bm.n_paths();
  const VariationBundle var = solve_variational(pb.system, pb.coeffs, ref.x, ref.u, spike, bm);
  const PathEnsemble feat = stacked_features(ref.x, var.xrho);
  const ControlProcess urho = spike_control(ref.u, spike, grid, N);

  HatComparison out;
  out.yhat = solve_hat_bsde(pb.coeffs, ref, adj, spike, bm, opt.engine, &feat);
  const BsdePair yrho = solve_utility(pb.coeffs, var.xrho, urho, bm, opt, &feat);
  const BsdePair ybar = solve_utility(pb.coeffs, ref.x, ref.u, bm, opt, &feat);
  out.yhat_rho = PathEnsemble(grid, N, 1);
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
    for (std::size_t p = 0; p < N; ++p) {
      const Eigen::VectorXd x1 = var.x1.state(i, p);
      const double corr = adj.first.p.state(i, p).dot(x1 + var.x2.state(i, p)) + 0.5 * x1.dot(adj.P.at(i, p) * x1);
      out.yhat_rho.values[i](0, static_cast<Eigen::Index>(p)) = yrho.y.at(i, p) - ybar.y.at(i, p) - corr;
    }
  }
  out.duality = duality_value(pb.coeffs, ref, adj, spike, bm);
  // y^(0) is the sample mean of the same weighted sums (x(0) is fixed), so
  // its standard error is the duality stderr.
  out.yhat0_stderr = out.duality.std_error;
  return out;
}

struct HatOrders {
  OrderReport yhat;        // sup_t E|y^| = O(rho)
  OrderReport difference;  // sup_t E|y^rho - y^| = o(rho)
  std::vector<double> duality, yhat0, gap, gap_tolerance;
  bool duality_ok = true;

  bool passed() const { return yhat.passed && difference.passed && duality_ok; }
};

inline Estimate sup_mean_abs(const PathEnsemble& e) {
  Estimate best;
  for (const auto& node : e.values) {
    const Estimate m = mean_estimate(node.row(0).cwiseAbs());
    if (m.value > best.value) best = m;
  }
  return best;
}

/// rho sweep on one ensemble. The duality gap tolerance is
/// 3 (stderr_a + stderr_b) + gap_dt_constant dt.
inline HatOrders hat_order_sweep(const ControlProblem& pb, const Trajectory& ref, const AdjointBundle& adj, double t0,
                                 double v, const std::vector<double>& rho_list, const BrownianEnsemble& bm,
                                 const LsmcOptions& opt = {}, const OrderCriteria& crit = {},
                                 double gap_dt_constant = 1.0) {
  std::vector<double> ye, yse, de, dse;
  HatOrders out;
  for (double rho : rho_list) {
    const SpikeSpec spike{t0, rho, v, {}};
    const HatComparison h = compare_hat(pb, ref, adj, spike, bm, opt);
    const Estimate y = sup_mean_abs(h.yhat.y);
    PathEnsemble diff = h.yhat_rho;
    for (std::size_t i = 0; i < diff.n_nodes(); ++i) diff.values[i] -= h.yhat.y.values[i];
    const Estimate d = sup_mean_abs(diff);
    ye.push_back(y.value);
    yse.push_back(y.std_error);
    de.push_back(d.value);
    dse.push_back(d.std_error);
    const double y0 = h.yhat.y0();
    out.duality.push_back(h.duality.value);
    out.yhat0.push_back(y0);
    out.gap.push_back(std::abs(h.duality.value - y0));
    out.gap_tolerance.push_back(3.0 * (h.duality.std_error + h.yhat0_stderr) + gap_dt_constant * bm.grid().dt());
    out.duality_ok = out.duality_ok && out.gap.back() <= out.gap_tolerance.back();
  }
  out.yhat = evaluate_order("sup_t E|yhat|", rho_list, ye, yse, 1.0, OrderClaim::BigO, crit);
  out.difference = evaluate_order("sup_t E|yhat_rho - yhat|", rho_list, de, dse, 1.0, OrderClaim::LittleO, crit);
  return out;
}

}  // namespace seesmp
