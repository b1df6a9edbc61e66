#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/core/brownian.hpp"
#include "seesmp/core/coefficients.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/galerkin_system.hpp"
#include "seesmp/core/order_report.hpp"
#include "seesmp/core/parallel.hpp"
#include "seesmp/core/spike.hpp"
#include "seesmp/forward/flow.hpp"
#include "seesmp/forward/moments.hpp"
#include "seesmp/forward/path_ensemble.hpp"
#include "seesmp/forward/see_solver.hpp"
#include "seesmp/smp/spike_control.hpp"

namespace seesmp {

struct VariationBundle {
  PathEnsemble x1;
  PathEnsemble x2;
  PathEnsemble xrho;
  PathEnsemble remainder;  // xrho - xbar - x1 - x2
};

namespace detail {

// [x' H_k x]_k for a list of component Hessians.
inline Eigen::VectorXd hessian_form(const std::vector<Eigen::MatrixXd>& H, const Eigen::VectorXd& x) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(H.size()));
  for (std::size_t k = 0; k < H.size(); ++k) out(static_cast<Eigen::Index>(k)) = x.dot(H[k] * x);
  return out;
}

// Linearized flow along (xbar, ubar): A + a_x, B + b_x.
inline LinearFlow linearized_flow(const GalerkinSystem& system, const CoefficientSet& coeffs, const PathEnsemble& xbar,
                                  const ControlProcess& ubar) {
  const TimeGrid grid = xbar.grid;
  return LinearFlow::from_system(system, grid)
      .with_path_terms([&coeffs, &xbar, &ubar, grid](std::size_t i, std::size_t p, Eigen::MatrixXd& D,
                                                      Eigen::MatrixXd& G) {
        const double t = grid.node(i);
        const Eigen::VectorXd x = xbar.state(i, p);
        const double u = ubar.at(i, p);
        D += coeffs.a_x(t, x, u);
        G += coeffs.b_x(t, x, u);
      });
}

}  // namespace detail

/// First- and second-order variational equations of the spike perturbation
/// along (xbar, ubar), the perturbed state and the remainder.
///   dx1 = A_bar x1 dt + [B_bar x1 + db 1_E] dw
///   dx2 = [A_bar x2 + a_xx(x1,x1)/2 + da 1_E] dt + [B_bar x2 + b_xx(x1,x1)/2 + db_x x1 1_E] dw
inline VariationBundle solve_variational(const GalerkinSystem& system, const CoefficientSet& coeffs,
                                         const PathEnsemble& xbar, const ControlProcess& ubar, const SpikeSpec& spike,
                                         const BrownianEnsemble& bm) {
  coeffs.require_complete();
  const TimeGrid& grid = bm.grid();
  const std::size_t N = bm.n_paths();
  const int n = system.dim;
  if (!(xbar.grid == grid) || xbar.n_paths != N || xbar.dim != n) {
    throw InvalidArgument("solve_variational: reference state does not match the ensemble");
  }
  const SpikeWindow w = spike_window(spike, grid);
  const LinearFlow flow = detail::linearized_flow(system, coeffs, xbar, ubar);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);

  VariationBundle out;
  out.x1 = flow.solve(bm, zero, [&](std::size_t i, const Eigen::MatrixXd&, Eigen::MatrixXd&, Eigen::MatrixXd& G) {
    if (!w.contains(i)) return;
    const double t = grid.node(i);
    parallel_for(N, [&](std::size_t p) {
      const Eigen::VectorXd x = xbar.state(i, p);
      G.col(static_cast<Eigen::Index>(p)) += coeffs.b(t, x, spike.value(i, p)) - coeffs.b(t, x, ubar.at(i, p));
    });
  });
  const PathEnsemble& x1 = out.x1;
  out.x2 = flow.solve(bm, zero, [&](std::size_t i, const Eigen::MatrixXd&, Eigen::MatrixXd& F, Eigen::MatrixXd& G) {
    const double t = grid.node(i);
    const bool on = w.contains(i);
    parallel_for(N, [&](std::size_t p) {
      const Eigen::Index c = static_cast<Eigen::Index>(p);
      const Eigen::VectorXd x = xbar.state(i, p);
      const Eigen::VectorXd y = x1.state(i, p);
      const double u = ubar.at(i, p);
      if (!y.isZero(0.0)) {
        F.col(c) += 0.5 * detail::hessian_form(coeffs.a_xx(t, x, u), y);
        G.col(c) += 0.5 * detail::hessian_form(coeffs.b_xx(t, x, u), y);
      }
      if (on) {
        const double v = spike.value(i, p);
        F.col(c) += coeffs.a(t, x, v) - coeffs.a(t, x, u);
        G.col(c) += (coeffs.b_x(t, x, v) - coeffs.b_x(t, x, u)) * y;
      }
    });
  });
  const ControlProcess urho = spike_control(ubar, spike, grid, N);
  out.xrho = solve_see(system, coeffs, urho, bm, xbar.state(0, 0));
  out.remainder = out.xrho - xbar - out.x1 - out.x2;
  return out;
}

/// Order reports of a common-random-number rho sweep, one entry per alpha:
/// E sup|x1|^{2a} = O(rho^a), E sup|x2|^{2a} = O(rho^{2a}),
/// E sup|xrho - xbar|^{2a} = O(rho^a); the remainder report is the second
/// moment against o(rho^2) and is the same for every alpha.
struct VariationOrders {
  std::vector<double> alpha;
  std::vector<OrderReport> x1, x2, xrho, remainder;

  bool passed() const {
    for (const auto* v : {&x1, &x2, &xrho, &remainder}) {
      for (const auto& r : *v) {
        if (!r.passed) return false;
      }
    }
    return true;
  }
};

inline VariationOrders verify_variation_orders(const GalerkinSystem& system, const CoefficientSet& coeffs,
                                               const PathEnsemble& xbar, const ControlProcess& ubar, double t0,
                                               double v, const std::vector<double>& rho_list,
                                               const std::vector<double>& alpha_list, const BrownianEnsemble& bm,
                                               const OrderCriteria& crit = {}) {
  if (alpha_list.empty()) throw InvalidArgument("verify_variation_orders: no alpha values");
  const std::size_t m = alpha_list.size();
  std::vector<std::vector<double>> e1(m), s1(m), e2(m), s2(m), ed(m), sd(m);
  std::vector<double> er, sr;
  for (double rho : rho_list) {
    const VariationBundle b = solve_variational(system, coeffs, xbar, ubar, SpikeSpec{t0, rho, v, {}}, bm);
    const PathEnsemble d = b.xrho - xbar;
    for (std::size_t k = 0; k < m; ++k) {
      const double a = alpha_list[k];
      const Estimate m1 = moment_estimate(b.x1, a), m2 = moment_estimate(b.x2, a), md = moment_estimate(d, a);
      e1[k].push_back(m1.value);
      s1[k].push_back(m1.std_error);
      e2[k].push_back(m2.value);
      s2[k].push_back(m2.std_error);
      ed[k].push_back(md.value);
      sd[k].push_back(md.std_error);
    }
    const Estimate mr = moment_estimate(b.remainder, 1.0);
    er.push_back(mr.value);
    sr.push_back(mr.std_error);
  }
  VariationOrders out;
  out.alpha = alpha_list;
  const OrderReport rem = evaluate_order("E sup|remainder|^2", rho_list, er, sr, 2.0, OrderClaim::LittleO, crit);
  for (std::size_t k = 0; k < m; ++k) {
    const double a = alpha_list[k];
    const std::string tag = "^(2*" + std::to_string(a).substr(0, 4) + ")";
    out.x1.push_back(evaluate_order("E sup|x1|" + tag, rho_list, e1[k], s1[k], a, OrderClaim::BigO, crit));
    out.x2.push_back(evaluate_order("E sup|x2|" + tag, rho_list, e2[k], s2[k], 2.0 * a, OrderClaim::BigO, crit));
    out.xrho.push_back(evaluate_order("E sup|xrho-xbar|" + tag, rho_list, ed[k], sd[k], a, OrderClaim::BigO, crit));
    out.remainder.push_back(rem);
  }
  return out;
}

}  // namespace seesmp
