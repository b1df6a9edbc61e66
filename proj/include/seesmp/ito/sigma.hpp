#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/bsde/linear_explicit.hpp"
#include "seesmp/bsde/regression.hpp"
#include "seesmp/bsie/operator_process.hpp"
#include "seesmp/bsie/picard.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/galerkin_system.hpp"
#include "seesmp/core/order_report.hpp"
#include "seesmp/core/spike.hpp"
#include "seesmp/forward/flow.hpp"
#include "seesmp/forward/moments.hpp"
#include "seesmp/forward/path_ensemble.hpp"
#include "seesmp/forward/stochastic_exponential.hpp"

namespace seesmp {

/// Data of the weak Ito formula: x solves dx = A x dt + [B x + zeta 1_E] dw
/// with x(0) = 0, and P solves the beta-transformed equation with terminal xi
/// and driver f.
struct ItoInstance {
  GalerkinSystem system;
  TerminalMatrix xi;
  MatrixGenerator f;
  StepProcess beta;  // empty means zero
  Eigen::VectorXd zeta;
};

struct ItoResidualBundle {
  PathEnsemble sigma;  // scalar
  Eigen::MatrixXd Z;   // n_steps x n_paths
  double rho = 0.0;
  PathEnsemble x;
  PathEnsemble M;  // <P x, x> + sigma, the conditional-expectation side
  Eigen::MatrixXd drift;  // k0 + beta Z per step and path
  std::vector<double> M_std_error;  // mean robust regression stderr of M per node
};

namespace detail {

inline double quad(const Eigen::MatrixXd& M, const Eigen::VectorXd& x) { return x.dot(M * x); }

inline StepProcess beta_or_zero(const StepProcess& beta, std::size_t steps) {
  return beta.empty() ? StepProcess::constant(steps, 0.0) : beta;
}

}  // namespace detail

/// P for the formula: the equation with A + (beta/2) B - (beta^2/8) I and
/// B + (beta/2) I, solved by Picard iteration.
inline OperatorProcess solve_ito_adjoint(const ItoInstance& inst, const BrownianEnsemble& bm,
                                         const PicardOptions& opt = {}) {
  return bsie_picard(inst.system, inst.xi, inst.f, detail::beta_or_zero(inst.beta, bm.n_steps()), bm, opt, nullptr,
                     BetaConvention::kItoWeighted);
}

/// State of the spiked-diffusion equation with zero initial value.
inline PathEnsemble spiked_state(const GalerkinSystem& system, const Eigen::VectorXd& zeta, const SpikeWindow& w,
                                 const BrownianEnsemble& bm) {
  const LinearFlow flow = LinearFlow::from_system(system, bm.grid());
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(system.dim);
  if (w.count == 0 || zeta.isZero(0.0)) return flow.solve(bm, x0);
  return flow.solve(bm, x0, [&](std::size_t i, const Eigen::MatrixXd&, Eigen::MatrixXd&, Eigen::MatrixXd& G) {
    if (w.contains(i)) G.colwise() += zeta;
  });
}

/// sigma(t_i) = E_i[(l_N/l_i) <xi x_N, x_N> + sum_{j>=i} (l_j/l_i)(<f(P_j) x_j, x_j> - <P_j zeta, zeta> 1_E) dt]
///              - <P_i x_i, x_i>,   l = exp(int -beta^2/2 ds + beta dw).
/// The conditional expectation is the linear BSDE with k0 as above, k_y = 0
/// and k_z = beta; its martingale integrand is Z.
inline ItoResidualBundle compute_sigma(const OperatorProcess& P, const ItoInstance& inst, const SpikeSpec& spike,
                                       const BrownianEnsemble& bm, const RegressionEngine& engine = {}) {
  const TimeGrid& grid = bm.grid();
  const int n = inst.system.dim;
  if (!(P.grid == grid) || P.dim != n) throw InvalidArgument("compute_sigma: P does not match the system and grid");
  if (inst.zeta.size() != n) throw InvalidArgument("compute_sigma: zeta has the wrong dimension");
  if (!P.deterministic() && P.n_paths != bm.n_paths()) throw InvalidArgument("compute_sigma: P has the wrong path count");
  const SpikeWindow w = spike_window(spike, grid);
  const std::size_t N = bm.n_paths();
  const std::size_t steps = grid.n_steps();

  ItoResidualBundle out;
  out.rho = spike.rho;
  out.x = spiked_state(inst.system, inst.zeta, w, bm);
  const PathEnsemble& x = out.x;

  Eigen::MatrixXd k0 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(N));
  parallel_for(N, [&](std::size_t p) {
    for (std::size_t i = 0; i < steps; ++i) {
      const Eigen::MatrixXd Pi = P.at(i, p);
      const Eigen::VectorXd xi = x.state(i, p);
      double v = detail::quad(inst.f(i, p, Pi), xi);
      if (w.contains(i)) v -= detail::quad(Pi, inst.zeta);
      k0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = v;
    }
  });
  Eigen::RowVectorXd terminal(static_cast<Eigen::Index>(N));
  for (std::size_t p = 0; p < N; ++p) {
    terminal(static_cast<Eigen::Index>(p)) = detail::quad(inst.xi.at(p), x.state(steps, p));
  }
  const StepProcess beta = detail::beta_or_zero(inst.beta, steps);
  const BsdePair yz = solve_linear_bsde_explicit(StepProcess(k0), StepProcess(), beta, terminal, x, bm, engine);

  out.M = yz.y;
  out.Z = yz.z;
  out.sigma = PathEnsemble(grid, N, 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    for (std::size_t p = 0; p < N; ++p) {
      out.sigma.values[i](0, static_cast<Eigen::Index>(p)) =
          yz.y.at(i, p) - detail::quad(P.at(i, p), x.state(i, p));
    }
  }
  // Regression standard errors of M, from the same targets the solver used.
  out.M_std_error.assign(grid.n_nodes(), 0.0);
  {
    const PathEnsemble lambda = stochastic_exponential(beta, StepProcess(), bm);
    Eigen::RowVectorXd acc = lambda.values[steps].row(0).cwiseProduct(terminal);
    for (std::size_t i = steps; i-- > 0;) {
      const Eigen::RowVectorXd l = lambda.values[i].row(0);
      acc += (l.array() * k0.row(static_cast<Eigen::Index>(i)).array() * grid.dt()).matrix();
      const Projection proj(engine, x.node(i));
      out.M_std_error[i] = proj.prediction_stderr(acc.cwiseQuotient(l)).mean();
    }
  }
  out.drift = k0;
  for (std::size_t i = 0; i < steps; ++i) {
    for (std::size_t p = 0; p < N; ++p) {
      out.drift(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) +=
          beta.at(i, p) * out.Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p));
    }
  }
  return out;
}

/// sup_t E|sigma(t)|, with the standard error at the maximizing node.
inline Estimate sigma_sup_mean(const ItoResidualBundle& b) {
  Estimate best;
  for (const auto& node : b.sigma.values) {
    const Estimate e = mean_estimate(node.row(0).cwiseAbs());
    if (e.value > best.value) best = e;
  }
  return best;
}

/// E[(sum Z^2 dt)^{alpha/2}].
inline Estimate z_moment(const ItoResidualBundle& b, double alpha = 1.0) {
  const double dt = b.sigma.grid.dt();
  const Eigen::RowVectorXd s = (b.Z.array().square().colwise().sum() * dt).pow(0.5 * alpha).matrix();
  return mean_estimate(s);
}

struct IdentityCheck {
  double max_error = 0.0;  // max over nodes of E|M_rec - M|
  double std_error = 0.0;  // at the node with the largest error
  double worst_excess = 0.0;  // max over nodes of error / (5 (dt + stderr))
  bool passed = false;
};

/// Rebuilds M backwards from <xi x_N, x_N> with the drift k0 + beta Z and the
/// extracted Z: M_i = E_i[M_{i+1}] + drift_i dt, and compares with M.
inline IdentityCheck check_ito_identity(const ItoResidualBundle& b, const RegressionEngine& engine = {}) {
  const std::size_t steps = b.sigma.grid.n_steps();
  const double dt = b.sigma.grid.dt();
  Eigen::RowVectorXd rec = b.M.values[steps].row(0);
  IdentityCheck c;
  for (std::size_t i = steps; i-- > 0;) {
    const Projection proj(engine, b.x.node(i));
    rec = proj.apply_row(rec) + dt * b.drift.row(static_cast<Eigen::Index>(i));
    const Estimate e = mean_estimate((rec - b.M.values[i].row(0)).cwiseAbs());
    const double se = std::hypot(e.std_error, b.M_std_error.empty() ? 0.0 : b.M_std_error[i]);
    if (e.value > c.max_error) {
      c.max_error = e.value;
      c.std_error = se;
    }
    c.worst_excess = std::max(c.worst_excess, e.value / (5.0 * (dt + se)));
  }
  c.passed = c.worst_excess <= 1.0;
  return c;
}

struct ItoOrderSweep {
  OrderReport sigma;  // o(rho)
  OrderReport z;      // O(rho)
  std::vector<IdentityCheck> identity;
  bool monotone = true;  // sup E|sigma| never grows by more than 5 stderr when rho halves
};

/// rho sweep at fixed t0 on one ensemble; P is shared by every member.
inline ItoOrderSweep ito_order_sweep(const ItoInstance& inst, const OperatorProcess& P, double t0,
                                     const std::vector<double>& rho_list, const BrownianEnsemble& bm,
                                     const RegressionEngine& engine = {}, const OrderCriteria& crit = {}) {
  std::vector<double> se, se_se, ze, ze_se;
  ItoOrderSweep out;
  for (double rho : rho_list) {
    const ItoResidualBundle b = compute_sigma(P, inst, SpikeSpec{t0, rho, 0.0, {}}, bm, engine);
    const Estimate s = sigma_sup_mean(b);
    const Estimate z = z_moment(b, 1.0);
    if (!se.empty() && s.value > se.back() + 5.0 * (s.std_error + se_se.back())) out.monotone = false;
    se.push_back(s.value);
    se_se.push_back(s.std_error);
    ze.push_back(z.value);
    ze_se.push_back(z.std_error);
    out.identity.push_back(check_ito_identity(b, engine));
  }
  out.sigma = evaluate_order("sup_t E|sigma|", rho_list, se, se_se, 1.0, OrderClaim::LittleO, crit);
  out.z = evaluate_order("E[(int Z^2)^(1/2)]", rho_list, ze, ze_se, 1.0, OrderClaim::BigO, crit);
  return out;
}

}  // namespace seesmp
