#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "seesmp/bsde/adjoint.hpp"
#include "seesmp/bsde/lsmc.hpp"
#include "seesmp/bsie/operator_process.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/forward/see_solver.hpp"
#include "seesmp/smp/instances.hpp"
#include "seesmp/smp/second_order.hpp"

namespace seesmp {

struct AdjointBundle {
  AdjointFirstOrder first;
  OperatorProcess P;
};

/// k along a given state/control pair, ignoring the regression features the
/// solver passes in (which may be a stacked or transformed state).
inline Generator utility_generator_on(const CoefficientSet& coeffs, const PathEnsemble& x, const ControlProcess& u) {
  if (!coeffs.k) throw ConfigurationError("utility_generator_on: k is required");
  return [&coeffs, &x, u](std::size_t i, std::size_t p, double t, const Eigen::VectorXd&, double y, double z) {
    return coeffs.k(t, x.state(i, p), y, z, u.at(i, p));
  };
}

/// Terminal utility h(x_T) per path.
inline Eigen::RowVectorXd terminal_utility(const CoefficientSet& coeffs, const PathEnsemble& x) {
  const std::size_t last = x.n_nodes() - 1;
  Eigen::RowVectorXd out(static_cast<Eigen::Index>(x.n_paths));
  for (std::size_t p = 0; p < x.n_paths; ++p) out(static_cast<Eigen::Index>(p)) = coeffs.h(x.state(last, p));
  return out;
}

/// Utility pair along (x, u); `features` defaults to x.
inline BsdePair solve_utility(const CoefficientSet& coeffs, const PathEnsemble& x, const ControlProcess& u,
                              const BrownianEnsemble& bm, const LsmcOptions& opt = {},
                              const PathEnsemble* features = nullptr) {
  return solve_bsde_lsmc(terminal_utility(coeffs, x), utility_generator_on(coeffs, x, u), features ? *features : x, bm,
                         opt);
}

/// Open-loop reference: state and utility for a given control.
inline Trajectory make_reference(const ControlProblem& pb, const ControlProcess& u, const BrownianEnsemble& bm,
                                 const LsmcOptions& opt = {}) {
  Trajectory t;
  t.x = solve_see(pb.system, pb.coeffs, u, bm, pb.x0);
  t.u = u;
  t.yz = solve_utility(pb.coeffs, t.x, t.u, bm, opt);
  return t;
}

/// Closed-loop reference with the realized control.
inline Trajectory make_feedback_reference(const ControlProblem& pb, const FeedbackLaw& law, const BrownianEnsemble& bm,
                                          const LsmcOptions& opt = {}) {
  Trajectory t;
  auto [x, u] = solve_see_feedback(pb.system, pb.coeffs, law, bm, pb.x0);
  t.x = std::move(x);
  t.u = std::move(u);
  t.yz = solve_utility(pb.coeffs, t.x, t.u, bm, opt);
  return t;
}

inline AdjointBundle compute_adjoints(const ControlProblem& pb, const Trajectory& ref, const BrownianEnsemble& bm,
                                      const RegressionEngine& engine = {}, const SecondOrderOptions& opt = {}) {
  AdjointBundle a;
  a.first = solve_first_order_adjoint(pb.system, pb.coeffs, ref, bm, engine);
  a.P = solve_second_order_adjoint(pb.system, pb.coeffs, ref, a.first, bm, opt);
  return a;
}

}  // namespace seesmp
