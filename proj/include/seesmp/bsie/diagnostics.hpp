#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/bsie/operator_process.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/core/errors.hpp"

namespace seesmp {

/// Ratios of the a priori bound ||P(t)||^2 <= C E[||xi||^2 + int_t^T ||f(s,0)||^2 ds].
/// Both sides are averaged over paths; ratio 0 is reported where both vanish.
struct AprioriReport {
  std::vector<double> ratio;
  double max_ratio = 0.0;
  bool finite = true;
};

inline AprioriReport apriori_diagnostics(const OperatorProcess& P, const TerminalMatrix& xi, const MatrixGenerator& f,
                                         const BrownianEnsemble& bm) {
  const TimeGrid& grid = P.grid;
  const int n = P.dim;
  const std::size_t N = bm.n_paths();
  const double dt = grid.dt();
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(n, n);
  double xi_sq = 0.0;
  for (std::size_t p = 0; p < (xi.random() ? N : 1); ++p) xi_sq += xi.at(p).squaredNorm();
  xi_sq /= static_cast<double>(xi.random() ? N : 1);
  // Tail integrals of E||f(s, 0)||^2.
  std::vector<double> tail(grid.n_nodes(), 0.0);
  const std::size_t fp = f.path_dependent ? N : 1;
  for (std::size_t i = grid.n_steps(); i-- > 0;) {
    double s = 0.0;
    if (!f.empty()) {
      for (std::size_t p = 0; p < fp; ++p) s += f(i, p, zero).squaredNorm();
      s /= static_cast<double>(fp);
    }
    tail[i] = tail[i + 1] + s * dt;
  }
  AprioriReport r;
  r.ratio.resize(grid.n_nodes());
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
    double num = 0.0;
    for (std::size_t p = 0; p < P.n_paths; ++p) num += P.at(i, p).squaredNorm();
    num /= static_cast<double>(P.n_paths);
    const double den = xi_sq + tail[i];
    r.ratio[i] = num == 0.0 ? 0.0 : (den > 0.0 ? num / den : std::numeric_limits<double>::infinity());
    r.finite = r.finite && std::isfinite(r.ratio[i]);
    r.max_ratio = std::max(r.max_ratio, r.ratio[i]);
  }
  return r;
}

/// Empirical Lipschitz constant of the solution map: max_t E||P1 - P2||^2 over
/// E[||xi1 - xi2||^2 + int ||f1(s,P2) - f2(s,P2)||^2 ds].
inline double stability_ratio(const OperatorProcess& P1, const OperatorProcess& P2, const TerminalMatrix& xi1,
                              const TerminalMatrix& xi2, const MatrixGenerator& f1, const MatrixGenerator& f2,
                              const BrownianEnsemble& bm) {
  if (!(P1.grid == P2.grid) || P1.dim != P2.dim || P1.n_paths != P2.n_paths) {
    throw InvalidArgument("stability_ratio: operator processes have different shapes");
  }
  const TimeGrid& grid = P1.grid;
  const std::size_t N = bm.n_paths();
  const bool random = xi1.random() || xi2.random();
  double den = 0.0;
  for (std::size_t p = 0; p < (random ? N : 1); ++p) den += (xi1.at(p) - xi2.at(p)).squaredNorm();
  den /= static_cast<double>(random ? N : 1);
  if (!f1.empty() || !f2.empty()) {
    for (std::size_t i = 0; i < grid.n_steps(); ++i) {
      double s = 0.0;
      for (std::size_t p = 0; p < P2.n_paths; ++p) {
        const Eigen::MatrixXd Pp = P2.at(i, p);
        s += (f1(i, p, Pp) - f2(i, p, Pp)).squaredNorm();
      }
      den += s / static_cast<double>(P2.n_paths) * grid.dt();
    }
  }
  double num = 0.0;
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
    double s = 0.0;
    for (std::size_t p = 0; p < P1.n_paths; ++p) s += (P1.at(i, p) - P2.at(i, p)).squaredNorm();
    num = std::max(num, s / static_cast<double>(P1.n_paths));
  }
  if (num == 0.0) return 0.0;
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

/// Time-continuity moduli max_paths |<P(t_{i+1}) u, v> - <P(t_i) u, v>| per step.
struct ContinuityTable {
  double dt = 0.0;
  std::vector<double> modulus;
  double max_modulus = 0.0;
};

inline ContinuityTable continuity_probe(const OperatorProcess& P, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != P.dim || v.size() != P.dim) throw InvalidArgument("continuity_probe: probe vectors have the wrong size");
  ContinuityTable t;
  t.dt = P.grid.dt();
  t.modulus.resize(P.grid.n_steps());
  for (std::size_t i = 0; i < P.grid.n_steps(); ++i) {
    double m = 0.0;
    for (std::size_t p = 0; p < P.n_paths; ++p) {
      m = std::max(m, std::abs(v.dot((P.at(i + 1, p) - P.at(i, p)) * u)));
    }
    t.modulus[i] = m;
    t.max_modulus = std::max(t.max_modulus, m);
  }
  return t;
}

}  // namespace seesmp
