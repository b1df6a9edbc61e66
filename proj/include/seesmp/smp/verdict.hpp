#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/core/brownian.hpp"
#include "seesmp/core/coefficients.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/smp/hamiltonian.hpp"
#include "seesmp/smp/reference.hpp"

namespace seesmp {

struct VerdictOptions {
  double q_fail = 0.02;       // admissible fraction of failing (node, path) samples
  double tol_factor = 5.0;    // tol = tol_factor * stderr of the expression
  double tol_floor = 0.0;     // absolute floor added to every tolerance
  std::size_t max_paths = 200;  // Monte Carlo subsample: the first paths of the ensemble
  bool include_candidate = true;  // also evaluate v = u_bar(t) when it is off the lattice
};

struct VerdictRow {
  std::size_t t_index = 0;
  std::size_t path_index = 0;
  std::size_t control_index = 0;  // lattice index; lattice size stands for v = u_bar(t)
  double value = 0.0;
};

struct SmpVerdict {
  std::vector<VerdictRow> rows;
  std::vector<double> sample_min;        // min over v per (node, path), node-major
  std::vector<double> sample_tolerance;  // per (node, path)
  std::size_t n_nodes = 0, n_paths = 0;
  std::size_t min_violations = 0;     // samples with min < -tol
  std::size_t argmin_violations = 0;  // samples where the expression at u_bar exceeds min + tol
  double pass_fraction = 0.0;
  double worst_violation = 0.0;  // most negative (min + tol); 0 if none
  std::size_t worst_t = 0, worst_path = 0;
  bool min_ok = false, argmin_ok = false, passed = false;
};

namespace detail {

// Stderr of the expression by propagating per-coordinate stderr of p, q and
// (entrywise) P through one-sided differences.
inline double expression_stderr(double t, const Eigen::VectorXd& x, double y, double z, double ubar, double v,
                                const Eigen::VectorXd& p, const Eigen::VectorXd& q, const Eigen::MatrixXd& P,
                                const Eigen::VectorXd& p_se, const Eigen::VectorXd& q_se, const Eigen::MatrixXd& P_se,
                                const CoefficientSet& coeffs, double base) {
  double var = 0.0;
  for (Eigen::Index r = 0; r < p.size(); ++r) {
    if (p_se(r) > 0.0) {
      Eigen::VectorXd pp = p;
      pp(r) += p_se(r);
      const double d = verdict_expression(t, x, y, z, ubar, v, pp, q, P, coeffs) - base;
      var += d * d;
    }
    if (q_se(r) > 0.0) {
      Eigen::VectorXd qq = q;
      qq(r) += q_se(r);
      const double d = verdict_expression(t, x, y, z, ubar, v, p, qq, P, coeffs) - base;
      var += d * d;
    }
  }
  if (P_se.size() != 0) {
    const Eigen::VectorXd db = (coeffs.b(t, x, v) - coeffs.b(t, x, ubar)).cwiseAbs();
    const double d = 0.5 * db.dot(P_se * db);
    var += d * d;
  }
  return std::sqrt(var);
}

}  // namespace detail

/// Evaluates H(v) - H(u_bar) + <P db, db>/2 over the control lattice at every
/// step node and the first max_paths paths, along the candidate's reference
/// and adjoints. A sample fails (i) when its lattice minimum is below -tol
/// and (ii) when the value at u_bar is not within tol of that minimum.
inline SmpVerdict smp_verdict(const CoefficientSet& coeffs, const Trajectory& ref, const AdjointBundle& adj,
                              const ControlSet& lattice, const BrownianEnsemble& bm, const VerdictOptions& opt = {}) {
  if (lattice.empty()) throw InvalidArgument("smp_verdict: empty control lattice");
  if (!(opt.q_fail >= 0.0 && opt.q_fail < 1.0)) throw InvalidArgument("smp_verdict: q_fail must lie in [0, 1)");
  const TimeGrid& grid = bm.grid();
  const std::size_t steps = grid.n_steps();
  const std::size_t K = std::min(opt.max_paths, bm.n_paths());
  if (K == 0) throw InvalidArgument("smp_verdict: no paths");
  const std::size_t L = lattice.size();

  SmpVerdict out;
  out.n_nodes = steps;
  out.n_paths = K;
  out.sample_min.assign(steps * K, 0.0);
  out.sample_tolerance.assign(steps * K, 0.0);
  std::vector<std::vector<VerdictRow>> per_node(steps);
  std::vector<std::size_t> min_bad(steps, 0), argmin_bad(steps, 0);
  parallel_for(steps, [&](std::size_t i) {
    const double t = grid.node(i);
    const Eigen::MatrixXd P_se = adj.P.deterministic() && !adj.P.std_error.empty() ? adj.P.std_error[i] : Eigen::MatrixXd();
    const Eigen::VectorXd& p_se = adj.first.p_std_error[i];
    const Eigen::VectorXd& q_se = adj.first.q_std_error[i];
    for (std::size_t path = 0; path < K; ++path) {
      const Eigen::Index c = static_cast<Eigen::Index>(path);
      const Eigen::VectorXd x = ref.x.state(i, path);
      const double y = ref.yz.y.at(i, path), z = ref.yz.z(static_cast<Eigen::Index>(i), c), u = ref.u.at(i, path);
      const Eigen::VectorXd p = adj.first.p.state(i, path);
      const Eigen::VectorXd q = adj.first.q[i].col(c);
      const Eigen::MatrixXd P = adj.P.at(i, path);
      double lo = std::numeric_limits<double>::infinity();
      double se = 0.0;
      double at_u = 0.0;
      bool u_on_lattice = false;
      auto visit = [&](std::size_t idx, double v) {
        const double e = verdict_expression(t, x, y, z, u, v, p, q, P, coeffs);
        se = std::max(se, detail::expression_stderr(t, x, y, z, u, v, p, q, P, p_se, q_se, P_se, coeffs, e));
        per_node[i].push_back(VerdictRow{i, path, idx, e});
        lo = std::min(lo, e);
        if (v == u) {
          u_on_lattice = true;
          at_u = e;
        }
      };
      for (std::size_t l = 0; l < L; ++l) visit(l, lattice.points[l]);
      if (!u_on_lattice && opt.include_candidate) visit(L, u);
      const double tol = opt.tol_factor * se + opt.tol_floor;
      out.sample_min[i * K + path] = lo;
      out.sample_tolerance[i * K + path] = tol;
      if (lo < -tol) ++min_bad[i];
      if (at_u > lo + tol) ++argmin_bad[i];
    }
  });
  std::size_t total = 0;
  for (auto& r : per_node) total += r.size();
  out.rows.reserve(total);
  for (std::size_t i = 0; i < steps; ++i) {
    out.rows.insert(out.rows.end(), per_node[i].begin(), per_node[i].end());
    out.min_violations += min_bad[i];
    out.argmin_violations += argmin_bad[i];
  }
  for (std::size_t s = 0; s < out.sample_min.size(); ++s) {
    const double excess = out.sample_min[s] + out.sample_tolerance[s];
    if (excess < out.worst_violation) {
      out.worst_violation = excess;
      out.worst_t = s / K;
      out.worst_path = s % K;
    }
  }
  const double n = static_cast<double>(out.sample_min.size());
  out.pass_fraction = 1.0 - static_cast<double>(out.min_violations) / n;
  out.min_ok = out.pass_fraction >= 1.0 - opt.q_fail;
  out.argmin_ok = 1.0 - static_cast<double>(out.argmin_violations) / n >= 1.0 - opt.q_fail;
  out.passed = out.min_ok && out.argmin_ok;
  return out;
}

}  // namespace seesmp
