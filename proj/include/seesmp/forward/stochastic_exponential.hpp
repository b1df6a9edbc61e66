#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/core/brownian.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/forward/flow.hpp"
#include "seesmp/forward/path_ensemble.hpp"

namespace seesmp {

/// lambda(t_i) = exp(sum_{j<i} [(mu2 - mu1^2/2) dt + mu1 dw_j]), exponentiated
/// exactly from the discrete sums. Returned as a scalar PathEnsemble.
/// Empty processes are treated as zero.
inline PathEnsemble stochastic_exponential(const StepProcess& mu1, const StepProcess& mu2,
                                           const BrownianEnsemble& bm) {
  const TimeGrid& grid = bm.grid();
  for (const StepProcess* m : {&mu1, &mu2}) {
    if (!m->empty() && m->n_steps() != grid.n_steps()) {
      throw InvalidArgument("stochastic_exponential: process does not match the grid");
    }
    if (!m->empty() && !m->values.allFinite()) throw InvalidArgument("stochastic_exponential: non-finite input");
  }
  const double dt = grid.dt();
  PathEnsemble out(grid, bm.n_paths(), 1);
  Eigen::RowVectorXd log_l = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(bm.n_paths()));
  out.values[0].setOnes();
  for (std::size_t i = 0; i < grid.n_steps(); ++i) {
    for (std::size_t p = 0; p < bm.n_paths(); ++p) {
      const double m1 = mu1.empty() ? 0.0 : mu1.at(i, p);
      const double m2 = mu2.empty() ? 0.0 : mu2.at(i, p);
      log_l(static_cast<Eigen::Index>(p)) += (m2 - 0.5 * m1 * m1) * dt + m1 * bm.dw(p, i);
    }
    out.values[i + 1].row(0) = log_l.array().exp().matrix();
    if (!out.values[i + 1].allFinite() || (out.values[i + 1].array() <= 0.0).any()) {
      throw NumericalError("stochastic exponential overflow", i + 1);
    }
  }
  return out;
}

/// Max over paths and nodes s >= t of
///   || L^{A~,B~}(t,s) - (lambda1(s)/lambda1(t)) L^{A,B}(t,s) || / (1 + ||L^{A,B}(t,s)||)
/// with A~ = A + mu1 B + mu2 I and B~ = B + mu1 I, for each anchor t.
inline double check_transform_identity(const GalerkinSystem& system, const StepProcess& mu1,
                                       const StepProcess& mu2, const BrownianEnsemble& bm,
                                       const std::vector<std::size_t>& anchors = {0}) {
  const LinearFlow base = LinearFlow::from_system(system, bm.grid());
  const LinearFlow tilde = base.shifted(mu1, mu2, mu1);
  const PathEnsemble lambda = stochastic_exponential(mu1, mu2, bm);
  double worst = 0.0;
  for (std::size_t anchor : anchors) {
    const auto L = fundamental_matrix(base, bm, anchor);
    const auto Lt = fundamental_matrix(tilde, bm, anchor);
    for (std::size_t s = anchor; s < bm.grid().n_nodes(); ++s) {
      for (std::size_t p = 0; p < bm.n_paths(); ++p) {
        const double ratio = lambda.at(s, p) / lambda.at(anchor, p);
        const Eigen::MatrixXd l = L.at(s, p);
        const double err = (Lt.at(s, p) - ratio * l).norm() / (1.0 + l.norm());
        worst = std::max(worst, err);
      }
    }
  }
  return worst;
}

}  // namespace seesmp
