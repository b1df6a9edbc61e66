#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "seesmp/core/errors.hpp"
#include "seesmp/forward/path_ensemble.hpp"

namespace seesmp {

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Mean and standard error of per-path samples.
inline Estimate mean_estimate(const Eigen::Ref<const Eigen::RowVectorXd>& samples) {
  const double n = static_cast<double>(samples.size());
  if (samples.size() == 0) throw InvalidArgument("mean_estimate: no samples");
  Estimate e;
  e.value = samples.mean();
  if (samples.size() > 1) {
    const double var = (samples.array() - e.value).square().sum() / (n - 1.0);
    e.std_error = std::sqrt(var / n);
  }
  return e;
}

/// Jackknife estimate of E[sup_t ||x(t)||^{2 alpha}]. For the sample mean
/// the leave-one-out jackknife reduces to the usual stderr, which is what is
/// computed here without forming the replicates.
inline Estimate moment_estimate(const PathEnsemble& paths, double alpha) {
  if (!(alpha >= 1.0)) throw InvalidArgument("moment_estimate: alpha must be at least 1");
  if (paths.n_paths == 0 || paths.values.empty()) throw InvalidArgument("moment_estimate: empty ensemble");
  Eigen::RowVectorXd sup = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(paths.n_paths));
  for (const auto& node : paths.values) {
    sup = sup.cwiseMax(node.colwise().squaredNorm());
  }
  // ||x||^{2 alpha} = (||x||^2)^alpha
  Eigen::RowVectorXd samples = sup.array().pow(alpha).matrix();
  Estimate e = mean_estimate(samples);
  if (samples.size() > 1 && (samples.array() == samples(0)).all()) e.std_error = 0.0;
  return e;
}

}  // namespace seesmp
