#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/core/brownian.hpp"
#include "seesmp/core/coefficients.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/galerkin_system.hpp"

namespace seesmp {

struct AssumptionCheck {
  std::string name;
  bool passed = true;
  // Largest violation found (positive means violated); for gradient checks
  // the largest relative mismatch.
  double worst_value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd worst_probe;
  double worst_t = 0.0;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.passed; });
  }

  const AssumptionCheck& get(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return c;
    }
    throw InvalidArgument("AssumptionReport: no check named " + name);
  }
};

struct AssumptionOptions {
  double horizon = 1.0;
  double gradient_rtol = 1e-4;
  std::uint64_t seed = 0x5eed;
  bool check_coefficients = true;
};

namespace detail {

inline Eigen::VectorXd probe_vector(int n, std::uint64_t seed, std::uint64_t index) {
  Eigen::VectorXd v(n);
  for (int j = 0; j < n; ++j) v(j) = rng::standard_normal(seed, index, static_cast<std::uint64_t>(j));
  return v;
}

inline void record(AssumptionCheck& c, double violation, const Eigen::VectorXd& probe, double t, double slack) {
  if (violation > c.worst_value) {
    c.worst_value = violation;
    c.worst_probe = probe;
    c.worst_t = t;
  }
  if (violation > slack) c.passed = false;
}

inline double rel_mismatch(double approx, double exact) {
  return std::abs(approx - exact) / std::max(1.0, std::abs(exact));
}

inline double rel_mismatch(const Eigen::MatrixXd& approx, const Eigen::MatrixXd& exact) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < exact.size(); ++i) m = std::max(m, rel_mismatch(approx(i), exact(i)));
  return m;
}

inline double fd_step(double x) { return 1e-5 * std::max(1.0, std::abs(x)); }

}  // namespace detail

/// Probe-based check of coercivity and quasi-skew-symmetry of (A, B), and of
/// the supplied derivative callbacks plus derivative bounds of the nonlinear
/// data. Probes are the canonical basis followed by n_probes Gaussian vectors
/// with a fixed counter-based stream, so a longer probe list extends a shorter one.
inline AssumptionReport validate_assumptions(const GalerkinSystem& system, const CoefficientSet& coeffs,
                                             std::size_t n_probes, const AssumptionOptions& opt = {}) {
  system.require();
  const int n = system.dim;
  AssumptionReport report;
  AssumptionCheck coercive;
  coercive.name = "coercivity";
  AssumptionCheck skew;
  skew.name = "quasi_skew_symmetry";

  std::vector<Eigen::VectorXd> probes;
  for (int j = 0; j < n; ++j) probes.push_back(Eigen::VectorXd::Unit(n, j));
  for (std::size_t k = 0; k < n_probes; ++k) probes.push_back(detail::probe_vector(n, opt.seed, k));
  const double times[] = {0.0, 0.5 * opt.horizon, opt.horizon};
  const double slack = 1e-12;

  for (double t : times) {
    const Eigen::MatrixXd A = system.A_at(t);
    const Eigen::MatrixXd B = system.B_at(t);
    for (const auto& u : probes) {
      const double uu = u.squaredNorm();
      const double scale = std::max(1.0, std::abs(u.dot(A * u)) + (B * u).squaredNorm() + uu);
      const double lhs = 2.0 * u.dot(A * u) + (B * u).squaredNorm();
      const double rhs = -system.delta * system.v_norm_sq(u) + system.K * uu;
      detail::record(coercive, (lhs - rhs) / scale, u, t, slack);
      detail::record(skew, (std::abs(u.dot(B * u)) - system.K * uu) / std::max(1.0, uu), u, t, slack);
    }
  }
  report.checks.push_back(coercive);
  report.checks.push_back(skew);

  if (!opt.check_coefficients) return report;
  coeffs.require_complete();
  if (coeffs.dim != n) throw ConfigurationError("validate_assumptions: coefficient dimension mismatch");

  AssumptionCheck grad;
  grad.name = "gradient_consistency";
  AssumptionCheck bound;
  bound.name = "derivative_bounds";
  const std::vector<double> controls = coeffs.controls.empty() ? std::vector<double>{0.0} : coeffs.controls.points;
  const std::size_t n_coef_probes = std::max<std::size_t>(n_probes, 1);
  for (std::size_t k = 0; k < n_coef_probes; ++k) {
    const Eigen::VectorXd x = detail::probe_vector(n, opt.seed + 1, k);
    const double y = rng::standard_normal(opt.seed + 2, k, 0);
    const double z = rng::standard_normal(opt.seed + 2, k, 1);
    const double t = times[k % 3];
    const double u = controls[k % controls.size()];
    double worst = 0.0;

    // First derivatives of a, b, h, k in x; second derivatives via differences of the first.
    Eigen::MatrixXd ax_fd(n, n), bx_fd(n, n);
    Eigen::VectorXd hx_fd(n), kx_fd(n);
    Eigen::MatrixXd hxx_fd(n, n);
    std::vector<Eigen::MatrixXd> axx_fd(static_cast<std::size_t>(n), Eigen::MatrixXd(n, n));
    std::vector<Eigen::MatrixXd> bxx_fd = axx_fd;
    Eigen::MatrixXd khess_fd(n + 2, n + 2);
    auto k_grad = [&](const Eigen::VectorXd& xx, double yy, double zz) {
      Eigen::VectorXd g(n + 2);
      g.head(n) = coeffs.k_x(t, xx, yy, zz, u);
      g(n) = coeffs.k_y(t, xx, yy, zz, u);
      g(n + 1) = coeffs.k_z(t, xx, yy, zz, u);
      return g;
    };
    for (int j = 0; j < n; ++j) {
      const double e = detail::fd_step(x(j));
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += e;
      xm(j) -= e;
      ax_fd.col(j) = (coeffs.a(t, xp, u) - coeffs.a(t, xm, u)) / (2 * e);
      bx_fd.col(j) = (coeffs.b(t, xp, u) - coeffs.b(t, xm, u)) / (2 * e);
      hx_fd(j) = (coeffs.h(xp) - coeffs.h(xm)) / (2 * e);
      kx_fd(j) = (coeffs.k(t, xp, y, z, u) - coeffs.k(t, xm, y, z, u)) / (2 * e);
      hxx_fd.col(j) = (coeffs.h_x(xp) - coeffs.h_x(xm)) / (2 * e);
      const Eigen::MatrixXd dax = (coeffs.a_x(t, xp, u) - coeffs.a_x(t, xm, u)) / (2 * e);
      const Eigen::MatrixXd dbx = (coeffs.b_x(t, xp, u) - coeffs.b_x(t, xm, u)) / (2 * e);
      for (int i = 0; i < n; ++i) {
        axx_fd[static_cast<std::size_t>(i)].col(j) = dax.row(i).transpose();
        bxx_fd[static_cast<std::size_t>(i)].col(j) = dbx.row(i).transpose();
      }
      khess_fd.col(j) = (k_grad(xp, y, z) - k_grad(xm, y, z)) / (2 * e);
    }
    {
      const double ey = detail::fd_step(y), ez = detail::fd_step(z);
      khess_fd.col(n) = (k_grad(x, y + ey, z) - k_grad(x, y - ey, z)) / (2 * ey);
      khess_fd.col(n + 1) = (k_grad(x, y, z + ez) - k_grad(x, y, z - ez)) / (2 * ez);
      const double ky_fd = (coeffs.k(t, x, y + ey, z, u) - coeffs.k(t, x, y - ey, z, u)) / (2 * ey);
      const double kz_fd = (coeffs.k(t, x, y, z + ez, u) - coeffs.k(t, x, y, z - ez, u)) / (2 * ez);
      worst = std::max(worst, detail::rel_mismatch(ky_fd, coeffs.k_y(t, x, y, z, u)));
      worst = std::max(worst, detail::rel_mismatch(kz_fd, coeffs.k_z(t, x, y, z, u)));
    }
    worst = std::max(worst, detail::rel_mismatch(ax_fd, coeffs.a_x(t, x, u)));
    worst = std::max(worst, detail::rel_mismatch(bx_fd, coeffs.b_x(t, x, u)));
    worst = std::max(worst, detail::rel_mismatch(Eigen::MatrixXd(hx_fd), Eigen::MatrixXd(coeffs.h_x(x))));
    worst = std::max(worst, detail::rel_mismatch(Eigen::MatrixXd(kx_fd), Eigen::MatrixXd(coeffs.k_x(t, x, y, z, u))));
    worst = std::max(worst, detail::rel_mismatch(hxx_fd, coeffs.h_xx(x)));
    worst = std::max(worst, detail::rel_mismatch(khess_fd, coeffs.k_hess(t, x, y, z, u)));
    const auto axx = coeffs.a_xx(t, x, u);
    const auto bxx = coeffs.b_xx(t, x, u);
    if (axx.size() != static_cast<std::size_t>(n) || bxx.size() != static_cast<std::size_t>(n)) {
      throw ConfigurationError("validate_assumptions: Hessian callbacks must return one matrix per component");
    }
    for (std::size_t i = 0; i < axx.size(); ++i) {
      worst = std::max(worst, detail::rel_mismatch(axx_fd[i], axx[i]));
      worst = std::max(worst, detail::rel_mismatch(bxx_fd[i], bxx[i]));
    }
    detail::record(grad, worst, x, t, opt.gradient_rtol);

    const double sizes = std::max({coeffs.a_x(t, x, u).norm(), coeffs.b_x(t, x, u).norm(),
                                   std::abs(coeffs.k_y(t, x, y, z, u)), std::abs(coeffs.k_z(t, x, y, z, u))});
    detail::record(bound, sizes - coeffs.derivative_bound, x, t, 0.0);
  }
  report.checks.push_back(grad);
  report.checks.push_back(bound);
  return report;
}

}  // namespace seesmp
