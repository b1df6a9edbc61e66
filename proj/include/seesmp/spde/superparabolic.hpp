#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "seesmp/core/errors.hpp"
#include "seesmp/core/galerkin_system.hpp"

namespace seesmp {

/// dx = d/dz(alpha dx/dz) dt + beta dx/dz dw on (0, length), Dirichlet boundary.
struct SuperParabolicSpec {
  double length = 1.0;
  int n_space = 4;
  std::function<double(double t, double z)> alpha = [](double, double) { return 1.0; };
  std::function<double(double t, double z)> beta = [](double, double) { return 0.0; };
  double kappa = 0.1;
  double K = 10.0;
  double horizon = 1.0;       // time range over which the coefficients are checked
  int n_time_checks = 5;

  double mesh() const { return length / (n_space + 1); }
};

/// Thrown when kappa + beta^2 <= 2 alpha <= K fails somewhere on the grid.
class ParabolicityError : public InvalidArgument {
 public:
  ParabolicityError(const std::string& what, double t, double z) : InvalidArgument(what), t_(t), z_(z) {}
  double t() const noexcept { return t_; }
  double z() const noexcept { return z_; }

 private:
  double t_, z_;
};

namespace detail {

inline Eigen::MatrixXd fd_laplacian(const SuperParabolicSpec& s, double t) {
  const int n = s.n_space;
  const double h = s.mesh();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const double z = (j + 1) * h;
    const double a_minus = s.alpha(t, z - 0.5 * h);
    const double a_plus = s.alpha(t, z + 0.5 * h);
    A(j, j) = -(a_minus + a_plus) / (h * h);
    if (j > 0) A(j, j - 1) = a_minus / (h * h);
    if (j + 1 < n) A(j, j + 1) = a_plus / (h * h);
  }
  return A;
}

inline Eigen::MatrixXd fd_advection(const SuperParabolicSpec& s, double t) {
  const int n = s.n_space;
  const double h = s.mesh();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const double b = s.beta(t, (j + 1) * h);
    if (b == 0.0) continue;
    if (j > 0) B(j, j - 1) = -b / (2 * h);
    if (j + 1 < n) B(j, j + 1) = b / (2 * h);
  }
  return B;
}

inline double max_eigenvalue_sym(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace detail

/// Discrete H^1_0 seminorm weight: u' W u = sum_j ((u_{j+1} - u_j)/h)^2 with zero boundary values.
inline Eigen::MatrixXd h1_weight(int n, double h) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n + 1, n);
  for (int j = 0; j <= n; ++j) {
    if (j < n) D(j, j) = 1.0 / h;
    if (j > 0) D(j, j - 1) = -1.0 / h;
  }
  return D.transpose() * D;
}

/// Finite-difference truncation. A is the divergence-form second difference
/// with alpha at cell midpoints; B is the centered first difference scaled by
/// beta at the nodes. delta = min(2 alpha) - max(beta^2) over the grid; K is
/// the smallest constant making the discrete coercivity and quasi-skew
/// inequalities hold at the checked times.
inline GalerkinSystem discretize_superparabolic(const SuperParabolicSpec& spec) {
  if (spec.n_space < 1 || !(spec.length > 0.0)) throw InvalidArgument("superparabolic: invalid mesh");
  if (!spec.alpha || !spec.beta) throw ConfigurationError("superparabolic: alpha and beta are required");
  const int n = spec.n_space;
  const double h = spec.mesh();
  const int nt = std::max(1, spec.n_time_checks);
  double min_two_alpha = std::numeric_limits<double>::infinity();
  double max_beta_sq = 0.0;
  for (int k = 0; k < nt; ++k) {
    const double t = nt == 1 ? 0.0 : spec.horizon * k / (nt - 1);
    // Nodes including the boundary, plus cell midpoints where alpha is sampled.
    for (int j = 0; j <= 2 * (n + 1); ++j) {
      const double z = 0.5 * h * j;
      const double a = spec.alpha(t, z);
      const double b = spec.beta(t, z);
      if (spec.kappa + b * b > 2.0 * a || 2.0 * a > spec.K) {
        std::ostringstream os;
        os << "parabolicity violated at (t=" << t << ", z=" << z << "): kappa + beta^2 = " << spec.kappa + b * b
           << ", 2 alpha = " << 2.0 * a << ", K = " << spec.K;
        throw ParabolicityError(os.str(), t, z);
      }
      min_two_alpha = std::min(min_two_alpha, 2.0 * a);
      max_beta_sq = std::max(max_beta_sq, b * b);
    }
  }
  const double delta = std::max(0.0, min_two_alpha - max_beta_sq);
  const Eigen::MatrixXd W = h1_weight(n, h);

  double K = 0.0;
  for (int k = 0; k < nt; ++k) {
    const double t = nt == 1 ? 0.0 : spec.horizon * k / (nt - 1);
    const Eigen::MatrixXd A = detail::fd_laplacian(spec, t);
    const Eigen::MatrixXd B = detail::fd_advection(spec, t);
    K = std::max(K, detail::max_eigenvalue_sym(2.0 * A + B.transpose() * B + delta * W));
    K = std::max(K, std::abs(detail::max_eigenvalue_sym(B)));
    K = std::max(K, std::abs(detail::max_eigenvalue_sym(-B)));
  }

  GalerkinSystem s;
  s.dim = n;
  SuperParabolicSpec copy = spec;
  s.A = [copy](double t) { return detail::fd_laplacian(copy, t); };
  s.B = [copy](double t) { return detail::fd_advection(copy, t); };
  s.delta = delta;
  s.K = K * (1.0 + 1e-12) + 1e-14;
  s.v_weight = W;
  return s;
}

}  // namespace seesmp
