#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/core/coefficients.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/galerkin_system.hpp"

namespace seesmp {

/// A controlled system with its recursive cost.
struct ControlProblem {
  GalerkinSystem system;
  CoefficientSet coeffs;
  Eigen::VectorXd x0;
};

/// Control entering linearly, quadratic costs and a utility linear in (y, z):
///   a = u c_a,  b = u c_b,
///   k = m(t)'x + x'R x/2 + w_u u^2 + k_y y + k_z z,  h = x'G x/2.
struct AffineQuadraticSpec {
  Eigen::VectorXd c_a, c_b;
  Eigen::MatrixXd R, G;
  std::function<Eigen::VectorXd(double)> m;  // empty means zero
  double w_u = 1.0;
  double k_y = 0.0;
  double k_z = 0.0;
};

inline CoefficientSet affine_quadratic_coefficients(const AffineQuadraticSpec& s, ControlSet controls) {
  const int n = static_cast<int>(s.c_a.size());
  if (n == 0 || s.c_b.size() != n || s.R.rows() != n || s.G.rows() != n) {
    throw InvalidArgument("affine_quadratic_coefficients: inconsistent sizes");
  }
  CoefficientSet c = CoefficientSet::zero(n, std::move(controls));
  const Eigen::VectorXd ca = s.c_a, cb = s.c_b;
  const Eigen::MatrixXd R = s.R, G = s.G;
  const auto m = s.m;
  const double wu = s.w_u, ky = s.k_y, kz = s.k_z;
  c.a = [ca](double, const Eigen::VectorXd&, double u) { return Eigen::VectorXd(u * ca); };
  c.b = [cb](double, const Eigen::VectorXd&, double u) { return Eigen::VectorXd(u * cb); };
  c.h = [G](const Eigen::VectorXd& x) { return 0.5 * x.dot(G * x); };
  c.h_x = [G](const Eigen::VectorXd& x) { return Eigen::VectorXd(G * x); };
  c.h_xx = [G](const Eigen::VectorXd&) { return G; };
  c.k = [=](double t, const Eigen::VectorXd& x, double y, double z, double u) {
    double v = 0.5 * x.dot(R * x) + wu * u * u + ky * y + kz * z;
    if (m) v += m(t).dot(x);
    return v;
  };
  c.k_x = [=](double t, const Eigen::VectorXd& x, double, double, double) {
    Eigen::VectorXd g = R * x;
    if (m) g += m(t);
    return g;
  };
  c.k_y = [ky](double, const Eigen::VectorXd&, double, double, double) { return ky; };
  c.k_z = [kz](double, const Eigen::VectorXd&, double, double, double) { return kz; };
  c.k_hess = [R, n](double, const Eigen::VectorXd&, double, double, double) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n + 2, n + 2);
    H.topLeftCorner(n, n) = R;
    return H;
  };
  c.derivative_bound = std::max({R.norm(), G.norm(), std::abs(ky), std::abs(kz), 1.0});
  return c;
}

/// Scalar problem with nonlinear coefficients
///   dx = [A x + s_a sin x + c_a u] dt + [B x + sin x + u] dw,
///   k = x^2/2 + u^2,  h = x^2/2.
inline ControlProblem nonlinear_scalar_problem(double A = -1.0, double B = -0.6, double s_a = 0.5, double c_a = 0.3,
                                               double x0 = 1.0) {
  ControlProblem pb;
  pb.system = GalerkinSystem::scalar(A, B);
  pb.x0 = Eigen::VectorXd::Constant(1, x0);
  AffineQuadraticSpec s;
  s.c_a = Eigen::VectorXd::Constant(1, c_a);
  s.c_b = Eigen::VectorXd::Ones(1);
  s.R = Eigen::MatrixXd::Ones(1, 1);
  s.G = Eigen::MatrixXd::Ones(1, 1);
  CoefficientSet c = affine_quadratic_coefficients(s, ControlSet::finite({0.0, 1.0}));
  using V = Eigen::VectorXd;
  using M = Eigen::MatrixXd;
  c.a = [s_a, c_a](double, const V& x, double u) { return V::Constant(1, s_a * std::sin(x(0)) + c_a * u); };
  c.b = [](double, const V& x, double u) { return V::Constant(1, std::sin(x(0)) + u); };
  c.a_x = [s_a](double, const V& x, double) { return M::Constant(1, 1, s_a * std::cos(x(0))); };
  c.b_x = [](double, const V& x, double) { return M::Constant(1, 1, std::cos(x(0))); };
  c.a_xx = [s_a](double, const V& x, double) { return std::vector<M>{M::Constant(1, 1, -s_a * std::sin(x(0)))}; };
  c.b_xx = [](double, const V& x, double) { return std::vector<M>{M::Constant(1, 1, -std::sin(x(0)))}; };
  pb.coeffs = std::move(c);
  return pb;
}

/// Scalar bang-bang problem with a manufactured optimum. With
/// b_s = -(c1 + k_z c2)/c2 the first-order adjoint along any control is
/// p = Pi(t) x + r(t), and the running weight m(t) is chosen so that
/// r(t) = r0 sin(3 pi t / T). The maximum-principle expression at v = -u
/// then reduces to -2 u (c1 + k_z c2) r(t), so the optimum over U = {-1, +1}
/// is u = -sign((c1 + k_z c2) r), piecewise constant on three intervals.
struct BangBangSpec {
  double a = -0.5;
  double c1 = 0.5;
  double c2 = 1.0;
  double k_y = 0.1;
  double k_z = 0.2;
  double r_c = 0.2;  // running x^2/2 weight
  double g = 0.2;    // terminal x^2/2 weight
  double r0 = 1.0;
  double T = 1.0;
  double x0 = 0.5;

  double b_s() const { return -(c1 + k_z * c2) / c2; }
  double r(double t) const { return r0 * std::sin(3.0 * M_PI * t / T); }
  double r_dot(double t) const { return r0 * 3.0 * M_PI / T * std::cos(3.0 * M_PI * t / T); }
  double m(double t) const { return -r_dot(t) - (a + k_y + k_z * b_s()) * r(t); }
  /// Optimal values on the three intervals.
  std::vector<double> optimal_intervals() const {
    const double s = c1 + k_z * c2;
    std::vector<double> u;
    for (int j = 0; j < 3; ++j) u.push_back(-std::copysign(1.0, s * r((j + 0.5) * T / 3.0)));
    return u;
  }
};

inline ControlProblem bang_bang_problem(const BangBangSpec& bb = {}) {
  if (bb.c2 == 0.0) throw InvalidArgument("bang_bang_problem: c2 must be nonzero");
  ControlProblem pb;
  pb.system = GalerkinSystem::scalar(bb.a, bb.b_s());
  pb.x0 = Eigen::VectorXd::Constant(1, bb.x0);
  AffineQuadraticSpec s;
  s.c_a = Eigen::VectorXd::Constant(1, bb.c1);
  s.c_b = Eigen::VectorXd::Constant(1, bb.c2);
  s.R = Eigen::MatrixXd::Constant(1, 1, bb.r_c);
  s.G = Eigen::MatrixXd::Constant(1, 1, bb.g);
  s.m = [bb](double t) { return Eigen::VectorXd::Constant(1, bb.m(t)); };
  s.w_u = 1.0;
  s.k_y = bb.k_y;
  s.k_z = bb.k_z;
  pb.coeffs = affine_quadratic_coefficients(s, ControlSet::finite({-1.0, 1.0}));
  return pb;
}

/// Scalar LQ problem with a utility linear in (y, z):
///   dx = (a x + c1 u) dt + (b x + c2 u) dw,  k = r_c x^2/2 + rho_u u^2/2 + k_y y + k_z z,  h = g x^2/2.
/// The z-term is a change of drift (a + k_z b, c1 + k_z c2) and k_y a discount,
/// so the optimal feedback is u = -Pi (c1 + k_z c2 + c2 b) x / (rho_u + c2^2 Pi) with
///   -Pi' = (2 (a + k_z b) + b^2 + k_y) Pi + r_c - (Pi (c1 + k_z c2 + c2 b))^2 / (rho_u + c2^2 Pi),  Pi(T) = g.
struct LqSpec {
  double a = -0.5;
  double b = 0.3;
  double c1 = 1.0;
  double c2 = 0.4;
  double rho_u = 1.0;
  double r_c = 1.0;
  double g = 0.5;
  double k_y = 0.1;
  double k_z = 0.2;
  double T = 1.0;
  double x0 = 0.6;

  double riccati_rhs(double Pi) const {
    const double c = c1 + k_z * c2 + c2 * b;
    return (2.0 * (a + k_z * b) + b * b + k_y) * Pi + r_c - (Pi * c) * (Pi * c) / (rho_u + c2 * c2 * Pi);
  }

  /// Pi on the nodes t_j = j T / n by RK4 with `sub` substeps per interval.
  std::vector<double> riccati(std::size_t n, int sub = 20) const {
    std::vector<double> out(n + 1);
    out[n] = g;
    double P = g;
    const double h = T / static_cast<double>(n) / sub;
    for (std::size_t j = n; j-- > 0;) {
      for (int s = 0; s < sub; ++s) {
        // backward in time: dPi/d(-t) = riccati_rhs(Pi)
        const double k1 = riccati_rhs(P), k2 = riccati_rhs(P + 0.5 * h * k1), k3 = riccati_rhs(P + 0.5 * h * k2),
                     k4 = riccati_rhs(P + h * k3);
        P += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      out[j] = P;
    }
    return out;
  }

  double gain(double Pi) const { return Pi * (c1 + k_z * c2 + c2 * b) / (rho_u + c2 * c2 * Pi); }
};

inline ControlProblem lq_problem(const LqSpec& lq = {}, double lattice_step = 0.1) {
  ControlProblem pb;
  pb.system = GalerkinSystem::scalar(lq.a, lq.b);
  pb.x0 = Eigen::VectorXd::Constant(1, lq.x0);
  AffineQuadraticSpec s;
  s.c_a = Eigen::VectorXd::Constant(1, lq.c1);
  s.c_b = Eigen::VectorXd::Constant(1, lq.c2);
  s.R = Eigen::MatrixXd::Constant(1, 1, lq.r_c);
  s.G = Eigen::MatrixXd::Constant(1, 1, lq.g);
  s.w_u = 0.5 * lq.rho_u;
  s.k_y = lq.k_y;
  s.k_z = lq.k_z;
  pb.coeffs = affine_quadratic_coefficients(s, ControlSet::lattice(-1.0, 1.0, lattice_step));
  return pb;
}

/// Riccati feedback u = -K(t_i) x on the grid nodes (clipped to [-1, 1]).
inline std::function<double(double, const Eigen::VectorXd&)> lq_feedback(const LqSpec& lq, std::size_t n_steps) {
  const std::vector<double> Pi = lq.riccati(n_steps);
  const double dt = lq.T / static_cast<double>(n_steps);
  return [lq, Pi, dt](double t, const Eigen::VectorXd& x) {
    const auto j = static_cast<std::size_t>(std::llround(t / dt));
    const double u = -lq.gain(Pi[std::min(j, Pi.size() - 1)]) * x(0);
    return std::clamp(u, -1.0, 1.0);
  };
}

/// dx = u dt from x0 = -1, k = x^2 + u^2, h = 0 (deterministic).
inline ControlProblem hand_oracle_problem() {
  ControlProblem pb;
  pb.system = GalerkinSystem::zero(1);
  pb.x0 = Eigen::VectorXd::Constant(1, -1.0);
  AffineQuadraticSpec s;
  s.c_a = Eigen::VectorXd::Ones(1);
  s.c_b = Eigen::VectorXd::Zero(1);
  s.R = Eigen::MatrixXd::Constant(1, 1, 2.0);
  s.G = Eigen::MatrixXd::Zero(1, 1);
  pb.coeffs = affine_quadratic_coefficients(s, ControlSet::finite({0.0, 1.0}));
  return pb;
}

/// Two-mode truncation of the super-parabolic equation with the control on
/// the first mode: a = c1 u e1, b = c2 u e1, k = x'R x/2 + u^2 + k_y y + k_z z, h = x'G x/2.
struct PlanarSpec {
  Eigen::MatrixXd A, B;
  double c1 = 1.0, c2 = 0.5, k_y = 0.1, k_z = 0.2;
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(2, 2), G = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd x0 = Eigen::Vector2d(0.5, -0.3);
};

inline ControlProblem planar_problem(const PlanarSpec& ps, ControlSet controls = ControlSet::finite({-1.0, 1.0})) {
  ControlProblem pb;
  pb.system = GalerkinSystem::constant(ps.A, ps.B);
  pb.x0 = ps.x0;
  AffineQuadraticSpec s;
  s.c_a = Eigen::Vector2d(ps.c1, 0.0);
  s.c_b = Eigen::Vector2d(ps.c2, 0.0);
  s.R = ps.R;
  s.G = ps.G;
  s.k_y = ps.k_y;
  s.k_z = ps.k_z;
  pb.coeffs = affine_quadratic_coefficients(s, std::move(controls));
  return pb;
}

}  // namespace seesmp
