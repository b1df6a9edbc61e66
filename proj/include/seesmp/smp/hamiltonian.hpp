#pragma once

#include <Eigen/Dense>

#include "seesmp/core/coefficients.hpp"

namespace seesmp {

/// H(t, x, y, z, v, p, q) = <p, a(t,x,v)> + <q, b(t,x,v)> + k(t, x, y, z + <p, b(t,x,v) - b_ref>, v),
/// b_ref = b(t, x_bar, u_bar) at the same time.
inline double hamiltonian(double t, const Eigen::VectorXd& x, double y, double z, double v, const Eigen::VectorXd& p,
                          const Eigen::VectorXd& q, const CoefficientSet& coeffs, const Eigen::VectorXd& b_ref) {
  const Eigen::VectorXd b = coeffs.b(t, x, v);
  return p.dot(coeffs.a(t, x, v)) + q.dot(b) + coeffs.k(t, x, y, z + p.dot(b - b_ref), v);
}

/// H(v) - H(u_bar) + <P db, db>/2 with db = b(t, x_bar, v) - b(t, x_bar, u_bar),
/// all at the reference point. Zero at v = u_bar.
inline double verdict_expression(double t, const Eigen::VectorXd& x, double y, double z, double ubar, double v,
                                 const Eigen::VectorXd& p, const Eigen::VectorXd& q, const Eigen::MatrixXd& P,
                                 const CoefficientSet& coeffs) {
  const Eigen::VectorXd b_ref = coeffs.b(t, x, ubar);
  const Eigen::VectorXd db = coeffs.b(t, x, v) - b_ref;
  return hamiltonian(t, x, y, z, v, p, q, coeffs, b_ref) - hamiltonian(t, x, y, z, ubar, p, q, coeffs, b_ref) +
         0.5 * db.dot(P * db);
}

}  // namespace seesmp
