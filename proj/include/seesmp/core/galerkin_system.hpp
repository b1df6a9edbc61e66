#pragma once

#include <functional>
#include <utility>

#include <Eigen/Dense>

#include "seesmp/core/errors.hpp"

namespace seesmp {

using MatrixFunction = std::function<Eigen::MatrixXd(double)>;

/// Finite-dimensional truncation of the linear part dx = A x dt + B x dw.
struct GalerkinSystem {
  int dim = 0;
  MatrixFunction A;
  MatrixFunction B;
  double delta = 0.0;  // coercivity constant
  double K = 0.0;      // upper / quasi-skew constant
  Eigen::MatrixXd v_weight;  // ||u||_V^2 = u' W u; identity when empty

  static GalerkinSystem constant(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double delta = 0.0,
                                 double K = 0.0) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows() || a.rows() == 0) {
      throw InvalidArgument("GalerkinSystem: A and B must be square of equal size");
    }
    GalerkinSystem s;
    s.dim = static_cast<int>(a.rows());
    s.A = [a](double) { return a; };
    s.B = [b](double) { return b; };
    s.delta = delta;
    s.K = K;
    return s;
  }

  static GalerkinSystem scalar(double a, double b, double delta = 0.0, double K = 0.0) {
    return constant(Eigen::MatrixXd::Constant(1, 1, a), Eigen::MatrixXd::Constant(1, 1, b), delta, K);
  }

  static GalerkinSystem zero(int n) {
    return constant(Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n));
  }

  Eigen::MatrixXd A_at(double t) const {
    require();
    return A(t);
  }
  Eigen::MatrixXd B_at(double t) const {
    require();
    return B(t);
  }

  Eigen::MatrixXd weight() const {
    return v_weight.size() == 0 ? Eigen::MatrixXd::Identity(dim, dim) : v_weight;
  }

  double v_norm_sq(const Eigen::VectorXd& u) const {
    return v_weight.size() == 0 ? u.squaredNorm() : u.dot(v_weight * u);
  }

  void require() const {
    if (dim <= 0 || !A || !B) throw ConfigurationError("GalerkinSystem: A and B must be populated");
  }
};

}  // namespace seesmp
