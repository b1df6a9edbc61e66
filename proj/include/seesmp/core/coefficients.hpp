#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/core/errors.hpp"

namespace seesmp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Control set U. Controls are scalar; an interval is represented by its
/// sampling lattice.
struct ControlSet {
  std::vector<double> points;

  static ControlSet finite(std::vector<double> pts) { return ControlSet{std::move(pts)}; }

  static ControlSet lattice(double lo, double hi, double step) {
    if (!(hi >= lo) || !(step > 0.0)) throw InvalidArgument("ControlSet: invalid lattice");
    ControlSet u;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) u.points.push_back(lo + static_cast<double>(i) * step);
    return u;
  }

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Nonlinear data of the controlled system and of the recursive cost:
///   dx = [A x + a(t,x,u)] dt + [B x + b(t,x,u)] dw,
///   dy = -k(t,x,y,z,u) dt + z dw,  y(T) = h(x(T)).
/// Hessians of vector fields are returned one matrix per component.
/// k_hess is the (n+2)x(n+2) Hessian of k in (x, y, z).
struct CoefficientSet {
  using VecField = std::function<VectorXd(double, const VectorXd&, double)>;
  using MatField = std::function<MatrixXd(double, const VectorXd&, double)>;
  using HessField = std::function<std::vector<MatrixXd>(double, const VectorXd&, double)>;
  using Scalar = std::function<double(double, const VectorXd&, double, double, double)>;
  using Grad = std::function<VectorXd(double, const VectorXd&, double, double, double)>;
  using Hess = std::function<MatrixXd(double, const VectorXd&, double, double, double)>;

  int dim = 0;
  VecField a, b;
  MatField a_x, b_x;
  HessField a_xx, b_xx;
  std::function<double(const VectorXd&)> h;
  std::function<VectorXd(const VectorXd&)> h_x;
  std::function<MatrixXd(const VectorXd&)> h_xx;
  Scalar k;
  Grad k_x;
  Scalar k_y, k_z;
  Hess k_hess;
  ControlSet controls;
  double derivative_bound = 1e6;

  /// Names of callbacks that are not populated.
  std::vector<std::string> missing() const {
    std::vector<std::string> out;
    auto check = [&](bool ok, const char* name) {
      if (!ok) out.emplace_back(name);
    };
    check(static_cast<bool>(a), "a");
    check(static_cast<bool>(b), "b");
    check(static_cast<bool>(a_x), "a_x");
    check(static_cast<bool>(b_x), "b_x");
    check(static_cast<bool>(a_xx), "a_xx");
    check(static_cast<bool>(b_xx), "b_xx");
    check(static_cast<bool>(h), "h");
    check(static_cast<bool>(h_x), "h_x");
    check(static_cast<bool>(h_xx), "h_xx");
    check(static_cast<bool>(k), "k");
    check(static_cast<bool>(k_x), "k_x");
    check(static_cast<bool>(k_y), "k_y");
    check(static_cast<bool>(k_z), "k_z");
    check(static_cast<bool>(k_hess), "k_hess");
    return out;
  }

  void require_complete() const {
    const auto m = missing();
    if (dim <= 0) throw ConfigurationError("CoefficientSet: dimension not set");
    if (!m.empty()) {
      std::string names;
      for (const auto& s : m) names += (names.empty() ? "" : ", ") + s;
      throw ConfigurationError("CoefficientSet: missing callbacks: " + names);
    }
  }

  /// All-zero data in dimension n with the given control points.
  static CoefficientSet zero(int n, ControlSet u = ControlSet::finite({0.0})) {
    CoefficientSet c;
    c.dim = n;
    c.a = [n](double, const VectorXd&, double) { return VectorXd::Zero(n); };
    c.b = c.a;
    c.a_x = [n](double, const VectorXd&, double) { return MatrixXd::Zero(n, n); };
    c.b_x = c.a_x;
    c.a_xx = [n](double, const VectorXd&, double) {
      return std::vector<MatrixXd>(static_cast<std::size_t>(n), MatrixXd::Zero(n, n));
    };
    c.b_xx = c.a_xx;
    c.h = [](const VectorXd&) { return 0.0; };
    c.h_x = [n](const VectorXd&) { return VectorXd::Zero(n); };
    c.h_xx = [n](const VectorXd&) { return MatrixXd::Zero(n, n); };
    c.k = [](double, const VectorXd&, double, double, double) { return 0.0; };
    c.k_x = [n](double, const VectorXd&, double, double, double) { return VectorXd::Zero(n); };
    c.k_y = c.k;
    c.k_z = c.k;
    c.k_hess = [n](double, const VectorXd&, double, double, double) { return MatrixXd::Zero(n + 2, n + 2); };
    c.controls = std::move(u);
    c.derivative_bound = 0.0;
    return c;
  }
};

}  // namespace seesmp
