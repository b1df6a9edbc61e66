#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "seesmp/core/diagnostics.hpp"
#include "seesmp/core/errors.hpp"

namespace seesmp {

enum class OrderClaim { BigO, LittleO };

inline const char* to_string(OrderClaim c) { return c == OrderClaim::BigO ? "O" : "o"; }

struct OrderCriteria {
  double slope_tolerance = 0.25;  // O-claims: |slope - alpha| <= tol
  double margin = 0.25;           // o-claims: slope >= alpha + margin
  double min_r_squared = 0.95;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n_used = 0;
};

/// Least-squares line through (log rho, log e). Pairs with e <= 0 (or
/// non-finite) are dropped with a warning; fewer than 3 remaining pairs is an
/// error.
inline FitResult fit_order(const std::vector<double>& rho, const std::vector<double>& err) {
  if (rho.size() != err.size()) throw InvalidArgument("fit_order: rho and error lists differ in length");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i] > 0.0)) throw InvalidArgument("fit_order: rho values must be positive");
    if (!(err[i] > 0.0) || !std::isfinite(err[i])) {
      warn("fit_order: dropped pair with non-positive error at rho=" + std::to_string(rho[i]));
      continue;
    }
    lx.push_back(std::log(rho[i]));
    ly.push_back(std::log(err[i]));
  }
  if (lx.size() < 3) throw InsufficientDataError("fit_order: fewer than 3 usable (rho, error) pairs");
  const double m = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw InsufficientDataError("fit_order: rho values are not distinct");
  FitResult f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.n_used = lx.size();
  if (syy <= 0.0) {
    f.r_squared = 1.0;
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double r = ly[i] - (f.intercept + f.slope * lx[i]);
      ss_res += r * r;
    }
    f.r_squared = std::max(0.0, 1.0 - ss_res / syy);
  }
  return f;
}

/// Measured (rho, error) sweep with its verdict against a claimed order.
struct OrderReport {
  std::string label;
  std::vector<double> rho;
  std::vector<double> errors;
  std::vector<double> stderrs;
  double claimed_order = 0.0;
  OrderClaim claim = OrderClaim::BigO;
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  double r_squared = std::numeric_limits<double>::quiet_NaN();
  bool exact_zero = false;
  bool passed = false;
  std::string note;

  std::string verdict_string() const {
    if (exact_zero) return "exact-zero";
    return passed ? "pass" : "fail";
  }
};

inline OrderReport evaluate_order(std::string label, std::vector<double> rho, std::vector<double> errors,
                                  std::vector<double> stderrs, double claimed, OrderClaim claim,
                                  const OrderCriteria& crit = {}) {
  OrderReport r;
  r.label = std::move(label);
  r.rho = std::move(rho);
  r.errors = std::move(errors);
  r.stderrs = std::move(stderrs);
  if (r.stderrs.empty()) r.stderrs.assign(r.errors.size(), 0.0);
  r.claimed_order = claimed;
  r.claim = claim;
  bool all_zero = !r.errors.empty();
  for (double e : r.errors) all_zero = all_zero && e == 0.0;
  if (all_zero) {
    r.exact_zero = true;
    r.passed = true;
    r.note = "all errors are exactly zero";
    return r;
  }
  try {
    const FitResult f = fit_order(r.rho, r.errors);
    r.fitted_slope = f.slope;
    r.r_squared = f.r_squared;
    const bool fit_ok = f.r_squared >= crit.min_r_squared;
    if (claim == OrderClaim::BigO) {
      r.passed = fit_ok && std::abs(f.slope - claimed) <= crit.slope_tolerance;
    } else {
      r.passed = fit_ok && f.slope >= claimed + crit.margin;
    }
  } catch (const InsufficientDataError& e) {
    r.passed = false;
    r.note = e.what();
  }
  return r;
}

}  // namespace seesmp
