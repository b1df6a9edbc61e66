#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/core/diagnostics.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/parallel.hpp"

namespace seesmp {

enum class FeatureBasis { kConstant, kLinear, kQuadratic };

/// Least-squares surrogate for E[. | F_t] on a Markovian state. Features are
/// the monomials of the state up to the chosen degree; the intercept is
/// always present and never penalized.
struct RegressionEngine {
  FeatureBasis basis = FeatureBasis::kQuadratic;
  double ridge = 0.0;
  // Optional replacement for the monomial map; returns N x m without the intercept.
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd& X)> custom_features;

  /// Non-intercept features of the states X (d x N) as an N x m matrix.
  Eigen::MatrixXd features(const Eigen::MatrixXd& X) const {
    if (custom_features) return custom_features(X);
    const Eigen::Index d = X.rows();
    const Eigen::Index N = X.cols();
    Eigen::Index m = 0;
    if (basis != FeatureBasis::kConstant) m += d;
    if (basis == FeatureBasis::kQuadratic) m += d * (d + 1) / 2;
    Eigen::MatrixXd F(N, m);
    if (m == 0) return F;
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < d; ++j) F.col(c++) = X.row(j).transpose();
    if (basis == FeatureBasis::kQuadratic) {
      for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index l = j; l < d; ++l) F.col(c++) = (X.row(j).array() * X.row(l).array()).transpose();
      }
    }
    return F;
  }
};

/// Coefficients of one fitted target in the original feature units; entry 0
/// is the intercept, entry j >= 1 belongs to feature column j - 1. Pruned
/// (constant) columns get coefficient 0 and stderr 0.
struct RegressionFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd std_error;
  double residual_variance = 0.0;
};

/// Projection onto the feature span at one node. The factorization is done
/// once and applied to any number of targets (one per row).
class Projection {
 public:
  Projection(const RegressionEngine& engine, const Eigen::MatrixXd& X) {
    if (X.cols() == 0) throw InvalidArgument("regression: no samples");
    if (!(engine.ridge >= 0.0)) throw InvalidArgument("regression: ridge must be nonnegative");
    const Eigen::MatrixXd raw = engine.features(X);
    n_ = X.cols();
    const double N = static_cast<double>(n_);
    n_raw_ = raw.cols();
    // Standardize, dropping columns with no spread (they are in the intercept's span).
    std::vector<Eigen::Index> keep;
    std::vector<double> mean, scale;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      const double m = raw.col(j).mean();
      const double s = std::sqrt((raw.col(j).array() - m).square().sum() / N);
      const double mag = raw.col(j).cwiseAbs().maxCoeff();
      if (!(s > 1e-12 * std::max(1.0, mag))) continue;
      keep.push_back(j);
      mean.push_back(m);
      scale.push_back(s);
    }
    kept_ = keep;
    mean_ = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    scale_ = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
    Z_.resize(n_, m);
    for (Eigen::Index c = 0; c < m; ++c) {
      Z_.col(c) = (raw.col(keep[static_cast<std::size_t>(c)]).array() - mean_(c)) / scale_(c);
    }
    if (m == 0) return;
    Eigen::MatrixXd G = Z_.transpose() * Z_ / N;
    if (engine.ridge > 0.0) {
      G.diagonal().array() += engine.ridge;
      ldlt_.compute(G);
      use_ldlt_ = ldlt_.info() == Eigen::Success;
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
      const double top = es.eigenvalues().maxCoeff();
      const double bottom = es.eigenvalues().minCoeff();
      if (bottom > 1e-10 * top) {
        ldlt_.compute(G);
        use_ldlt_ = ldlt_.info() == Eigen::Success;
      }
      if (!use_ldlt_) {
        warn("regression: rank-deficient feature matrix; using the minimum-norm solution");
      }
    }
    if (!use_ldlt_) {
      cod_.setThreshold(1e-10);
      cod_.compute(G);
    }
    G_ = G;
  }

  std::size_t n_samples() const { return static_cast<std::size_t>(n_); }
  std::size_t n_active_features() const { return kept_.size(); }

  /// Predictions for every row of `targets` (k x N).
  Eigen::MatrixXd apply(const Eigen::MatrixXd& targets) const {
    check(targets);
    Eigen::MatrixXd out(targets.rows(), targets.cols());
    for (Eigen::Index r = 0; r < targets.rows(); ++r) out.row(r) = predict_row(targets.row(r));
    return out;
  }

  Eigen::RowVectorXd apply_row(const Eigen::Ref<const Eigen::RowVectorXd>& target) const {
    if (target.size() != n_) throw InvalidArgument("regression: one target per path is required");
    return predict_row(target);
  }

  RegressionFit fit(const Eigen::Ref<const Eigen::RowVectorXd>& target) const {
    if (target.size() != n_) throw InvalidArgument("regression: one target per path is required");
    const double N = static_cast<double>(n_);
    const double shift = target(0);
    const Eigen::RowVectorXd t = target.array() - shift;
    const double mu = t.mean();
    const Eigen::VectorXd beta = solve(t.array() - mu);
    const Eigen::RowVectorXd pred = predict_row(target);
    const double rss = (target - pred).squaredNorm();
    const Eigen::Index m = static_cast<Eigen::Index>(kept_.size());
    const double dof = std::max(1.0, N - static_cast<double>(m) - 1.0);
    RegressionFit f;
    f.residual_variance = rss / dof;
    f.coef = Eigen::VectorXd::Zero(n_raw_ + 1);
    f.std_error = Eigen::VectorXd::Zero(n_raw_ + 1);
    double intercept = shift + mu;
    for (Eigen::Index c = 0; c < m; ++c) {
      const Eigen::Index j = kept_[static_cast<std::size_t>(c)];
      f.coef(j + 1) = beta(c) / scale_(c);
      intercept -= f.coef(j + 1) * mean_(c);
    }
    f.coef(0) = intercept;
    if (m > 0) {
      // Var(beta_std) = s^2 (Z'Z)^{-1} = s^2 G^{-1} / N
      const Eigen::MatrixXd Ginv = use_ldlt_ ? Eigen::MatrixXd(ldlt_.solve(Eigen::MatrixXd::Identity(m, m)))
                                             : Eigen::MatrixXd(cod_.pseudoInverse());
      for (Eigen::Index c = 0; c < m; ++c) {
        const Eigen::Index j = kept_[static_cast<std::size_t>(c)];
        f.std_error(j + 1) = std::sqrt(std::max(0.0, f.residual_variance * Ginv(c, c) / N)) / scale_(c);
      }
    }
    f.std_error(0) = std::sqrt(f.residual_variance / N);
    return f;
  }

  /// Heteroscedasticity-robust (HC0 sandwich) standard error of the fitted
  /// value on every path.
  Eigen::RowVectorXd prediction_stderr(const Eigen::Ref<const Eigen::RowVectorXd>& target) const {
    if (target.size() != n_) throw InvalidArgument("regression: one target per path is required");
    const double N = static_cast<double>(n_);
    const Eigen::RowVectorXd r2 = (target - predict_row(target)).array().square().matrix();
    const double var_mu = r2.sum() / (N * N);
    const Eigen::Index m = static_cast<Eigen::Index>(kept_.size());
    if (m == 0) return Eigen::RowVectorXd::Constant(n_, std::sqrt(var_mu));
    // Design [1, Z] with centered Z: bread is blockdiag(1, G).
    const Eigen::MatrixXd Ginv = use_ldlt_ ? Eigen::MatrixXd(ldlt_.solve(Eigen::MatrixXd::Identity(m, m)))
                                           : Eigen::MatrixXd(cod_.pseudoInverse());
    const Eigen::MatrixXd Zw = Z_.array().colwise() * r2.transpose().array();
    const Eigen::VectorXd cross = Ginv * (Zw.colwise().sum().transpose() / (N * N));
    const Eigen::MatrixXd cov = Ginv * (Z_.transpose() * Zw / (N * N)) * Ginv;
    const Eigen::VectorXd v = var_mu + 2.0 * (Z_ * cross).array() + (Z_ * cov).cwiseProduct(Z_).rowwise().sum().array();
    return v.cwiseMax(0.0).cwiseSqrt().transpose();
  }

 private:
  void check(const Eigen::MatrixXd& targets) const {
    if (targets.cols() != n_) throw InvalidArgument("regression: one target per path is required");
  }

  Eigen::VectorXd solve(const Eigen::RowVectorXd& centered) const {
    const Eigen::Index m = static_cast<Eigen::Index>(kept_.size());
    if (m == 0) return Eigen::VectorXd();
    const Eigen::VectorXd rhs = Z_.transpose() * centered.transpose() / static_cast<double>(n_);
    return use_ldlt_ ? Eigen::VectorXd(ldlt_.solve(rhs)) : Eigen::VectorXd(cod_.solve(rhs));
  }

  // The target is shifted by its first entry before averaging so that a
  // constant target is reproduced bit for bit.
  Eigen::RowVectorXd predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& target) const {
    const double shift = target(0);
    const Eigen::RowVectorXd t = target.array() - shift;
    const double mu = t.mean();
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Constant(n_, mu);
    if (!kept_.empty()) {
      const Eigen::VectorXd beta = solve(t.array() - mu);
      if (!beta.isZero(0.0)) out += (Z_ * beta).transpose();
    }
    return out.array() + shift;
  }

  Eigen::Index n_ = 0;
  Eigen::Index n_raw_ = 0;
  std::vector<Eigen::Index> kept_;
  Eigen::VectorXd mean_, scale_;
  Eigen::MatrixXd Z_, G_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
  bool use_ldlt_ = false;
};

/// E[target | features of X] evaluated per path.
inline Eigen::RowVectorXd cond_expect(const RegressionEngine& engine, const Eigen::MatrixXd& X,
                                      const Eigen::RowVectorXd& targets) {
  return Projection(engine, X).apply_row(targets);
}

}  // namespace seesmp
