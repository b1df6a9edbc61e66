#include <cmath>

#include <gtest/gtest.h>

#include "seesmp/bsde/adjoint.hpp"
#include "seesmp/bsde/linear_explicit.hpp"
#include "seesmp/bsde/lsmc.hpp"
#include "seesmp/bsde/regression.hpp"
#include "seesmp/core/diagnostics.hpp"
#include "seesmp/forward/see_solver.hpp"

using namespace seesmp;

namespace {

PathEnsemble brownian_state(const BrownianEnsemble& bm) {
  const Eigen::MatrixXd w = bm.paths();
  std::vector<Eigen::MatrixXd> nodes;
  for (Eigen::Index i = 0; i < w.rows(); ++i) nodes.emplace_back(w.row(i));
  return PathEnsemble::from_nodes(bm.grid(), std::move(nodes));
}

RegressionEngine linear_engine() {
  RegressionEngine e;
  e.basis = FeatureBasis::kLinear;
  return e;
}

}  // namespace

TEST(Regression, ConstantTargetReproducedExactly) {
  const TimeGrid g(1.0, 4);
  const auto bm = sample_brownian(g, 500, 1);
  const Eigen::MatrixXd X = bm.paths().middleRows(2, 1);
  const Eigen::RowVectorXd target = Eigen::RowVectorXd::Constant(500, 0.1);
  const Eigen::RowVectorXd pred = cond_expect(RegressionEngine{}, X, target);
  EXPECT_TRUE((pred.array() == 0.1).all());
}

TEST(Regression, InSpanTargetRecovered) {
  const TimeGrid g(1.0, 4);
  const auto bm = sample_brownian(g, 400, 2);
  Eigen::MatrixXd X(2, 400);
  X.row(0) = bm.paths().row(2);
  X.row(1) = bm.paths().row(4);
  const Eigen::RowVectorXd target = X.row(0);
  const Eigen::RowVectorXd pred = cond_expect(RegressionEngine{}, X, target);
  EXPECT_LT((pred - target).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Regression, MartingaleCoefficientNearOne) {
  const TimeGrid g(1.0, 10);
  const std::size_t n = 20000;
  const auto bm = sample_brownian(g, n, 3);
  const Eigen::MatrixXd w = bm.paths();
  const Projection proj(linear_engine(), w.middleRows(5, 1));
  const RegressionFit fit = proj.fit(w.row(10));
  ASSERT_EQ(fit.coef.size(), 2);
  EXPECT_LT(std::abs(fit.coef(1) - 1.0), 3.0 * fit.std_error(1));
  // Independent check of the standard error: residual w(T) - w(t) has variance T - t.
  const double expected_se = std::sqrt(0.5 / (n * 0.5));
  EXPECT_NEAR(fit.std_error(1), expected_se, 0.1 * expected_se);
}

TEST(Regression, RobustPredictionErrorMatchesHomoscedasticFormula) {
  const TimeGrid g(1.0, 10);
  const std::size_t n = 20000;
  const auto bm = sample_brownian(g, n, 3);
  const Eigen::MatrixXd w = bm.paths();
  const Eigen::RowVectorXd x = w.row(5);
  const Projection proj(linear_engine(), x);
  const Eigen::RowVectorXd se = proj.prediction_stderr(w.row(10));
  // Constant noise variance 0.5: Var(fit at x) = 0.5/n (1 + (x - mean)^2 / var(x)).
  const double m = x.mean();
  const double v = (x.array() - m).square().mean();
  for (std::size_t p = 0; p < n; p += 997) {
    const double d = x(static_cast<Eigen::Index>(p)) - m;
    const double expected = std::sqrt(0.5 / n * (1.0 + d * d / v));
    EXPECT_NEAR(se(static_cast<Eigen::Index>(p)), expected, 0.1 * expected);
  }
}

TEST(Regression, RankDeficientFallsBackWithWarning) {
  const TimeGrid g(1.0, 4);
  const auto bm = sample_brownian(g, 300, 4);
  Eigen::MatrixXd X(2, 300);
  X.row(0) = bm.paths().row(3);
  X.row(1) = 2.0 * X.row(0);
  ScopedWarningCollector warnings;
  const Eigen::RowVectorXd target = X.row(0) + X.row(1);
  const Eigen::RowVectorXd pred = cond_expect(linear_engine(), X, target);
  EXPECT_FALSE(warnings.messages().empty());
  EXPECT_LT((pred - target).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Regression, RidgeKeepsConstantsExact) {
  RegressionEngine e;
  e.ridge = 0.5;
  const TimeGrid g(1.0, 4);
  const auto bm = sample_brownian(g, 300, 5);
  const Eigen::MatrixXd X = bm.paths().middleRows(1, 1);
  const Eigen::RowVectorXd pred = cond_expect(e, X, Eigen::RowVectorXd::Constant(300, -2.5));
  EXPECT_TRUE((pred.array() == -2.5).all());
}

TEST(Lsmc, ConstantTerminalZeroGenerator) {
  const TimeGrid g(1.0, 16);
  const auto bm = sample_brownian(g, 1000, 6);
  const auto x = brownian_state(bm);
  const auto sol = solve_bsde_lsmc(Eigen::RowVectorXd::Constant(1000, 3.0), nullptr, x, bm);
  for (const auto& node : sol.y.values) EXPECT_TRUE((node.array() == 3.0).all());
  EXPECT_TRUE((sol.z.array() == 0.0).all());
  const Generator zero = [](std::size_t, std::size_t, double, const Eigen::VectorXd&, double, double) { return 0.0; };
  const auto sol2 = solve_bsde_lsmc(Eigen::RowVectorXd::Constant(1000, 3.0), zero, x, bm);
  for (const auto& node : sol2.y.values) EXPECT_TRUE((node.array() == 3.0).all());
  EXPECT_TRUE((sol2.z.array() == 0.0).all());
}

TEST(Lsmc, LinearDecayMatchesExponential) {
  const double c = 2.0, T = 1.0;
  const TimeGrid g(T, 64);
  const auto bm = sample_brownian(g, 200, 7);
  const auto x = brownian_state(bm);
  const Generator k = [](std::size_t, std::size_t, double, const Eigen::VectorXd&, double y, double) { return -y; };
  LsmcOptions opt;
  opt.ky_bound = 1.0;
  const auto sol = solve_bsde_lsmc(Eigen::RowVectorXd::Constant(200, c), k, x, bm, opt);
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const double oracle = c * std::exp(-(T - g.node(i)));
    EXPECT_NEAR(sol.y.values[i](0, 0), oracle, 2.0 * g.dt() * c) << "node " << i;
  }
}

TEST(Lsmc, DriftInZIsGirsanovShift) {
  const double c = 0.7, T = 1.0;
  const std::size_t n = 20000;
  const TimeGrid g(T, 32);
  const auto bm = sample_brownian(g, n, 8);
  const auto x = brownian_state(bm);
  const Generator k = [c](std::size_t, std::size_t, double, const Eigen::VectorXd&, double, double z) { return c * z; };
  LsmcOptions opt;
  opt.engine = linear_engine();
  const auto sol = solve_bsde_lsmc(x.node(g.n_steps()).row(0), k, x, bm, opt);
  const double tol = 3.0 * (std::sqrt(T) + c * T * std::sqrt(2.0)) / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const Eigen::RowVectorXd oracle = x.node(i).row(0).array() + c * (T - g.node(i));
    const double bias = (sol.y.values[i].row(0) - oracle).mean();
    EXPECT_LT(std::abs(bias), tol) << "node " << i;
  }
  EXPECT_NEAR(sol.y0(), c * T, tol);
}

TEST(Lsmc, StepSizeErrorWhenFixedPointCannotContract) {
  const TimeGrid g(1.0, 4);
  const auto bm = sample_brownian(g, 50, 9);
  const auto x = brownian_state(bm);
  LsmcOptions opt;
  opt.ky_bound = 8.0;
  const Generator k = [](std::size_t, std::size_t, double, const Eigen::VectorXd&, double y, double) { return 8.0 * y; };
  EXPECT_THROW(solve_bsde_lsmc(Eigen::RowVectorXd::Ones(50), k, x, bm, opt), NumericalError);
  opt.ky_bound = 0.0;
  EXPECT_THROW(solve_bsde_lsmc(Eigen::RowVectorXd::Ones(50), k, x, bm, opt), NumericalError);
}

TEST(Lsmc, LinearInTerminalWithZeroGenerator) {
  const TimeGrid g(1.0, 16);
  const auto bm = sample_brownian(g, 800, 10);
  const auto x = brownian_state(bm);
  const Eigen::RowVectorXd wT = x.node(16).row(0);
  const Eigen::RowVectorXd xi1 = wT.array().square();
  const Eigen::RowVectorXd xi2 = wT.array().sin();
  const auto s1 = solve_bsde_lsmc(xi1, nullptr, x, bm);
  const auto s2 = solve_bsde_lsmc(xi2, nullptr, x, bm);
  const auto s12 = solve_bsde_lsmc(2.0 * xi1 - 3.0 * xi2, nullptr, x, bm);
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const Eigen::RowVectorXd combo = 2.0 * s1.y.values[i].row(0) - 3.0 * s2.y.values[i].row(0);
    EXPECT_LT((s12.y.values[i].row(0) - combo).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Lsmc, ZeroGeneratorIsDiscreteMartingale) {
  const TimeGrid g(1.0, 8);
  const auto bm = sample_brownian(g, 500, 11);
  const auto x = brownian_state(bm);
  const auto sol = solve_bsde_lsmc(x.node(8).row(0).array().cos(), nullptr, x, bm);
  for (std::size_t i = 0; i < g.n_steps(); ++i) {
    const Eigen::RowVectorXd cond = Projection(RegressionEngine{}, x.node(i)).apply_row(sol.y.values[i + 1].row(0));
    EXPECT_TRUE((cond.array() == sol.y.values[i].row(0).array()).all()) << "step " << i;
  }
}

TEST(LinearExplicit, ConstantTerminalZeroCoefficients) {
  const TimeGrid g(1.0, 8);
  const auto bm = sample_brownian(g, 100, 12);
  const auto x = brownian_state(bm);
  const auto sol = solve_linear_bsde_explicit({}, {}, {}, Eigen::RowVectorXd::Constant(100, 1.5), x, bm);
  for (const auto& node : sol.y.values) EXPECT_TRUE((node.array() == 1.5).all());
  EXPECT_TRUE((sol.z.array() == 0.0).all());
}

TEST(LinearExplicit, DeterministicDiscountExact) {
  const double c = 1.2, r = 0.4, T = 1.0;
  const TimeGrid g(T, 32);
  const auto bm = sample_brownian(g, 100, 13);
  const auto x = brownian_state(bm);
  const auto sol = solve_linear_bsde_explicit({}, StepProcess::constant(32, r), {},
                                              Eigen::RowVectorXd::Constant(100, c), x, bm);
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const double oracle = c * std::exp(r * (T - g.node(i)));
    EXPECT_NEAR(sol.y.values[i](0, 17), oracle, 1e-12 * oracle);
    EXPECT_EQ(sol.y.values[i](0, 17), sol.y.values[i](0, 83));
  }
}

TEST(LinearExplicit, AgreesWithLsmcOnLinearGenerator) {
  const double k0 = 0.3, ky = -0.5, kz = 0.4, T = 1.0;
  const std::size_t n = 20000;
  const TimeGrid g(T, 32);
  const auto bm = sample_brownian(g, n, 14);
  const auto x = brownian_state(bm);
  const Eigen::RowVectorXd xi = x.node(32).row(0).array().square();
  const auto ex = solve_linear_bsde_explicit(StepProcess::constant(32, k0), StepProcess::constant(32, ky),
                                             StepProcess::constant(32, kz), xi, x, bm);
  const Generator k = [&](std::size_t, std::size_t, double, const Eigen::VectorXd&, double y, double z) {
    return k0 + ky * y + kz * z;
  };
  const auto ls = solve_bsde_lsmc(xi, k, x, bm);
  const double se = std::sqrt((xi.array() - xi.mean()).square().mean() / static_cast<double>(n));
  double worst = 0.0;
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    worst = std::max(worst, (ex.y.values[i] - ls.y.values[i]).cwiseAbs().mean());
  }
  EXPECT_LE(worst, 5.0 * (g.dt() + se));
}

namespace {

Trajectory reference(const GalerkinSystem& sys, const CoefficientSet& c, const BrownianEnsemble& bm,
                     const Eigen::VectorXd& x0) {
  const ControlProcess u = ControlProcess::constant(bm.n_steps(), 0.0);
  Trajectory tr;
  tr.x = solve_see(sys, c, u, bm, x0);
  Eigen::RowVectorXd hT(static_cast<Eigen::Index>(bm.n_paths()));
  for (std::size_t p = 0; p < bm.n_paths(); ++p) hT(static_cast<Eigen::Index>(p)) = c.h(tr.x.state(bm.n_steps(), p));
  tr.yz = solve_bsde_lsmc(hT, utility_generator(c, u), tr.x, bm);
  tr.u = u;
  return tr;
}

}  // namespace

TEST(FirstOrderAdjoint, ZeroDataGivesZero) {
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 0.2, 0.1, -0.5;
  const auto sys = GalerkinSystem::constant(A, 0.3 * Eigen::MatrixXd::Identity(2, 2));
  const auto c = CoefficientSet::zero(2);
  const TimeGrid g(1.0, 16);
  const auto bm = sample_brownian(g, 200, 15);
  const auto tr = reference(sys, c, bm, Eigen::Vector2d(1.0, -1.0));
  const auto adj = solve_first_order_adjoint(sys, c, tr, bm);
  for (const auto& node : adj.p.values) EXPECT_TRUE(node.isZero(0.0));
  for (const auto& q : adj.q) EXPECT_TRUE(q.isZero(0.0));
}

TEST(FirstOrderAdjoint, TerminalIsExactGradient) {
  const auto sys = GalerkinSystem::scalar(-0.5, 0.4);
  auto c = CoefficientSet::zero(1);
  c.h = [](const VectorXd& x) { return std::sin(x(0)); };
  c.h_x = [](const VectorXd& x) { return VectorXd::Constant(1, std::cos(x(0))); };
  const TimeGrid g(1.0, 8);
  const auto bm = sample_brownian(g, 100, 16);
  const auto tr = reference(sys, c, bm, Eigen::VectorXd::Constant(1, 0.5));
  const auto adj = solve_first_order_adjoint(sys, c, tr, bm);
  for (std::size_t p = 0; p < 100; ++p) EXPECT_EQ(adj.p.at(8, p), std::cos(tr.x.at(8, p)));
}

TEST(FirstOrderAdjoint, DeterministicMatchesRungeKutta) {
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 0.5, 0.2, -0.6;
  const double ky = 0.3, kz = 0.5, T = 1.0;
  const Eigen::Vector2d hx(1.0, -0.5);
  const auto sys = GalerkinSystem::constant(A, Eigen::MatrixXd::Zero(2, 2));
  auto c = CoefficientSet::zero(2);
  c.h_x = [hx](const VectorXd&) { return VectorXd(hx); };
  c.k_y = [ky](double, const VectorXd&, double, double, double) { return ky; };
  c.k_z = [kz](double, const VectorXd&, double, double, double) { return kz; };
  const TimeGrid g(T, 256);
  const auto bm = sample_brownian(g, 50, 17);
  const auto tr = reference(sys, c, bm, Eigen::Vector2d(0.3, 0.1));
  const auto adj = solve_first_order_adjoint(sys, c, tr, bm);
  // RK4 on -dp/dt = (A' + ky) p backward from p(T) = hx with 4096 steps.
  const Eigen::MatrixXd M = A.transpose() + ky * Eigen::MatrixXd::Identity(2, 2);
  const int fine = 4096;
  const double h = T / fine;
  Eigen::VectorXd p = hx;
  std::vector<Eigen::VectorXd> rk(static_cast<std::size_t>(fine) + 1);
  rk[static_cast<std::size_t>(fine)] = p;
  for (int j = fine; j > 0; --j) {
    const Eigen::VectorXd k1 = M * p, k2 = M * (p + 0.5 * h * k1), k3 = M * (p + 0.5 * h * k2), k4 = M * (p + h * k3);
    p += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    rk[static_cast<std::size_t>(j - 1)] = p;
  }
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const Eigen::VectorXd oracle = rk[i * 16];
    const Eigen::VectorXd got = adj.p.state(i, 0);
    EXPECT_LE((got - oracle).norm(), 1e-2 * oracle.norm()) << "node " << i;
    EXPECT_TRUE((adj.p.values[i].colwise() - got).isZero(0.0));
  }
  for (const auto& q : adj.q) EXPECT_TRUE(q.isZero(0.0));
}
