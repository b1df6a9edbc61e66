#include <cmath>

#include <gtest/gtest.h>

#include "seesmp/core/order_report.hpp"
#include "seesmp/forward/flow.hpp"
#include "seesmp/forward/moments.hpp"
#include "seesmp/forward/see_solver.hpp"
#include "seesmp/forward/stochastic_exponential.hpp"

using namespace seesmp;

TEST(SolveSee, ZeroDynamicsKeepInitialState) {
  const TimeGrid g(1.0, 16);
  const auto bm = sample_brownian(g, 20, 1);
  Eigen::VectorXd v(3);
  v << 1.0, -2.0, 0.5;
  const auto x = solve_see(GalerkinSystem::zero(3), CoefficientSet::zero(3), ControlProcess::constant(16, 0.0), bm, v);
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    for (std::size_t p = 0; p < 20; ++p) EXPECT_TRUE((x.state(i, p).array() == v.array()).all());
  }
}

TEST(SolveSee, ConstantDriftIsRiemannSum) {
  const TimeGrid g(1.0, 8);
  const auto bm = sample_brownian(g, 5, 2);
  auto c = CoefficientSet::zero(1);
  c.a = [](double, const VectorXd&, double) { return VectorXd::Ones(1); };
  const auto x = solve_see(GalerkinSystem::zero(1), c, ControlProcess::constant(8, 0.0), bm, VectorXd::Zero(1));
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    for (std::size_t p = 0; p < 5; ++p) EXPECT_EQ(x.at(i, p), g.node(i));
  }
}

TEST(SolveSee, GeometricBrownianMean) {
  const TimeGrid g(1.0, 128);
  const std::size_t n = 20000;
  const auto bm = sample_brownian(g, n, 3);
  const auto x = solve_see(GalerkinSystem::scalar(0.1, 0.2), CoefficientSet::zero(1), ControlProcess::constant(128, 0.0),
                           bm, VectorXd::Ones(1));
  const auto e = mean_estimate(x.node(128).row(0));
  EXPECT_LT(std::abs(e.value - std::exp(0.1)), 3.0 * e.std_error);
}

TEST(SolveSee, BlowUpReportsStep) {
  const TimeGrid g(1.0, 8);
  const auto bm = sample_brownian(g, 2, 4);
  auto c = CoefficientSet::zero(1);
  c.a = [](double, const VectorXd& x, double) { return VectorXd::Constant(1, 1e200 * x(0) * x(0)); };
  try {
    solve_see(GalerkinSystem::zero(1), c, ControlProcess::constant(8, 0.0), bm, VectorXd::Ones(1));
    FAIL() << "expected blow-up";
  } catch (const NumericalError& e) {
    EXPECT_NE(e.step(), NumericalError::npos);
  }
}

TEST(SolveSee, SingularImplicitMatrixRejected) {
  const TimeGrid g(1.0, 4);
  const auto bm = sample_brownian(g, 2, 4);
  // I - dt*A = 0 for A = 4 I and dt = 0.25.
  EXPECT_THROW(solve_see(GalerkinSystem::scalar(4.0, 0.0), CoefficientSet::zero(1), ControlProcess::constant(4, 0.0), bm,
                         VectorXd::Ones(1)),
               NumericalError);
}

TEST(SolveSee, HomogeneousFlowIsLinear) {
  Eigen::MatrixXd A(2, 2), B(2, 2);
  A << -1.0, 0.3, 0.2, -2.0;
  B << 0.4, -0.1, 0.2, 0.3;
  const auto sys = GalerkinSystem::constant(A, B);
  const TimeGrid g(1.0, 32);
  const auto bm = sample_brownian(g, 50, 5);
  const auto u = ControlProcess::constant(32, 0.0);
  const auto c = CoefficientSet::zero(2);
  Eigen::VectorXd v1(2), v2(2);
  v1 << 1.0, 0.5;
  v2 << -0.3, 2.0;
  const auto x1 = solve_see(sys, c, u, bm, v1);
  const auto x2 = solve_see(sys, c, u, bm, v2);
  const auto x = solve_see(sys, c, u, bm, 2.0 * v1 - 3.0 * v2);
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const Eigen::MatrixXd combo = 2.0 * x1.node(i) - 3.0 * x2.node(i);
    EXPECT_LE((x.node(i) - combo).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + combo.cwiseAbs().maxCoeff()));
  }
}

TEST(FundamentalMatrix, IdentityFlowForZeroOperators) {
  const TimeGrid g(1.0, 8);
  const auto bm = sample_brownian(g, 10, 6);
  const auto L = fundamental_matrix(GalerkinSystem::zero(2), bm, 0.25);
  for (std::size_t s = 2; s <= 8; ++s) {
    for (std::size_t p = 0; p < 10; ++p) EXPECT_TRUE((L.at(s, p).array() == Eigen::MatrixXd::Identity(2, 2).array()).all());
  }
}

TEST(FundamentalMatrix, IdentityAtAnchor) {
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 0.5, 0.0, -1.5;
  const auto sys = GalerkinSystem::constant(A, 0.3 * Eigen::MatrixXd::Identity(2, 2));
  const TimeGrid g(1.0, 8);
  const auto bm = sample_brownian(g, 10, 6);
  const auto L = fundamental_matrix(sys, bm, 0.5);
  for (std::size_t p = 0; p < 10; ++p) EXPECT_TRUE((L.at(4, p).array() == Eigen::MatrixXd::Identity(2, 2).array()).all());
}

TEST(FundamentalMatrix, FlowComposition) {
  Eigen::MatrixXd A(2, 2), B(2, 2);
  A << -1.0, 0.3, 0.2, -2.0;
  B << 0.4, -0.1, 0.2, 0.3;
  const auto sys = GalerkinSystem::constant(A, B);
  const TimeGrid g(1.0, 32);
  const auto bm = sample_brownian(g, 30, 7);
  const auto L0 = fundamental_matrix(sys, bm, 0.0);
  const auto Lr = fundamental_matrix(sys, bm, 0.375);
  const std::size_t r = 12;
  for (std::size_t s = r; s <= 32; ++s) {
    for (std::size_t p = 0; p < 30; ++p) {
      const Eigen::MatrixXd composed = Lr.at(s, p) * L0.at(r, p);
      EXPECT_LE((L0.at(s, p) - composed).norm(), 1e-12 * (1.0 + composed.norm()));
    }
  }
}

namespace {
// Mean over paths of |L_num(T) - L_exact(T)| / L_exact(T) for scalar dL = aL dt + bL dw.
double scalar_flow_error(const BrownianEnsemble& bm, double a, double b) {
  const auto L = fundamental_matrix(GalerkinSystem::scalar(a, b), bm, 0.0);
  const std::size_t N = bm.n_steps();
  double acc = 0.0;
  for (std::size_t p = 0; p < bm.n_paths(); ++p) {
    double w = 0.0;
    for (std::size_t i = 0; i < N; ++i) w += bm.dw(p, i);
    const double exact = std::exp((a - 0.5 * b * b) * bm.grid().t_end() + b * w);
    acc += std::abs(L.at(N, p)(0, 0) - exact) / exact;
  }
  return acc / static_cast<double>(bm.n_paths());
}
}  // namespace

TEST(FundamentalMatrix, ScalarFlowConvergesToStochasticExponential) {
  const auto fine = sample_brownian(TimeGrid(1.0, 512), 4000, 8);
  std::vector<double> dts, errs;
  for (std::size_t f : {8u, 4u, 2u, 1u}) {
    const auto bm = f == 1 ? fine : fine.coarsened(f);
    dts.push_back(bm.grid().dt());
    errs.push_back(scalar_flow_error(bm, -0.5, 0.4));
  }
  for (std::size_t j = 1; j < errs.size(); ++j) EXPECT_LT(errs[j], errs[j - 1]);
  // Euler-Maruyama with multiplicative noise converges pathwise at rate 1/2:
  // log L_num - log L_exact contains b^2/2 * (T - sum dw^2), whose size is b^2 sqrt(T dt / 2).
  const auto fit = fit_order(dts, errs);
  EXPECT_NEAR(fit.slope, 0.5, 0.15);
}

TEST(StochasticExponential, ZeroExponentIsOne) {
  const auto bm = sample_brownian(TimeGrid(1.0, 10), 7, 9);
  const auto l = stochastic_exponential(StepProcess::constant(10, 0.0), StepProcess::constant(10, 0.0), bm);
  for (const auto& node : l.values) EXPECT_TRUE((node.array() == 1.0).all());
}

TEST(StochasticExponential, MartingaleMeanAndPositivity) {
  const auto bm = sample_brownian(TimeGrid(1.0, 64), 40000, 10);
  const auto l = stochastic_exponential(StepProcess::constant(64, 0.8), StepProcess(), bm);
  EXPECT_TRUE((l.node(0).array() == 1.0).all());
  for (const auto& node : l.values) EXPECT_TRUE((node.array() > 0.0).all());
  const auto e = mean_estimate(l.node(64).row(0));
  EXPECT_LT(std::abs(e.value - 1.0), 3.0 * e.std_error);
}

TEST(StochasticExponential, DeterministicRateIsExactExponential) {
  const auto bm = sample_brownian(TimeGrid(2.0, 20), 3, 11);
  const auto l = stochastic_exponential(StepProcess(), StepProcess::constant(20, -0.7), bm);
  for (std::size_t i = 0; i <= 20; ++i) EXPECT_NEAR(l.at(i, 1), std::exp(-0.7 * bm.grid().node(i)), 1e-14);
}

TEST(TransformIdentity, NullTransformIsExactlyZero) {
  Eigen::MatrixXd A(2, 2), B(2, 2);
  A << -1.0, 0.3, 0.2, -2.0;
  B << 0.4, -0.1, 0.2, 0.3;
  const auto bm = sample_brownian(TimeGrid(1.0, 16), 20, 12);
  EXPECT_EQ(check_transform_identity(GalerkinSystem::constant(A, B), StepProcess::constant(16, 0.0),
                                     StepProcess::constant(16, 0.0), bm, {0, 5}),
            0.0);
}

namespace {
// Closed forms for A = B = 0: the transformed scheme gives prod(1 + mu2 dt + mu1 dw),
// the weight is exp(sum (mu2 - mu1^2/2) dt + mu1 dw), and L = 1.
double closed_form_scalar_error(const BrownianEnsemble& bm, double mu1, double mu2) {
  const double dt = bm.grid().dt();
  double worst = 0.0;
  for (std::size_t p = 0; p < bm.n_paths(); ++p) {
    double prod = 1.0, expo = 0.0;
    for (std::size_t i = 0; i < bm.n_steps(); ++i) {
      prod *= 1.0 + mu2 * dt + mu1 * bm.dw(p, i);
      expo += (mu2 - 0.5 * mu1 * mu1) * dt + mu1 * bm.dw(p, i);
      worst = std::max(worst, std::abs(prod - std::exp(expo)) / 2.0);
    }
  }
  return worst;
}
}  // namespace

TEST(TransformIdentity, ScalarClosedFormAndRate) {
  const auto fine = sample_brownian(TimeGrid(1.0, 256), 500, 13);
  std::vector<double> dts, lib, oracle;
  for (std::size_t f : {4u, 2u, 1u}) {
    const auto bm = f == 1 ? fine : fine.coarsened(f);
    const std::size_t n = bm.n_steps();
    dts.push_back(bm.grid().dt());
    lib.push_back(check_transform_identity(GalerkinSystem::zero(1), StepProcess::constant(n, 0.6),
                                           StepProcess::constant(n, 0.2), bm));
    oracle.push_back(closed_form_scalar_error(bm, 0.6, 0.2));
  }
  for (std::size_t j = 0; j < lib.size(); ++j) EXPECT_NEAR(lib[j], oracle[j], 1e-12 * (1.0 + oracle[j]));
  EXPECT_NEAR(fit_order(dts, lib).slope, fit_order(dts, oracle).slope, 1e-6);
  EXPECT_GT(fit_order(dts, lib).slope, 0.0);
}

TEST(TransformIdentity, DiagonalSystemDecouples) {
  const auto bm = sample_brownian(TimeGrid(1.0, 32), 40, 14);
  Eigen::MatrixXd A = Eigen::Vector2d(-1.0, -0.3).asDiagonal();
  Eigen::MatrixXd B = Eigen::Vector2d(0.2, 0.5).asDiagonal();
  const auto mu1 = StepProcess::constant(32, 0.4), mu2 = StepProcess::constant(32, -0.1);
  const auto base = LinearFlow::from_system(GalerkinSystem::constant(A, B), bm.grid());
  const auto L2 = fundamental_matrix(base.shifted(mu1, mu2, mu1), bm, 0);
  for (int c = 0; c < 2; ++c) {
    const auto sc = LinearFlow::from_system(GalerkinSystem::scalar(A(c, c), B(c, c)), bm.grid());
    const auto L1 = fundamental_matrix(sc.shifted(mu1, mu2, mu1), bm, 0);
    for (std::size_t s = 0; s <= 32; ++s) {
      for (std::size_t p = 0; p < 40; ++p) {
        EXPECT_NEAR(L2.at(s, p)(c, c), L1.at(s, p)(0, 0), 1e-13);
        EXPECT_EQ(L2.at(s, p)(c, 1 - c), 0.0);
      }
    }
  }
  const double e2 = check_transform_identity(GalerkinSystem::constant(A, B), mu1, mu2, bm);
  const double e_a = check_transform_identity(GalerkinSystem::scalar(A(0, 0), B(0, 0)), mu1, mu2, bm);
  const double e_b = check_transform_identity(GalerkinSystem::scalar(A(1, 1), B(1, 1)), mu1, mu2, bm);
  EXPECT_GT(e2, 0.0);
  EXPECT_LE(e2, std::max(e_a, e_b) * 1.5);
}

TEST(Moments, EmptyEnsembleRejected) {
  PathEnsemble empty;
  EXPECT_THROW(moment_estimate(empty, 1.0), InvalidArgument);
  EXPECT_THROW(moment_estimate(PathEnsemble(TimeGrid(1.0, 2), 3, 1), 0.5), InvalidArgument);
}

TEST(Moments, ZeroPathsGiveZero) {
  const auto e = moment_estimate(PathEnsemble(TimeGrid(1.0, 4), 10, 2), 1.5);
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(Moments, ConstantPathExact) {
  PathEnsemble x(TimeGrid(1.0, 4), 6, 2);
  for (auto& node : x.values) node.colwise() = Eigen::Vector2d(3.0, 4.0);
  const auto e = moment_estimate(x, 1.5);
  EXPECT_EQ(e.value, std::pow(25.0, 1.5));
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(Moments, SupDominatesTerminalSecondMoment) {
  const double a = 0.1, b = 0.3;
  const TimeGrid g(1.0, 128);
  const auto bm = sample_brownian(g, 20000, 15);
  const auto x = solve_see(GalerkinSystem::scalar(a, b), CoefficientSet::zero(1), ControlProcess::constant(128, 0.0), bm,
                           VectorXd::Ones(1));
  const auto e = moment_estimate(x, 1.0);
  EXPECT_GE(e.value + 3.0 * e.std_error, std::exp((2 * a + b * b) * 1.0));
}

TEST(Moments, FourthMomentBoundStableUnderRefinement) {
  Eigen::MatrixXd A(2, 2), B(2, 2);
  A << -1.0, 0.3, 0.2, -2.0;
  B << 0.4, -0.1, 0.2, 0.3;
  const auto sys = GalerkinSystem::constant(A, B);
  const auto fine = sample_brownian(TimeGrid(1.0, 128), 4000, 16);
  std::vector<double> bounds;
  for (std::size_t f : {4u, 1u}) {
    const auto bm = f == 1 ? fine : fine.coarsened(f);
    const auto L = fundamental_matrix(sys, bm, 0);
    double worst = 0.0;
    for (int k = 0; k < 8; ++k) {
      const Eigen::Vector2d u(std::cos(k * M_PI / 8), std::sin(k * M_PI / 8));
      double acc = 0.0;
      for (std::size_t p = 0; p < bm.n_paths(); ++p) acc += std::pow((L.at(bm.n_steps(), p) * u).squaredNorm(), 2);
      worst = std::max(worst, acc / static_cast<double>(bm.n_paths()));
    }
    bounds.push_back(worst);
  }
  EXPECT_NEAR(bounds[1] / bounds[0], 1.0, 0.1);
}
