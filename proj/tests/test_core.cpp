#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "seesmp/core/assumptions.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/core/diagnostics.hpp"
#include "seesmp/core/order_report.hpp"
#include "seesmp/core/spike.hpp"
#include "seesmp/core/time_grid.hpp"

using namespace seesmp;

TEST(TimeGrid, FourStepsOnUnitHorizon) {
  const TimeGrid g = build_time_grid(1.0, 4);
  const std::vector<double> expected{0.0, 0.25, 0.5, 0.75, 1.0};
  EXPECT_EQ(g.nodes(), expected);
}

TEST(TimeGrid, DegenerateSingleStep) {
  const TimeGrid g = build_time_grid(1.0, 1);
  const std::vector<double> expected{0.0, 1.0};
  EXPECT_EQ(g.nodes(), expected);
}

TEST(TimeGrid, HalfHorizonFiveSteps) {
  const TimeGrid g = build_time_grid(0.5, 5);
  EXPECT_EQ(g.dt(), 0.1);
  EXPECT_EQ(g.node(3), 3 * 0.1);
  EXPECT_NEAR(g.node(3), 0.3, 1e-16);
  EXPECT_EQ(g.node(5), 0.5);
}

TEST(TimeGrid, RejectsNonPositiveArguments) {
  EXPECT_THROW(build_time_grid(0.0, 4), InvalidArgument);
  EXPECT_THROW(build_time_grid(-1.0, 4), InvalidArgument);
  EXPECT_THROW(build_time_grid(1.0, 0), InvalidArgument);
}

TEST(TimeGrid, NodesStrictlyIncreasing) {
  const TimeGrid g(2.0, 37);
  const auto t = g.nodes();
  EXPECT_EQ(t.front(), 0.0);
  EXPECT_EQ(t.back(), 2.0);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LT(t[i - 1], t[i]);
}

TEST(Brownian, SameArgumentsGiveIdenticalIncrements) {
  const TimeGrid g(1.0, 16);
  const auto a = sample_brownian(g, 50, 7);
  const auto b = sample_brownian(g, 50, 7);
  EXPECT_TRUE((a.increments().array() == b.increments().array()).all());
}

TEST(Brownian, DistinctSeedsDiffer) {
  const TimeGrid g(1.0, 16);
  const auto a = sample_brownian(g, 50, 7);
  const auto b = sample_brownian(g, 50, 8);
  EXPECT_TRUE((a.increments().array() != b.increments().array()).any());
}

TEST(Brownian, IncrementIsPureFunctionOfSeedPathStep) {
  const TimeGrid g(1.0, 16);
  const auto small = sample_brownian(g, 3, 11);
  const auto large = sample_brownian(g, 40, 11);
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(small.dw(p, i), large.dw(p, i));
  }
  set_thread_count(4);
  const auto threaded = sample_brownian(g, 40, 11);
  set_thread_count(1);
  EXPECT_TRUE((threaded.increments().array() == large.increments().array()).all());
}

TEST(Brownian, PerStepVarianceWithinChiSquareBand) {
  const std::size_t n = 100000;
  const TimeGrid g(1.0, 100);
  const double dt = g.dt();
  // Sample variance of n Gaussians has sd dt*sqrt(2/(n-1)); the band
  // [0.0095, 0.0105] is more than 11 such sd wide on either side, so a miss
  // on any of the 100 steps has probability far below 1e-20.
  const double sd = dt * std::sqrt(2.0 / static_cast<double>(n - 1));
  ASSERT_GT(0.0005 / sd, 11.0);
  const auto bm = sample_brownian(g, n, 2024);
  for (std::size_t i = 0; i < g.n_steps(); ++i) {
    const Eigen::RowVectorXd row = bm.step_increments(i);
    const double mean = row.mean();
    const double var = (row.array() - mean).square().sum() / static_cast<double>(n - 1);
    EXPECT_GE(var, 0.0095);
    EXPECT_LE(var, 0.0105);
    // Smoke check on the mean: within 5 standard errors of 0.
    EXPECT_LT(std::abs(mean), 5.0 * std::sqrt(dt / static_cast<double>(n)));
  }
}

TEST(Brownian, CoarseningSumsFineIncrements) {
  const TimeGrid g(1.0, 8);
  const auto fine = sample_brownian(g, 5, 3);
  const auto coarse = fine.coarsened(4);
  ASSERT_EQ(coarse.n_steps(), 2u);
  for (std::size_t p = 0; p < 5; ++p) {
    const double s = fine.dw(p, 0) + fine.dw(p, 1) + fine.dw(p, 2) + fine.dw(p, 3);
    EXPECT_DOUBLE_EQ(coarse.dw(p, 0), s);
  }
  EXPECT_THROW(fine.coarsened(3), InvalidArgument);
}

namespace {
CoefficientSet square_drift() {
  CoefficientSet c = CoefficientSet::zero(1);
  c.a = [](double, const VectorXd& x, double) { return VectorXd::Constant(1, x(0) * x(0)); };
  c.a_x = [](double, const VectorXd& x, double) { return MatrixXd::Constant(1, 1, 2 * x(0)); };
  c.a_xx = [](double, const VectorXd&, double) { return std::vector<MatrixXd>{MatrixXd::Constant(1, 1, 2.0)}; };
  c.derivative_bound = 1e6;
  return c;
}
}  // namespace

TEST(Assumptions, NegativeIdentityIsCoercive) {
  const auto sys = GalerkinSystem::constant(-Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(3, 3), 1.0, 1.0);
  const auto r = validate_assumptions(sys, CoefficientSet::zero(3), 20);
  EXPECT_TRUE(r.get("coercivity").passed);
  EXPECT_TRUE(r.get("quasi_skew_symmetry").passed);
}

TEST(Assumptions, IdentityDiffusionBreaksQuasiSkewSymmetry) {
  const auto sys = GalerkinSystem::constant(-Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2), 0.1, 0.5);
  const auto r = validate_assumptions(sys, CoefficientSet::zero(2), 5);
  EXPECT_FALSE(r.get("quasi_skew_symmetry").passed);
  EXPECT_GT(r.get("quasi_skew_symmetry").worst_value, 0.0);
  EXPECT_FALSE(r.all_passed());
}

TEST(Assumptions, ExactDerivativePassesGradientCheck) {
  const auto sys = GalerkinSystem::scalar(-1.0, 0.0, 1.0, 1.0);
  const auto r = validate_assumptions(sys, square_drift(), 25);
  EXPECT_TRUE(r.get("gradient_consistency").passed);
  EXPECT_LT(r.get("gradient_consistency").worst_value, 1e-4);
}

TEST(Assumptions, WrongDerivativeIsCaught) {
  auto c = square_drift();
  c.a_x = [](double, const VectorXd& x, double) { return MatrixXd::Constant(1, 1, 2.1 * x(0)); };
  const auto r = validate_assumptions(GalerkinSystem::scalar(-1.0, 0.0, 1.0, 1.0), c, 10);
  EXPECT_FALSE(r.get("gradient_consistency").passed);
}

TEST(Assumptions, MissingCallbackIsConfigurationError) {
  auto c = CoefficientSet::zero(1);
  c.k_hess = nullptr;
  EXPECT_THROW(validate_assumptions(GalerkinSystem::scalar(-1.0, 0.0, 1.0, 1.0), c, 3), ConfigurationError);
}

TEST(Assumptions, MoreProbesNeverFlipFailToPass) {
  // Rotation-plus-shear B whose violation only shows on some directions.
  Eigen::MatrixXd B(2, 2);
  B << 0.3, 1.0, -1.0, -0.3;
  const auto sys = GalerkinSystem::constant(-Eigen::MatrixXd::Identity(2, 2), B, 0.5, 0.29);
  bool failed_before = false;
  for (std::size_t m = 0; m < 30; ++m) {
    const bool passed = validate_assumptions(sys, CoefficientSet::zero(2), m).get("quasi_skew_symmetry").passed;
    if (failed_before) {
      EXPECT_FALSE(passed) << "probes=" << m;
    }
    failed_before = failed_before || !passed;
  }
  EXPECT_TRUE(failed_before);
}

TEST(Spike, AlignedWindow) {
  const TimeGrid g(1.0, 16);
  const auto w = spike_window(SpikeSpec{0.25, 0.125, 1.0, {}}, g);
  EXPECT_EQ(w.first, 4u);
  EXPECT_EQ(w.count, 2u);
  EXPECT_TRUE(w.contains(5));
  EXPECT_FALSE(w.contains(6));
}

TEST(Spike, MisalignedRhoRejected) {
  const TimeGrid g(1.0, 16);
  EXPECT_THROW(spike_window(SpikeSpec{0.25, 0.1, 1.0, {}}, g), InvalidArgument);
  EXPECT_THROW(spike_window(SpikeSpec{0.2, 0.125, 1.0, {}}, g), InvalidArgument);
  EXPECT_THROW(spike_window(SpikeSpec{0.875, 0.25, 1.0, {}}, g), InvalidArgument);
  EXPECT_THROW(spike_window(SpikeSpec{0.25, -0.0625, 1.0, {}}, g), InvalidArgument);
}

TEST(FitOrder, ExactPowerLaw) {
  const std::vector<double> rho{0.5, 0.25, 0.125, 0.0625};
  std::vector<double> e;
  for (double r : rho) e.push_back(r * r);
  const auto f = fit_order(rho, e);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
}

TEST(FitOrder, ConstantErrorHasZeroSlope) {
  const std::vector<double> rho{0.5, 0.25, 0.125, 0.0625};
  const auto f = fit_order(rho, std::vector<double>(4, 3.0));
  EXPECT_NEAR(f.slope, 0.0, 1e-12);
}

TEST(FitOrder, NoisyPowerLaw) {
  std::vector<double> rho, e;
  for (int j = 0; j < 8; ++j) {
    const double r = std::pow(0.5, j);
    // Uniform noise in [-1, 1] scaled by 5%.
    const double noise = 2.0 * rng::to_unit(rng::counter_bits(99, static_cast<std::uint64_t>(j), 0, 0)) - 1.0;
    rho.push_back(r);
    e.push_back(std::pow(r, 1.5) * (1.0 + 0.05 * noise));
  }
  // Worst case: log(1.05/0.95) spread over a log-rho range of 7 log 2 moves the slope by < 0.03.
  const auto f = fit_order(rho, e);
  EXPECT_GE(f.slope, 1.35);
  EXPECT_LE(f.slope, 1.65);
}

TEST(FitOrder, DropsNonPositiveErrorsWithWarning) {
  ScopedWarningCollector warnings;
  const std::vector<double> rho{1.0, 0.5, 0.25, 0.125};
  const auto f = fit_order(rho, {1.0, 0.0, 0.0625, 0.015625});
  EXPECT_EQ(f.n_used, 3u);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_EQ(warnings.messages().size(), 1u);
  EXPECT_THROW(fit_order(rho, {1.0, 0.0, -1.0, 0.1}), InsufficientDataError);
}

TEST(OrderVerdict, Rules) {
  const std::vector<double> rho{0.5, 0.25, 0.125, 0.0625};
  std::vector<double> e1, e2;
  for (double r : rho) {
    e1.push_back(r);
    e2.push_back(std::pow(r, 1.2));
  }
  EXPECT_TRUE(evaluate_order("a", rho, e1, {}, 1.0, OrderClaim::BigO).passed);
  EXPECT_FALSE(evaluate_order("b", rho, e1, {}, 1.0, OrderClaim::LittleO).passed);
  EXPECT_FALSE(evaluate_order("c", rho, e2, {}, 1.0, OrderClaim::LittleO).passed);
  EXPECT_TRUE(evaluate_order("d", rho, e2, {}, 0.9, OrderClaim::LittleO).passed);
  const auto z = evaluate_order("z", rho, std::vector<double>(4, 0.0), {}, 1.0, OrderClaim::BigO);
  EXPECT_TRUE(z.exact_zero);
  EXPECT_EQ(z.verdict_string(), "exact-zero");
}
