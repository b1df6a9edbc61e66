#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

#include <Eigen/Dense>

#include "seesmp/core/errors.hpp"
#include "seesmp/core/parallel.hpp"
#include "seesmp/core/time_grid.hpp"

namespace seesmp {

namespace rng {

// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based draw: a pure function of (seed, stream, counter, lane).
constexpr std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                                     std::uint64_t lane) {
  std::uint64_t k = mix64(seed ^ 0x5851F42D4C957F2DULL);
  k = mix64(k ^ (stream * 0xD6E8FEB86659FD93ULL));
  k = mix64(k ^ (counter * 0xCA5A826395121157ULL + lane));
  return k;
}

/// Uniform in the open interval (0, 1).
constexpr double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two counter-keyed uniforms.
inline double standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const double u1 = to_unit(counter_bits(seed, stream, counter, 0));
  const double u2 = to_unit(counter_bits(seed, stream, counter, 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rng

/// Brownian increments dw(path, step) ~ N(0, dt) on a TimeGrid.
///
/// Each increment is a pure function of (seed, path, step); no state is
/// shared between paths, so generation order and threading never change the
/// values.
class BrownianEnsemble {
 public:
  BrownianEnsemble() = default;

  BrownianEnsemble(TimeGrid grid, std::size_t n_paths, std::uint64_t seed)
      : grid_(grid), n_paths_(n_paths), seed_(seed) {
    if (n_paths == 0) throw InvalidArgument("BrownianEnsemble: n_paths must be at least 1");
    increments_.resize(static_cast<Eigen::Index>(grid.n_steps()), static_cast<Eigen::Index>(n_paths));
    const double sd = std::sqrt(grid.dt());
    parallel_for(n_paths, [&](std::size_t p) {
      for (std::size_t i = 0; i < grid.n_steps(); ++i) {
        increments_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
            sd * rng::standard_normal(seed, p, i);
      }
    });
  }

  /// Builds an ensemble from explicit increments (n_steps x n_paths).
  static BrownianEnsemble from_increments(TimeGrid grid, Eigen::MatrixXd increments, std::uint64_t seed = 0) {
    if (increments.rows() != static_cast<Eigen::Index>(grid.n_steps()) || increments.cols() == 0) {
      throw InvalidArgument("BrownianEnsemble: increment matrix does not match the grid");
    }
    BrownianEnsemble e;
    e.grid_ = grid;
    e.n_paths_ = static_cast<std::size_t>(increments.cols());
    e.seed_ = seed;
    e.increments_ = std::move(increments);
    return e;
  }

  const TimeGrid& grid() const { return grid_; }
  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_steps() const { return grid_.n_steps(); }
  std::uint64_t seed() const { return seed_; }

  double dw(std::size_t path, std::size_t step) const {
    return increments_(static_cast<Eigen::Index>(step), static_cast<Eigen::Index>(path));
  }

  /// Increments of one step across all paths.
  auto step_increments(std::size_t step) const { return increments_.row(static_cast<Eigen::Index>(step)); }

  const Eigen::MatrixXd& increments() const { return increments_; }

  /// w(t_i) for every path, shape n_nodes x n_paths.
  Eigen::MatrixXd paths() const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid_.n_nodes()),
                                              static_cast<Eigen::Index>(n_paths_));
    for (Eigen::Index i = 0; i < increments_.rows(); ++i) w.row(i + 1) = w.row(i) + increments_.row(i);
    return w;
  }

  /// Same Brownian paths on a grid with factor-times fewer steps: coarse
  /// increments are sums of consecutive fine increments.
  BrownianEnsemble coarsened(std::size_t factor) const {
    const TimeGrid coarse = grid_.coarsened(factor);
    Eigen::MatrixXd inc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(coarse.n_steps()),
                                                static_cast<Eigen::Index>(n_paths_));
    for (std::size_t i = 0; i < coarse.n_steps(); ++i) {
      for (std::size_t j = 0; j < factor; ++j) {
        inc.row(static_cast<Eigen::Index>(i)) += increments_.row(static_cast<Eigen::Index>(i * factor + j));
      }
    }
    return from_increments(coarse, std::move(inc), seed_);
  }

  /// First n paths (used to subsample an ensemble for cheaper stages).
  BrownianEnsemble head(std::size_t n) const {
    if (n == 0 || n > n_paths_) throw InvalidArgument("BrownianEnsemble: invalid head size");
    return from_increments(grid_, increments_.leftCols(static_cast<Eigen::Index>(n)), seed_);
  }

 private:
  TimeGrid grid_;
  std::size_t n_paths_ = 0;
  std::uint64_t seed_ = 0;
  Eigen::MatrixXd increments_;  // n_steps x n_paths
};

inline BrownianEnsemble sample_brownian(const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed) {
  return BrownianEnsemble(grid, n_paths, seed);
}

}  // namespace seesmp
