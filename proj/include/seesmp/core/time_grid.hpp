#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "seesmp/core/errors.hpp"

namespace seesmp {

/// Uniform mesh 0 = t_0 < t_1 < ... < t_n = T.
class TimeGrid {
 public:
  TimeGrid() = default;

  TimeGrid(double horizon, std::size_t n_steps) : horizon_(horizon), n_steps_(n_steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw InvalidArgument("TimeGrid: horizon must be positive and finite");
    }
    if (n_steps == 0) throw InvalidArgument("TimeGrid: n_steps must be at least 1");
    dt_ = horizon / static_cast<double>(n_steps);
  }

  double t_start() const { return 0.0; }
  double t_end() const { return horizon_; }
  double horizon() const { return horizon_; }
  std::size_t n_steps() const { return n_steps_; }
  std::size_t n_nodes() const { return n_steps_ + 1; }
  double dt() const { return dt_; }

  /// t_i = i * dt, with the last node pinned to T exactly.
  double node(std::size_t i) const {
    if (i >= n_steps_) return horizon_;
    return static_cast<double>(i) * dt_;
  }

  std::vector<double> nodes() const {
    std::vector<double> out(n_nodes());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = node(i);
    return out;
  }

  /// Index of the node equal to t (within 1e-9 dt); throws when t is off-grid.
  std::size_t index_of(double t) const {
    const double r = t / dt_;
    const double k = std::round(r);
    if (std::abs(r - k) > 1e-9 || k < 0.0 || k > static_cast<double>(n_steps_)) {
      throw InvalidArgument("TimeGrid: time is not a grid node");
    }
    return static_cast<std::size_t>(k);
  }

  /// Number of steps covered by a duration; throws unless it is an integer multiple of dt.
  std::size_t steps_in(double duration) const {
    if (duration < 0.0) throw InvalidArgument("TimeGrid: negative duration");
    const double r = duration / dt_;
    const double k = std::round(r);
    if (std::abs(r - k) > 1e-9) {
      throw InvalidArgument("TimeGrid: duration is not an integer multiple of dt");
    }
    return static_cast<std::size_t>(k);
  }

  /// Grid with the same horizon and n_steps / factor steps.
  TimeGrid coarsened(std::size_t factor) const {
    if (factor == 0 || n_steps_ % factor != 0) {
      throw InvalidArgument("TimeGrid: coarsening factor must divide n_steps");
    }
    return TimeGrid(horizon_, n_steps_ / factor);
  }

  bool operator==(const TimeGrid& other) const {
    return horizon_ == other.horizon_ && n_steps_ == other.n_steps_;
  }

 private:
  double horizon_ = 1.0;
  std::size_t n_steps_ = 1;
  double dt_ = 1.0;
};

inline TimeGrid build_time_grid(double horizon, std::size_t n_steps) { return TimeGrid(horizon, n_steps); }

}  // namespace seesmp
