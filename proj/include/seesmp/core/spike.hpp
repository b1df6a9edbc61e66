#pragma once

#include <cstddef>
#include <functional>

#include "seesmp/core/errors.hpp"
#include "seesmp/core/time_grid.hpp"

namespace seesmp {

/// Spike window E = [t0, t0 + rho) carrying the control value v.
struct SpikeSpec {
  double t0 = 0.0;
  double rho = 0.0;
  double v = 0.0;
  // Optional adapted control to splice in instead of the constant v.
  std::function<double(std::size_t step, std::size_t path)> v_process;

  double value(std::size_t step, std::size_t path) const { return v_process ? v_process(step, path) : v; }
};

/// Grid steps [first, first + count) covered by a spike window.
struct SpikeWindow {
  std::size_t first = 0;
  std::size_t count = 0;

  bool contains(std::size_t step) const { return step >= first && step < first + count; }
  std::size_t end() const { return first + count; }
};

inline SpikeWindow spike_window(const SpikeSpec& spike, const TimeGrid& grid) {
  if (spike.rho < 0.0) throw InvalidArgument("SpikeSpec: rho must be nonnegative");
  if (spike.t0 < 0.0 || spike.t0 >= grid.t_end()) throw InvalidArgument("SpikeSpec: t0 must lie in [0, T)");
  SpikeWindow w;
  w.first = grid.index_of(spike.t0);
  w.count = grid.steps_in(spike.rho);
  if (w.first + w.count > grid.n_steps()) throw InvalidArgument("SpikeSpec: window exceeds the horizon");
  return w;
}

}  // namespace seesmp
