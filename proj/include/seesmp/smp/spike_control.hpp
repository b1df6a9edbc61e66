#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "seesmp/core/errors.hpp"
#include "seesmp/core/spike.hpp"
#include "seesmp/core/time_grid.hpp"
#include "seesmp/forward/path_ensemble.hpp"

namespace seesmp {

/// u^rho = v on E_rho, u_bar elsewhere. A deterministic u_bar with a constant
/// v stays deterministic; an adapted v (v_process) needs n_paths.
inline ControlProcess spike_control(const ControlProcess& ubar, const SpikeSpec& spike, const TimeGrid& grid,
                                    std::size_t n_paths = 1) {
  if (ubar.n_steps() != grid.n_steps()) throw InvalidArgument("spike_control: control does not match the grid");
  const SpikeWindow w = spike_window(spike, grid);
  if (w.count == 0) return ubar;
  const bool per_path = !ubar.deterministic() || static_cast<bool>(spike.v_process);
  const std::size_t N = ubar.deterministic() ? (per_path ? n_paths : 1) : static_cast<std::size_t>(ubar.values.cols());
  if (N == 0) throw InvalidArgument("spike_control: no paths");
  Eigen::MatrixXd u = ubar.deterministic() ? Eigen::MatrixXd(ubar.values.replicate(1, static_cast<Eigen::Index>(N)))
                                           : ubar.values;
  for (std::size_t i = w.first; i < w.end(); ++i) {
    for (std::size_t p = 0; p < N; ++p) u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = spike.value(i, p);
  }
  return ControlProcess(std::move(u));
}

}  // namespace seesmp
