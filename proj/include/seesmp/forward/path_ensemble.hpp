#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/core/errors.hpp"
#include "seesmp/core/time_grid.hpp"

namespace seesmp {

/// State trajectories: one dim x n_paths matrix per grid node.
struct PathEnsemble {
  TimeGrid grid;
  std::size_t n_paths = 0;
  int dim = 0;
  std::vector<Eigen::MatrixXd> values;

  PathEnsemble() = default;

  PathEnsemble(TimeGrid g, std::size_t paths, int d)
      : grid(g), n_paths(paths), dim(d),
        values(g.n_nodes(), Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(paths))) {}

  static PathEnsemble from_nodes(TimeGrid g, std::vector<Eigen::MatrixXd> nodes) {
    if (nodes.size() != g.n_nodes() || nodes.empty()) {
      throw InvalidArgument("PathEnsemble: node count does not match the grid");
    }
    PathEnsemble e;
    e.grid = g;
    e.dim = static_cast<int>(nodes.front().rows());
    e.n_paths = static_cast<std::size_t>(nodes.front().cols());
    e.values = std::move(nodes);
    return e;
  }

  std::size_t n_nodes() const { return values.size(); }

  const Eigen::MatrixXd& node(std::size_t i) const { return values[i]; }
  Eigen::MatrixXd& node(std::size_t i) { return values[i]; }

  Eigen::VectorXd state(std::size_t i, std::size_t path) const {
    return values[i].col(static_cast<Eigen::Index>(path));
  }

  double at(std::size_t i, std::size_t path, int comp = 0) const {
    return values[i](comp, static_cast<Eigen::Index>(path));
  }

  /// Scalar trajectories as an n_nodes x n_paths matrix (component comp).
  Eigen::MatrixXd component(int comp = 0) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n_nodes()), static_cast<Eigen::Index>(n_paths));
    for (std::size_t i = 0; i < n_nodes(); ++i) out.row(static_cast<Eigen::Index>(i)) = values[i].row(comp);
    return out;
  }

  PathEnsemble operator-(const PathEnsemble& other) const {
    if (!(grid == other.grid) || n_paths != other.n_paths || dim != other.dim) {
      throw InvalidArgument("PathEnsemble: shape mismatch");
    }
    PathEnsemble out = *this;
    for (std::size_t i = 0; i < values.size(); ++i) out.values[i] -= other.values[i];
    return out;
  }

  PathEnsemble operator+(const PathEnsemble& other) const {
    if (!(grid == other.grid) || n_paths != other.n_paths || dim != other.dim) {
      throw InvalidArgument("PathEnsemble: shape mismatch");
    }
    PathEnsemble out = *this;
    for (std::size_t i = 0; i < values.size(); ++i) out.values[i] += other.values[i];
    return out;
  }
};

/// Per-step scalar process (controls, weights, transform coefficients):
/// an n_steps x 1 matrix when deterministic, n_steps x n_paths otherwise.
struct StepProcess {
  Eigen::MatrixXd values;

  StepProcess() = default;
  explicit StepProcess(Eigen::MatrixXd v) : values(std::move(v)) {}

  static StepProcess constant(std::size_t n_steps, double c) {
    return StepProcess(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n_steps), 1, c));
  }

  static StepProcess from_steps(const std::vector<double>& v) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return StepProcess(std::move(m));
  }

  /// Piecewise-constant on n_intervals equal intervals (n_steps must be divisible).
  static StepProcess piecewise(std::size_t n_steps, const std::vector<double>& interval_values) {
    const std::size_t m = interval_values.size();
    if (m == 0 || n_steps % m != 0) {
      throw InvalidArgument("StepProcess: interval count must divide the number of steps");
    }
    Eigen::MatrixXd v(static_cast<Eigen::Index>(n_steps), 1);
    const std::size_t per = n_steps / m;
    for (std::size_t i = 0; i < n_steps; ++i) v(static_cast<Eigen::Index>(i), 0) = interval_values[i / per];
    return StepProcess(std::move(v));
  }

  bool empty() const { return values.size() == 0; }
  bool deterministic() const { return values.cols() <= 1; }
  std::size_t n_steps() const { return static_cast<std::size_t>(values.rows()); }

  double at(std::size_t step, std::size_t path) const {
    return values(static_cast<Eigen::Index>(step), values.cols() == 1 ? 0 : static_cast<Eigen::Index>(path));
  }

  bool is_zero() const { return empty() || values.isZero(0.0); }
};

using ControlProcess = StepProcess;

}  // namespace seesmp
