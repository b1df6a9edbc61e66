#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/core/errors.hpp"
#include "seesmp/core/time_grid.hpp"

namespace seesmp {

/// Matrix-valued adapted process. Node i of P is dim x (dim * n_paths); the
/// p-th dim x dim block is P(t_i) on path p. n_paths == 1 means deterministic.
struct OperatorProcess {
  TimeGrid grid;
  int dim = 0;
  std::size_t n_paths = 1;
  std::vector<Eigen::MatrixXd> P;
  std::vector<Eigen::MatrixXd> Q;          // per step, same layout; empty unless produced
  std::vector<Eigen::MatrixXd> std_error;  // deterministic mode: entrywise stderr per node
  int iterations = 0;
  double last_ratio = 0.0;
  std::vector<std::size_t> split_nodes;

  static OperatorProcess zeros(const TimeGrid& g, int n, std::size_t paths = 1) {
    OperatorProcess op;
    op.grid = g;
    op.dim = n;
    op.n_paths = paths;
    op.P.assign(g.n_nodes(), Eigen::MatrixXd::Zero(n, n * static_cast<Eigen::Index>(paths)));
    return op;
  }

  bool deterministic() const { return n_paths == 1; }

  Eigen::MatrixXd at(std::size_t node, std::size_t path = 0) const {
    if (deterministic()) return P[node];
    return P[node].middleCols(static_cast<Eigen::Index>(path) * dim, dim);
  }

  /// Largest ||P - P'||_F over nodes and paths.
  double max_asymmetry() const {
    double worst = 0.0;
    for (const auto& node : P) {
      for (std::size_t p = 0; p < n_paths; ++p) {
        const auto b = node.middleCols(static_cast<Eigen::Index>(p) * dim, dim);
        worst = std::max(worst, (b - b.transpose()).norm());
      }
    }
    return worst;
  }

  /// Largest ||P||_F over nodes and paths.
  double max_norm() const {
    double worst = 0.0;
    for (const auto& node : P) {
      for (std::size_t p = 0; p < n_paths; ++p) {
        worst = std::max(worst, node.middleCols(static_cast<Eigen::Index>(p) * dim, dim).norm());
      }
    }
    return worst;
  }

  /// Sample mean of P(t_i) over paths.
  Eigen::MatrixXd mean(std::size_t node) const {
    if (deterministic()) return P[node];
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t p = 0; p < n_paths; ++p) m += P[node].middleCols(static_cast<Eigen::Index>(p) * dim, dim);
    return m / static_cast<double>(n_paths);
  }
};

/// Terminal matrix xi, either deterministic or one matrix per path.
struct TerminalMatrix {
  Eigen::MatrixXd constant;
  std::function<Eigen::MatrixXd(std::size_t path)> per_path;

  static TerminalMatrix fixed(Eigen::MatrixXd m) { return TerminalMatrix{std::move(m), {}}; }

  bool random() const { return static_cast<bool>(per_path); }
  Eigen::MatrixXd at(std::size_t path) const { return per_path ? per_path(path) : constant; }
};

/// Driver f(t, P). An empty function is the zero driver.
struct MatrixGenerator {
  std::function<Eigen::MatrixXd(std::size_t step, std::size_t path, const Eigen::MatrixXd& P)> f;
  bool path_dependent = false;
  double lipschitz = 0.0;

  static MatrixGenerator zero() { return {}; }

  /// f(P) = c P.
  static MatrixGenerator linear(double c) {
    MatrixGenerator g;
    g.f = [c](std::size_t, std::size_t, const Eigen::MatrixXd& P) { return Eigen::MatrixXd(c * P); };
    g.lipschitz = std::abs(c);
    return g;
  }

  bool empty() const { return !f; }

  Eigen::MatrixXd operator()(std::size_t step, std::size_t path, const Eigen::MatrixXd& P) const {
    if (!f) return Eigen::MatrixXd::Zero(P.rows(), P.cols());
    return f(step, path, P);
  }
};

}  // namespace seesmp
