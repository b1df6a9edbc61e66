#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/core/brownian.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/galerkin_system.hpp"
#include "seesmp/forward/path_ensemble.hpp"
#include "seesmp/forward/scheme.hpp"

namespace seesmp {

/// Sign convention of the beta-transformed operators:
///   kQDrift:     A~ = A - (beta/2) B - (beta^2/8) I,  B~ = B + (beta/2) I
///   kItoWeighted: A~ = A + (beta/2) B - (beta^2/8) I, B~ = B + (beta/2) I
/// The second one is the form whose flow carries the weight
/// exp(int -beta^2/2 ds + beta dw) in the second-order expansion.
enum class BetaConvention { kQDrift, kItoWeighted };

/// Homogeneous linear SEE dx = A~ x dt + B~ x dw discretized by the
/// semi-implicit scheme. The implicit part is always the system's A; the
/// remainder A~ - A is explicit. Path-dependent coefficients enter through
/// scalar shifts (c_B B + c_I I in the drift, d_I I in the diffusion) and an
/// optional callback that adds per-path drift/diffusion matrices.
class LinearFlow {
 public:
  using PathTerms = std::function<void(std::size_t step, std::size_t path, Eigen::MatrixXd& drift,
                                       Eigen::MatrixXd& diffusion)>;
  /// Adds affine forcing to F (drift) and G (diffusion), both dim x cols.
  using Forcing = std::function<void(std::size_t step, const Eigen::MatrixXd& X, Eigen::MatrixXd& F,
                                     Eigen::MatrixXd& G)>;

  LinearFlow() = default;

  static LinearFlow from_system(const GalerkinSystem& system, const TimeGrid& grid) {
    LinearFlow f;
    f.grid_ = grid;
    f.dim_ = system.dim;
    f.inv_ = implicit_inverses(system, grid);
    f.drift_.assign(grid.n_steps(), Eigen::MatrixXd::Zero(system.dim, system.dim));
    f.diff_.resize(grid.n_steps());
    f.B_.resize(grid.n_steps());
    f.A_.resize(grid.n_steps());
    for (std::size_t i = 0; i < grid.n_steps(); ++i) {
      f.A_[i] = system.A_at(grid.node(i + 1));
      f.B_[i] = system.B_at(grid.node(i));
      f.diff_[i] = f.B_[i];
    }
    return f;
  }

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }
  const Eigen::MatrixXd& implicit_inverse(std::size_t i) const { return inv_[i]; }
  const Eigen::MatrixXd& explicit_drift(std::size_t i) const { return drift_[i]; }
  const Eigen::MatrixXd& diffusion(std::size_t i) const { return diff_[i]; }
  const Eigen::MatrixXd& base_B(std::size_t i) const { return B_[i]; }
  /// The implicitly treated A of step i (evaluated at t_{i+1}).
  const Eigen::MatrixXd& implicit_matrix(std::size_t i) const { return A_[i]; }
  bool path_dependent() const { return !shifts_.empty() || static_cast<bool>(path_terms_); }

  /// A~ = A + c_B B + c_I I, B~ = B + d_I I (relative to the current flow).
  LinearFlow shifted(const StepProcess& c_B, const StepProcess& c_I, const StepProcess& d_I) const {
    check_process(c_B);
    check_process(c_I);
    check_process(d_I);
    LinearFlow out = *this;
    if (c_B.deterministic() && c_I.deterministic() && d_I.deterministic()) {
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim_, dim_);
      for (std::size_t i = 0; i < grid_.n_steps(); ++i) {
        const double cb = c_B.empty() ? 0.0 : c_B.at(i, 0);
        const double ci = c_I.empty() ? 0.0 : c_I.at(i, 0);
        const double di = d_I.empty() ? 0.0 : d_I.at(i, 0);
        if (cb != 0.0) out.drift_[i] += cb * B_[i];
        if (ci != 0.0) out.drift_[i] += ci * I;
        if (di != 0.0) out.diff_[i] += di * I;
      }
    } else {
      out.shifts_.push_back(Shift{c_B, c_I, d_I});
    }
    return out;
  }

  /// Beta transform with either sign convention.
  LinearFlow beta_transformed(const StepProcess& beta, BetaConvention conv) const {
    if (beta.is_zero()) return *this;
    check_process(beta);
    Eigen::MatrixXd half = 0.5 * beta.values;
    Eigen::MatrixXd quad = -0.125 * beta.values.array().square().matrix();
    const StepProcess cB(conv == BetaConvention::kQDrift ? Eigen::MatrixXd(-half) : half);
    return shifted(cB, StepProcess(quad), StepProcess(half));
  }

  /// Adds deterministic per-step matrices to the explicit drift and the diffusion.
  LinearFlow with_step_terms(const std::vector<Eigen::MatrixXd>& drift, const std::vector<Eigen::MatrixXd>& diffusion) const {
    if (drift.size() != grid_.n_steps() || diffusion.size() != grid_.n_steps()) {
      throw InvalidArgument("LinearFlow: one step term per step is required");
    }
    LinearFlow out = *this;
    for (std::size_t i = 0; i < grid_.n_steps(); ++i) {
      out.drift_[i] += drift[i];
      out.diff_[i] += diffusion[i];
    }
    return out;
  }

  /// Adds per-path terms (e.g. Jacobians of nonlinear coefficients along a reference path).
  LinearFlow with_path_terms(PathTerms terms) const {
    LinearFlow out = *this;
    if (!out.path_terms_) {
      out.path_terms_ = std::move(terms);
    } else {
      PathTerms prev = out.path_terms_;
      out.path_terms_ = [prev, terms](std::size_t i, std::size_t p, Eigen::MatrixXd& d, Eigen::MatrixXd& g) {
        prev(i, p, d, g);
        terms(i, p, d, g);
      };
    }
    return out;
  }

  /// Full explicit drift and diffusion matrices of step i on one path.
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> step_coefficients(std::size_t i, std::size_t path) const {
    Eigen::MatrixXd D = drift_[i];
    Eigen::MatrixXd G = diff_[i];
    for (const auto& s : shifts_) {
      const double cb = s.c_B.empty() ? 0.0 : s.c_B.at(i, path);
      const double ci = s.c_I.empty() ? 0.0 : s.c_I.at(i, path);
      const double di = s.d_I.empty() ? 0.0 : s.d_I.at(i, path);
      D += cb * B_[i];
      D.diagonal().array() += ci;
      G.diagonal().array() += di;
    }
    if (path_terms_) path_terms_(i, path, D, G);
    return {D, G};
  }

  /// One-step matrix M with x_{i+1} = M x_i on the given path.
  Eigen::MatrixXd step_matrix(std::size_t i, std::size_t path, double dw) const {
    auto [D, G] = step_coefficients(i, path);
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(dim_, dim_) + grid_.dt() * D + dw * G;
    return inv_[i] * M;
  }

  /// For path-independent flows M_i = C + dw E; returns (C, E).
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> step_split(std::size_t i) const {
    if (path_dependent()) throw InvalidArgument("LinearFlow: step_split needs a path-independent flow");
    Eigen::MatrixXd C = inv_[i] * (Eigen::MatrixXd::Identity(dim_, dim_) + grid_.dt() * drift_[i]);
    Eigen::MatrixXd E = inv_[i] * diff_[i];
    return {C, E};
  }

  /// Propagates x0 (dim x n_paths*cols_per_path) from node `start`.
  std::vector<Eigen::MatrixXd> propagate(const BrownianEnsemble& bm, const Eigen::MatrixXd& x0, std::size_t start = 0,
                                         std::size_t cols_per_path = 1, const Forcing& forcing = {}) const {
    if (!(bm.grid() == grid_)) throw InvalidArgument("LinearFlow: ensemble grid differs from the flow grid");
    if (x0.rows() != dim_) throw InvalidArgument("LinearFlow: initial state has the wrong dimension");
    const bool per_path = path_dependent();
    auto coefficients = [&](std::size_t i, const Eigen::MatrixXd& X, Eigen::MatrixXd& F, Eigen::MatrixXd& G) {
      F.noalias() = drift_[i] * X;
      G.noalias() = diff_[i] * X;
      if (per_path) apply_path_parts(i, X, cols_per_path, &F, &G);
      if (forcing) forcing(i, X, F, G);
    };
    return integrate_semi_implicit(inv_, bm, x0, start, cols_per_path, coefficients);
  }

  PathEnsemble solve(const BrownianEnsemble& bm, const Eigen::VectorXd& x0, const Forcing& forcing = {}) const {
    Eigen::MatrixXd X0 = x0.replicate(1, static_cast<Eigen::Index>(bm.n_paths()));
    return PathEnsemble::from_nodes(grid_, propagate(bm, X0, 0, 1, forcing));
  }

 private:
  struct Shift {
    StepProcess c_B, c_I, d_I;
  };

  void check_process(const StepProcess& s) const {
    if (!s.empty() && s.n_steps() != grid_.n_steps()) {
      throw InvalidArgument("LinearFlow: coefficient process does not match the grid");
    }
  }

  void apply_path_parts(std::size_t i, const Eigen::MatrixXd& X, std::size_t cpp, Eigen::MatrixXd* F,
                        Eigen::MatrixXd* G) const {
    const std::size_t n_paths = static_cast<std::size_t>(X.cols()) / cpp;
    Eigen::MatrixXd BX;
    if (!shifts_.empty()) BX = B_[i] * X;
    parallel_for(n_paths, [&](std::size_t p) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(p * cpp);
      const Eigen::Index nc = static_cast<Eigen::Index>(cpp);
      for (const auto& s : shifts_) {
        if (F) {
          const double cb = s.c_B.empty() ? 0.0 : s.c_B.at(i, p);
          const double ci = s.c_I.empty() ? 0.0 : s.c_I.at(i, p);
          F->middleCols(c0, nc) += cb * BX.middleCols(c0, nc) + ci * X.middleCols(c0, nc);
        }
        if (G) {
          const double di = s.d_I.empty() ? 0.0 : s.d_I.at(i, p);
          G->middleCols(c0, nc) += di * X.middleCols(c0, nc);
        }
      }
      if (path_terms_) {
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(dim_, dim_);
        Eigen::MatrixXd Gm = Eigen::MatrixXd::Zero(dim_, dim_);
        path_terms_(i, p, D, Gm);
        if (F) F->middleCols(c0, nc) += D * X.middleCols(c0, nc);
        if (G) G->middleCols(c0, nc) += Gm * X.middleCols(c0, nc);
      }
    });
  }

  TimeGrid grid_;
  int dim_ = 0;
  std::vector<Eigen::MatrixXd> inv_, drift_, diff_, A_, B_;
  std::vector<Shift> shifts_;
  PathTerms path_terms_;
};

/// Random fundamental matrices L(t_anchor, s), s >= t_anchor, per path.
/// Node k of `nodes` is an n x (n * n_paths) matrix whose p-th n x n block is
/// L(t_anchor, t_{anchor + k}) on path p.
struct EvolutionOperatorPaths {
  std::size_t anchor = 0;
  int dim = 0;
  std::size_t n_paths = 0;
  std::vector<Eigen::MatrixXd> nodes;

  Eigen::MatrixXd at(std::size_t node, std::size_t path) const {
    if (node < anchor) throw InvalidArgument("EvolutionOperatorPaths: node precedes the anchor");
    return nodes[node - anchor].middleCols(static_cast<Eigen::Index>(path) * dim, dim);
  }
};

inline EvolutionOperatorPaths fundamental_matrix(const LinearFlow& flow, const BrownianEnsemble& bm,
                                                 std::size_t anchor) {
  const int n = flow.dim();
  Eigen::MatrixXd X0 = Eigen::MatrixXd::Identity(n, n).replicate(1, static_cast<Eigen::Index>(bm.n_paths()));
  auto nodes = flow.propagate(bm, X0, anchor, static_cast<std::size_t>(n));
  EvolutionOperatorPaths L;
  L.anchor = anchor;
  L.dim = n;
  L.n_paths = bm.n_paths();
  L.nodes.assign(std::make_move_iterator(nodes.begin() + static_cast<std::ptrdiff_t>(anchor)),
                 std::make_move_iterator(nodes.end()));
  return L;
}

inline EvolutionOperatorPaths fundamental_matrix(const GalerkinSystem& system, const BrownianEnsemble& bm,
                                                 double t_anchor) {
  const std::size_t anchor = bm.grid().index_of(t_anchor);
  return fundamental_matrix(LinearFlow::from_system(system, bm.grid()), bm, anchor);
}

}  // namespace seesmp
