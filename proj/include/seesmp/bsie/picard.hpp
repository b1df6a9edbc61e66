#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/bsde/regression.hpp"
#include "seesmp/bsie/operator_process.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/galerkin_system.hpp"
#include "seesmp/core/parallel.hpp"
#include "seesmp/forward/flow.hpp"
#include "seesmp/forward/path_ensemble.hpp"

namespace seesmp {

struct PicardOptions {
  double tol = 1e-9;
  int max_iter = 100;
  bool symmetrize = true;
  RegressionEngine engine;
  std::size_t min_segment = 1;  // shortest horizon piece (in steps) the splitter may produce
};

namespace detail {

// Entry (r, c) of every dim x dim block as one row per entry: dim^2 x N.
inline Eigen::MatrixXd blocks_to_rows(const Eigen::MatrixXd& blocks, int n) {
  const Eigen::Index N = blocks.cols() / n;
  Eigen::MatrixXd rows(n * n, N);
  for (Eigen::Index p = 0; p < N; ++p) {
    for (int c = 0; c < n; ++c) rows.block(c * n, p, n, 1) = blocks.col(p * n + c);
  }
  return rows;
}

inline Eigen::MatrixXd rows_to_blocks(const Eigen::MatrixXd& rows, int n) {
  const Eigen::Index N = rows.cols();
  Eigen::MatrixXd blocks(n, n * N);
  for (Eigen::Index p = 0; p < N; ++p) {
    for (int c = 0; c < n; ++c) blocks.col(p * n + c) = rows.block(c * n, p, n, 1);
  }
  return blocks;
}

inline void symmetrize_blocks(Eigen::MatrixXd& blocks, int n) {
  const Eigen::Index N = blocks.cols() / n;
  for (Eigen::Index p = 0; p < N; ++p) {
    auto b = blocks.middleCols(p * n, n);
    const Eigen::MatrixXd s = 0.5 * (b + b.transpose());
    b = s;
  }
}

inline Eigen::MatrixXd block_mean(const Eigen::MatrixXd& blocks, int n) {
  const Eigen::Index N = blocks.cols() / n;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index p = 0; p < N; ++p) m += blocks.middleCols(p * n, n);
  return m / static_cast<double>(N);
}

inline Eigen::MatrixXd block_stderr(const Eigen::MatrixXd& blocks, const Eigen::MatrixXd& mean, int n) {
  const Eigen::Index N = blocks.cols() / n;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index p = 0; p < N; ++p) v += (blocks.middleCols(p * n, n) - mean).array().square().matrix();
  if (N < 2) return Eigen::MatrixXd::Zero(n, n);
  return (v / static_cast<double>(N - 1) / static_cast<double>(N)).array().sqrt().matrix();
}

// Conditional expectation of one dim x dim block per path, given a node's features.
inline Eigen::MatrixXd project_blocks(const Projection& proj, const Eigen::MatrixXd& blocks, int n) {
  return rows_to_blocks(proj.apply(blocks_to_rows(blocks, n)), n);
}

// Sweeps of the map P -> E_i[L'(t_i,T) xi L(t_i,T) + sum_j L'(t_i,t_j) f(P_j) L(t_i,t_j) dt]
// restricted to the nodes [s0, s1] with terminal blocks at s1.
class PicardMap {
 public:
  PicardMap(const LinearFlow& flow, const MatrixGenerator& f, const BrownianEnsemble& bm, const PicardOptions& opt,
            const PathEnsemble* features, bool det)
      : flow_(flow), f_(f), bm_(bm), opt_(opt), features_(features), det_(det), n_(flow.dim()) {
    if (!flow.path_dependent()) {
      split_.resize(flow.grid().n_steps());
      for (std::size_t i = 0; i < split_.size(); ++i) split_[i] = flow.step_split(i);
    }
  }

  bool deterministic() const { return det_; }

  // prev/next hold nodes s0..s1 (index 0 is s0). next[s1 - s0] is set to the terminal value.
  void sweep(std::size_t s0, std::size_t s1, const Eigen::MatrixXd& terminal, const std::vector<Eigen::MatrixXd>& prev,
             std::vector<Eigen::MatrixXd>& next, std::vector<Eigen::MatrixXd>* stderr_out) const {
    const std::size_t N = bm_.n_paths();
    const double dt = flow_.grid().dt();
    const int n = n_;
    Eigen::MatrixXd S = terminal.cols() == n ? Eigen::MatrixXd(terminal.replicate(1, static_cast<Eigen::Index>(N)))
                                             : terminal;
    next.assign(s1 - s0 + 1, Eigen::MatrixXd());
    next[s1 - s0] = det_ ? (terminal.cols() == n ? terminal : block_mean(terminal, n)) : terminal;
    if (stderr_out) {
      stderr_out->assign(s1 - s0 + 1, Eigen::MatrixXd::Zero(n, n));
      if (det_ && terminal.cols() != n) (*stderr_out)[s1 - s0] = block_stderr(terminal, next[s1 - s0], n);
    }
    for (std::size_t i = s1; i-- > s0;) {
      const Eigen::MatrixXd& Pk = prev[i - s0];
      Eigen::MatrixXd F_common;
      if (det_) F_common = f_(i, 0, Pk);
      const bool use_split = !split_.empty();
      parallel_for(N, [&](std::size_t p) {
        const Eigen::Index c = static_cast<Eigen::Index>(p) * n;
        const double dw = bm_.dw(p, i);
        const Eigen::MatrixXd M = use_split ? Eigen::MatrixXd(split_[i].first + dw * split_[i].second)
                                            : flow_.step_matrix(i, p, dw);
        Eigen::MatrixXd Sp = M.transpose() * S.middleCols(c, n) * M;
        if (det_) {
          Sp += dt * F_common;
        } else if (!f_.empty()) {
          Sp += dt * f_(i, p, Pk.middleCols(c, n));
        }
        S.middleCols(c, n) = Sp;
      });
      if (!S.allFinite()) throw NumericalError("bsie_picard: non-finite Gram recursion", i);
      if (det_) {
        Eigen::MatrixXd m = block_mean(S, n);
        if (stderr_out) (*stderr_out)[i - s0] = block_stderr(S, m, n);
        if (opt_.symmetrize) m = 0.5 * (m + m.transpose());
        next[i - s0] = std::move(m);
      } else {
        const Projection proj(opt_.engine, features_->node(i));
        Eigen::MatrixXd m = project_blocks(proj, S, n);
        if (opt_.symmetrize) symmetrize_blocks(m, n);
        next[i - s0] = std::move(m);
      }
    }
  }

  double distance(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b) const {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double N = det_ ? 1.0 : static_cast<double>(a[k].cols() / n_);
      worst = std::max(worst, std::sqrt((a[k] - b[k]).squaredNorm() / N));
    }
    return worst;
  }

  Eigen::MatrixXd zero_node() const {
    return Eigen::MatrixXd::Zero(n_, det_ ? n_ : n_ * static_cast<Eigen::Index>(bm_.n_paths()));
  }

 private:
  const LinearFlow& flow_;
  const MatrixGenerator& f_;
  const BrownianEnsemble& bm_;
  const PicardOptions& opt_;
  const PathEnsemble* features_;
  bool det_;
  int n_;
  std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> split_;
};

inline void picard_segment(const PicardMap& map, const PicardOptions& opt, std::size_t s0, std::size_t s1,
                           const Eigen::MatrixXd& terminal, OperatorProcess& out) {
  std::vector<Eigen::MatrixXd> prev(s1 - s0 + 1, map.zero_node()), next;
  std::vector<Eigen::MatrixXd> se;
  double last_diff = std::numeric_limits<double>::infinity();
  double ratio = 0.0;
  int growing = 0;
  for (int k = 1; k <= opt.max_iter; ++k) {
    map.sweep(s0, s1, terminal, prev, next, map.deterministic() ? &se : nullptr);
    const double diff = map.distance(next, prev);
    ++out.iterations;
    ratio = std::isfinite(last_diff) && last_diff > 0.0 ? diff / last_diff : 0.0;
    out.last_ratio = ratio;
    prev.swap(next);
    if (diff <= opt.tol) {
      for (std::size_t i = s0; i <= s1; ++i) {
        out.P[i] = std::move(prev[i - s0]);
        if (map.deterministic()) out.std_error[i] = se[i - s0];
      }
      return;
    }
    growing = (k > 2 && ratio >= 1.0) ? growing + 1 : 0;
    if (growing >= 2 && s1 - s0 > opt.min_segment) {
      // Divergence on this piece: solve the back half first, then use its
      // value at the midpoint as terminal data for the front half.
      const std::size_t mid = s0 + (s1 - s0) / 2;
      out.split_nodes.push_back(mid);
      picard_segment(map, opt, mid, s1, terminal, out);
      picard_segment(map, opt, s0, mid, out.P[mid], out);
      return;
    }
    last_diff = diff;
  }
  throw NonContractionError("bsie_picard: no convergence within max_iter", ratio);
}

}  // namespace detail

/// Picard iteration for P(t) = E[L'(t,T) xi L(t,T) + int_t^T L'(t,s) f(s,P(s)) L(t,s) ds | F_t]
/// with L the flow of `flow`. Deterministic data give a deterministic P
/// (conditional expectation = sample mean); otherwise `features` (the
/// Markov state) feeds the regression engine.
inline OperatorProcess bsie_picard(const LinearFlow& flow, const TerminalMatrix& xi, const MatrixGenerator& f,
                                   const BrownianEnsemble& bm, const PicardOptions& opt = {},
                                   const PathEnsemble* features = nullptr) {
  const TimeGrid& grid = bm.grid();
  if (!(flow.grid() == grid)) throw InvalidArgument("bsie_picard: flow and ensemble grids differ");
  if (!(opt.tol > 0.0) || opt.max_iter < 1) throw InvalidArgument("bsie_picard: invalid tolerance or iteration budget");
  const int n = flow.dim();
  const bool det = !flow.path_dependent() && !xi.random() && !f.path_dependent;
  if (!det && (features == nullptr || !(features->grid == grid) || features->n_paths != bm.n_paths())) {
    throw ConfigurationError("bsie_picard: path-dependent data need state features on the same ensemble");
  }
  Eigen::MatrixXd terminal;
  if (xi.random()) {
    terminal.resize(n, n * static_cast<Eigen::Index>(bm.n_paths()));
    for (std::size_t p = 0; p < bm.n_paths(); ++p) terminal.middleCols(static_cast<Eigen::Index>(p) * n, n) = xi.at(p);
  } else {
    terminal = det ? xi.constant : Eigen::MatrixXd(xi.constant.replicate(1, static_cast<Eigen::Index>(bm.n_paths())));
  }
  if (terminal.rows() != n) throw InvalidArgument("bsie_picard: terminal matrix has the wrong size");
  OperatorProcess out = OperatorProcess::zeros(grid, n, det ? 1 : bm.n_paths());
  if (det) out.std_error.assign(grid.n_nodes(), Eigen::MatrixXd::Zero(n, n));
  const detail::PicardMap map(flow, f, bm, opt, features, det);
  detail::picard_segment(map, opt, 0, grid.n_steps(), terminal, out);
  std::sort(out.split_nodes.begin(), out.split_nodes.end());
  return out;
}

inline OperatorProcess bsie_picard(const GalerkinSystem& system, const TerminalMatrix& xi, const MatrixGenerator& f,
                                   const StepProcess& beta, const BrownianEnsemble& bm, const PicardOptions& opt = {},
                                   const PathEnsemble* features = nullptr,
                                   BetaConvention convention = BetaConvention::kQDrift) {
  const LinearFlow flow = LinearFlow::from_system(system, bm.grid()).beta_transformed(beta, convention);
  return bsie_picard(flow, xi, f, bm, opt, features);
}

/// Largest change produced by one more application of the map to P over the full horizon.
inline double picard_residual(const LinearFlow& flow, const TerminalMatrix& xi, const MatrixGenerator& f,
                              const BrownianEnsemble& bm, const OperatorProcess& P, const PicardOptions& opt = {},
                              const PathEnsemble* features = nullptr) {
  const bool det = P.deterministic();
  const int n = flow.dim();
  Eigen::MatrixXd terminal;
  if (xi.random()) {
    terminal.resize(n, n * static_cast<Eigen::Index>(bm.n_paths()));
    for (std::size_t p = 0; p < bm.n_paths(); ++p) terminal.middleCols(static_cast<Eigen::Index>(p) * n, n) = xi.at(p);
  } else {
    terminal = det ? xi.constant : Eigen::MatrixXd(xi.constant.replicate(1, static_cast<Eigen::Index>(bm.n_paths())));
  }
  const detail::PicardMap map(flow, f, bm, opt, features, det);
  std::vector<Eigen::MatrixXd> next;
  map.sweep(0, bm.grid().n_steps(), terminal, P.P, next, nullptr);
  return map.distance(next, P.P);
}

}  // namespace seesmp
