#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "seesmp/bsde/adjoint.hpp"
#include "seesmp/bsie/matrix_bsde.hpp"
#include "seesmp/bsie/operator_process.hpp"
#include "seesmp/bsie/picard.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/core/coefficients.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/galerkin_system.hpp"
#include "seesmp/core/parallel.hpp"
#include "seesmp/forward/flow.hpp"

namespace seesmp {

/// G = D^2k[J, J] + sum_k p_k a_xx[k] + k_z sum_k p_k b_xx[k] + sum_k q_k b_xx[k]
/// with J = [I; p'; (B_bar' p + q)'], i.e. the (x, y, z) Hessian of k
/// contracted along the directions (u, <p,u>, <B_bar' p + q, u>).
inline Eigen::MatrixXd second_order_forcing(const Eigen::MatrixXd& k_hess, const std::vector<Eigen::MatrixXd>& a_xx,
                                            const std::vector<Eigen::MatrixXd>& b_xx, const Eigen::MatrixXd& Bbar,
                                            const Eigen::VectorXd& p, const Eigen::VectorXd& q, double k_z) {
  const Eigen::Index n = p.size();
  Eigen::MatrixXd J(n + 2, n);
  J.topRows(n).setIdentity();
  J.row(n) = p.transpose();
  J.row(n + 1) = (Bbar.transpose() * p + q).transpose();
  Eigen::MatrixXd G = J.transpose() * k_hess * J;
  for (Eigen::Index k = 0; k < n; ++k) {
    G += p(k) * a_xx[static_cast<std::size_t>(k)];
    G += (k_z * p(k) + q(k)) * b_xx[static_cast<std::size_t>(k)];
  }
  return G;
}

struct SecondOrderOptions {
  PicardOptions picard;
  MatrixBsdeOptions bsde;
  bool force_path_mode = false;
};

/// P of the second-order adjoint along the reference:
///   -dP = [A~'P + P A~ + B~'P B~ + B~'Q + Q B~ + k_y P + G] dt - Q dw,  P(T) = h_xx(x_bar(T)),
///   A~ = A_bar + (k_z/2) B_bar - (k_z^2/8) I,  B~ = B_bar + (k_z/2) I.
/// When every coefficient is the same on all paths the data are
/// deterministic and P is the Picard solution of the integral form (with its
/// sample stderr); otherwise the matrix BSDE is solved by regression on x_bar.
inline OperatorProcess solve_second_order_adjoint(const GalerkinSystem& system, const CoefficientSet& coeffs,
                                                  const Trajectory& ref, const AdjointFirstOrder& first,
                                                  const BrownianEnsemble& bm, const SecondOrderOptions& opt = {}) {
  coeffs.require_complete();
  const TimeGrid& grid = bm.grid();
  const std::size_t N = bm.n_paths();
  const std::size_t steps = grid.n_steps();
  const int n = system.dim;
  if (!(ref.x.grid == grid) || ref.x.n_paths != N || ref.x.dim != n || first.p.n_paths != N) {
    throw InvalidArgument("solve_second_order_adjoint: reference does not match the ensemble");
  }
  const Eigen::Index nn = n;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  // Per step: explicit drift, diffusion (relative to the system's A, B), k_y, G; n x (n N) blocks.
  std::vector<Eigen::MatrixXd> D(steps), S(steps), F(steps);
  Eigen::MatrixXd KY(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < steps; ++i) {
    D[i].resize(nn, nn * static_cast<Eigen::Index>(N));
    S[i].resize(nn, nn * static_cast<Eigen::Index>(N));
    F[i].resize(nn, nn * static_cast<Eigen::Index>(N));
    const double t = grid.node(i);
    const Eigen::MatrixXd B = system.B_at(t);
    parallel_for(N, [&](std::size_t p) {
      const Eigen::Index c = static_cast<Eigen::Index>(p) * nn;
      const Eigen::VectorXd x = ref.x.state(i, p);
      const double u = ref.u.at(i, p);
      const double y = ref.yz.y.at(i, p);
      const double z = ref.yz.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p));
      const Eigen::MatrixXd bx = coeffs.b_x(t, x, u);
      const Eigen::MatrixXd Bbar = B + bx;
      const double kz = coeffs.k_z(t, x, y, z, u);
      D[i].middleCols(c, nn) = coeffs.a_x(t, x, u) + 0.5 * kz * Bbar - 0.125 * kz * kz * I;
      S[i].middleCols(c, nn) = bx + 0.5 * kz * I;
      F[i].middleCols(c, nn) =
          second_order_forcing(coeffs.k_hess(t, x, y, z, u), coeffs.a_xx(t, x, u), coeffs.b_xx(t, x, u), Bbar,
                               first.p.state(i, p), first.q[i].col(static_cast<Eigen::Index>(p)), kz);
      KY(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = coeffs.k_y(t, x, y, z, u);
    });
  }
  std::vector<Eigen::MatrixXd> xi(N);
  for (std::size_t p = 0; p < N; ++p) xi[p] = coeffs.h_xx(ref.x.state(steps, p));

  auto same_blocks = [&](const Eigen::MatrixXd& M) {
    for (std::size_t p = 1; p < N; ++p) {
      if (!(M.middleCols(static_cast<Eigen::Index>(p) * nn, nn) == M.leftCols(nn))) return false;
    }
    return true;
  };
  bool det = !opt.force_path_mode;
  for (std::size_t i = 0; det && i < steps; ++i) {
    det = same_blocks(D[i]) && same_blocks(S[i]) && same_blocks(F[i]) && (KY.row(static_cast<Eigen::Index>(i)).array() == KY(static_cast<Eigen::Index>(i), 0)).all();
  }
  for (std::size_t p = 1; det && p < N; ++p) det = xi[p] == xi[0];

  const LinearFlow base = LinearFlow::from_system(system, grid);
  if (det) {
    std::vector<Eigen::MatrixXd> d(steps), s(steps), g(steps);
    std::vector<double> ky(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      d[i] = D[i].leftCols(nn);
      s[i] = S[i].leftCols(nn);
      g[i] = F[i].leftCols(nn);
      ky[i] = KY(static_cast<Eigen::Index>(i), 0);
    }
    const LinearFlow flow = base.with_step_terms(d, s);
    MatrixGenerator f;
    f.f = [g, ky](std::size_t i, std::size_t, const Eigen::MatrixXd& P) { return Eigen::MatrixXd(ky[i] * P + g[i]); };
    f.lipschitz = KY.cwiseAbs().maxCoeff();
    return bsie_picard(flow, TerminalMatrix::fixed(xi[0]), f, bm, opt.picard);
  }
  const LinearFlow flow = base.with_path_terms(
      [&D, &S, nn](std::size_t i, std::size_t p, Eigen::MatrixXd& drift, Eigen::MatrixXd& diffusion) {
        drift += D[i].middleCols(static_cast<Eigen::Index>(p) * nn, nn);
        diffusion += S[i].middleCols(static_cast<Eigen::Index>(p) * nn, nn);
      });
  MatrixGenerator f;
  f.path_dependent = true;
  f.f = [&F, &KY, nn](std::size_t i, std::size_t p, const Eigen::MatrixXd& P) {
    return Eigen::MatrixXd(KY(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) * P +
                           F[i].middleCols(static_cast<Eigen::Index>(p) * nn, nn));
  };
  f.lipschitz = KY.cwiseAbs().maxCoeff();
  TerminalMatrix terminal;
  terminal.constant = xi[0];
  terminal.per_path = [&xi](std::size_t p) { return xi[p]; };
  return matrix_bsde_backward(flow, terminal, f, bm, opt.bsde, &ref.x);
}

}  // namespace seesmp
