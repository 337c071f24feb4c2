// Membrane prestress certificate and the coercivity lower bound built from it.
//
// The certificate field T is diagonal up to a positive shift: each diagonal
// entry is the cumulative trapezoid integral of the matching in-plane load
// component along its own axis, negated, plus a constant multiple of the
// identity that makes the nodal eigenvalues at least delta_pd.
//
// Two divergence diagnostics are reported. The staggered residual pairs the
// forward difference of T with the midpoint-averaged load; the trapezoid
// construction makes it vanish identically, so it gates the certificate. The
// nodal residual uses the pointwise derivative stencils and is exact only for
// loads constant or linear along the integration axis; otherwise it carries
// the O(h^2) slack of those stencils and is reported, not gated.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "vk/common.hpp"
#include "vk/constitutive.hpp"
#include "vk/fd.hpp"
#include "vk/grid.hpp"
#include "vk/plate.hpp"

namespace vk {

struct CoercivityCertificate {
  SymTensorField2<double> T;       // shifted, nodally positive definite
  SymTensorField2<double> Ttilde;  // raw cumulative-integral field
  double c_shift = 0.0;
  double min_eig = 0.0;      // nodal minimum eigenvalue of T
  double delta_pd = 0.0;
  double div_staggered = 0.0;  // gated residual
  double div_nodal = 0.0;      // reported residual (stencil-accuracy slack)
  double tol_div = 0.0;
};

inline double default_tol_div(const PlateLoads& loads) {
  const double sup =
      std::max(loads.P1.v.size() ? loads.P1.v.cwiseAbs().maxCoeff() : 0.0,
               loads.P2.v.size() ? loads.P2.v.cwiseAbs().maxCoeff() : 0.0);
  return 1e-8 * (1.0 + sup);
}

// Nodal eigenvalue interval of a symmetric 2x2 field entry.
inline std::pair<double, double> eig2(double a11, double a22, double a12) {
  const double mean = 0.5 * (a11 + a22);
  const double rad = std::hypot(0.5 * (a11 - a22), a12);
  return {mean - rad, mean + rad};
}

inline CoercivityCertificate build_T_field(const Grid2& g,
                                           const PlateLoads& loads,
                                           double delta_pd = 1e-3,
                                           double tol_div = -1.0) {
  if (!(delta_pd > 0.0)) throw ParameterError("delta_pd must be positive");
  if (tol_div < 0.0) tol_div = default_tol_div(loads);

  CoercivityCertificate cert;
  cert.delta_pd = delta_pd;
  cert.tol_div = tol_div;
  cert.Ttilde = SymTensorField2<double>::zero(g);

  // T11(x) = -int_0^x P1, cumulative trapezoid per row; T22 likewise per column.
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      cert.Ttilde.t11(i, j) = cert.Ttilde.t11(i - 1, j) -
                              0.5 * g.hx *
                                  (loads.P1.v(i - 1, j) + loads.P1.v(i, j));
  for (int i = 0; i < g.nx; ++i)
    for (int j = 1; j < g.ny; ++j)
      cert.Ttilde.t22(i, j) = cert.Ttilde.t22(i, j - 1) -
                              0.5 * g.hy *
                                  (loads.P2.v(i, j - 1) + loads.P2.v(i, j));

  double lo = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      lo = std::min(lo,
                    eig2(cert.Ttilde.t11(i, j), cert.Ttilde.t22(i, j), 0.0)
                        .first);
  cert.c_shift = std::max(0.0, -lo) + delta_pd;

  cert.T = cert.Ttilde;
  cert.T.t11.array() += cert.c_shift;
  cert.T.t22.array() += cert.c_shift;

  cert.min_eig = std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      cert.min_eig = std::min(
          cert.min_eig,
          eig2(cert.T.t11(i, j), cert.T.t22(i, j), cert.T.t12(i, j)).first);

  // Staggered divergence: forward difference of T against midpoint loads.
  double stag = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i + 1 < g.nx; ++i)
      stag = std::max(
          stag, std::abs((cert.T.t11(i + 1, j) - cert.T.t11(i, j)) / g.hx +
                         0.5 * (loads.P1.v(i, j) + loads.P1.v(i + 1, j))));
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j + 1 < g.ny; ++j)
      stag = std::max(
          stag, std::abs((cert.T.t22(i, j + 1) - cert.T.t22(i, j)) / g.hy +
                         0.5 * (loads.P2.v(i, j) + loads.P2.v(i, j + 1))));
  cert.div_staggered = stag;

  const Mat dx = d1_matrix<double>(g.nx, g.hx);
  const Mat dy = d1_matrix<double>(g.ny, g.hy);
  const Mat r1 = ax(dx, cert.T.t11) + ay(dy, cert.T.t12) + loads.P1.v;
  const Mat r2 = ax(dx, cert.T.t12) + ay(dy, cert.T.t22) + loads.P2.v;
  cert.div_nodal = std::max(r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff());

  if (cert.div_staggered > tol_div)
    throw CertificateError("certificate divergence residual " +
                           std::to_string(cert.div_staggered) +
                           " exceeds tolerance " + std::to_string(tol_div));
  if (cert.min_eig < 0.5 * delta_pd)
    throw CertificateError("certificate lost positivity: min eigenvalue " +
                           std::to_string(cert.min_eig));
  return cert;
}

// Exact discrete remainder of pairing T with the in-plane strain: the
// summation-by-parts boundary term <Tn, u> evaluated without a truncation
// error, so the bound below compares against the energy exactly.
inline double pairing_remainder(const Grid2& g, const PlateOps& ops,
                                const CoercivityCertificate& cert,
                                const PlateState& s, const PlateLoads& loads) {
  (void)g;
  const SymTensorField2<double> e = sym_grad(ops, s.u);
  const double pair = (ops.omega.array() * ddot(cert.T, e).array()).sum();
  const double work = (ops.omega.array() *
                       (loads.P1.v.array() * s.u.x.array() +
                        loads.P2.v.array() * s.u.y.array()))
                          .sum();
  return pair - work;
}

// Lower bound on the energy at an admissible state:
//   (lam/2)||w_ab||^2 + (1/2)<T, grad w (x) grad w> + sum (gamma-quadratic - T:gamma)
//   - transverse and traction work + spring + boundary remainder,
// with lam the smallest eigenvalue of the bending tensor. The energy minus
// this bound is a pointwise spectral surplus of the bending quadratic, hence
// nonnegative up to roundoff.
inline double coercivity_lower_bound(const Grid2& g, const PlateOps& ops,
                                     const PlateMaterial& mat,
                                     const PlateState& s,
                                     const CoercivityCertificate& cert,
                                     const PlateLoads& loads) {
  const auto& om = ops.omega;
  const double lam = min_eigenvalue(mat.bending);

  const auto W = curvature(ops, s.w);
  const double cterm =
      0.5 * lam *
      (om.array() * (W.t11.array().square() + W.t22.array().square() +
                     2.0 * W.t12.array().square()))
          .sum();

  const Mat gwx = ax(ops.dxg, s.w.v);
  const Mat gwy = ay(ops.dyg, s.w.v);
  const double tquad =
      0.5 * (om.array() * (cert.T.t11.array() * gwx.array().square() +
                           cert.T.t22.array() * gwy.array().square() +
                           2.0 * cert.T.t12.array() * gwx.array() *
                               gwy.array()))
                .sum();

  const auto gm = gamma(g, ops, s);
  const auto N = contract4(mat.membrane, gm);
  const double memb =
      (om.array() * (0.5 * ddot(N, gm).array() - ddot(cert.T, gm).array()))
          .sum();

  double work = (om.array() * (loads.P.v.array() * s.w.v.array())).sum();
  double spring = 0.0;
  if (mixed_mode(g)) {
    const Mat bw = gammat_weights(g);
    work += (bw.array() * (loads.Pt.v.array() * s.w.v.array() +
                           loads.Pt1.v.array() * s.u.x.array() +
                           loads.Pt2.v.array() * s.u.y.array()))
                .sum();
    spring = (bw.array() * (loads.eps1.v.array() * s.u.x.array().square() +
                            loads.eps2.v.array() * s.u.y.array().square()))
                 .sum();
  }

  return cterm + tquad + memb - work + spring +
         pairing_remainder(g, ops, cert, s, loads);
}

// Floor of the membrane part after completing the square in gamma:
//   min_gamma (1/2) gamma:H:gamma - T:gamma = -(1/2) T:Hinv:T  pointwise.
inline double coercivity_v_floor(const Grid2& g, const PlateOps& ops,
                                 const PlateMaterial& mat,
                                 const CoercivityCertificate& cert) {
  (void)g;
  const auto HinvT = contract4(mat.membrane_inv, cert.T);
  return -0.5 * (ops.omega.array() * ddot(cert.T, HinvT).array()).sum();
}

}  // namespace vk
