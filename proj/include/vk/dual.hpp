// Dual side of the plate problem: the conjugate functionals, the dual point
// extracted from a primal critical point, admissibility residuals, and the
// numerical probes (gap, weak duality, stationarity, concavity).
//
// Operator conventions. Curvature keeps the clamped-aware stencils (it is the
// energy's convention, and the bending conjugate then telescopes against the
// bending energy exactly). The multiplier layer -- z*, the shear field Q, and
// the weak-duality penalty -- differentiates with the generic stencils
// throughout: z* is a free field whose conjugate must integrate the true
// gradient, and Q must be built from the same first differences as f*, or the
// K-channels of g2* and f* disagree on the boundary rows and the mismatch
// (K/2)(|grad_c w|^2 - |grad_g w|^2) surfaces as a spurious duality gap at
// extracted points.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "vk/common.hpp"
#include "vk/constitutive.hpp"
#include "vk/fd.hpp"
#include "vk/grid.hpp"
#include "vk/plate.hpp"

namespace vk {

struct DualPoint {
  SymTensorField2<double> N, M_tilde;
  VectorField2<double> Q;
  ScalarField2<double> z_star;
  double K = 1.0;

  static DualPoint zero(const Grid2& g, double K) {
    return {SymTensorField2<double>::zero(g), SymTensorField2<double>::zero(g),
            VectorField2<double>::zero(g), ScalarField2<double>::zero(g), K};
  }
};

// The moment-like argument every conjugate sees: M_tilde + z* * identity.
inline SymTensorField2<double> moment_argument(const DualPoint& d) {
  SymTensorField2<double> c;
  c.t11 = d.M_tilde.t11 + d.z_star.v;
  c.t22 = d.M_tilde.t22 + d.z_star.v;
  c.t12 = d.M_tilde.t12;
  return c;
}

inline DualPoint extract_dual(const Grid2& g, const PlateOps& ops,
                              const PlateMaterial& mat, const PlateState& u0,
                              double K) {
  if (!(K > 0.0)) throw ParameterError("K must be positive");
  DualPoint d = DualPoint::zero(g, K);
  d.z_star.v = (-K) * u0.w.v;
  const auto W = curvature(ops, u0.w);
  const auto B = contract4(mat.bending, W);
  d.M_tilde.t11 = B.t11 - d.z_star.v;
  d.M_tilde.t22 = B.t22 - d.z_star.v;
  d.M_tilde.t12 = B.t12;
  d.N = contract4(mat.membrane, gamma(g, ops, u0));
  // Generic first differences: Q must match f*'s gradient convention.
  const Mat gwx = ax(ops.dx, u0.w.v);
  const Mat gwy = ay(ops.dy, u0.w.v);
  d.Q.x = d.N.t11.cwiseProduct(gwx) + d.N.t12.cwiseProduct(gwy) + K * gwx;
  d.Q.y = d.N.t12.cwiseProduct(gwx) + d.N.t22.cwiseProduct(gwy) + K * gwy;
  const double margin = nk_margin(g, d.N, K);
  if (!(margin > 0.0))
    throw BStarViolation(
        "extracted membrane forces leave the admissible cone (margin " +
            std::to_string(margin) + "); increase K",
        -1, -1, margin, margin);
  return d;
}

inline double g1_star(const Grid2& g, const PlateOps& ops,
                      const PlateMaterial& mat, const DualPoint& d) {
  (void)g;
  const auto c = moment_argument(d);
  const auto hc = contract4(mat.bending_inv, c);
  return 0.5 * (ops.omega.array() * ddot(hc, c).array()).sum();
}

inline double g2_star(const Grid2& g, const PlateOps& ops,
                      const PlateMaterial& mat, const DualPoint& d) {
  const auto inv = nk_inverse_field(g, d.N, d.K);
  const double q_part =
      0.5 * (ops.omega.array() *
             (inv.t11.array() * d.Q.x.array().square() +
              inv.t22.array() * d.Q.y.array().square() +
              2.0 * inv.t12.array() * d.Q.x.array() * d.Q.y.array()))
                .sum();
  const auto hn = contract4(mat.membrane_inv, d.N);
  const double n_part =
      0.5 * (ops.omega.array() * ddot(hn, d.N).array()).sum();
  return q_part + n_part;
}

inline double f_star(const Grid2& g, const PlateOps& ops,
                     const ScalarField2<double>& z, double K) {
  (void)g;
  if (!(K > 0.0)) throw ParameterError("K must be positive");
  const Mat gx = ax(ops.dx, z.v);
  const Mat gy = ay(ops.dy, z.v);
  return (0.5 / K) *
         (ops.omega.array() * (gx.array().square() + gy.array().square()))
             .sum();
}

inline double j_star(const Grid2& g, const PlateOps& ops,
                     const PlateMaterial& mat, const DualPoint& d) {
  return -g1_star(g, ops, mat, d) - g2_star(g, ops, mat, d) +
         f_star(g, ops, d.z_star, d.K);
}

// Compatibility operator on the recovered curvature: y-second-derivative of
// the 11 slot minus x-second-derivative of the 22 slot, with the same
// clamped-aware stencils that produced the moments, so extracted points
// annihilate it to roundoff.
inline Mat l_operator(const PlateOps& ops, const PlateMaterial& mat,
                      const DualPoint& d) {
  const auto k = contract4(mat.bending_inv, moment_argument(d));
  return ay(ops.cyy, k.t11) - ax(ops.cxx, k.t22);
}

// Cached inverse of the fourth-order interior operator
//   a22 * d4/dx4 - 2*a12 * d4/dx2dy2 + a11 * d4/dy4,  a = bending inverse,
// built from the symmetric interior second-difference blocks with zero
// boundary values. The coefficient signs make every kron eigenvalue positive,
// so the quadratic form <C0 y, y> is nonnegative.
struct C0Solver {
  int mx = 0, my = 0;
  double eps3 = 0.5;
  Mat A;
  Eigen::PartialPivLU<Mat> lu;

  static Mat interior_d2(int n, double h) {
    const int m = n - 2;
    Mat d = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      d(i, i) = -2.0 / (h * h);
      if (i > 0) d(i, i - 1) = 1.0 / (h * h);
      if (i + 1 < m) d(i, i + 1) = 1.0 / (h * h);
    }
    return d;
  }

  static Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
            a(i, j) * b;
    return out;
  }

  static C0Solver make(const Grid2& g, const PlateMaterial& mat, double eps3) {
    if (!(eps3 > 0.0 && eps3 < 1.0))
      throw ParameterError("eps3 must lie strictly between 0 and 1");
    C0Solver s;
    s.mx = g.nx - 2;
    s.my = g.ny - 2;
    s.eps3 = eps3;
    const Mat cx = interior_d2(g.nx, g.hx);
    const Mat cy = interior_d2(g.ny, g.hy);
    const Mat ix = Mat::Identity(s.mx, s.mx);
    const Mat iy = Mat::Identity(s.my, s.my);
    const double a1111 = mat.bending_inv.C(0, 0);
    const double a1122 = mat.bending_inv.C(0, 1);
    const double a2222 = mat.bending_inv.C(1, 1);
    s.A = a2222 * kron(iy, Mat(cx * cx)) - 2.0 * a1122 * kron(cy, cx) +
          a1111 * kron(Mat(cy * cy), ix);
    s.lu = Eigen::PartialPivLU<Mat>(s.A);
    return s;
  }

  // Interior solve, zero on the boundary ring, scaled by (1 - eps3).
  Mat apply(const Grid2& g, const Mat& y) const {
    const Vec rhs = y.block(1, 1, mx, my).reshaped();
    Mat out = Mat::Zero(g.nx, g.ny);
    if (rhs.size() == 0) return out;
    const double ynorm = rhs.norm();
    if (ynorm == 0.0) return out;
    const Vec x = lu.solve(rhs);
    const double resid = (A * x - rhs).norm();
    if (resid > 1e-10 * ynorm)
      throw LinearSolveError("fourth-order interior solve residual " +
                             std::to_string(resid) + " exceeds 1e-10 * " +
                             std::to_string(ynorm));
    out.block(1, 1, mx, my) = ((1.0 - eps3) * x).reshaped(mx, my);
    return out;
  }

  // Forward operator (unscaled), for round-trip checks.
  Mat forward(const Grid2& g, const Mat& w) const {
    const Vec x = w.block(1, 1, mx, my).reshaped();
    Mat out = Mat::Zero(g.nx, g.ny);
    out.block(1, 1, mx, my) = (A * x).reshaped(mx, my);
    return out;
  }
};

inline double j1_star(const Grid2& g, const PlateOps& ops,
                      const PlateMaterial& mat, const C0Solver& c0,
                      const DualPoint& d) {
  const Mat L = l_operator(ops, mat, d);
  const Mat cl = c0.apply(g, L);
  return j_star(g, ops, mat, d) +
         0.5 * (ops.omega.array() * cl.array() * L.array()).sum();
}

inline double j2_star(const Grid2& g, const PlateOps& ops,
                      const PlateMaterial& mat, const C0Solver& c0,
                      const ScalarField2<double>& z, double K) {
  const double b = mat.bending_inv.C(0, 0) + mat.bending_inv.C(0, 1) +
                   mat.bending_inv.C(1, 0) + mat.bending_inv.C(1, 1);
  const double quad =
      -0.5 * b * (ops.omega.array() * z.v.array().square()).sum();
  SymTensorField2<double> zdelta;
  zdelta.t11 = z.v;
  zdelta.t22 = z.v;
  zdelta.t12 = Mat::Zero(z.v.rows(), z.v.cols());
  const auto k = contract4(mat.bending_inv, zdelta);
  const Mat L0 = ay(ops.cyy, k.t11) - ax(ops.cxx, k.t22);
  const Mat cl = c0.apply(g, L0);
  const double corr = 0.5 * (ops.omega.array() * cl.array() * L0.array()).sum();
  return quad + corr + f_star(g, ops, z, K);
}

struct ResidualFields {
  Mat membrane1, membrane2, moment;
};

// Force-balance residuals of a dual candidate, as full-grid fields built from
// the generic stencils.
inline ResidualFields equilibrium_residual_fields(const Grid2& g,
                                                  const PlateOps& ops,
                                                  const DualPoint& d,
                                                  const PlateLoads& loads) {
  ResidualFields r;
  r.membrane1 = ax(ops.dx, d.N.t11) + ay(ops.dy, d.N.t12) + loads.P1.v;
  r.membrane2 = ax(ops.dx, d.N.t12) + ay(ops.dy, d.N.t22) + loads.P2.v;
  r.moment = ax(ops.dx, ax(ops.dx, d.M_tilde.t11)) +
             2.0 * ax(ops.dx, ay(ops.dy, d.M_tilde.t12)) +
             ay(ops.dy, ay(ops.dy, d.M_tilde.t22)) - ax(ops.dx, d.Q.x) -
             ay(ops.dy, d.Q.y) - loads.P.v;
  (void)g;
  return r;
}

// The one-sided boundary stencils contaminate a few node layers; residual
// sup-norms are taken this far inside.
inline int interior_margin(const Grid2& g) {
  return std::min(g.nx, g.ny) < 9 ? 1 : 3;
}

inline double interior_sup(const Grid2& g, const Mat& f, int margin) {
  double m = 0.0;
  for (int j = margin; j < g.ny - margin; ++j)
    for (int i = margin; i < g.nx - margin; ++i)
      m = std::max(m, std::abs(f(i, j)));
  return m;
}

struct EquilibriumReport {
  double residual_membrane = 0.0;
  double residual_moment = 0.0;
  int margin = 0;
};

inline EquilibriumReport equilibrium_residuals(const Grid2& g,
                                               const PlateOps& ops,
                                               const DualPoint& d,
                                               const PlateLoads& loads) {
  auto r = equilibrium_residual_fields(g, ops, d, loads);
  EquilibriumReport rep;
  rep.margin = interior_margin(g);
  rep.residual_membrane = std::max(interior_sup(g, r.membrane1, rep.margin),
                                   interior_sup(g, r.membrane2, rep.margin));
  // Admissible deflections on a fully clamped odd-count grid carry no uniform
  // odd-odd component, so the moment balance is testable only modulo that
  // component; its interior average is removed before taking the sup.
  if (has_spurious_w_mode(g)) {
    const int i0 = rep.margin | 1;  // first odd index inside the margin
    double sum = 0.0;
    int count = 0;
    for (int j = i0; j < g.ny - rep.margin; j += 2)
      for (int i = i0; i < g.nx - rep.margin; i += 2) {
        sum += r.moment(i, j);
        ++count;
      }
    if (count > 0) {
      const double mean = sum / count;
      for (int j = i0; j < g.ny - rep.margin; j += 2)
        for (int i = i0; i < g.nx - rep.margin; i += 2) r.moment(i, j) -= mean;
    }
  }
  rep.residual_moment = interior_sup(g, r.moment, rep.margin);
  return rep;
}

inline double j3_star(const Grid2& g, const PlateOps& ops,
                      const PlateMaterial& mat, const DualPoint& d,
                      const PlateState& u, const PlateLoads& loads) {
  const auto r = equilibrium_residual_fields(g, ops, d, loads);
  const double moment_pair =
      (ops.omega.array() * u.w.v.array() * r.moment.array()).sum();
  const double membrane_pair =
      (ops.omega.array() * (u.u.x.array() * r.membrane1.array() +
                            u.u.y.array() * r.membrane2.array()))
          .sum();
  return j_star(g, ops, mat, d) + moment_pair - membrane_pair;
}

inline double duality_gap(double j_primal, double j_dual) {
  return std::abs(j_primal - j_dual) / (1.0 + std::abs(j_primal));
}

// --- samplers -------------------------------------------------------------

// Smooth random field from low sine modes; vanishes on the whole boundary.
inline Mat sample_bubble(const Grid2& g, Rng& rng, double amp) {
  Mat f = Mat::Zero(g.nx, g.ny);
  constexpr double pi = 3.14159265358979323846;
  for (int kx = 1; kx <= 3; ++kx)
    for (int ky = 1; ky <= 3; ++ky) {
      const double c = amp * rng.uniform(-1.0, 1.0) / (kx * ky);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          f(i, j) += c * std::sin(kx * pi * g.x(i) / g.lx) *
                     std::sin(ky * pi * g.y(j) / g.ly);
    }
  return f;
}

// Smooth random field with nonzero boundary trace (cosine modes included).
inline Mat sample_smooth(const Grid2& g, Rng& rng, double amp) {
  Mat f = sample_bubble(g, rng, amp);
  constexpr double pi = 3.14159265358979323846;
  for (int kx = 0; kx <= 2; ++kx)
    for (int ky = 0; ky <= 2; ++ky) {
      const double c = amp * rng.uniform(-1.0, 1.0) / ((kx + 1) * (ky + 1));
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          f(i, j) += c * std::cos(kx * pi * g.x(i) / g.lx) *
                     std::cos(ky * pi * g.y(j) / g.ly);
    }
  return f;
}

// Random admissible state: smooth fields with pinned rows zeroed.
inline PlateState sample_admissible(const Grid2& g, Rng& rng, double amp) {
  PlateState s = PlateState::zero(g);
  s.u.x = sample_smooth(g, rng, amp);
  s.u.y = sample_smooth(g, rng, amp);
  s.w.v = sample_smooth(g, rng, amp);
  project_admissible(g, s);
  return s;
}

// --- probes ----------------------------------------------------------------

struct WeakDualityReport {
  int trials = 0;
  int violations = 0;
  double worst_slack = std::numeric_limits<double>::infinity();  // min over trials
  double tol = 0.0;
};

// Checks j_dual <= J(u) + (K/2)||grad w - grad w0||^2 + tol over random
// admissible trials. Slack is the right side minus the left; violations count
// trials with slack < -tol.
inline WeakDualityReport weak_duality_probe(
    const Grid2& g, const PlateOps& ops, const PlateMaterial& mat,
    const PlateLoads& loads, const PlateState& u0, const DualPoint& d,
    int trial_count, Rng& rng, double tol_weak, double amp = 0.5) {
  const double jd = j_star(g, ops, mat, d);
  // Penalty gradients follow the multiplier-layer convention (generic ops).
  const Mat g0x = ax(ops.dx, u0.w.v), g0y = ay(ops.dy, u0.w.v);
  WeakDualityReport rep;
  rep.tol = tol_weak;
  auto try_state = [&](const PlateState& u) {
    const double J = energy(g, ops, mat, u, loads).total;
    const Mat dxw = ax(ops.dx, u.w.v) - g0x;
    const Mat dyw = ay(ops.dy, u.w.v) - g0y;
    const double pen =
        0.5 * d.K *
        (ops.omega.array() * (dxw.array().square() + dyw.array().square()))
            .sum();
    const double slack = J + pen - jd;
    rep.worst_slack = std::min(rep.worst_slack, slack);
    if (slack < -tol_weak) ++rep.violations;
    ++rep.trials;
  };
  try_state(u0);
  for (int t = 1; t < trial_count; ++t) try_state(sample_admissible(g, rng, amp));
  return rep;
}

struct ConcavityReport {
  int directions = 0;
  int skipped = 0;  // directions leaving the admissible cone
  double max_second_difference = -std::numeric_limits<double>::infinity();
  double tol = 0.0;
};

// Second differences of j1_star along random directions in (N, Q, M_tilde);
// concavity means none is positive beyond roundoff.
inline ConcavityReport concavity_probe(const Grid2& g, const PlateOps& ops,
                                       const PlateMaterial& mat,
                                       const C0Solver& c0, const DualPoint& base,
                                       int n_directions, Rng& rng,
                                       double t = 1e-3, double rel_tol = 1e-8) {
  ConcavityReport rep;
  auto perturbed = [&](const DualPoint& dir, double s) {
    DualPoint p = base;
    p.N.t11 += s * dir.N.t11;
    p.N.t22 += s * dir.N.t22;
    p.N.t12 += s * dir.N.t12;
    p.Q.x += s * dir.Q.x;
    p.Q.y += s * dir.Q.y;
    p.M_tilde.t11 += s * dir.M_tilde.t11;
    p.M_tilde.t22 += s * dir.M_tilde.t22;
    p.M_tilde.t12 += s * dir.M_tilde.t12;
    return p;
  };
  for (int k = 0; k < n_directions; ++k) {
    DualPoint dir = DualPoint::zero(g, base.K);
    dir.N.t11 = sample_smooth(g, rng, 1.0);
    dir.N.t22 = sample_smooth(g, rng, 1.0);
    dir.N.t12 = sample_smooth(g, rng, 1.0);
    dir.Q.x = sample_smooth(g, rng, 1.0);
    dir.Q.y = sample_smooth(g, rng, 1.0);
    dir.M_tilde.t11 = sample_smooth(g, rng, 1.0);
    dir.M_tilde.t22 = sample_smooth(g, rng, 1.0);
    dir.M_tilde.t12 = sample_smooth(g, rng, 1.0);
    const DualPoint plus = perturbed(dir, t);
    const DualPoint minus = perturbed(dir, -t);
    if (!(nk_margin(g, plus.N, base.K) > 0.0) ||
        !(nk_margin(g, minus.N, base.K) > 0.0)) {
      ++rep.skipped;
      continue;
    }
    const double a = j1_star(g, ops, mat, c0, plus);
    const double b = j1_star(g, ops, mat, c0, base);
    const double c = j1_star(g, ops, mat, c0, minus);
    const double second = a + c - 2.0 * b;
    const double scale = std::abs(a) + 2.0 * std::abs(b) + std::abs(c) + 1.0;
    rep.tol = std::max(rep.tol, rel_tol * scale);
    rep.max_second_difference = std::max(rep.max_second_difference, second);
    ++rep.directions;
  }
  return rep;
}

struct StationarityReport {
  // Residuals of the five variation equations at the extracted point, in the
  // order: moment argument, shear, membrane, multiplier field, force balance.
  double var_moment = 0.0;
  double var_shear = 0.0;
  double var_membrane = 0.0;
  double var_multiplier = 0.0;
  double var_multiplier_crosscheck = 0.0;  // independent 3-point stencils
  double var_balance = 0.0;
  double z_identity = 0.0;  // sup |z* + K w0|, zero by construction
  double tol = 0.0;
};

inline double sup3(const SymTensorField2<double>& f) {
  return std::max({f.t11.cwiseAbs().maxCoeff(), f.t22.cwiseAbs().maxCoeff(),
                   f.t12.cwiseAbs().maxCoeff()});
}

inline StationarityReport check_stationarity(const Grid2& g,
                                             const PlateOps& ops,
                                             const PlateMaterial& mat,
                                             const PlateState& u0,
                                             const DualPoint& d,
                                             const PlateLoads& loads,
                                             double grad_tol) {
  StationarityReport rep;
  rep.tol = 10.0 * grad_tol * (1.0 + loads.sup());

  rep.z_identity = (d.z_star.v + d.K * u0.w.v).cwiseAbs().maxCoeff();

  const auto W = curvature(ops, u0.w);
  auto k = contract4(mat.bending_inv, moment_argument(d));
  k.t11 -= W.t11;
  k.t22 -= W.t22;
  k.t12 -= W.t12;
  rep.var_moment = sup3(k);

  const auto inv = nk_inverse_field(g, d.N, d.K);
  const Mat mx = inv.t11.cwiseProduct(d.Q.x) + inv.t12.cwiseProduct(d.Q.y);
  const Mat my = inv.t12.cwiseProduct(d.Q.x) + inv.t22.cwiseProduct(d.Q.y);
  const Mat gwx = ax(ops.dx, u0.w.v);
  const Mat gwy = ay(ops.dy, u0.w.v);
  rep.var_shear = std::max((mx - gwx).cwiseAbs().maxCoeff(),
                           (my - gwy).cwiseAbs().maxCoeff());

  // The membrane equation lives in the energy's convention: the clamped
  // first differences of w, the same ones the strain uses.
  auto gm = contract4(mat.membrane_inv, d.N);
  const auto e = sym_grad(ops, u0.u);
  const Mat cwx = ax(ops.dxg, u0.w.v);
  const Mat cwy = ay(ops.dyg, u0.w.v);
  gm.t11 -= 0.5 * cwx.cwiseProduct(cwx) + e.t11;
  gm.t22 -= 0.5 * cwy.cwiseProduct(cwy) + e.t22;
  gm.t12 -= 0.5 * cwx.cwiseProduct(cwy) + e.t12;
  rep.var_membrane = sup3(gm);

  // Multiplier equation: -lap(z*)/K - lap(w0) = 0, same composed stencils on
  // both terms, plus an independent 3-point-stencil evaluation.
  const Mat lap_z = ax(ops.cxx, d.z_star.v) + ay(ops.cyy, d.z_star.v);
  const Mat lap_w = ax(ops.cxx, u0.w.v) + ay(ops.cyy, u0.w.v);
  rep.var_multiplier = (-lap_z / d.K - lap_w).cwiseAbs().maxCoeff();
  const Mat d2x = d2_matrix<double>(g.nx, g.hx);
  const Mat d2y = d2_matrix<double>(g.ny, g.hy);
  const Mat lz2 = ax(d2x, d.z_star.v) + ay(d2y, d.z_star.v);
  const Mat lw2 = ax(d2x, u0.w.v) + ay(d2y, u0.w.v);
  rep.var_multiplier_crosscheck = (-lz2 / d.K - lw2).cwiseAbs().maxCoeff();

  const auto eq = equilibrium_residuals(g, ops, d, loads);
  rep.var_balance = std::max(eq.residual_membrane, eq.residual_moment);
  return rep;
}

struct KSelection {
  double K = 1.0;
  int doublings = 0;
  double b_margin = 0.0;
  double j2_min = 0.0;
};

// K = 1 + ||N||_inf, validated against cone membership and positivity of the
// scalar functional on random smooth trace-zero samples; doubles on failure.
inline KSelection auto_select_K(const Grid2& g, const PlateOps& ops,
                                const PlateMaterial& mat, const C0Solver& c0,
                                const SymTensorField2<double>& N, Rng& rng,
                                int j2_samples = 100, int max_doublings = 20) {
  KSelection sel;
  sel.K = 1.0 + sup3(N);
  for (sel.doublings = 0; sel.doublings <= max_doublings; ++sel.doublings) {
    sel.b_margin = nk_margin(g, N, sel.K);
    sel.j2_min = std::numeric_limits<double>::infinity();
    Rng sample_rng(rng.uniform_int(0, 1 << 30));
    for (int s = 0; s < j2_samples; ++s) {
      ScalarField2<double> z;
      z.v = sample_bubble(g, sample_rng, 1.0);
      sel.j2_min = std::min(sel.j2_min, j2_star(g, ops, mat, c0, z, sel.K));
    }
    if (sel.b_margin > 0.0 && sel.j2_min > 0.0) return sel;
    sel.K *= 2.0;
  }
  throw ParameterError("no admissible K found after " +
                       std::to_string(max_doublings) + " doublings");
}

// Exact force-balance member for zero in-plane loads: N from a scalar
// potential (self-balanced), Q a rotated gradient (divergence-free), constant
// M_tilde. Residuals vanish up to the non-associativity of the stencil
// compositions.
inline DualPoint make_balanced_dual(const Grid2& g, const PlateOps& ops,
                                    const Mat& phi, const Mat& psi,
                                    double m11, double m22, double m12,
                                    double K) {
  DualPoint d = DualPoint::zero(g, K);
  d.N.t11 = ay(ops.dy, ay(ops.dy, phi));
  d.N.t22 = ax(ops.dx, ax(ops.dx, phi));
  d.N.t12 = -ax(ops.dx, ay(ops.dy, phi));
  d.Q.x = ay(ops.dy, psi);
  d.Q.y = -ax(ops.dx, psi);
  d.M_tilde.t11 = Mat::Constant(g.nx, g.ny, m11);
  d.M_tilde.t22 = Mat::Constant(g.nx, g.ny, m22);
  d.M_tilde.t12 = Mat::Constant(g.nx, g.ny, m12);
  return d;
}

}  // namespace vk
