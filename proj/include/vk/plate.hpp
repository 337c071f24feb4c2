// Plate kinematics, energy, and exact discrete gradient.
//
// Displacement fields are pinned to zero on the Gamma0 part of the boundary.
// Slope continuity of w across Gamma0 is encoded in the operators (even ghost
// reflection: the normal first difference vanishes there), so admissibility is
// nodal — pinned rows are zeroed — except for one stencil artifact: fully
// clamped grids with odd node counts carry a single zero-energy deflection
// mode (uniform on odd-odd nodes) that is excluded from the admissible space;
// see has_spurious_w_mode / remove_spurious_w below.
#pragma once

#include <cmath>
#include <string>

#include "vk/common.hpp"
#include "vk/constitutive.hpp"
#include "vk/fd.hpp"
#include "vk/grid.hpp"

namespace vk {

struct PlateMaterial {
  LameParams lame;
  Tensor42 membrane, bending, membrane_inv, bending_inv;

  static PlateMaterial make(const LameParams& p) {
    PlateMaterial m;
    m.lame = p;
    m.membrane = build_membrane_tensor(p);
    m.bending = build_bending_tensor(p);
    m.membrane_inv = invert_sym4(m.membrane);
    m.bending_inv = invert_sym4(m.bending);
    return m;
  }
};

struct PlateState {
  VectorField2<double> u;
  ScalarField2<double> w;

  static PlateState zero(const Grid2& g) {
    return {VectorField2<double>::zero(g), ScalarField2<double>::zero(g)};
  }
};

// Domain loads act everywhere; traction and spring fields are read only on the
// GammaT part of the boundary.
struct PlateLoads {
  ScalarField2<double> P1, P2, P;
  ScalarField2<double> Pt1, Pt2, Pt;
  ScalarField2<double> eps1, eps2;

  static PlateLoads zero(const Grid2& g) {
    const auto z = ScalarField2<double>::zero(g);
    return {z, z, z, z, z, z, z, z};
  }

  double sup() const {
    auto m = [](const ScalarField2<double>& f) {
      return f.v.size() ? f.v.cwiseAbs().maxCoeff() : 0.0;
    };
    return std::max({m(P1), m(P2), m(P), m(Pt1), m(Pt2), m(Pt)});
  }
};

struct EnergyBreakdown {
  double membrane = 0.0, bending = 0.0, work = 0.0, spring = 0.0, total = 0.0;
};

struct PlateGradient {
  Mat u1, u2, w;
};

// Per-node quadrature weight of the GammaT boundary edges (edge-wise trapezoid;
// a GammaT corner collects the end weight of each adjacent GammaT edge).
inline Mat gammat_weights(const Grid2& g) {
  Mat bw = Mat::Zero(g.nx, g.ny);
  const Vec wx = trapezoid_weights<double>(g.nx, g.hx);
  const Vec wy = trapezoid_weights<double>(g.ny, g.hy);
  if (!g.edge_clamped(Edge::West))
    for (int j = 0; j < g.ny; ++j) bw(0, j) += wy(j);
  if (!g.edge_clamped(Edge::East))
    for (int j = 0; j < g.ny; ++j) bw(g.nx - 1, j) += wy(j);
  if (!g.edge_clamped(Edge::South))
    for (int i = 0; i < g.nx; ++i) bw(i, 0) += wx(i);
  if (!g.edge_clamped(Edge::North))
    for (int i = 0; i < g.nx; ++i) bw(i, g.ny - 1) += wx(i);
  return bw;
}

inline void zero_pinned(const Grid2& g, Mat& f) {
  for (int i = 0; i < g.nx; ++i) {
    if (g.pinned(i, 0)) f(i, 0) = 0.0;
    if (g.pinned(i, g.ny - 1)) f(i, g.ny - 1) = 0.0;
  }
  for (int j = 0; j < g.ny; ++j) {
    if (g.pinned(0, j)) f(0, j) = 0.0;
    if (g.pinned(g.nx - 1, j)) f(g.nx - 1, j) = 0.0;
  }
}

// On a fully clamped grid with odd node counts, the deflection supported on
// the odd-odd interior nodes is annihilated by every clamped stencil (central
// interior rows skip it, the even-reflection end rows reach only even-index
// nodes) while still pairing with the load, so it would make the discrete
// energy unbounded below. That single mode is excluded from the discrete
// admissible space. One-sided rows on a traction edge or an even node count
// break the pattern, so no other grid carries such a mode.
inline bool has_spurious_w_mode(const Grid2& g) {
  for (const BoundaryPart p : g.edge)
    if (p != BoundaryPart::Gamma0) return false;
  return g.nx % 2 == 1 && g.ny % 2 == 1;
}

// Removes the component along the excluded mode (uniform on odd-odd nodes).
inline void remove_spurious_w(const Grid2& g, Mat& w) {
  if (!has_spurious_w_mode(g)) return;
  double sum = 0.0;
  int count = 0;
  for (int j = 1; j < g.ny; j += 2)
    for (int i = 1; i < g.nx; i += 2) {
      sum += w(i, j);
      ++count;
    }
  const double mean = sum / count;
  for (int j = 1; j < g.ny; j += 2)
    for (int i = 1; i < g.nx; i += 2) w(i, j) -= mean;
}

inline void project_admissible(const Grid2& g, PlateState& s) {
  zero_pinned(g, s.u.x);
  zero_pinned(g, s.u.y);
  zero_pinned(g, s.w.v);
  remove_spurious_w(g, s.w.v);
}

// Symmetric gradient of the in-plane displacement (no deflection coupling).
inline SymTensorField2<double> sym_grad(const PlateOps& ops,
                                        const VectorField2<double>& u) {
  SymTensorField2<double> e;
  e.t11 = ax(ops.dx, u.x);
  e.t22 = ay(ops.dy, u.y);
  e.t12 = 0.5 * (ay(ops.dy, u.x) + ax(ops.dx, u.y));
  return e;
}

// In-plane strain with the quadratic deflection-gradient term.
inline SymTensorField2<double> gamma(const Grid2& g, const PlateOps& ops,
                                     const PlateState& s) {
  (void)g;
  SymTensorField2<double> out;
  const Mat gwx = ax(ops.dxg, s.w.v);
  const Mat gwy = ay(ops.dyg, s.w.v);
  out.t11 = ax(ops.dx, s.u.x) + 0.5 * gwx.cwiseProduct(gwx);
  out.t22 = ay(ops.dy, s.u.y) + 0.5 * gwy.cwiseProduct(gwy);
  out.t12 = 0.5 * (ay(ops.dy, s.u.x) + ax(ops.dx, s.u.y)) +
            0.5 * gwx.cwiseProduct(gwy);
  return out;
}

// Pointwise curvature diagnostic: kappa_ab = -diff2(w, a, b).
inline SymTensorField2<double> kappa(const Grid2& g,
                                     const ScalarField2<double>& w) {
  SymTensorField2<double> out;
  out.t11 = -diff2(g, w, 1, 1).v;
  out.t22 = -diff2(g, w, 2, 2).v;
  out.t12 = -diff2(g, w, 1, 2).v;
  return out;
}

// Variational curvature used by the energy: clamped-edge rows carry the ghost
// reflection instead of one-sided stencils.
inline SymTensorField2<double> curvature(const PlateOps& ops,
                                         const ScalarField2<double>& w) {
  SymTensorField2<double> out;
  out.t11 = ax(ops.cxx, w.v);
  out.t22 = ay(ops.cyy, w.v);
  out.t12 = ax(ops.dxg, ay(ops.dyg, w.v));
  return out;
}

struct KLDisplacement {
  VectorField2<double> u;
  ScalarField2<double> w;
};

// Through-thickness displacement at offset x3 from the midsurface.
inline KLDisplacement kl_displacement(const Grid2& g, const PlateOps& ops,
                                      const PlateMaterial& mat,
                                      const PlateState& s, double x3) {
  (void)g;
  const double half = 0.5 * mat.lame.thickness;
  if (std::abs(x3) > half)
    throw RangeError("x3 = " + std::to_string(x3) +
                     " lies outside the plate thickness");
  KLDisplacement out;
  out.u.x = s.u.x - x3 * ax(ops.dxg, s.w.v);
  out.u.y = s.u.y - x3 * ay(ops.dyg, s.w.v);
  out.w = s.w;
  return out;
}

inline bool mixed_mode(const Grid2& g) { return g.has_part(BoundaryPart::GammaT); }

inline void validate_springs(const Grid2& g, const PlateLoads& loads) {
  if (!mixed_mode(g)) return;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!g.is_boundary(i, j) || g.part_of(i, j) != BoundaryPart::GammaT)
        continue;
      if (!(loads.eps1.v(i, j) > 0.0) || !(loads.eps2.v(i, j) > 0.0))
        throw ParameterError(
            "boundary spring coefficients must be strictly positive on the "
            "traction part (node " +
            std::to_string(i) + "," + std::to_string(j) + ")");
    }
}

inline EnergyBreakdown energy(const Grid2& g, const PlateOps& ops,
                              const PlateMaterial& mat, const PlateState& s,
                              const PlateLoads& loads) {
  validate_springs(g, loads);
  EnergyBreakdown e;
  const auto gm = gamma(g, ops, s);
  const auto N = contract4(mat.membrane, gm);
  e.membrane = 0.5 * (ops.omega.array() * ddot(N, gm).array()).sum();
  const auto W = curvature(ops, s.w);
  const auto B = contract4(mat.bending, W);
  e.bending = 0.5 * (ops.omega.array() * ddot(B, W).array()).sum();
  e.work = (ops.omega.array() *
            (loads.P.v.array() * s.w.v.array() +
             loads.P1.v.array() * s.u.x.array() +
             loads.P2.v.array() * s.u.y.array()))
               .sum();
  if (mixed_mode(g)) {
    const Mat bw = gammat_weights(g);
    e.work += (bw.array() * (loads.Pt.v.array() * s.w.v.array() +
                             loads.Pt1.v.array() * s.u.x.array() +
                             loads.Pt2.v.array() * s.u.y.array()))
                  .sum();
    e.spring = (bw.array() * (loads.eps1.v.array() * s.u.x.array().square() +
                              loads.eps2.v.array() * s.u.y.array().square()))
                   .sum();
  }
  e.total = e.membrane + e.bending - e.work + e.spring;
  return e;
}

// Exact derivative of the discrete energy; pinned rows are zeroed so the
// iterates stay admissible.
inline PlateGradient gradient(const Grid2& g, const PlateOps& ops,
                              const PlateMaterial& mat, const PlateState& s,
                              const PlateLoads& loads) {
  const auto gm = gamma(g, ops, s);
  const auto N = contract4(mat.membrane, gm);
  const Mat gwx = ax(ops.dxg, s.w.v);
  const Mat gwy = ay(ops.dyg, s.w.v);
  const auto W = curvature(ops, s.w);
  const auto B = contract4(mat.bending, W);
  const auto& om = ops.omega;

  PlateGradient grad;
  grad.u1 = axT(ops.dx, om.cwiseProduct(N.t11)) +
            ayT(ops.dy, om.cwiseProduct(N.t12)) - om.cwiseProduct(loads.P1.v);
  grad.u2 = axT(ops.dx, om.cwiseProduct(N.t12)) +
            ayT(ops.dy, om.cwiseProduct(N.t22)) - om.cwiseProduct(loads.P2.v);
  grad.w = axT(ops.cxx, om.cwiseProduct(B.t11)) +
           ayT(ops.cyy, om.cwiseProduct(B.t22)) +
           axT(ops.dxg, ayT(ops.dyg, 2.0 * om.cwiseProduct(B.t12))) +
           axT(ops.dxg, om.cwiseProduct(N.t11.cwiseProduct(gwx) +
                                        N.t12.cwiseProduct(gwy))) +
           ayT(ops.dyg, om.cwiseProduct(N.t12.cwiseProduct(gwx) +
                                        N.t22.cwiseProduct(gwy))) -
           om.cwiseProduct(loads.P.v);
  if (mixed_mode(g)) {
    const Mat bw = gammat_weights(g);
    grad.u1 += bw.cwiseProduct(2.0 * loads.eps1.v.cwiseProduct(s.u.x) -
                               loads.Pt1.v);
    grad.u2 += bw.cwiseProduct(2.0 * loads.eps2.v.cwiseProduct(s.u.y) -
                               loads.Pt2.v);
    grad.w -= bw.cwiseProduct(loads.Pt.v);
  }
  zero_pinned(g, grad.u1);
  zero_pinned(g, grad.u2);
  zero_pinned(g, grad.w);
  return grad;
}

// Sup norm of the quadrature-scaled gradient: the discrete Euler-Lagrange
// residual the convergence certificate and the dual-side tolerances refer to.
inline double scaled_sup(const Grid2& g, const PlateOps& ops,
                         const PlateGradient& grad) {
  double m = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (g.pinned(i, j)) continue;
      const double w = ops.omega(i, j);
      m = std::max({m, std::abs(grad.u1(i, j)) / w, std::abs(grad.u2(i, j)) / w,
                    std::abs(grad.w(i, j)) / w});
    }
  return m;
}

inline Vec pack(const PlateState& s) {
  const Eigen::Index n = s.w.v.size();
  Vec v(3 * n);
  v.segment(0, n) = s.u.x.reshaped();
  v.segment(n, n) = s.u.y.reshaped();
  v.segment(2 * n, n) = s.w.v.reshaped();
  return v;
}

inline PlateState unpack(const Grid2& g, const Vec& v) {
  const Eigen::Index n = static_cast<Eigen::Index>(g.nx) * g.ny;
  PlateState s = PlateState::zero(g);
  s.u.x = v.segment(0, n).reshaped(g.nx, g.ny);
  s.u.y = v.segment(n, n).reshaped(g.nx, g.ny);
  s.w.v = v.segment(2 * n, n).reshaped(g.nx, g.ny);
  return s;
}

}  // namespace vk
