// Finite-difference operator matrices and quadrature on structured grids.
//
// Fields are nx-by-ny matrices; an operator along x left-multiplies, an
// operator along y right-multiplies by its transpose. Adjoints with respect to
// the unweighted nodal inner product are therefore plain matrix transposes.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vk/common.hpp"
#include "vk/grid.hpp"

namespace vk {

// Second-order first derivative: central rows, one-sided end rows.
template <class S = double>
DenseMat<S> d1_matrix(int n, S h) {
  DenseMat<S> D = DenseMat<S>::Zero(n, n);
  for (int i = 1; i + 1 < n; ++i) {
    D(i, i - 1) = S(-0.5) / h;
    D(i, i + 1) = S(0.5) / h;
  }
  D(0, 0) = S(-1.5) / h;
  D(0, 1) = S(2.0) / h;
  D(0, 2) = S(-0.5) / h;
  D(n - 1, n - 1) = S(1.5) / h;
  D(n - 1, n - 2) = S(-2.0) / h;
  D(n - 1, n - 3) = S(0.5) / h;
  return D;
}

// First derivative for fields pinned to zero on clamped ends: the end row is
// zeroed there (even ghost reflection makes the centered value vanish).
template <class S = double>
DenseMat<S> d1_clamped_matrix(int n, S h, bool lo_clamped, bool hi_clamped) {
  DenseMat<S> D = d1_matrix<S>(n, h);
  if (lo_clamped) D.row(0).setZero();
  if (hi_clamped) D.row(n - 1).setZero();
  return D;
}

// Second-order second derivative: 3-point interior rows, one-sided end rows.
template <class S = double>
DenseMat<S> d2_matrix(int n, S h) {
  DenseMat<S> D = DenseMat<S>::Zero(n, n);
  const S ih2 = S(1) / (h * h);
  for (int i = 1; i + 1 < n; ++i) {
    D(i, i - 1) = ih2;
    D(i, i) = S(-2) * ih2;
    D(i, i + 1) = ih2;
  }
  D(0, 0) = S(2) * ih2;
  D(0, 1) = S(-5) * ih2;
  D(0, 2) = S(4) * ih2;
  D(0, 3) = S(-1) * ih2;
  D(n - 1, n - 1) = S(2) * ih2;
  D(n - 1, n - 2) = S(-5) * ih2;
  D(n - 1, n - 3) = S(4) * ih2;
  D(n - 1, n - 4) = S(-1) * ih2;
  return D;
}

// Variational curvature operator: the clamped first derivative composed with
// itself, with clamped end rows replaced by the even-reflection stencil
// (f(2) - f(0)) / (2 h^2). Used by the plate energy, not by diff2.
template <class S = double>
DenseMat<S> curvature_matrix(int n, S h, bool lo_clamped, bool hi_clamped) {
  const DenseMat<S> Dg = d1_clamped_matrix<S>(n, h, lo_clamped, hi_clamped);
  DenseMat<S> C = Dg * Dg;
  const S ih2 = S(0.5) / (h * h);
  if (lo_clamped) {
    C.row(0).setZero();
    C(0, 0) = -ih2;
    C(0, 2) = ih2;
  }
  if (hi_clamped) {
    C.row(n - 1).setZero();
    C(n - 1, n - 1) = -ih2;
    C(n - 1, n - 3) = ih2;
  }
  return C;
}

template <class S = double>
Eigen::Vector<S, Eigen::Dynamic> trapezoid_weights(int n, S h) {
  Eigen::Vector<S, Eigen::Dynamic> w =
      Eigen::Vector<S, Eigen::Dynamic>::Constant(n, h);
  w(0) = S(0.5) * h;
  w(n - 1) = S(0.5) * h;
  return w;
}

template <class S>
ScalarField2<S> diff1(const Grid2& g, const ScalarField2<S>& f, int axis) {
  if (axis != 1 && axis != 2) throw ParameterError("diff1 axis must be 1 or 2");
  if (axis == 1) return {d1_matrix<S>(g.nx, S(g.hx)) * f.v};
  return {f.v * d1_matrix<S>(g.ny, S(g.hy)).transpose()};
}

// Mixed derivatives are evaluated in canonical axis order (x first), so
// diff2(f,1,2) and diff2(f,2,1) are bitwise equal.
template <class S>
ScalarField2<S> diff2(const Grid2& g, const ScalarField2<S>& f, int a, int b) {
  if (a < 1 || a > 2 || b < 1 || b > 2)
    throw ParameterError("diff2 axes must be 1 or 2");
  if (a == b) {
    if (a == 1) return {d2_matrix<S>(g.nx, S(g.hx)) * f.v};
    return {f.v * d2_matrix<S>(g.ny, S(g.hy)).transpose()};
  }
  return {d1_matrix<S>(g.nx, S(g.hx)) * f.v *
          d1_matrix<S>(g.ny, S(g.hy)).transpose()};
}

template <class S>
S integrate_domain(const Grid2& g, const ScalarField2<S>& f) {
  const auto wx = trapezoid_weights<S>(g.nx, S(g.hx));
  const auto wy = trapezoid_weights<S>(g.ny, S(g.hy));
  return (wx.transpose() * f.v * wy).value();
}

struct BoundaryIntegral {
  double value = 0.0;
  bool part_empty = false;
};

// Trapezoid rule edge by edge over the edges labeled with the requested part;
// a corner shared by two labeled edges contributes its end weight from each.
template <class S>
BoundaryIntegral integrate_boundary(const Grid2& g, const ScalarField2<S>& f,
                                    BoundaryPart part) {
  BoundaryIntegral out;
  bool any = false;
  const auto wx = trapezoid_weights<S>(g.nx, S(g.hx));
  const auto wy = trapezoid_weights<S>(g.ny, S(g.hy));
  auto edge_sum = [&](Edge e) {
    double s = 0.0;
    switch (e) {
      case Edge::West:
        for (int j = 0; j < g.ny; ++j) s += wy(j) * f.v(0, j);
        break;
      case Edge::East:
        for (int j = 0; j < g.ny; ++j) s += wy(j) * f.v(g.nx - 1, j);
        break;
      case Edge::South:
        for (int i = 0; i < g.nx; ++i) s += wx(i) * f.v(i, 0);
        break;
      case Edge::North:
        for (int i = 0; i < g.nx; ++i) s += wx(i) * f.v(i, g.ny - 1);
        break;
    }
    return s;
  };
  for (int e = 0; e < 4; ++e) {
    if (g.edge[e] != part) continue;
    any = true;
    out.value += edge_sum(static_cast<Edge>(e));
  }
  out.part_empty = !any;
  return out;
}

// Cached per-grid operator set for the plate stack.
struct PlateOps {
  Mat dx, dy;    // generic first derivatives
  Mat dxg, dyg;  // first derivatives for fields vanishing on pinned edges
  Mat cxx, cyy;  // variational curvature operators
  Vec wx, wy;    // trapezoid weights per axis
  Mat omega;     // outer product of the weights

  static PlateOps make(const Grid2& g) {
    PlateOps o;
    o.dx = d1_matrix<double>(g.nx, g.hx);
    o.dy = d1_matrix<double>(g.ny, g.hy);
    const bool w = g.edge_clamped(Edge::West), e = g.edge_clamped(Edge::East);
    const bool s = g.edge_clamped(Edge::South), n = g.edge_clamped(Edge::North);
    o.dxg = d1_clamped_matrix<double>(g.nx, g.hx, w, e);
    o.dyg = d1_clamped_matrix<double>(g.ny, g.hy, s, n);
    o.cxx = curvature_matrix<double>(g.nx, g.hx, w, e);
    o.cyy = curvature_matrix<double>(g.ny, g.hy, s, n);
    o.wx = trapezoid_weights<double>(g.nx, g.hx);
    o.wy = trapezoid_weights<double>(g.ny, g.hy);
    o.omega = o.wx * o.wy.transpose();
    return o;
  }
};

inline Mat ax(const Mat& op, const Mat& f) { return op * f; }
inline Mat ay(const Mat& op, const Mat& f) { return f * op.transpose(); }
inline Mat axT(const Mat& op, const Mat& f) { return op.transpose() * f; }
inline Mat ayT(const Mat& op, const Mat& f) { return f * op; }

// 1D operator applications along each axis of a z-slab field.
template <class S>
ScalarField3<S> apply_x(const DenseMat<S>& op, const ScalarField3<S>& f) {
  ScalarField3<S> out = f;
  for (auto& m : out.slab) m = op * m;
  return out;
}

template <class S>
ScalarField3<S> apply_y(const DenseMat<S>& op, const ScalarField3<S>& f) {
  ScalarField3<S> out = f;
  for (auto& m : out.slab) m = m * op.transpose();
  return out;
}

template <class S>
ScalarField3<S> apply_z(const DenseMat<S>& op, const ScalarField3<S>& f) {
  const int nz = static_cast<int>(f.slab.size());
  ScalarField3<S> out;
  out.slab.assign(nz, DenseMat<S>::Zero(f.slab[0].rows(), f.slab[0].cols()));
  for (int k = 0; k < nz; ++k)
    for (int m = 0; m < nz; ++m)
      if (op(k, m) != S(0)) out.slab[k] += op(k, m) * f.slab[m];
  return out;
}

template <class S>
ScalarField3<S> diff1(const Grid3& g, const ScalarField3<S>& f, int axis) {
  switch (axis) {
    case 1:
      return apply_x(d1_matrix<S>(g.nx, S(g.hx)), f);
    case 2:
      return apply_y(d1_matrix<S>(g.ny, S(g.hy)), f);
    case 3:
      return apply_z(d1_matrix<S>(g.nz, S(g.hz)), f);
    default:
      throw ParameterError("diff1 axis must be 1, 2, or 3");
  }
}

template <class S>
S integrate_domain(const Grid3& g, const ScalarField3<S>& f) {
  const auto wx = trapezoid_weights<S>(g.nx, S(g.hx));
  const auto wy = trapezoid_weights<S>(g.ny, S(g.hy));
  const auto wz = trapezoid_weights<S>(g.nz, S(g.hz));
  S total = S(0);
  for (int k = 0; k < g.nz; ++k)
    total += wz(k) * (wx.transpose() * f.slab[k] * wy).value();
  return total;
}

}  // namespace vk
