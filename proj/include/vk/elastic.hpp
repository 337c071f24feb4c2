// Three-dimensional finite-strain elasticity on a box grid: energy, exact
// gradient, the positive-definite prestress certificate, and the rewritten
// energy transcript it certifies.
//
// Admissibility is nodal: components equal the Dirichlet data on Gamma0 faces
// (zero in clamped mode), and gradients are zeroed there.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "vk/common.hpp"
#include "vk/constitutive.hpp"
#include "vk/fd.hpp"
#include "vk/grid.hpp"

namespace vk {

struct ElasticOps {
  Mat dx, dy, dz, dxT, dyT, dzT;
  Vec wx, wy, wz;
  ScalarField3<double> omega;

  static ElasticOps make(const Grid3& g) {
    ElasticOps o;
    o.dx = d1_matrix<double>(g.nx, g.hx);
    o.dy = d1_matrix<double>(g.ny, g.hy);
    o.dz = d1_matrix<double>(g.nz, g.hz);
    o.dxT = o.dx.transpose();
    o.dyT = o.dy.transpose();
    o.dzT = o.dz.transpose();
    o.wx = trapezoid_weights<double>(g.nx, g.hx);
    o.wy = trapezoid_weights<double>(g.ny, g.hy);
    o.wz = trapezoid_weights<double>(g.nz, g.hz);
    o.omega = ScalarField3<double>::zero(g);
    for (int k = 0; k < g.nz; ++k)
      o.omega.slab[k] = (o.wx * o.wy.transpose()) * o.wz(k);
    return o;
  }
};

struct ElasticState {
  ScalarField3<double> u1, u2, u3;

  static ElasticState zero(const Grid3& g) {
    return {ScalarField3<double>::zero(g), ScalarField3<double>::zero(g),
            ScalarField3<double>::zero(g)};
  }
};

struct ElasticLoads {
  ScalarField3<double> P1, P2, P3;     // domain
  ScalarField3<double> Pt1, Pt2, Pt3;  // GammaT face tractions

  static ElasticLoads zero(const Grid3& g) {
    const auto z = ScalarField3<double>::zero(g);
    return {z, z, z, z, z, z};
  }

  double sup() const {
    auto m = [](const ScalarField3<double>& f) {
      double s = 0.0;
      for (const auto& sl : f.slab) s = std::max(s, sl.cwiseAbs().maxCoeff());
      return s;
    };
    return std::max({m(P1), m(P2), m(P3), m(Pt1), m(Pt2), m(Pt3)});
  }
};

struct SymTensorField3 {
  ScalarField3<double> t11, t22, t33, t23, t13, t12;

  static SymTensorField3 zero(const Grid3& g) {
    const auto z = ScalarField3<double>::zero(g);
    return {z, z, z, z, z, z};
  }
};

// Per-node quadrature weight of the GammaT faces (2D trapezoid products;
// nodes on several GammaT faces accumulate each face's weight).
inline ScalarField3<double> gammat_weights3(const Grid3& g) {
  auto bw = ScalarField3<double>::zero(g);
  const Vec wx = trapezoid_weights<double>(g.nx, g.hx);
  const Vec wy = trapezoid_weights<double>(g.ny, g.hy);
  const Vec wz = trapezoid_weights<double>(g.nz, g.hz);
  auto face_t = [&](Face f) { return g.face[static_cast<int>(f)] == BoundaryPart::GammaT; };
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j) {
      if (face_t(Face::XMin)) bw.slab[k](0, j) += wy(j) * wz(k);
      if (face_t(Face::XMax)) bw.slab[k](g.nx - 1, j) += wy(j) * wz(k);
    }
  for (int k = 0; k < g.nz; ++k)
    for (int i = 0; i < g.nx; ++i) {
      if (face_t(Face::YMin)) bw.slab[k](i, 0) += wx(i) * wz(k);
      if (face_t(Face::YMax)) bw.slab[k](i, g.ny - 1) += wx(i) * wz(k);
    }
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (face_t(Face::ZMin)) bw.slab[0](i, j) += wx(i) * wy(j);
      if (face_t(Face::ZMax)) bw.slab[g.nz - 1](i, j) += wx(i) * wy(j);
    }
  return bw;
}

inline void zero_pinned3(const Grid3& g, ScalarField3<double>& f) {
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (g.pinned(i, j, k)) f.slab[k](i, j) = 0.0;
}

inline void apply_dirichlet(const Grid3& g, ElasticState& s,
                            const ElasticState& uhat) {
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (g.pinned(i, j, k)) {
          s.u1.slab[k](i, j) = uhat.u1.slab[k](i, j);
          s.u2.slab[k](i, j) = uhat.u2.slab[k](i, j);
          s.u3.slab[k](i, j) = uhat.u3.slab[k](i, j);
        }
}

// All nine partial derivatives d[m][j] = du_{m+1}/dx_{j+1}.
inline std::array<std::array<ScalarField3<double>, 3>, 3> partials(
    const Grid3& g, const ElasticState& s) {
  std::array<std::array<ScalarField3<double>, 3>, 3> d;
  const ScalarField3<double>* comp[3] = {&s.u1, &s.u2, &s.u3};
  for (int m = 0; m < 3; ++m)
    for (int j = 0; j < 3; ++j) d[m][j] = diff1(g, *comp[m], j + 1);
  return d;
}

// v_ij = (u_{i,j} + u_{j,i})/2 + u_{m,i} u_{m,j}/2.
inline SymTensorField3 strain_v(const Grid3& g, const ElasticState& s) {
  const auto d = partials(g, s);
  SymTensorField3 v = SymTensorField3::zero(g);
  auto slot = [&](ScalarField3<double>& out, int i, int j) {
    for (int k = 0; k < g.nz; ++k) {
      Mat q = 0.5 * (d[i][j].slab[k] + d[j][i].slab[k]);
      for (int m = 0; m < 3; ++m)
        q += 0.5 * d[m][i].slab[k].cwiseProduct(d[m][j].slab[k]);
      out.slab[k] = q;
    }
  };
  slot(v.t11, 0, 0);
  slot(v.t22, 1, 1);
  slot(v.t33, 2, 2);
  slot(v.t23, 1, 2);
  slot(v.t13, 0, 2);
  slot(v.t12, 0, 1);
  return v;
}

// Stress from strain through the stored 6x6 (shear columns pre-doubled).
inline SymTensorField3 contract4(const Tensor43& T, const SymTensorField3& v,
                                 const Grid3& g) {
  SymTensorField3 s = SymTensorField3::zero(g);
  const ScalarField3<double>* in[6] = {&v.t11, &v.t22, &v.t33,
                                       &v.t23, &v.t13, &v.t12};
  ScalarField3<double>* out[6] = {&s.t11, &s.t22, &s.t33,
                                  &s.t23, &s.t13, &s.t12};
  for (int a = 0; a < 6; ++a)
    for (int k = 0; k < g.nz; ++k) {
      Mat acc = Mat::Zero(g.nx, g.ny);
      for (int b = 0; b < 6; ++b)
        if (T.C(a, b) != 0.0) acc += T.C(a, b) * in[b]->slab[k];
      out[a]->slab[k] = acc;
    }
  return s;
}

// Full double contraction (off-diagonal slots doubled).
inline ScalarField3<double> ddot3(const SymTensorField3& a,
                                  const SymTensorField3& b, const Grid3& g) {
  auto r = ScalarField3<double>::zero(g);
  for (int k = 0; k < g.nz; ++k)
    r.slab[k] = a.t11.slab[k].cwiseProduct(b.t11.slab[k]) +
                a.t22.slab[k].cwiseProduct(b.t22.slab[k]) +
                a.t33.slab[k].cwiseProduct(b.t33.slab[k]) +
                2.0 * (a.t23.slab[k].cwiseProduct(b.t23.slab[k]) +
                       a.t13.slab[k].cwiseProduct(b.t13.slab[k]) +
                       a.t12.slab[k].cwiseProduct(b.t12.slab[k]));
  return r;
}

struct ElasticBreakdown {
  double stored = 0.0, work = 0.0, total = 0.0;
};

inline bool mixed_mode(const Grid3& g) {
  return g.has_part(BoundaryPart::GammaT);
}

inline ElasticBreakdown energy3d(const Grid3& g, const ElasticOps& ops,
                                 const Tensor43& H, const ElasticState& s,
                                 const ElasticLoads& loads) {
  ElasticBreakdown e;
  const auto v = strain_v(g, s);
  const auto stress = contract4(H, v, g);
  const auto dens = ddot3(stress, v, g);
  for (int k = 0; k < g.nz; ++k) {
    e.stored += 0.5 * (ops.omega.slab[k].array() * dens.slab[k].array()).sum();
    e.work += (ops.omega.slab[k].array() *
               (loads.P1.slab[k].array() * s.u1.slab[k].array() +
                loads.P2.slab[k].array() * s.u2.slab[k].array() +
                loads.P3.slab[k].array() * s.u3.slab[k].array()))
                  .sum();
  }
  if (mixed_mode(g)) {
    const auto bw = gammat_weights3(g);
    for (int k = 0; k < g.nz; ++k)
      e.work += (bw.slab[k].array() *
                 (loads.Pt1.slab[k].array() * s.u1.slab[k].array() +
                  loads.Pt2.slab[k].array() * s.u2.slab[k].array() +
                  loads.Pt3.slab[k].array() * s.u3.slab[k].array()))
                    .sum();
  }
  e.total = e.stored - e.work;
  return e;
}

inline ScalarField3<double> adj_diff1(const Grid3& g, const ElasticOps& ops,
                                      const ScalarField3<double>& f,
                                      int axis) {
  switch (axis) {
    case 1:
      return apply_x(ops.dxT, f);
    case 2:
      return apply_y(ops.dyT, f);
    case 3:
      return apply_z(ops.dzT, f);
    default:
      throw ParameterError("axis must be 1, 2 or 3");
  }
}

inline ElasticState gradient3d(const Grid3& g, const ElasticOps& ops,
                               const Tensor43& H, const ElasticState& s,
                               const ElasticLoads& loads) {
  const auto d = partials(g, s);
  const auto v = strain_v(g, s);
  const auto stress = contract4(H, v, g);
  // Stress rows as plain fields: S[i][j] with shear symmetry.
  const ScalarField3<double>* S[3][3] = {
      {&stress.t11, &stress.t12, &stress.t13},
      {&stress.t12, &stress.t22, &stress.t23},
      {&stress.t13, &stress.t23, &stress.t33}};
  ElasticState grad = ElasticState::zero(g);
  ScalarField3<double>* G[3] = {&grad.u1, &grad.u2, &grad.u3};
  for (int m = 0; m < 3; ++m) {
    for (int j = 0; j < 3; ++j) {
      auto flux = ScalarField3<double>::zero(g);
      for (int k = 0; k < g.nz; ++k) {
        Mat q = S[m][j]->slab[k];
        for (int i = 0; i < 3; ++i)
          q += d[m][i].slab[k].cwiseProduct(S[i][j]->slab[k]);
        flux.slab[k] = ops.omega.slab[k].cwiseProduct(q);
      }
      const auto a = adj_diff1(g, ops, flux, j + 1);
      for (int k = 0; k < g.nz; ++k) G[m]->slab[k] += a.slab[k];
    }
  }
  const ScalarField3<double>* P[3] = {&loads.P1, &loads.P2, &loads.P3};
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < g.nz; ++k)
      G[m]->slab[k] -= ops.omega.slab[k].cwiseProduct(P[m]->slab[k]);
  if (mixed_mode(g)) {
    const auto bw = gammat_weights3(g);
    const ScalarField3<double>* Pt[3] = {&loads.Pt1, &loads.Pt2, &loads.Pt3};
    for (int m = 0; m < 3; ++m)
      for (int k = 0; k < g.nz; ++k)
        G[m]->slab[k] -= bw.slab[k].cwiseProduct(Pt[m]->slab[k]);
  }
  zero_pinned3(g, grad.u1);
  zero_pinned3(g, grad.u2);
  zero_pinned3(g, grad.u3);
  return grad;
}

inline double scaled_sup3(const Grid3& g, const ElasticOps& ops,
                          const ElasticState& grad) {
  double m = 0.0;
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        if (g.pinned(i, j, k)) continue;
        const double w = ops.omega.slab[k](i, j);
        m = std::max({m, std::abs(grad.u1.slab[k](i, j)) / w,
                      std::abs(grad.u2.slab[k](i, j)) / w,
                      std::abs(grad.u3.slab[k](i, j)) / w});
      }
  return m;
}

inline Vec pack3(const Grid3& g, const ElasticState& s) {
  const Eigen::Index n = static_cast<Eigen::Index>(g.nx) * g.ny * g.nz;
  Vec v(3 * n);
  const ScalarField3<double>* comp[3] = {&s.u1, &s.u2, &s.u3};
  const Eigen::Index m = static_cast<Eigen::Index>(g.nx) * g.ny;
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < g.nz; ++k)
      v.segment(c * n + k * m, m) = comp[c]->slab[k].reshaped();
  return v;
}

inline ElasticState unpack3(const Grid3& g, const Vec& v) {
  const Eigen::Index n = static_cast<Eigen::Index>(g.nx) * g.ny * g.nz;
  const Eigen::Index m = static_cast<Eigen::Index>(g.nx) * g.ny;
  ElasticState s = ElasticState::zero(g);
  ScalarField3<double>* comp[3] = {&s.u1, &s.u2, &s.u3};
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < g.nz; ++k)
      comp[c]->slab[k] = v.segment(c * n + k * m, m).reshaped(g.nx, g.ny);
  return s;
}

// --- prestress certificate ---------------------------------------------------

struct Certificate3 {
  ScalarField3<double> t11, t22, t33;  // diagonal; off-diagonal entries zero
  double c_shift = 0.0;
  double min_eig = 0.0;
  double delta_pd = 0.0;
  double div_staggered = 0.0;
  double div_nodal = 0.0;
  double tol_div = 0.0;
};

inline Certificate3 build_T3d(const Grid3& g, const ElasticLoads& loads,
                              double delta_pd = 1e-3, double tol_div = -1.0) {
  if (!(delta_pd > 0.0)) throw ParameterError("delta_pd must be positive");
  if (tol_div < 0.0) {
    double sup = 0.0;
    for (const auto* f : {&loads.P1, &loads.P2, &loads.P3})
      for (const auto& sl : f->slab)
        sup = std::max(sup, sl.cwiseAbs().maxCoeff());
    tol_div = 1e-8 * (1.0 + sup);
  }
  Certificate3 cert;
  cert.delta_pd = delta_pd;
  cert.tol_div = tol_div;
  cert.t11 = ScalarField3<double>::zero(g);
  cert.t22 = ScalarField3<double>::zero(g);
  cert.t33 = ScalarField3<double>::zero(g);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 1; i < g.nx; ++i)
        cert.t11.slab[k](i, j) =
            cert.t11.slab[k](i - 1, j) -
            0.5 * g.hx * (loads.P1.slab[k](i - 1, j) + loads.P1.slab[k](i, j));
  for (int k = 0; k < g.nz; ++k)
    for (int i = 0; i < g.nx; ++i)
      for (int j = 1; j < g.ny; ++j)
        cert.t22.slab[k](i, j) =
            cert.t22.slab[k](i, j - 1) -
            0.5 * g.hy * (loads.P2.slab[k](i, j - 1) + loads.P2.slab[k](i, j));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      for (int k = 1; k < g.nz; ++k)
        cert.t33.slab[k](i, j) =
            cert.t33.slab[k - 1](i, j) -
            0.5 * g.hz * (loads.P3.slab[k - 1](i, j) + loads.P3.slab[k](i, j));

  double lo = 0.0;
  for (const auto* t : {&cert.t11, &cert.t22, &cert.t33})
    for (const auto& sl : t->slab) lo = std::min(lo, sl.minCoeff());
  cert.c_shift = std::max(0.0, -lo) + delta_pd;
  for (auto* t : {&cert.t11, &cert.t22, &cert.t33})
    for (auto& sl : t->slab) sl.array() += cert.c_shift;
  cert.min_eig = std::numeric_limits<double>::infinity();
  for (const auto* t : {&cert.t11, &cert.t22, &cert.t33})
    for (const auto& sl : t->slab)
      cert.min_eig = std::min(cert.min_eig, sl.minCoeff());

  double stag = 0.0;
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i + 1 < g.nx; ++i)
        stag = std::max(stag, std::abs((cert.t11.slab[k](i + 1, j) -
                                        cert.t11.slab[k](i, j)) /
                                           g.hx +
                                       0.5 * (loads.P1.slab[k](i, j) +
                                              loads.P1.slab[k](i + 1, j))));
  for (int k = 0; k < g.nz; ++k)
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j + 1 < g.ny; ++j)
        stag = std::max(stag, std::abs((cert.t22.slab[k](i, j + 1) -
                                        cert.t22.slab[k](i, j)) /
                                           g.hy +
                                       0.5 * (loads.P2.slab[k](i, j) +
                                              loads.P2.slab[k](i, j + 1))));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      for (int k = 0; k + 1 < g.nz; ++k)
        stag = std::max(stag, std::abs((cert.t33.slab[k + 1](i, j) -
                                        cert.t33.slab[k](i, j)) /
                                           g.hz +
                                       0.5 * (loads.P3.slab[k](i, j) +
                                              loads.P3.slab[k + 1](i, j))));
  cert.div_staggered = stag;

  const auto r1 = diff1(g, cert.t11, 1);
  const auto r2 = diff1(g, cert.t22, 2);
  const auto r3 = diff1(g, cert.t33, 3);
  double nod = 0.0;
  for (int k = 0; k < g.nz; ++k) {
    nod = std::max(nod,
                   (r1.slab[k] + loads.P1.slab[k]).cwiseAbs().maxCoeff());
    nod = std::max(nod,
                   (r2.slab[k] + loads.P2.slab[k]).cwiseAbs().maxCoeff());
    nod = std::max(nod,
                   (r3.slab[k] + loads.P3.slab[k]).cwiseAbs().maxCoeff());
  }
  cert.div_nodal = nod;

  if (cert.div_staggered > tol_div)
    throw CertificateError("certificate divergence residual " +
                           std::to_string(cert.div_staggered) +
                           " exceeds tolerance " + std::to_string(tol_div));
  return cert;
}

// Exact discrete remainder of pairing T with the symmetric gradient.
inline double pairing_remainder3(const Grid3& g, const ElasticOps& ops,
                                 const Certificate3& cert,
                                 const ElasticState& s,
                                 const ElasticLoads& loads) {
  const auto d11 = diff1(g, s.u1, 1);
  const auto d22 = diff1(g, s.u2, 2);
  const auto d33 = diff1(g, s.u3, 3);
  double pair = 0.0, work = 0.0;
  for (int k = 0; k < g.nz; ++k) {
    pair += (ops.omega.slab[k].array() *
             (cert.t11.slab[k].array() * d11.slab[k].array() +
              cert.t22.slab[k].array() * d22.slab[k].array() +
              cert.t33.slab[k].array() * d33.slab[k].array()))
                .sum();
    work += (ops.omega.slab[k].array() *
             (loads.P1.slab[k].array() * s.u1.slab[k].array() +
              loads.P2.slab[k].array() * s.u2.slab[k].array() +
              loads.P3.slab[k].array() * s.u3.slab[k].array()))
                .sum();
  }
  return pair - work;
}

// Energy rewritten through the certificate:
//   (1/2)<Hv,v> - <T,v> + (1/2)<T_ij, u_{m,i} u_{m,j}> - traction work
//   + exact pairing remainder.
// The difference against energy3d().total is pure roundoff.
inline double transcript3d(const Grid3& g, const ElasticOps& ops,
                           const Tensor43& H, const ElasticState& s,
                           const Certificate3& cert,
                           const ElasticLoads& loads) {
  const auto v = strain_v(g, s);
  const auto stress = contract4(H, v, g);
  const auto dens = ddot3(stress, v, g);
  const auto d = partials(g, s);
  double val = 0.0;
  for (int k = 0; k < g.nz; ++k) {
    Mat quad = Mat::Zero(g.nx, g.ny);
    for (int m = 0; m < 3; ++m)
      quad += cert.t11.slab[k].cwiseProduct(
                  d[m][0].slab[k].cwiseProduct(d[m][0].slab[k])) +
              cert.t22.slab[k].cwiseProduct(
                  d[m][1].slab[k].cwiseProduct(d[m][1].slab[k])) +
              cert.t33.slab[k].cwiseProduct(
                  d[m][2].slab[k].cwiseProduct(d[m][2].slab[k]));
    val += (ops.omega.slab[k].array() *
            (0.5 * dens.slab[k].array() -
             (cert.t11.slab[k].array() * v.t11.slab[k].array() +
              cert.t22.slab[k].array() * v.t22.slab[k].array() +
              cert.t33.slab[k].array() * v.t33.slab[k].array()) +
             0.5 * quad.array()))
               .sum();
  }
  if (mixed_mode(g)) {
    const auto bw = gammat_weights3(g);
    for (int k = 0; k < g.nz; ++k)
      val -= (bw.slab[k].array() *
              (loads.Pt1.slab[k].array() * s.u1.slab[k].array() +
               loads.Pt2.slab[k].array() * s.u2.slab[k].array() +
               loads.Pt3.slab[k].array() * s.u3.slab[k].array()))
                 .sum();
  }
  return val + pairing_remainder3(g, ops, cert, s, loads);
}

// Floor of the v-part after completing the square:
//   min_v (1/2) v:H:v - T:v = -(1/2) T:Hinv:T  pointwise.
inline double transcript_floor3(const Grid3& g, const ElasticOps& ops,
                                const Tensor43& H_inv,
                                const Certificate3& cert) {
  SymTensorField3 T = SymTensorField3::zero(g);
  T.t11 = cert.t11;
  T.t22 = cert.t22;
  T.t33 = cert.t33;
  const auto hT = contract4(H_inv, T, g);
  const auto q = ddot3(T, hT, g);
  double val = 0.0;
  for (int k = 0; k < g.nz; ++k)
    val += (ops.omega.slab[k].array() * q.slab[k].array()).sum();
  return -0.5 * val;
}

struct TensorHypotheses {
  double c0 = 0.0;           // smallest eigenvalue of the pair-basis matrix
  double c1_worst = 0.0;     // worst quartic ratio over random symmetric t
  int samples = 0;
};

inline TensorHypotheses check_tensor_hypotheses(const Tensor43& H, Rng& rng,
                                                int samples = 10000) {
  TensorHypotheses rep;
  rep.c0 = min_eigenvalue(H);
  if (rep.c0 <= 0.0)
    throw ParameterError("tensor fails the quadratic lower-bound hypothesis");
  rep.c1_worst = std::numeric_limits<double>::infinity();
  rep.samples = samples;
  for (int s = 0; s < samples; ++s) {
    Eigen::Matrix3d t;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) t(i, j) = t(j, i) = rng.uniform(-1.0, 1.0);
    const Eigen::Matrix3d tt = t.transpose() * t;
    // H:(t^T t):(t^T t) through the stored 6x6.
    Eigen::Matrix<double, 6, 1> e;
    e << tt(0, 0), tt(1, 1), tt(2, 2), tt(1, 2), tt(0, 2), tt(0, 1);
    const Eigen::Matrix<double, 6, 1> s6 = H.C * e;
    const double num = s6(0) * tt(0, 0) + s6(1) * tt(1, 1) + s6(2) * tt(2, 2) +
                       2.0 * (s6(3) * tt(1, 2) + s6(4) * tt(0, 2) +
                              s6(5) * tt(0, 1));
    const double den = t.array().square().square().sum();
    if (den > 0.0) rep.c1_worst = std::min(rep.c1_worst, num / den);
  }
  return rep;
}

// Smooth random 3D fields for tests and probes.
inline ScalarField3<double> sample_bubble3(const Grid3& g, Rng& rng,
                                           double amp) {
  auto f = ScalarField3<double>::zero(g);
  constexpr double pi = 3.14159265358979323846;
  for (int kx = 1; kx <= 2; ++kx)
    for (int ky = 1; ky <= 2; ++ky)
      for (int kz = 1; kz <= 2; ++kz) {
        const double c = amp * rng.uniform(-1.0, 1.0) / (kx * ky * kz);
        for (int k = 0; k < g.nz; ++k)
          for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
              f.slab[k](i, j) += c * std::sin(kx * pi * g.x(i) / g.lx) *
                                 std::sin(ky * pi * g.y(j) / g.ly) *
                                 std::sin(kz * pi * g.z(k) / g.lz);
      }
  return f;
}

inline ScalarField3<double> sample_smooth3(const Grid3& g, Rng& rng,
                                           double amp) {
  auto f = sample_bubble3(g, rng, amp);
  constexpr double pi = 3.14159265358979323846;
  for (int kx = 0; kx <= 1; ++kx)
    for (int ky = 0; ky <= 1; ++ky)
      for (int kz = 0; kz <= 1; ++kz) {
        const double c =
            amp * rng.uniform(-1.0, 1.0) / ((kx + 1) * (ky + 1) * (kz + 1));
        for (int k = 0; k < g.nz; ++k)
          for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
              f.slab[k](i, j) += c * std::cos(kx * pi * g.x(i) / g.lx) *
                                 std::cos(ky * pi * g.y(j) / g.ly) *
                                 std::cos(kz * pi * g.z(k) / g.lz);
      }
  return f;
}

inline ElasticState sample_admissible3(const Grid3& g, Rng& rng, double amp) {
  ElasticState s;
  s.u1 = sample_smooth3(g, rng, amp);
  s.u2 = sample_smooth3(g, rng, amp);
  s.u3 = sample_smooth3(g, rng, amp);
  zero_pinned3(g, s.u1);
  zero_pinned3(g, s.u2);
  zero_pinned3(g, s.u3);
  return s;
}

}  // namespace vk
