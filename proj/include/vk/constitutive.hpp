// Rank-4 constitutive tensors on symmetric 2x2 / 3x3 arguments.
//
// Storage convention: a tensor T is kept as the matrix C of its action on the
// pair basis, with shear columns doubled, so that
//   (T:E)_a = sum_b C(a,b) E_b   with E = (E11, E22, E12) resp.
//   (E11, E22, E33, E23, E13, E12), shear entries unscaled.
// Under this convention composition and inversion are plain matrix operations,
// and C is similar to the symmetric Mandel matrix (sqrt-2 scaling of shear
// slots), so eigenvalue bounds of the stored matrix are eigenvalue bounds of
// the tensor acting on symmetric arguments.
#pragma once

#include <cmath>
#include <string>

#include "vk/common.hpp"
#include "vk/fd.hpp"
#include "vk/grid.hpp"

namespace vk {

struct LameParams {
  double lambda = 1.0;
  double mu = 1.0;
  double thickness = 1.0;
};

struct Tensor42 {
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  bool is_inverse = false;
};

struct Tensor43 {
  Eigen::Matrix<double, 6, 6> C = Eigen::Matrix<double, 6, 6>::Zero();
  bool is_inverse = false;
};

// Plane-stress membrane tensor: entries (4 lm/(l+2m)) d.d + 2m (dd + dd),
// scaled by the thickness.
inline Tensor42 build_membrane_tensor(const LameParams& p) {
  if (p.thickness <= 0.0) throw ParameterError("thickness must be positive");
  if (p.mu < 0.0 || p.lambda + 2.0 * p.mu <= 0.0)
    throw ParameterError("invalid Lame parameters");
  const double c = 4.0 * p.lambda * p.mu / (p.lambda + 2.0 * p.mu);
  Tensor42 t;
  t.C << c + 4.0 * p.mu, c, 0.0, c, c + 4.0 * p.mu, 0.0, 0.0, 0.0, 4.0 * p.mu;
  t.C *= p.thickness;
  return t;
}

// Bending tensor: thickness^2 / 3 times the membrane tensor.
inline Tensor42 build_bending_tensor(const LameParams& p) {
  Tensor42 t = build_membrane_tensor(p);
  t.C *= p.thickness * p.thickness / 3.0;
  return t;
}

inline Tensor43 build_isotropic_tensor3(double lambda, double mu) {
  if (mu < 0.0 || lambda + 2.0 * mu <= 0.0)
    throw ParameterError("invalid Lame parameters");
  Tensor43 t;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) t.C(a, b) = lambda + (a == b ? 2.0 * mu : 0.0);
  for (int a = 3; a < 6; ++a) t.C(a, a) = 2.0 * mu;
  return t;
}

namespace detail {
// Normal slots come first: 2 of them in 2D (then 12), 3 in 3D (then 23,13,12).
template <int N>
Eigen::Matrix<double, N, N> shear_scaling() {
  Eigen::Matrix<double, N, N> S = Eigen::Matrix<double, N, N>::Identity();
  const double r2 = std::sqrt(2.0);
  for (int a = (N == 3 ? 2 : 3); a < N; ++a) S(a, a) = r2;
  return S;
}

template <int N>
Eigen::Matrix<double, N, N> mandel_of(const Eigen::Matrix<double, N, N>& C) {
  const Eigen::Matrix<double, N, N> S = shear_scaling<N>();
  Eigen::Matrix<double, N, N> M = S * C * S.inverse();
  return 0.5 * (M + M.transpose());
}

template <int N>
Eigen::Matrix<double, N, N> voigt_of_mandel(const Eigen::Matrix<double, N, N>& M) {
  const Eigen::Matrix<double, N, N> S = shear_scaling<N>();
  return S.inverse() * M * S;
}
}  // namespace detail

inline Eigen::Matrix3d mandel(const Tensor42& t) { return detail::mandel_of<3>(t.C); }
inline Eigen::Matrix<double, 6, 6> mandel(const Tensor43& t) {
  return detail::mandel_of<6>(t.C);
}

inline double min_eigenvalue(const Tensor42& t) {
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(mandel(t))
      .eigenvalues()
      .minCoeff();
}

inline double min_eigenvalue(const Tensor43& t) {
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>>(mandel(t))
      .eigenvalues()
      .minCoeff();
}

inline Tensor42 invert_sym4(const Tensor42& t) {
  const Eigen::Matrix3d M = mandel(t);
  if (std::abs(M.determinant()) < 1e-300)
    throw LinearSolveError("constitutive tensor is singular");
  Tensor42 out;
  out.C = detail::voigt_of_mandel<3>(Eigen::Matrix3d(M.inverse()));
  out.is_inverse = !t.is_inverse;
  return out;
}

inline Tensor43 invert_sym4(const Tensor43& t) {
  const Eigen::Matrix<double, 6, 6> M = mandel(t);
  Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(M);
  if (!lu.isInvertible())
    throw LinearSolveError("constitutive tensor is singular");
  Tensor43 out;
  out.C = detail::voigt_of_mandel<6>(Eigen::Matrix<double, 6, 6>(lu.inverse()));
  out.is_inverse = !t.is_inverse;
  return out;
}

struct SymPair2 {
  double t11 = 0.0, t22 = 0.0, t12 = 0.0;
};

inline SymPair2 contract4(const Tensor42& t, const SymPair2& e) {
  const Eigen::Vector3d s = t.C * Eigen::Vector3d(e.t11, e.t22, e.t12);
  return {s(0), s(1), s(2)};
}

template <class S>
SymTensorField2<S> contract4(const Tensor42& t, const SymTensorField2<S>& e) {
  SymTensorField2<S> out;
  out.t11 = t.C(0, 0) * e.t11 + t.C(0, 1) * e.t22 + t.C(0, 2) * e.t12;
  out.t22 = t.C(1, 0) * e.t11 + t.C(1, 1) * e.t22 + t.C(1, 2) * e.t12;
  out.t12 = t.C(2, 0) * e.t11 + t.C(2, 1) * e.t22 + t.C(2, 2) * e.t12;
  return out;
}

// Full contraction a : b with both index pairs summed.
template <class S>
DenseMat<S> ddot(const SymTensorField2<S>& a, const SymTensorField2<S>& b) {
  return (a.t11.array() * b.t11.array() + a.t22.array() * b.t22.array() +
          S(2) * a.t12.array() * b.t12.array())
      .matrix();
}

// Pointwise inverse of N + K I, defined only while N + K I is positive
// definite at every node.
template <class S>
SymTensorField2<S> nk_inverse_field(const Grid2& g, const SymTensorField2<S>& N,
                                    S K) {
  SymTensorField2<S> out = SymTensorField2<S>::zero(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const S a = N.t11(i, j) + K;
      const S b = N.t22(i, j) + K;
      const S c = N.t12(i, j);
      const S mean = S(0.5) * (a + b);
      const S rad = std::sqrt(S(0.25) * (a - b) * (a - b) + c * c);
      const S lo = mean - rad, hi = mean + rad;
      if (!(lo > S(0)))
        throw BStarViolation(
            "N + K I loses positive definiteness at node (" + std::to_string(i) +
                "," + std::to_string(j) + "): eigenvalues [" + std::to_string(lo) +
                ", " + std::to_string(hi) + "]",
            i, j, lo, hi);
      const S det = a * b - c * c;
      out.t11(i, j) = b / det;
      out.t22(i, j) = a / det;
      out.t12(i, j) = -c / det;
    }
  return out;
}

// Smallest eigenvalue of N + K I over all nodes.
template <class S>
S nk_margin(const Grid2& g, const SymTensorField2<S>& N, S K) {
  S margin = std::numeric_limits<S>::infinity();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const S a = N.t11(i, j) + K;
      const S b = N.t22(i, j) + K;
      const S c = N.t12(i, j);
      const S lo = S(0.5) * (a + b) -
                   std::sqrt(S(0.25) * (a - b) * (a - b) + c * c);
      margin = std::min(margin, lo);
    }
  return margin;
}

}  // namespace vk
