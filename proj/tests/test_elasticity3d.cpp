#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>

#include "vk/common.hpp"
#include "vk/elastic.hpp"
#include "vk/fd.hpp"
#include "vk/grid.hpp"
#include "vk/solver.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr auto G0 = vk::BoundaryPart::Gamma0;
constexpr auto GT = vk::BoundaryPart::GammaT;

template <class F>
vk::ScalarField3<double> field3(const vk::Grid3& g, F f) {
  auto out = vk::ScalarField3<double>::zero(g);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) out.at(i, j, k) = f(g.x(i), g.y(j), g.z(k));
  return out;
}

double sup3(const vk::ScalarField3<double>& f) {
  double s = 0.0;
  for (const auto& sl : f.slab) s = std::max(s, sl.cwiseAbs().maxCoeff());
  return s;
}

double sup_minus(const vk::ScalarField3<double>& f, double c) {
  double s = 0.0;
  for (const auto& sl : f.slab)
    s = std::max(s, (sl.array() - c).abs().maxCoeff());
  return s;
}

double dot_state3(const vk::ElasticState& a, const vk::ElasticState& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.u1.slab.size(); ++k)
    s += (a.u1.slab[k].array() * b.u1.slab[k].array()).sum() +
         (a.u2.slab[k].array() * b.u2.slab[k].array()).sum() +
         (a.u3.slab[k].array() * b.u3.slab[k].array()).sum();
  return s;
}

vk::ElasticState axpy3(const vk::Grid3& g, const vk::ElasticState& s, double t,
                       const vk::ElasticState& d) {
  auto out = vk::ElasticState::zero(g);
  for (int k = 0; k < g.nz; ++k) {
    out.u1.slab[k] = s.u1.slab[k] + t * d.u1.slab[k];
    out.u2.slab[k] = s.u2.slab[k] + t * d.u2.slab[k];
    out.u3.slab[k] = s.u3.slab[k] + t * d.u3.slab[k];
  }
  return out;
}

// Frozen reference displacement.
vk::ElasticState reference_state(const vk::Grid3& g) {
  auto s = vk::ElasticState::zero(g);
  s.u1 = field3(g, [](double x, double y, double z) {
    return std::sin(kPi * x) * y * (1.0 - y) * z * (1.0 - z);
  });
  s.u2 = field3(g, [](double x, double y, double z) {
    return 0.5 * x * (1.0 - x) * std::sin(kPi * y) * z * (1.0 - z);
  });
  s.u3 = field3(g, [](double x, double y, double z) {
    return 0.25 * x * (1.0 - x) * y * (1.0 - y) * std::sin(kPi * z);
  });
  return s;
}

vk::ElasticLoads reference_loads(const vk::Grid3& g) {
  auto loads = vk::ElasticLoads::zero(g);
  loads.P1 = vk::ScalarField3<double>::constant(g, 1.0);
  loads.P2 = vk::ScalarField3<double>::constant(g, -1.0);
  loads.P3 = vk::ScalarField3<double>::constant(g, 0.5);
  return loads;
}

}  // namespace

TEST_CASE("nonlinear strain reproduces hand-computed uniform cases") {
  const auto g = vk::Grid3::make(7, 6, 5, 1.0, 1.0, 1.0);

  // u = (x, 0, 0): v11 = 1 + 1/2 = 3/2, everything else zero.
  auto s = vk::ElasticState::zero(g);
  s.u1 = field3(g, [](double x, double, double) { return x; });
  auto v = vk::strain_v(g, s);
  CHECK(sup_minus(v.t11, 1.5) <= 1e-12);
  CHECK(sup3(v.t22) <= 1e-13);
  CHECK(sup3(v.t33) <= 1e-13);
  CHECK(sup3(v.t12) <= 1e-13);
  CHECK(sup3(v.t13) <= 1e-13);
  CHECK(sup3(v.t23) <= 1e-13);

  // u = (0, x, 0): v11 = 1/2 from the quadratic term, v12 = 1/2 linear.
  s = vk::ElasticState::zero(g);
  s.u2 = field3(g, [](double x, double, double) { return x; });
  v = vk::strain_v(g, s);
  CHECK(sup_minus(v.t11, 0.5) <= 1e-12);
  CHECK(sup_minus(v.t12, 0.5) <= 1e-12);
  CHECK(sup3(v.t22) <= 1e-13);
  CHECK(sup3(v.t23) <= 1e-13);

  // u = (0, 0, y): v23 = 1/2, v22 = 1/2.
  s = vk::ElasticState::zero(g);
  s.u3 = field3(g, [](double, double y, double) { return y; });
  v = vk::strain_v(g, s);
  CHECK(sup_minus(v.t22, 0.5) <= 1e-12);
  CHECK(sup_minus(v.t23, 0.5) <= 1e-12);
  CHECK(sup3(v.t11) <= 1e-13);
}

TEST_CASE("energy reproduces the frozen 3d reference values") {
  const auto g = vk::Grid3::make(9, 9, 9, 1.0, 1.0, 1.0);
  const auto ops = vk::ElasticOps::make(g);
  const auto H = vk::build_isotropic_tensor3(1.0, 1.0);
  const auto s = reference_state(g);
  const auto loads = reference_loads(g);

  const auto e = vk::energy3d(g, ops, H, s, loads);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
  CHECK(rel(e.stored, 0.018429870452130064) <= 1e-12);
  CHECK(rel(e.work, 0.010571750240457055) <= 1e-12);
  CHECK(rel(e.total, 0.007858120211673009) <= 1e-12);
  CHECK(std::abs(e.total - (e.stored - e.work)) <=
        1e-15 * (1.0 + std::abs(e.total)));
}

TEST_CASE("stored 3d energy is zero at rest and nonnegative without loads") {
  const auto g = vk::Grid3::make(7, 7, 7, 1.0, 1.0, 1.0);
  const auto ops = vk::ElasticOps::make(g);
  const auto H = vk::build_isotropic_tensor3(1.0, 1.0);
  const auto loads = vk::ElasticLoads::zero(g);

  const auto e0 = vk::energy3d(g, ops, H, vk::ElasticState::zero(g), loads);
  CHECK(e0.total == 0.0);

  vk::Rng rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = vk::sample_admissible3(g, rng, 0.4);
    CHECK(vk::energy3d(g, ops, H, s, loads).total >= 0.0);
  }
}

TEST_CASE("3d gradient matches central directional differences") {
  const auto g = vk::Grid3::make(7, 7, 7, 1.0, 1.0, 1.0);
  const auto ops = vk::ElasticOps::make(g);
  const auto H = vk::build_isotropic_tensor3(1.3, 0.8);
  auto loads = vk::ElasticLoads::zero(g);
  loads.P1 = vk::ScalarField3<double>::constant(g, 0.7);
  loads.P3 = field3(g, [](double x, double, double z) { return 0.4 * x - z; });

  vk::Rng rng(53);
  const double t = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = vk::sample_admissible3(g, rng, 0.4);
    const auto d = vk::sample_admissible3(g, rng, 1.0);
    const auto grad = vk::gradient3d(g, ops, H, s, loads);
    const double an = dot_state3(grad, d);
    const double fd =
        (vk::energy3d(g, ops, H, axpy3(g, s, t, d), loads).total -
         vk::energy3d(g, ops, H, axpy3(g, s, -t, d), loads).total) /
        (2.0 * t);
    CHECK(std::abs(fd - an) / std::max(1.0, std::abs(an)) <= 1e-6);
  }

  const auto gz = vk::gradient3d(g, ops, H, vk::ElasticState::zero(g),
                                 vk::ElasticLoads::zero(g));
  CHECK(sup3(gz.u1) == 0.0);
  CHECK(sup3(gz.u2) == 0.0);
  CHECK(sup3(gz.u3) == 0.0);
}

TEST_CASE("3d gradient handles traction faces and keeps pinned rows zero") {
  const auto g =
      vk::Grid3::make(7, 7, 7, 1.0, 1.0, 1.0, {G0, GT, G0, GT, G0, GT});
  const auto ops = vk::ElasticOps::make(g);
  const auto H = vk::build_isotropic_tensor3(1.0, 1.0);
  auto loads = vk::ElasticLoads::zero(g);
  loads.P2 = vk::ScalarField3<double>::constant(g, 0.5);
  loads.Pt1 = vk::ScalarField3<double>::constant(g, 0.3);
  loads.Pt2 = field3(g, [](double, double y, double) { return y; });
  loads.Pt3 = vk::ScalarField3<double>::constant(g, -0.2);

  vk::Rng rng(59);
  const double t = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = vk::sample_admissible3(g, rng, 0.4);
    const auto d = vk::sample_admissible3(g, rng, 1.0);
    const auto grad = vk::gradient3d(g, ops, H, s, loads);
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          if (g.pinned(i, j, k)) {
            CHECK(grad.u1.slab[k](i, j) == 0.0);
            CHECK(grad.u2.slab[k](i, j) == 0.0);
            CHECK(grad.u3.slab[k](i, j) == 0.0);
          }
    const double an = dot_state3(grad, d);
    const double fd =
        (vk::energy3d(g, ops, H, axpy3(g, s, t, d), loads).total -
         vk::energy3d(g, ops, H, axpy3(g, s, -t, d), loads).total) /
        (2.0 * t);
    CHECK(std::abs(fd - an) / std::max(1.0, std::abs(an)) <= 1e-6);
  }

  // Traction-face quadrature: a unit density integrates to the GammaT area.
  const auto bw = vk::gammat_weights3(g);
  double area = 0.0;
  for (const auto& sl : bw.slab) area += sl.sum();
  CHECK(area == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("3d state packing round-trips bitwise") {
  const auto g = vk::Grid3::make(5, 6, 7, 1.0, 1.0, 1.0);
  vk::Rng rng(61);
  const auto s = vk::sample_admissible3(g, rng, 1.0);
  const vk::Vec v = vk::pack3(g, s);
  CHECK(v.size() == 3 * g.nx * g.ny * g.nz);
  const auto back = vk::unpack3(g, v);
  for (int k = 0; k < g.nz; ++k) {
    CHECK((back.u1.slab[k] - s.u1.slab[k]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.u2.slab[k] - s.u2.slab[k]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.u3.slab[k] - s.u3.slab[k]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("3d certificate integrates per axis and stays diagonal") {
  const auto g = vk::Grid3::make(9, 9, 9, 1.0, 1.0, 1.0);
  auto loads = vk::ElasticLoads::zero(g);
  loads.P1 = vk::ScalarField3<double>::constant(g, 2.0);

  const auto cert = vk::build_T3d(g, loads, 1.0);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        CHECK(std::abs(cert.t11.slab[k](i, j) - (3.0 - 2.0 * g.x(i))) <= 1e-14);
        CHECK(std::abs(cert.t22.slab[k](i, j) - 3.0) <= 1e-14);
        CHECK(std::abs(cert.t33.slab[k](i, j) - 3.0) <= 1e-14);
      }
  CHECK(cert.c_shift == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(cert.min_eig == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cert.div_staggered <= 1e-13);
  CHECK(cert.div_nodal <= 1e-12);

  auto lz = vk::ElasticLoads::zero(g);
  lz.P3 = vk::ScalarField3<double>::constant(g, 1.5);
  const auto cz = vk::build_T3d(g, lz, 1e-3);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        CHECK(std::abs(cz.t33.slab[k](i, j) -
                       (cz.c_shift - 1.5 * g.z(k))) <= 1e-14);
  CHECK(cz.div_staggered <= 1e-13);

  const auto c0 = vk::build_T3d(g, vk::ElasticLoads::zero(g), 1e-3);
  CHECK(sup_minus(c0.t11, 1e-3) == 0.0);
  CHECK(sup_minus(c0.t22, 1e-3) == 0.0);
  CHECK(sup_minus(c0.t33, 1e-3) == 0.0);
  CHECK(c0.div_staggered == 0.0);

  CHECK_THROWS_AS(vk::build_T3d(g, loads, 0.0), vk::ParameterError);
  vk::Rng rng(67);
  auto lr = vk::ElasticLoads::zero(g);
  for (auto& sl : lr.P1.slab)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) sl(i, j) = rng.uniform(0.5, 1.5);
  CHECK_THROWS_AS(vk::build_T3d(g, lr, 1e-3, 1e-300), vk::CertificateError);
}

TEST_CASE("energy transcript through the certificate is an identity") {
  const auto g = vk::Grid3::make(9, 9, 9, 1.0, 1.0, 1.0);
  const auto ops = vk::ElasticOps::make(g);
  const auto H = vk::build_isotropic_tensor3(1.0, 1.0);
  const auto loads = reference_loads(g);
  const auto cert = vk::build_T3d(g, loads, 1e-3);

  vk::Rng rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = vk::sample_admissible3(g, rng, 0.5);
    const double J = vk::energy3d(g, ops, H, s, loads).total;
    const double tr = vk::transcript3d(g, ops, H, s, cert, loads);
    CHECK(std::abs(tr - J) <= 1e-9 * (1.0 + std::abs(J)));
  }

  // Mixed boundary with tractions: same identity.
  const auto gm =
      vk::Grid3::make(9, 9, 9, 1.0, 1.0, 1.0, {G0, GT, G0, G0, G0, GT});
  const auto opsm = vk::ElasticOps::make(gm);
  auto lm = vk::ElasticLoads::zero(gm);
  lm.P1 = vk::ScalarField3<double>::constant(gm, 0.8);
  lm.Pt1 = vk::ScalarField3<double>::constant(gm, 0.5);
  lm.Pt3 = field3(gm, [](double x, double, double) { return 0.3 * x; });
  const auto certm = vk::build_T3d(gm, lm, 1e-3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = vk::sample_admissible3(gm, rng, 0.5);
    const double J = vk::energy3d(gm, opsm, H, s, lm).total;
    const double tr = vk::transcript3d(gm, opsm, H, s, certm, lm);
    CHECK(std::abs(tr - J) <= 1e-9 * (1.0 + std::abs(J)));
  }
}

TEST_CASE("the v-part of the transcript respects the completed-square floor") {
  const auto g = vk::Grid3::make(9, 9, 9, 1.0, 1.0, 1.0);
  const auto ops = vk::ElasticOps::make(g);
  const auto H = vk::build_isotropic_tensor3(1.0, 1.0);
  const auto Hinv = vk::invert_sym4(H);
  const auto loads = reference_loads(g);
  const auto cert = vk::build_T3d(g, loads, 1e-3);
  const double floor = vk::transcript_floor3(g, ops, Hinv, cert);

  vk::Rng rng(73);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = vk::sample_admissible3(g, rng, 0.5);
    const auto v = vk::strain_v(g, s);
    const auto stress = vk::contract4(H, v, g);
    const auto dens = vk::ddot3(stress, v, g);
    double vpart = 0.0;
    for (int k = 0; k < g.nz; ++k)
      vpart += (ops.omega.slab[k].array() *
                (0.5 * dens.slab[k].array() -
                 (cert.t11.slab[k].array() * v.t11.slab[k].array() +
                  cert.t22.slab[k].array() * v.t22.slab[k].array() +
                  cert.t33.slab[k].array() * v.t33.slab[k].array())))
                   .sum();
    CHECK(vpart >= floor - 1e-10 * (1.0 + std::abs(floor)));
  }
}

TEST_CASE("tensor hypotheses report the exact coercivity constants") {
  vk::Rng rng(707);
  const auto rep =
      vk::check_tensor_hypotheses(vk::build_isotropic_tensor3(1.0, 1.0), rng);
  CHECK(rep.c0 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.c1_worst > 0.0);
  CHECK(rep.samples == 10000);

  vk::Rng rng2(707);
  vk::Tensor43 id;
  id.C = Eigen::Matrix<double, 6, 6>::Identity();
  CHECK(vk::check_tensor_hypotheses(id, rng2, 100).c0 ==
        doctest::Approx(1.0).epsilon(1e-12));

  vk::Tensor43 bad;
  bad.C = Eigen::Matrix<double, 6, 6>::Identity();
  bad.C(0, 0) = -1.0;
  vk::Rng rng3(707);
  CHECK_THROWS_AS(vk::check_tensor_hypotheses(bad, rng3, 10),
                  vk::ParameterError);
}

TEST_CASE("minimizing the 3d energy converges to a negative value") {
  const auto g = vk::Grid3::make(9, 9, 9, 1.0, 1.0, 1.0);
  const auto ops = vk::ElasticOps::make(g);
  const auto H = vk::build_isotropic_tensor3(1.0, 1.0);
  const auto loads = reference_loads(g);

  vk::Objective f;
  const Eigen::Index n = static_cast<Eigen::Index>(g.nx) * g.ny * g.nz;
  auto wstate = vk::ElasticState{ops.omega, ops.omega, ops.omega};
  f.weights = vk::pack3(g, wstate);
  f.value = [&](const vk::Vec& x) {
    return vk::energy3d(g, ops, H, vk::unpack3(g, x), loads).total;
  };
  f.grad = [&](const vk::Vec& x) -> vk::Vec {
    return vk::pack3(g, vk::gradient3d(g, ops, H, vk::unpack3(g, x), loads));
  };

  // Above this instance's certification floor (gs ~ 1.8e-8, where decreases
  // drown in the rounding noise of the energy sum) with a 5x margin.
  vk::SolverOptions opts;
  opts.grad_tol = 1e-7;
  const auto res = vk::minimize(f, vk::Vec::Zero(3 * n), opts);
  CHECK(res.report.converged);
  CHECK(res.report.energy < 0.0);
  CHECK(res.report.grad_sup <= res.report.grad_tol);

  const auto s = vk::unpack3(g, res.x);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (g.pinned(i, j, k)) CHECK(s.u1.slab[k](i, j) == 0.0);
}

TEST_CASE("imposed boundary values survive a constrained minimization") {
  const auto g =
      vk::Grid3::make(7, 7, 7, 1.0, 1.0, 1.0, {G0, GT, G0, GT, G0, GT});
  const auto ops = vk::ElasticOps::make(g);
  const auto H = vk::build_isotropic_tensor3(1.0, 1.0);
  const auto loads = vk::ElasticLoads::zero(g);

  auto uhat = vk::ElasticState::zero(g);
  uhat.u1 = field3(g, [](double x, double, double) { return 0.05 * x; });

  auto start = vk::ElasticState::zero(g);
  vk::apply_dirichlet(g, start, uhat);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (g.pinned(i, j, k))
          CHECK(start.u1.slab[k](i, j) == uhat.u1.slab[k](i, j));

  vk::Objective f;
  auto wstate = vk::ElasticState{ops.omega, ops.omega, ops.omega};
  f.weights = vk::pack3(g, wstate);
  f.value = [&](const vk::Vec& x) {
    return vk::energy3d(g, ops, H, vk::unpack3(g, x), loads).total;
  };
  f.grad = [&](const vk::Vec& x) -> vk::Vec {
    return vk::pack3(g, vk::gradient3d(g, ops, H, vk::unpack3(g, x), loads));
  };

  vk::SolverOptions opts;
  opts.grad_tol = 1e-7;
  const auto res = vk::minimize(f, vk::pack3(g, start), opts);
  CHECK(res.report.converged);
  const auto s = vk::unpack3(g, res.x);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (g.pinned(i, j, k))
          CHECK(s.u1.slab[k](i, j) == uhat.u1.slab[k](i, j));
}
