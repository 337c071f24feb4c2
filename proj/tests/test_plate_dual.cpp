#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "vk/common.hpp"
#include "vk/dual.hpp"
#include "vk/fd.hpp"
#include "vk/grid.hpp"
#include "vk/plate.hpp"
#include "vk/solver.hpp"

namespace {

template <class F>
vk::ScalarField2<double> field2(const vk::Grid2& g, F f) {
  auto out = vk::ScalarField2<double>::zero(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.v(i, j) = f(g.x(i), g.y(j));
  return out;
}

// One converged clamped plate shared by every dual-side case: 17x17, unit
// material, constant transverse load strong enough to engage the membrane
// coupling while keeping sup|N| small enough that an admissible K exists
// (the scalar functional needs K below roughly 2 pi^2 / b). The tolerance
// sits a factor ~4 above the double-precision certification floor of this
// instance (the line search cannot certify decreases once they drown in the
// rounding noise of the energy sum, which happens near gs ~ 5e-7 here).
struct Fixture {
  vk::Grid2 g = vk::Grid2::make(17, 17, 1.0, 1.0);
  vk::PlateOps ops = vk::PlateOps::make(g);
  vk::PlateMaterial mat = vk::PlateMaterial::make({1.0, 1.0, 1.0});
  vk::PlateLoads loads = vk::PlateLoads::zero(g);
  vk::PlateState u0 = vk::PlateState::zero(g);
  vk::SolveReport rep;
  vk::C0Solver c0;
  vk::KSelection sel;
  vk::DualPoint d0;
  double J0 = 0.0;

  Fixture() {
    loads.P = vk::ScalarField2<double>::constant(g, 3.0);

    vk::Objective f;
    const Eigen::Index n = static_cast<Eigen::Index>(g.nx) * g.ny;
    f.weights.resize(3 * n);
    f.weights.segment(0, n) = ops.omega.reshaped();
    f.weights.segment(n, n) = ops.omega.reshaped();
    f.weights.segment(2 * n, n) = ops.omega.reshaped();
    // 17x17 fully clamped carries the excluded deflection mode; minimize the
    // energy restricted to the admissible space.
    f.value = [this](const vk::Vec& x) {
      auto u = vk::unpack(g, x);
      vk::remove_spurious_w(g, u.w.v);
      return vk::energy(g, ops, mat, u, loads).total;
    };
    f.grad = [this](const vk::Vec& x) -> vk::Vec {
      auto u = vk::unpack(g, x);
      vk::remove_spurious_w(g, u.w.v);
      const auto gr = vk::gradient(g, ops, mat, u, loads);
      vk::PlateState gs = vk::PlateState::zero(g);
      gs.u.x = gr.u1;
      gs.u.y = gr.u2;
      gs.w.v = gr.w;
      vk::remove_spurious_w(g, gs.w.v);
      return vk::pack(gs);
    };
    vk::SolverOptions opts;
    opts.max_iters = 60000;
    opts.grad_tol = 2e-6;
    const auto res = vk::minimize(f, vk::Vec::Zero(3 * n), opts);
    rep = res.report;
    u0 = vk::unpack(g, res.x);
    J0 = rep.energy;

    c0 = vk::C0Solver::make(g, mat, 0.5);
    const auto N = vk::contract4(mat.membrane, vk::gamma(g, ops, u0));
    vk::Rng krng(606);
    sel = vk::auto_select_K(g, ops, mat, c0, N, krng);
    d0 = vk::extract_dual(g, ops, mat, u0, sel.K);
  }
};

const Fixture& fx() {
  static Fixture f;
  return f;
}

double rel(double a, double b) {
  return std::abs(a - b) / (1.0 + std::abs(b));
}

}  // namespace

TEST_CASE("the shared primal solve converged") {
  const auto& f = fx();
  CHECK(f.rep.converged);
  CHECK(f.rep.grad_sup <= f.rep.grad_tol);
  CHECK(f.J0 < 0.0);
  CHECK(f.rep.grad_tol == doctest::Approx(2e-6).epsilon(1e-12));
}

TEST_CASE("extraction is the closed-form map and validates its inputs") {
  const auto& f = fx();

  // Multiplier is exactly -K w0, a sign-flip of a single product.
  CHECK((f.d0.z_star.v + f.sel.K * f.u0.w.v).cwiseAbs().maxCoeff() == 0.0);

  // Zero state extracts the zero dual point.
  const auto dz = vk::extract_dual(f.g, f.ops, f.mat, vk::PlateState::zero(f.g),
                                   1.0);
  CHECK(vk::sup3(dz.N) == 0.0);
  CHECK(vk::sup3(dz.M_tilde) == 0.0);
  CHECK(dz.Q.x.cwiseAbs().maxCoeff() == 0.0);
  CHECK(dz.z_star.v.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(vk::extract_dual(f.g, f.ops, f.mat, f.u0, 0.0),
                  vk::ParameterError);
  CHECK_THROWS_AS(vk::extract_dual(f.g, f.ops, f.mat, f.u0, -2.0),
                  vk::ParameterError);

  // A compressive in-plane state leaves the cone for small K.
  auto comp = vk::PlateState::zero(f.g);
  comp.u.x = field2(f.g, [](double x, double) { return -x; }).v;
  CHECK_THROWS_AS(vk::extract_dual(f.g, f.ops, f.mat, comp, 1.0),
                  vk::BStarViolation);
  CHECK_NOTHROW(vk::extract_dual(f.g, f.ops, f.mat, comp, 7.0));
}

TEST_CASE("first conjugate returns the bending energy at extraction") {
  const auto& f = fx();
  const double bend = vk::energy(f.g, f.ops, f.mat, f.u0, f.loads).bending;
  CHECK(rel(vk::g1_star(f.g, f.ops, f.mat, f.d0), bend) <= 1e-10);
}

TEST_CASE("second conjugate splits into membrane energy plus shear quadratic") {
  const auto& f = fx();
  const double g2 = vk::g2_star(f.g, f.ops, f.mat, f.d0);

  const double membE = vk::energy(f.g, f.ops, f.mat, f.u0, f.loads).membrane;
  const vk::Mat gwx = vk::ax(f.ops.dx, f.u0.w.v);
  const vk::Mat gwy = vk::ay(f.ops.dy, f.u0.w.v);
  const double nquad =
      0.5 * (f.ops.omega.array() *
             (f.d0.N.t11.array() * gwx.array().square() +
              f.d0.N.t22.array() * gwy.array().square() +
              2.0 * f.d0.N.t12.array() * gwx.array() * gwy.array()))
                .sum();
  const double kquad =
      0.5 * f.d0.K *
      (f.ops.omega.array() * (gwx.array().square() + gwy.array().square()))
          .sum();
  CHECK(rel(g2, membE + nquad + kquad) <= 1e-10);

  // Hand-checked value: N = 0, Q = (3, 0), K = 2.
  auto d = vk::DualPoint::zero(f.g, 2.0);
  d.Q.x.setConstant(3.0);
  CHECK(vk::g2_star(f.g, f.ops, f.mat, d) ==
        doctest::Approx(2.25).epsilon(1e-13));
}

TEST_CASE("scalar conjugate matches its closed form and pairing identity") {
  const auto& f = fx();

  auto zx = field2(f.g, [](double x, double) { return x; });
  CHECK(vk::f_star(f.g, f.ops, zx, 2.0) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK_THROWS_AS(vk::f_star(f.g, f.ops, zx, 0.0), vk::ParameterError);
  CHECK_THROWS_AS(vk::f_star(f.g, f.ops, zx, -1.0), vk::ParameterError);

  // At extraction: F*(z*) + <grad z*, grad w0> + (K/2)||grad w0||^2 = 0.
  const double fs = vk::f_star(f.g, f.ops, f.d0.z_star, f.d0.K);
  const vk::Mat gzx = vk::ax(f.ops.dx, f.d0.z_star.v);
  const vk::Mat gzy = vk::ay(f.ops.dy, f.d0.z_star.v);
  const vk::Mat gwx = vk::ax(f.ops.dx, f.u0.w.v);
  const vk::Mat gwy = vk::ay(f.ops.dy, f.u0.w.v);
  const double pair =
      (f.ops.omega.array() * (gzx.array() * gwx.array() +
                              gzy.array() * gwy.array()))
          .sum();
  const double wsq =
      0.5 * f.d0.K *
      (f.ops.omega.array() * (gwx.array().square() + gwy.array().square()))
          .sum();
  CHECK(std::abs(fs + pair + wsq) <= 1e-8 * (1.0 + fs));
}

TEST_CASE("compatibility operator annihilates extracted and pure-trace data") {
  const auto& f = fx();

  const double wsup = f.u0.w.v.cwiseAbs().maxCoeff();
  CHECK(vk::l_operator(f.ops, f.mat, f.d0).cwiseAbs().maxCoeff() <=
        1e-8 * (1.0 + wsup));

  // M_tilde = bending : diag(0, x^2) gives back curvature diag(0, x^2), whose
  // operator value is the constant -2 on interior rows. Boundary rows follow
  // the clamped stencil convention, which x^2 violates at x = 1.
  auto d = vk::DualPoint::zero(f.g, 1.0);
  const auto xsq = field2(f.g, [](double x, double) { return x * x; });
  vk::SymTensorField2<double> e = vk::SymTensorField2<double>::zero(f.g);
  e.t22 = xsq.v;
  const auto me = vk::contract4(f.mat.bending, e);
  d.M_tilde = me;
  const vk::Mat lerr = vk::l_operator(f.ops, f.mat, d).array() + 2.0;
  CHECK(vk::interior_sup(f.g, lerr, 3) <= 1e-10);

  // All-zero dual data maps to zero.
  CHECK(vk::l_operator(f.ops, f.mat, vk::DualPoint::zero(f.g, 1.0))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("fourth-order interior solver round-trips and is symmetric") {
  const auto& f = fx();
  CHECK_THROWS_AS(vk::C0Solver::make(f.g, f.mat, 0.0), vk::ParameterError);
  CHECK_THROWS_AS(vk::C0Solver::make(f.g, f.mat, 1.0), vk::ParameterError);
  CHECK_THROWS_AS(vk::C0Solver::make(f.g, f.mat, 1.5), vk::ParameterError);
  CHECK_THROWS_AS(vk::C0Solver::make(f.g, f.mat, -0.2), vk::ParameterError);

  vk::Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    vk::Mat w = vk::sample_bubble(f.g, rng, 1.0);
    // forward then apply returns (1 - eps3) w on the interior.
    const vk::Mat y = f.c0.forward(f.g, w);
    const vk::Mat x = f.c0.apply(f.g, y);
    w.row(0).setZero();
    w.row(f.g.nx - 1).setZero();
    w.col(0).setZero();
    w.col(f.g.ny - 1).setZero();
    CHECK((x - (1.0 - f.c0.eps3) * w).cwiseAbs().maxCoeff() <=
          1e-8 * (1.0 + w.cwiseAbs().maxCoeff()));

    // The inverse quadratic form is nonnegative.
    const vk::Mat cy = f.c0.apply(f.g, y);
    const double quad = (f.ops.omega.array() * cy.array() * y.array()).sum();
    CHECK(quad >= 0.0);

    // Square grid, equal diagonal coefficients: solving the transposed data
    // transposes the solution.
    const vk::Mat xt = f.c0.apply(f.g, vk::Mat(y.transpose()));
    CHECK((xt - x.transpose()).cwiseAbs().maxCoeff() <=
          1e-9 * (1.0 + x.cwiseAbs().maxCoeff()));
  }

  CHECK(f.c0.apply(f.g, vk::Mat::Zero(f.g.nx, f.g.ny)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("corrected dual value agrees with the plain one at extraction") {
  const auto& f = fx();
  const double js = vk::j_star(f.g, f.ops, f.mat, f.d0);
  const double j1 = vk::j1_star(f.g, f.ops, f.mat, f.c0, f.d0);
  CHECK(std::abs(j1 - js) <= 1e-10 * (1.0 + std::abs(js)));

  // Zero dual point: every conjugate vanishes.
  const auto dz = vk::DualPoint::zero(f.g, 1.0);
  CHECK(vk::j_star(f.g, f.ops, f.mat, dz) == 0.0);
  CHECK(vk::j1_star(f.g, f.ops, f.mat, f.c0, dz) == 0.0);
}

TEST_CASE("scalar functional is exactly quadratic and stays positive") {
  const auto& f = fx();
  vk::Rng rng(79);
  for (int trial = 0; trial < 10; ++trial) {
    vk::ScalarField2<double> z;
    z.v = vk::sample_bubble(f.g, rng, 1.0);
    const double j2 = vk::j2_star(f.g, f.ops, f.mat, f.c0, z, f.sel.K);
    vk::ScalarField2<double> z2;
    z2.v = 2.0 * z.v;
    const double j22 = vk::j2_star(f.g, f.ops, f.mat, f.c0, z2, f.sel.K);
    // Doubling the argument multiplies a quadratic by exactly four (binary
    // scaling commutes with every rounding step).
    CHECK(std::abs(j22 - 4.0 * j2) <= 1e-13 * (1.0 + std::abs(j2)));
    CHECK(j2 > 0.0);
  }

  vk::ScalarField2<double> z0;
  z0.v = vk::Mat::Zero(f.g.nx, f.g.ny);
  CHECK(vk::j2_star(f.g, f.ops, f.mat, f.c0, z0, f.sel.K) == 0.0);
}

TEST_CASE("auto-selected K certifies the cone and the scalar positivity") {
  const auto& f = fx();
  CHECK(f.sel.K >= 1.0);
  CHECK(f.sel.b_margin > 0.0);
  CHECK(f.sel.j2_min > 0.0);
  CHECK(f.sel.doublings >= 0);

  // Re-running with the same seed is deterministic.
  const auto N = vk::contract4(f.mat.membrane, vk::gamma(f.g, f.ops, f.u0));
  vk::Rng krng(606);
  const auto sel2 = vk::auto_select_K(f.g, f.ops, f.mat, f.c0, N, krng);
  CHECK(sel2.K == f.sel.K);
  CHECK(sel2.j2_min == f.sel.j2_min);
}

TEST_CASE("equilibrium residuals at extraction sit inside the solver tolerance") {
  const auto& f = fx();
  const auto eq = vk::equilibrium_residuals(f.g, f.ops, f.d0, f.loads);
  const double tol_eq = 10.0 * f.rep.grad_tol * (1.0 + f.loads.sup());
  CHECK(eq.margin == 3);
  CHECK(eq.residual_membrane <= tol_eq);
  CHECK(eq.residual_moment <= tol_eq);
}

TEST_CASE("balanced dual constructions annihilate the residual fields") {
  const auto& f = fx();
  vk::Rng rng(83);
  const vk::Mat phi = vk::sample_bubble(f.g, rng, 1.0);
  const vk::Mat psi = vk::sample_bubble(f.g, rng, 1.0);
  auto d = vk::make_balanced_dual(f.g, f.ops, phi, psi, 0.4, -0.2, 0.1, 1.0);
  // 2x2 blocks N + K I stay positive definite for K beyond three suprema.
  d.K = 1.0 + 3.0 * vk::sup3(d.N);
  const auto r = vk::equilibrium_residual_fields(f.g, f.ops, d,
                                                 vk::PlateLoads::zero(f.g));
  CHECK(r.membrane1.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(r.membrane2.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(r.moment.cwiseAbs().maxCoeff() <= 1e-10);

  // With zero loads the pairing-corrected value equals the plain value for
  // any admissible test state.
  const double js = vk::j_star(f.g, f.ops, f.mat, d);
  for (int trial = 0; trial < 5; ++trial) {
    const auto u = vk::sample_admissible(f.g, rng, 0.5);
    const double j3 =
        vk::j3_star(f.g, f.ops, f.mat, d, u, vk::PlateLoads::zero(f.g));
    CHECK(std::abs(j3 - js) <= 1e-9 * (1.0 + std::abs(js)));
  }
}

TEST_CASE("the zero dual point pairs loads directly against the state") {
  const auto& f = fx();
  auto loads = vk::PlateLoads::zero(f.g);
  loads.P = field2(f.g, [](double x, double y) { return 1.0 + x - 0.5 * y; });
  loads.P1 = vk::ScalarField2<double>::constant(f.g, 0.7);
  loads.P2 = field2(f.g, [](double x, double) { return -0.3 * x; });

  vk::Rng rng(89);
  const auto dz = vk::DualPoint::zero(f.g, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto u = vk::sample_admissible(f.g, rng, 0.8);
    const double j3 = vk::j3_star(f.g, f.ops, f.mat, dz, u, loads);
    const double want = -(f.ops.omega.array() *
                          (u.w.v.array() * loads.P.v.array() +
                           u.u.x.array() * loads.P1.v.array() +
                           u.u.y.array() * loads.P2.v.array()))
                             .sum();
    CHECK(std::abs(j3 - want) <= 1e-12 * (1.0 + std::abs(want)));
  }
}

TEST_CASE("weak duality holds over two hundred random admissible states") {
  const auto& f = fx();
  // The minimizer trial carries the duality gap itself, which at this strong
  // load sits at the boundary-row discretization level (~4e-8 relative), so
  // the slack is gated at the gap tolerance; random trials sit far inside.
  const double tol_weak = 1e-6 * (1.0 + std::abs(f.J0));
  vk::Rng rng(303);
  const auto rep = vk::weak_duality_probe(f.g, f.ops, f.mat, f.loads, f.u0,
                                          f.d0, 200, rng, tol_weak);
  CHECK(rep.trials == 200);
  CHECK(rep.violations == 0);
  CHECK(rep.worst_slack >= -tol_weak);
  // The first trial is the minimizer itself, where the slack is the gap.
  CHECK(rep.worst_slack <= 1e-6 * (1.0 + std::abs(f.J0)));
}

TEST_CASE("weak-duality slack grows when stepping away from the minimizer") {
  const auto& f = fx();
  const double jd = vk::j_star(f.g, f.ops, f.mat, f.d0);
  const vk::Mat g0x = vk::ax(f.ops.dx, f.u0.w.v);
  const vk::Mat g0y = vk::ay(f.ops.dy, f.u0.w.v);
  auto slack_at = [&](const vk::PlateState& u) {
    const double J = vk::energy(f.g, f.ops, f.mat, u, f.loads).total;
    const vk::Mat dxw = vk::ax(f.ops.dx, u.w.v) - g0x;
    const vk::Mat dyw = vk::ay(f.ops.dy, u.w.v) - g0y;
    const double pen =
        0.5 * f.d0.K *
        (f.ops.omega.array() * (dxw.array().square() + dyw.array().square()))
            .sum();
    return J + pen - jd;
  };

  vk::Rng rng(97);
  auto dir = vk::PlateState::zero(f.g);
  dir.w.v = vk::sample_bubble(f.g, rng, 0.01);
  dir.u.x = vk::sample_bubble(f.g, rng, 0.01);

  auto at = [&](double s) {
    auto u = vk::PlateState::zero(f.g);
    u.u.x = f.u0.u.x + s * dir.u.x;
    u.u.y = f.u0.u.y;
    u.w.v = f.u0.w.v + s * dir.w.v;
    return u;
  };
  const double s1 = slack_at(at(1.0));
  const double s2 = slack_at(at(2.0));
  CHECK(s1 > 0.0);
  CHECK(s2 >= 2.0 * s1);
}

TEST_CASE("no direction shows a positive second difference of the dual value") {
  const auto& f = fx();
  vk::Rng rng(404);
  const auto rep =
      vk::concavity_probe(f.g, f.ops, f.mat, f.c0, f.d0, 100, rng);
  CHECK(rep.directions + rep.skipped == 100);
  CHECK(rep.directions > 0);
  CHECK(rep.max_second_difference <= rep.tol);
}

TEST_CASE("closed-form second differences along structured directions") {
  const auto& f = fx();
  const double t = 1e-3;

  auto j1_at = [&](const vk::DualPoint& d) {
    return vk::j1_star(f.g, f.ops, f.mat, f.c0, d);
  };
  const double base = j1_at(f.d0);
  const double area = f.ops.omega.sum();

  // Constant trace direction in M_tilde: the quadratic coefficient is the
  // summed compliance block, 0.9 for the unit material.
  {
    auto plus = f.d0;
    plus.M_tilde.t11.array() += t;
    plus.M_tilde.t22.array() += t;
    auto minus = f.d0;
    minus.M_tilde.t11.array() -= t;
    minus.M_tilde.t22.array() -= t;
    const double second = j1_at(plus) + j1_at(minus) - 2.0 * base;
    const double want = -0.9 * t * t * area;
    CHECK(std::abs(second - want) <= 1e-6 * std::abs(want));
  }

  // Constant first-component shear direction: coefficient is the integrated
  // (1,1) entry of the pointwise inverse of N + K I.
  {
    const auto inv = vk::nk_inverse_field(f.g, f.d0.N, f.d0.K);
    auto plus = f.d0;
    plus.Q.x.array() += t;
    auto minus = f.d0;
    minus.Q.x.array() -= t;
    const double second = j1_at(plus) + j1_at(minus) - 2.0 * base;
    const double want =
        -t * t * (f.ops.omega.array() * inv.t11.array()).sum();
    CHECK(std::abs(second - want) <= 1e-7 * std::abs(want));
  }
}

TEST_CASE("stationarity holds in all five variation equations") {
  const auto& f = fx();
  const auto st = vk::check_stationarity(f.g, f.ops, f.mat, f.u0, f.d0,
                                         f.loads, f.rep.grad_tol);
  CHECK(st.z_identity == 0.0);
  CHECK(st.var_moment <= st.tol);
  CHECK(st.var_shear <= st.tol);
  CHECK(st.var_membrane <= st.tol);
  CHECK(st.var_multiplier <= st.tol);
  CHECK(st.var_multiplier_crosscheck <= st.tol);
  CHECK(st.var_balance <= st.tol);
  CHECK(st.tol == doctest::Approx(10.0 * f.rep.grad_tol * 4.0).epsilon(1e-12));
}

TEST_CASE("the duality gap closes at the minimizer and opens off it") {
  const auto& f = fx();
  const double jd = vk::j_star(f.g, f.ops, f.mat, f.d0);
  const double gap0 = vk::duality_gap(f.J0, jd);
  CHECK(gap0 <= 1e-6);
  CHECK(std::abs(vk::j1_star(f.g, f.ops, f.mat, f.c0, f.d0) - jd) <=
        1e-10 * (1.0 + std::abs(jd)));

  vk::Rng rng(101);
  auto up = vk::PlateState::zero(f.g);
  up.u.x = f.u0.u.x;
  up.u.y = f.u0.u.y;
  up.w.v = f.u0.w.v + vk::sample_bubble(f.g, rng, 0.1);
  const double Jp = vk::energy(f.g, f.ops, f.mat, up, f.loads).total;
  const double gapp = vk::duality_gap(Jp, jd);
  CHECK(gapp >= 10.0 * std::max(gap0, 1e-9));
  CHECK(Jp > f.J0);
}

TEST_CASE("samplers respect the boundary contract") {
  const auto& f = fx();
  vk::Rng rng(103);
  const vk::Mat b = vk::sample_bubble(f.g, rng, 1.0);
  CHECK(b.row(0).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(b.row(f.g.nx - 1).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(b.col(0).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(b.col(f.g.ny - 1).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(b.cwiseAbs().maxCoeff() > 0.0);

  const auto s = vk::sample_admissible(f.g, rng, 1.0);
  for (int j = 0; j < f.g.ny; ++j)
    for (int i = 0; i < f.g.nx; ++i)
      if (f.g.pinned(i, j)) {
        CHECK(s.u.x(i, j) == 0.0);
        CHECK(s.u.y(i, j) == 0.0);
        CHECK(s.w.v(i, j) == 0.0);
      }
}
