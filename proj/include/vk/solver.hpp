// First-order minimization on packed state vectors.
//
// Both descent methods share one Armijo backtracking line search, so the
// energy is monotone along the iterate sequence by construction. Admissibility
// is the caller's concern: gradients arrive with pinned rows already zeroed,
// hence every iterate of x0 + span{gradients} stays admissible.
#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "vk/common.hpp"

namespace vk {

// Convergence is declared on the quadrature-scaled sup norm of the gradient:
// sup |g_i| / weights_i, the discrete force-balance residual. Pinned entries
// carry zero gradient, so they never contribute.
struct Objective {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  Vec weights;

  double scaled_sup(const Vec& g) const {
    return (g.cwiseAbs().array() / weights.array()).maxCoeff();
  }
};

enum class DescentMethod { GradientDescent, LBFGS };

struct SolverOptions {
  DescentMethod method = DescentMethod::LBFGS;
  int max_iters = 20000;
  double grad_tol = -1.0;  // <0: 1e-9 * (1 + |J(x0)|)
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_halvings = 60;
  int lbfgs_memory = 10;
};

struct SolveReport {
  int iters = 0;
  int evals = 0;
  double energy = 0.0;
  double grad_sup = 0.0;
  double grad_tol = 0.0;
  bool converged = false;
};

struct SolveResult {
  Vec x;
  SolveReport report;
};

// log, when set, receives (iter, J, grad_sup, step) after each accepted step.
inline SolveResult minimize(
    const Objective& f, Vec x, const SolverOptions& opts,
    const std::function<void(int, double, double, double)>& log = {}) {
  SolveResult res;
  SolveReport& rep = res.report;
  double J = f.value(x);
  ++rep.evals;
  rep.grad_tol =
      opts.grad_tol >= 0.0 ? opts.grad_tol : 1e-9 * (1.0 + std::abs(J));

  std::deque<Vec> s_hist, y_hist;
  Vec g = f.grad(x);

  for (rep.iters = 0; rep.iters < opts.max_iters; ++rep.iters) {
    const double gs = f.scaled_sup(g);
    if (log) log(rep.iters, J, gs, 0.0);
    if (gs <= rep.grad_tol) break;

    Vec d;
    if (opts.method == DescentMethod::LBFGS && !s_hist.empty()) {
      // Two-loop recursion over the stored curvature pairs.
      Vec q = g;
      const int m = static_cast<int>(s_hist.size());
      std::vector<double> alpha(m), rho(m);
      for (int k = m - 1; k >= 0; --k) {
        rho[k] = 1.0 / y_hist[k].dot(s_hist[k]);
        alpha[k] = rho[k] * s_hist[k].dot(q);
        q -= alpha[k] * y_hist[k];
      }
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
      for (int k = 0; k < m; ++k) {
        const double beta = rho[k] * y_hist[k].dot(q);
        q += (alpha[k] - beta) * s_hist[k];
      }
      d = -q;
      if (d.dot(g) >= 0.0) d = -g;  // not a descent direction: reset
    } else {
      d = -g;
    }

    double t = 1.0;
    double J_new = 0.0;
    Vec x_new;
    auto backtrack = [&](const Vec& dir, double slope) {
      t = 1.0;
      for (int halvings = 0; halvings <= opts.max_halvings; ++halvings) {
        x_new = x + t * dir;
        J_new = f.value(x_new);
        ++rep.evals;
        if (J_new <= J + opts.armijo_c * t * slope) return true;
        t *= opts.backtrack;
      }
      return false;
    };
    if (!backtrack(d, g.dot(d))) {
      // A quasi-Newton direction assembled near the rounding floor can be
      // garbage; drop the memory and give plain steepest descent one try
      // before declaring the search dead.
      bool recovered = false;
      if (opts.method == DescentMethod::LBFGS && !s_hist.empty()) {
        s_hist.clear();
        y_hist.clear();
        d = -g;
        recovered = backtrack(d, g.dot(d));
      }
      if (!recovered)
        throw SolverStallError("line search stalled after " +
                               std::to_string(opts.max_halvings) +
                               " halvings at iteration " +
                               std::to_string(rep.iters) + " (energy " +
                               std::to_string(J) + ")");
    }

    Vec g_new = f.grad(x_new);
    if (opts.method == DescentMethod::LBFGS) {
      const Vec s = x_new - x;
      const Vec y = g_new - g;
      const double sy = s.dot(y);
      // Besides positive curvature, demand a step that stands clear of the
      // rounding scale of x: ulp-sized moves measure summation noise, not the
      // Hessian, and stored they wash the real curvature out of the model.
      if (sy > 1e-12 * s.norm() * y.norm() &&
          s.norm() > 1e-14 * (1.0 + x.norm())) {
        s_hist.push_back(s);
        y_hist.push_back(y);
        if (static_cast<int>(s_hist.size()) > opts.lbfgs_memory) {
          s_hist.pop_front();
          y_hist.pop_front();
        }
      }
    }
    x = std::move(x_new);
    g = std::move(g_new);
    J = J_new;
    if (log) log(rep.iters + 1, J, f.scaled_sup(g), t);
  }

  // The convergence flag is certified against a freshly assembled gradient.
  rep.grad_sup = f.scaled_sup(f.grad(x));
  rep.converged = rep.grad_sup <= rep.grad_tol;
  rep.energy = J;
  res.x = std::move(x);
  return res;
}

struct GradCheckReport {
  double max_rel_err = 0.0;
  int directions = 0;
};

// Central-difference directional derivatives against the analytic gradient.
// Directions are expected admissible (pinned rows zero) like the gradient.
inline GradCheckReport gradcheck(const Objective& f, const Vec& x,
                                 const std::vector<Vec>& directions,
                                 double eps = 1e-4) {
  GradCheckReport rep;
  const Vec g = f.grad(x);
  for (const Vec& d0 : directions) {
    const double sup = d0.lpNorm<Eigen::Infinity>();
    if (sup == 0.0) continue;
    const Vec d = d0 / sup;
    const double fd =
        (f.value(x + eps * d) - f.value(x - eps * d)) / (2.0 * eps);
    const double an = g.dot(d);
    const double rel = std::abs(fd - an) / std::max(1.0, std::abs(an));
    rep.max_rel_err = std::max(rep.max_rel_err, rel);
    ++rep.directions;
  }
  return rep;
}

}  // namespace vk
