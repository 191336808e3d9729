#pragma once
// Graph construction for the inertial manifold and the probes built on it.
//
// A graph point over p in P_Lambda H is computed by solving the boundary
// value problem on a finite history window [-T, 0]: the low part marches
// backward from p at time 0, the high part marches forward from 0 at -T,
// both against the load w = A^gamma (g - F(u)) evaluated on the previous
// Picard iterate. Each linear march is the exponential trapezoid
//
//   u_{j+1} = e^z u_j + dt [ phi1(z) w_j + phi2(z) (w_{j+1} - w_j) ],
//
// exact for loads that are linear in t across a step. The graph value is the
// high part at time 0; window truncation is removed by doubling T until the
// value stops moving. The backward low march amplifies roundoff by about
// e^{lambda_N^{1+gamma} T}, which the default window keeps harmless.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "imlab/evolution.hpp"
#include "imlab/lattice.hpp"
#include "imlab/model.hpp"
#include "imlab/rng.hpp"
#include "imlab/spectral_field.hpp"

namespace imlab {

struct BvpOptions {
  double T = 1.0;            // history window length
  double dt = 0.02;          // node spacing (adjusted to divide T evenly)
  double tol = 1e-8;         // sup-in-t H^{-gamma} Picard tolerance
  int max_iterations = 200;
};

template <typename Scalar>
struct BvpSolution {
  std::vector<SpectralField<Scalar>> nodes;  // trajectory at t = -T + j dt
  double T = 0;
  double dt = 0;
  int iterations = 0;
  double residual = 0;
  bool converged = false;
};

template <typename Scalar>
BvpSolution<Scalar> solve_bvp(const Evolution<Scalar>& evo, const SpectralField<Scalar>& u_plus,
                              const BvpOptions& opts,
                              const std::vector<SpectralField<Scalar>>* warm = nullptr) {
  if (!(opts.T > 0) || !(opts.dt > 0)) throw std::invalid_argument("solve_bvp: T and dt must be positive");
  const auto& model = evo.model();
  const std::int64_t cut = model.config().lambda_cut;
  const double gamma = model.gamma();
  const OperatorSpec op = model.op();

  const int J = std::max(2, static_cast<int>(std::lround(opts.T / opts.dt)));
  const double dt = opts.T / J;

  BvpSolution<Scalar> sol;
  sol.T = opts.T;
  sol.dt = dt;
  const auto p_plus = low_pass(u_plus, cut);

  // initial guess: boundary value frozen in t, unless a warm start is given
  sol.nodes.assign(J + 1, p_plus);
  if (warm && !warm->empty()) {
    const int shiftj = J + 1 - static_cast<int>(warm->size());
    for (int j = 0; j <= J; ++j)
      sol.nodes[j] = (*warm)[static_cast<std::size_t>(std::max(0, j - shiftj))];
  }

  // per-step march symbols (forward decaying for Q, backward growing for P)
  auto zname = [op, gamma, dt](std::int64_t ell, double sign) {
    const double lam = static_cast<double>(op.shift + ell);
    return lam <= 0.0 ? 0.0 : sign * dt * std::pow(lam, 1.0 + gamma);
  };
  const auto fwd_exp = [zname](std::int64_t l) { return std::exp(zname(l, -1.0)); };
  const auto fwd_p1 = [zname, dt](std::int64_t l) { return dt * phi1(zname(l, -1.0)); };
  const auto fwd_p2 = [zname, dt](std::int64_t l) { return dt * phi2(zname(l, -1.0)); };
  const auto bwd_exp = [zname](std::int64_t l) { return std::exp(zname(l, 1.0)); };
  const auto bwd_p1 = [zname, dt](std::int64_t l) { return dt * phi1(zname(l, 1.0)); };
  const auto bwd_p2 = [zname, dt](std::int64_t l) { return dt * phi2(zname(l, 1.0)); };

  std::vector<SpectralField<Scalar>> loads(J + 1, model.zero_field());
  double first_residual = 0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    for (int j = 0; j <= J; ++j) loads[j] = evo.nonlinear_load(sol.nodes[j]);

    std::vector<SpectralField<Scalar>> next(J + 1, model.zero_field());
    // high part forward from zero at -T
    auto q = model.zero_field();
    next[0] += q;
    for (int j = 0; j < J; ++j) {
      const auto wj = high_pass(loads[j], cut);
      const auto dw = high_pass(loads[j + 1], cut) - wj;
      q = apply_symbol(q, fwd_exp) + apply_symbol(wj, fwd_p1) + apply_symbol(dw, fwd_p2);
      next[j + 1] += q;
    }
    // low part backward from the boundary value at 0
    auto p = p_plus;
    next[J] += p;
    for (int j = J - 1; j >= 0; --j) {
      const auto wj = low_pass(loads[j], cut);
      const auto dw = low_pass(loads[j + 1], cut) - wj;
      p = apply_symbol(p, bwd_exp) - apply_symbol(wj, bwd_p1) - apply_symbol(dw, bwd_p2);
      next[j] += p;
    }

    // per-node relative residual: deep low-mode nodes grow backward in time,
    // and an absolute sup would let them drown out the part near t = 0
    double res = 0;
    for (int j = 0; j <= J; ++j) {
      const double diff = sobolev_norm(next[j] - sol.nodes[j], -gamma, op);
      const double size = sobolev_norm(next[j], -gamma, op);
      res = std::max(res, diff / (1.0 + size));
    }
    sol.nodes = std::move(next);
    sol.iterations = it;
    sol.residual = res;
    if (!std::isfinite(res)) break;
    if (it == 1) first_residual = res;
    if (res <= opts.tol) {
      sol.converged = true;
      break;
    }
    if (res > 100.0 * (first_residual + 1.0)) break;  // Picard is diverging, stop early
  }
  return sol;
}

struct GraphOptions {
  double dt = 0.02;
  double tol = 1e-8;        // Picard tolerance
  int max_iterations = 200;
  double ladder_tol = 1e-7; // window-doubling stop criterion on the graph value
  int max_doublings = 6;
  double T0 = 0.0;          // initial window; 0 picks 5 / lambda_{N+1}^{1+gamma}
  double fixed_T = 0.0;     // skip the ladder and solve once on this window
};

template <typename Scalar>
struct GraphPoint {
  SpectralField<Scalar> value{SpaceKind::full_scalar, 4};  // Q-part of the state at t = 0
  double T_used = 0;
  int ladder_steps = 0;
  int picard_iterations = 0;
  double residual = 0;
  bool converged = false;
};

// slowest decay rate on the high side of the cut
template <typename Scalar>
double graph_tail_rate(const Model<Scalar>& model) {
  const auto& cfg = model.config();
  const std::int64_t min_ell = model.space() == SpaceKind::full_scalar ? 0 : 1;
  const auto cut = cut_eigenvalues(
      ProjectorSpec{cfg.lambda_cut, cfg.window_k, static_cast<int>(model.op().shift)}, min_ell);
  return std::pow(static_cast<double>(cut.lambda_hi), 1.0 + cfg.gamma);
}

template <typename Scalar>
GraphPoint<Scalar> build_graph_point(const Evolution<Scalar>& evo,
                                     const SpectralField<Scalar>& p_plus,
                                     const GraphOptions& opts = {}) {
  const auto& model = evo.model();
  const std::int64_t cut = model.config().lambda_cut;
  const double gamma = model.gamma();

  GraphPoint<Scalar> point;
  BvpOptions bopts;
  bopts.dt = opts.dt;
  bopts.tol = opts.tol;
  bopts.max_iterations = opts.max_iterations;

  if (opts.fixed_T > 0) {
    bopts.T = opts.fixed_T;
    const auto sol = solve_bvp(evo, p_plus, bopts);
    point.value = high_pass(sol.nodes.back(), cut);
    point.T_used = sol.T;
    point.ladder_steps = 0;
    point.picard_iterations = sol.iterations;
    point.residual = sol.residual;
    point.converged = sol.converged;
    return point;
  }

  double T = opts.T0 > 0 ? opts.T0 : 5.0 / graph_tail_rate(model);
  bopts.T = T;
  auto sol = solve_bvp(evo, p_plus, bopts);
  point.value = high_pass(sol.nodes.back(), cut);
  point.T_used = T;
  point.ladder_steps = 1;
  point.picard_iterations = sol.iterations;
  point.residual = sol.residual;
  point.converged = sol.converged;

  for (int d = 1; d <= opts.max_doublings && sol.converged; ++d) {
    bopts.T = 2.0 * point.T_used;
    const auto warm = sol.nodes;
    sol = solve_bvp(evo, p_plus, bopts, &warm);
    if (!sol.converged) break;
    const auto refined = high_pass(sol.nodes.back(), cut);
    const double moved = sobolev_norm(refined - point.value, -gamma, model.op());
    const double scale = 1.0 + static_cast<double>(sobolev_norm(refined, -gamma, model.op()));
    point.value = refined;
    point.T_used = sol.T;
    point.ladder_steps += 1;
    point.picard_iterations += sol.iterations;
    point.residual = sol.residual;
    point.converged = true;
    if (moved <= opts.ladder_tol * scale) return point;
  }
  return point;
}

// right-hand side of the reduced flow at p, given the graph value q there
template <typename Scalar>
SpectralField<Scalar> inertial_form_rhs(const Evolution<Scalar>& evo,
                                        const SpectralField<Scalar>& p,
                                        const SpectralField<Scalar>& q) {
  const auto& model = evo.model();
  const std::int64_t cut = model.config().lambda_cut;
  auto rhs = low_pass(evo.nonlinear_load(p + q), cut);
  auto lin = apply_symbol(p, op_pow(model.op(), 1.0 + model.gamma()));
  rhs -= lin;
  return rhs;
}

// one exponential two-stage step of the reduced flow on the low side
template <typename Scalar>
SpectralField<Scalar> reduced_step(const Evolution<Scalar>& evo, const SpectralField<Scalar>& p,
                                   double dt, const GraphOptions& gopts) {
  const auto& model = evo.model();
  const std::int64_t cut = model.config().lambda_cut;
  const double gamma = model.gamma();
  const OperatorSpec op = model.op();
  auto load_red = [&](const SpectralField<Scalar>& pp) {
    const auto q = build_graph_point(evo, pp, gopts).value;
    return low_pass(evo.nonlinear_load(pp + q), cut);
  };
  auto phi_sym = [op, gamma, dt](double (*phi)(double)) {
    return [op, gamma, dt, phi](std::int64_t ell) {
      const double lam = static_cast<double>(op.shift + ell);
      const double z = lam <= 0.0 ? 0.0 : -dt * std::pow(lam, 1.0 + gamma);
      return dt * phi(z);
    };
  };
  const auto np = load_red(p);
  auto a = apply_symbol(p, heat_symbol(op, gamma, dt)) + apply_symbol(np, phi_sym(&phi1));
  const auto na = load_red(a);
  a += apply_symbol(na - np, phi_sym(&phi2));
  return a;
}

// ---------------------------------------------------------------------------
// probes

template <typename Scalar>
struct TrackingReport {
  std::vector<double> t;
  std::vector<double> distance;  // |Q u(t) - M(P u(t))|_{H^{-gamma}}
  double rate = 0;               // slope of log(distance) against t
};

// distance from a full trajectory to the graph, sampled n_samples times
template <typename Scalar>
TrackingReport<Scalar> tracking_test(const Evolution<Scalar>& evo,
                                     const SpectralField<Scalar>& u0, double t_max, double dt,
                                     int n_samples, const GraphOptions& gopts) {
  if (n_samples < 2) throw std::invalid_argument("tracking_test: need at least two samples");
  const auto& model = evo.model();
  const std::int64_t cut = model.config().lambda_cut;
  const double gamma = model.gamma();

  TrackingReport<Scalar> report;
  const int steps = std::max(1, static_cast<int>(std::lround(t_max / dt)));
  const int stride = std::max(1, steps / n_samples);
  auto u = u0;
  auto sample = [&](double t) {
    const auto p = low_pass(u, cut);
    const auto q = high_pass(u, cut);
    const auto graph = build_graph_point(evo, p, gopts);
    report.t.push_back(t);
    report.distance.push_back(
        static_cast<double>(sobolev_norm(q - graph.value, -gamma, model.op())));
  };
  sample(0.0);
  for (int s = 1; s <= steps; ++s) {
    u = evo.step(u, dt);
    if (s % stride == 0 || s == steps) sample(s * dt);
  }
  std::vector<double> logd;
  std::vector<double> ts;
  for (std::size_t i = 0; i < report.distance.size(); ++i)
    if (report.distance[i] > 0) {
      ts.push_back(report.t[i]);
      logd.push_back(std::log(report.distance[i]));
    }
  report.rate = ts.size() >= 2 ? fit_slope(ts, logd) : 0.0;
  return report;
}

template <typename Scalar>
struct ReducedVsFullReport {
  std::vector<double> t;
  std::vector<double> low_gap;   // |P u_full - p_reduced|_H
  std::vector<double> full_gap;  // |u_full - (p + M(p))|_H
  double max_full_gap = 0;
};

// starts on the graph over p0 and compares the full flow with the reduced one
template <typename Scalar>
ReducedVsFullReport<Scalar> reduced_vs_full_test(const Evolution<Scalar>& evo,
                                                 const SpectralField<Scalar>& p0, double t_max,
                                                 double dt, const GraphOptions& gopts) {
  const auto& model = evo.model();
  const std::int64_t cut = model.config().lambda_cut;

  ReducedVsFullReport<Scalar> report;
  auto p = low_pass(p0, cut);
  auto u = p + build_graph_point(evo, p, gopts).value;
  double t = 0;
  auto record = [&]() {
    const auto graph = build_graph_point(evo, p, gopts);
    const double low = std::sqrt(static_cast<double>(l2_norm_sq(low_pass(u, cut) - p)));
    const double full = std::sqrt(static_cast<double>(l2_norm_sq(u - (p + graph.value))));
    report.t.push_back(t);
    report.low_gap.push_back(low);
    report.full_gap.push_back(full);
    report.max_full_gap = std::max(report.max_full_gap, full);
  };
  record();
  while (t < t_max - 1e-12 * (1.0 + t_max)) {
    const double h = std::min(dt, t_max - t);
    u = evo.step(u, h);
    p = reduced_step(evo, p, h, gopts);
    t += h;
    record();
  }
  return report;
}

// largest secant slope of the graph map over random low-mode pairs
template <typename Scalar>
double graph_lipschitz_estimate(const Evolution<Scalar>& evo, const SpectralField<Scalar>& p0,
                                double radius, int n_pairs, std::uint64_t seed,
                                const GraphOptions& gopts) {
  if (n_pairs < 1) throw std::invalid_argument("graph_lipschitz_estimate: need pairs");
  const auto& model = evo.model();
  const std::int64_t cut = model.config().lambda_cut;
  Rng rng(seed);
  auto draw = [&]() {
    auto f = make_random_field<Scalar>(model.space(), model.grid_m(), rng,
                                       [](std::int64_t) { return 1.0; });
    auto p = low_pass(f, cut);
    const double n = std::sqrt(static_cast<double>(l2_norm_sq(p)));
    if (n > 0) p *= static_cast<Scalar>(radius / n);
    return p;
  };
  double worst = 0;
  for (int s = 0; s < n_pairs; ++s) {
    const auto pa = p0 + draw();
    const auto pb = p0 + draw();
    const double den = std::sqrt(static_cast<double>(l2_norm_sq(pa - pb)));
    if (den == 0) continue;
    const auto qa = build_graph_point(evo, pa, gopts).value;
    const auto qb = build_graph_point(evo, pb, gopts).value;
    const double num = std::sqrt(static_cast<double>(l2_norm_sq(qa - qb)));
    worst = std::max(worst, num / den);
  }
  return worst;
}

template <typename Scalar>
struct SmoothnessReport {
  std::vector<double> h;
  std::vector<double> remainder;  // distance of D_h to the Richardson limit
  double slope = 0;               // log remainder vs log h, > 1 for a C^{1,1} graph
  SpectralField<Scalar> derivative{SpaceKind::full_scalar, 4};  // extrapolated D M(p0) w
};

// directional derivative of the graph map by centered differences at a
// ladder of step sizes, with Richardson extrapolation from the finest pair
template <typename Scalar>
SmoothnessReport<Scalar> smoothness_probe(const Evolution<Scalar>& evo,
                                          const SpectralField<Scalar>& p0,
                                          const SpectralField<Scalar>& w, double h0, int n_h,
                                          const GraphOptions& gopts) {
  if (n_h < 3) throw std::invalid_argument("smoothness_probe: need at least three step sizes");
  if (!(h0 > 0)) throw std::invalid_argument("smoothness_probe: h0 must be positive");
  const auto& model = evo.model();
  const std::int64_t cut = model.config().lambda_cut;
  const auto dir = low_pass(w, cut);

  std::vector<double> hs;
  std::vector<SpectralField<Scalar>> diffs;
  double h = h0;
  for (int i = 0; i < n_h; ++i, h *= 0.5) {
    const auto qp = build_graph_point(evo, p0 + static_cast<Scalar>(h) * dir, gopts).value;
    const auto qm = build_graph_point(evo, p0 - static_cast<Scalar>(h) * dir, gopts).value;
    auto d = qp - qm;
    d *= static_cast<Scalar>(0.5 / h);
    hs.push_back(h);
    diffs.push_back(std::move(d));
  }

  SmoothnessReport<Scalar> report;
  // Richardson from the two finest centered differences kills the h^2 term
  const auto& fine = diffs[diffs.size() - 1];
  const auto& next = diffs[diffs.size() - 2];
  report.derivative = fine + static_cast<Scalar>(1.0 / 3.0) * (fine - next);

  std::vector<double> lh, lr;
  for (std::size_t i = 0; i + 1 < diffs.size(); ++i) {
    const double r = std::sqrt(static_cast<double>(l2_norm_sq(diffs[i] - report.derivative)));
    report.h.push_back(hs[i]);
    report.remainder.push_back(r);
    if (r > 0) {
      lh.push_back(std::log(hs[i]));
      lr.push_back(std::log(r));
    }
  }
  report.slope = lh.size() >= 2 ? fit_slope(lh, lr) : 0.0;
  return report;
}

}  // namespace imlab
