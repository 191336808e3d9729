#pragma once
// Time integration and trajectory diagnostics. The stepper is the two-stage
// exponential scheme of Cox and Matthews: with z = -dt lambda^{1+gamma} per
// mode and N(u) = A^gamma (g - F(u)),
//
//   a  = e^z u + dt phi1(z) N(u)
//   u+ = a + dt phi2(z) (N(a) - N(u))
//
// which is exact whenever N is constant along the step and second order
// otherwise. The tangent stepper differentiates this map exactly, so a pair
// (u, v) advances v by the Frechet derivative of the discrete flow, not by a
// separate discretization of the variational equation.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "imlab/model.hpp"
#include "imlab/nonlinearity.hpp"
#include "imlab/spectral_field.hpp"

namespace imlab {

// phi1(z) = (e^z - 1)/z, phi2(z) = (e^z - 1 - z)/z^2, stable for z <= 0
inline double phi1(double z) {
  if (std::abs(z) < 1e-12) return 1.0 + 0.5 * z;
  return std::expm1(z) / z;
}

inline double phi2(double z) {
  if (std::abs(z) < 0.1) {
    // Taylor sum; the direct formula loses half its digits near zero
    double term = 0.5, sum = 0.5;
    for (int k = 3; k <= 11; ++k) {
      term *= z / static_cast<double>(k);
      sum += term;
    }
    return sum;
  }
  return (std::expm1(z) - z) / (z * z);
}

// largest eigenvalue on the active band of an M^3 grid
inline double max_band_eigenvalue(OperatorSpec spec, int grid_m) {
  const std::int64_t b = band_limit(grid_m);
  return static_cast<double>(spec.shift + 3 * b * b);
}

// step size putting the stiffest retained mode at a mild exponential argument
template <typename Scalar>
double suggested_dt(const Model<Scalar>& model) {
  const double lam = max_band_eigenvalue(model.op(), model.grid_m());
  const double stiff = 50.0 / std::pow(lam, 1.0 + model.gamma());
  return std::min(stiff, 0.1);
}

// stationary state of the linear part: A u = g
template <typename Scalar>
SpectralField<Scalar> linear_equilibrium(const SpectralField<Scalar>& g, OperatorSpec spec) {
  return apply_symbol(g, op_pow(spec, -1.0));
}

template <typename Scalar>
class Evolution {
 public:
  using Field = SpectralField<Scalar>;
  using Observer = std::function<void(double, const Field&)>;

  explicit Evolution(const Model<Scalar>& model) : model_(model), g_(model.forcing()) {}

  const Model<Scalar>& model() const { return model_; }
  const Field& forcing() const { return g_; }

  Field nonlinear_load(const Field& u) const { return model_.nonlinear_load(u, g_); }

  Field step(const Field& u, double dt) const {
    require_positive(dt);
    const auto nu = nonlinear_load(u);
    Field a = apply_symbol(u, heat_symbol(model_.op(), model_.gamma(), dt)) +
              apply_symbol(nu, phi_symbol(dt, &phi1, dt));
    const auto na = nonlinear_load(a);
    a += apply_symbol(na - nu, phi_symbol(dt, &phi2, dt));
    check_finite(a, "step");
    return a;
  }

  // advances u and its tangent v; v+ is the exact derivative of the discrete map
  std::pair<Field, Field> step_with_tangent(const Field& u, const Field& v, double dt) const {
    require_positive(dt);
    const auto exp_sym = heat_symbol(model_.op(), model_.gamma(), dt);
    const auto p1 = phi_symbol(dt, &phi1, dt);
    const auto p2 = phi_symbol(dt, &phi2, dt);

    const auto nu = nonlinear_load(u);
    const auto dnu = load_derivative(u, v);
    Field a = apply_symbol(u, exp_sym) + apply_symbol(nu, p1);
    Field da = apply_symbol(v, exp_sym) + apply_symbol(dnu, p1);

    const auto na = nonlinear_load(a);
    const auto dna = load_derivative(a, da);
    a += apply_symbol(na - nu, p2);
    da += apply_symbol(dna - dnu, p2);
    check_finite(a, "step_with_tangent");
    check_finite(da, "step_with_tangent");
    return {std::move(a), std::move(da)};
  }

  // fixed-step march from t0 to t1 (final step shortened to land on t1);
  // the observer sees the initial state and every accepted step
  Field integrate(Field u, double t0, double t1, double dt, const Observer& observer = {}) const {
    require_positive(dt);
    if (t1 < t0) throw std::invalid_argument("integrate: t1 < t0");
    if (observer) observer(t0, u);
    double t = t0;
    while (t < t1 - 1e-12 * (1.0 + std::abs(t1))) {
      const double h = std::min(dt, t1 - t);
      u = step(u, h);
      t += h;
      if (observer) observer(t, u);
    }
    return u;
  }

  // N'(u) v = -A^gamma F'(u) v
  Field load_derivative(const Field& u, const Field& v) const {
    auto dv = model_.F_deriv_parts(u, v).total;
    if (model_.gamma() != 0.0)
      dv = apply_symbol(dv, op_pow(model_.op(), model_.gamma()));
    dv *= Scalar(-1);
    return dv;
  }

 private:
  // symbol scale * phi(-dt lambda^{1+gamma})
  auto phi_symbol(double dt, double (*phi)(double), double scale) const {
    const OperatorSpec spec = model_.op();
    const double gamma = model_.gamma();
    return [spec, gamma, dt, phi, scale](std::int64_t ell) {
      const double lam = static_cast<double>(spec.shift + ell);
      const double z = lam <= 0.0 ? 0.0 : -dt * std::pow(lam, 1.0 + gamma);
      return scale * phi(z);
    };
  }

  static void require_positive(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  }

  static void check_finite(const Field& u, const char* where) {
    for (int c = 0; c < u.components(); ++c)
      if (!u.comp(c).allFinite())
        throw std::runtime_error(std::string(where) + ": state is no longer finite "
                                 "(reduce dt or the forcing amplitude)");
  }

  const Model<Scalar>& model_;
  Field g_;
};

// ---------------------------------------------------------------------------
// trajectory diagnostics

template <typename Scalar>
struct TrajectoryTrace {
  std::vector<double> t;
  std::vector<double> h_norm;        // |u|_H
  std::vector<double> hneg_norm;     // |u|_{H^{-gamma}}
  std::vector<double> h2_norm;       // |u|_{H^2}
  std::vector<double> mass;          // scalar families: mean of u
  std::vector<double> lyapunov;      // conserved-order family: free energy
  std::vector<double> filtered_energy;  // advective family: |filter^{1/2} u|_H^2
  SpectralField<Scalar> final_state{SpaceKind::full_scalar, 4};
};

// free energy E(u) = 1/2 |u|_{H^1}^2 + integral Phi(u) - (g, u), Phi' = f
template <typename Scalar>
double free_energy(const SpectralField<Scalar>& u, const SpectralField<Scalar>& g,
                   const NonlinearitySpec& spec) {
  Polynomial big_phi;
  big_phi.coeffs.assign(spec.f.coeffs.size() + 1, 0.0);
  for (std::size_t k = 0; k < spec.f.coeffs.size(); ++k)
    big_phi.coeffs[k + 1] = spec.f.coeffs[k] / static_cast<double>(k + 1);
  const double quad = 0.5 * sobolev_norm_sq(u, 1.0, spec.op);
  const double bulk = kTwoPiCubed *
      pointwise_mean(u, [&](double y) { return big_phi.eval(y); }, big_phi.degree());
  return quad + bulk - static_cast<double>(l2_inner(g, u));
}

template <typename Scalar>
double filtered_energy_sq(const SpectralField<Scalar>& u, double alpha, double gamma_bar) {
  if (gamma_bar == 0.0) return static_cast<double>(l2_norm_sq(u));
  const auto f = apply_symbol(u, filter_symbol(alpha, 0.5 * gamma_bar));
  return static_cast<double>(l2_norm_sq(f));
}

template <typename Scalar>
TrajectoryTrace<Scalar> trace_trajectory(const Evolution<Scalar>& evo,
                                         const SpectralField<Scalar>& u0, double t_max,
                                         double dt) {
  const auto& model = evo.model();
  const auto spec = model.nonlinearity();
  TrajectoryTrace<Scalar> trace;
  const bool scalar_family = is_scalar_kind(u0.kind());
  auto observer = [&](double t, const SpectralField<Scalar>& u) {
    trace.t.push_back(t);
    trace.h_norm.push_back(std::sqrt(static_cast<double>(l2_norm_sq(u))));
    trace.hneg_norm.push_back(sobolev_norm(u, -model.gamma(), model.op()));
    trace.h2_norm.push_back(sobolev_norm(u, 2.0, model.op()));
    if (scalar_family) trace.mass.push_back(static_cast<double>(mean_value(u)));
    if (model.config().family == Family::cahn_hilliard)
      trace.lyapunov.push_back(free_energy(u, evo.forcing(), spec));
    if (model.config().family == Family::navier_stokes)
      trace.filtered_energy.push_back(filtered_energy_sq(u, spec.alpha_reg, spec.gamma_bar));
  };
  trace.final_state = evo.integrate(u0, 0.0, t_max, dt, observer);
  return trace;
}

// least-squares slope of y against x
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_slope: need two or more matched samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0) throw std::invalid_argument("fit_slope: degenerate abscissae");
  return (n * sxy - sx * sy) / denom;
}

// slope of log(value) vs log(t) over samples with t in [t_lo, t_hi]
inline double loglog_slope(const std::vector<double>& t, const std::vector<double>& value,
                           double t_lo, double t_hi) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t_lo && t[i] <= t_hi && t[i] > 0.0 && value[i] > 0.0) {
      lx.push_back(std::log(t[i]));
      ly.push_back(std::log(value[i]));
    }
  return fit_slope(lx, ly);
}

// initial data on the edge of H: |u_n|^2 proportional to lambda^{-(3/2 - gamma)},
// normalized to |u0|_H = norm; parabolic smoothing must still pull it into H^2
template <typename Scalar>
SpectralField<Scalar> make_borderline_state(SpaceKind kind, int grid_m, OperatorSpec spec,
                                            double gamma, double norm, std::uint64_t seed) {
  Rng rng(seed);
  const double p = 0.5 * (1.5 - gamma);
  auto u = make_random_field<Scalar>(kind, grid_m, rng, [spec, p](std::int64_t ell) {
    const double lam = static_cast<double>(spec.shift + ell);
    if (lam <= 0.0) return 0.0;
    return std::pow(lam, -p);
  });
  const double have = std::sqrt(static_cast<double>(l2_norm_sq(u)));
  if (have > 0.0) u *= static_cast<Scalar>(norm / have);
  return u;
}

// gap between two trajectories started eps apart in direction w, sampled per step
template <typename Scalar>
struct SeparationTrace {
  std::vector<double> t;
  std::vector<double> h_gap;  // |u1 - u2|_H
};

template <typename Scalar>
SeparationTrace<Scalar> pair_separation(const Evolution<Scalar>& evo,
                                        const SpectralField<Scalar>& u0,
                                        const SpectralField<Scalar>& w, double eps,
                                        double t_max, double dt) {
  SeparationTrace<Scalar> out;
  auto u1 = u0;
  auto u2 = u0 + static_cast<Scalar>(eps) * w;
  double t = 0.0;
  out.t.push_back(t);
  out.h_gap.push_back(std::sqrt(static_cast<double>(l2_norm_sq(u2 - u1))));
  while (t < t_max - 1e-12 * (1.0 + t_max)) {
    const double h = std::min(dt, t_max - t);
    u1 = evo.step(u1, h);
    u2 = evo.step(u2, h);
    t += h;
    out.t.push_back(t);
    out.h_gap.push_back(std::sqrt(static_cast<double>(l2_norm_sq(u2 - u1))));
  }
  return out;
}

}  // namespace imlab
