#pragma once
// Truncated nonlinearities for the three model families.
//
// The raw nonlinearity f is prepared for global estimates in three moves:
//  * W clips every coefficient into a decaying box |u_n| <~ C_* lambda^{-s/2}
//    through an odd C^2 plateau function, separately on real and imaginary
//    parts, so W(u) = u exactly while u stays inside the box;
//  * the spatial average a(W(u)) of f'(W(u)) is subtracted from the local
//    part and reinstated as the constant-coefficient term theta(|u|^2) a u,
//    which keeps the oscillation of the multiplier small without changing
//    the vector field near the attractor;
//  * a compact correction T = phi_T(|P_N u|_{H^1}^2) A P_N u with phi_T <= 0,
//    phi_T' <= 0 supplies the strict negativity used by the cone estimates;
//    its derivative satisfies (T'(u) v, v) <= 0 identically.
//
// The advective family skips the averaging and the compact correction; its
// quadratic term is bounded through the coefficient box alone.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "imlab/spectral_field.hpp"

namespace imlab {

enum class Family { reaction, cahn_hilliard, navier_stokes };

// f(y) = sum_j coeffs[j] y^j
struct Polynomial {
  std::vector<double> coeffs;

  double eval(double y) const {
    double acc = 0;
    for (std::size_t j = coeffs.size(); j-- > 0;) acc = acc * y + coeffs[j];
    return acc;
  }
  Polynomial derivative() const {
    Polynomial d;
    for (std::size_t j = 1; j < coeffs.size(); ++j)
      d.coeffs.push_back(static_cast<double>(j) * coeffs[j]);
    return d;
  }
  int degree() const {
    for (std::size_t j = coeffs.size(); j-- > 0;)
      if (coeffs[j] != 0.0) return static_cast<int>(j);
    return 0;
  }
};

struct NonlinearitySpec {
  Family family = Family::reaction;
  SpaceKind space = SpaceKind::full_scalar;
  OperatorSpec op{1};
  Polynomial f{};                // scalar families
  double c_star = 1.0;           // coefficient box scale
  double s_decay = 3.5;          // coefficient box decay exponent
  double radius = 1.0;           // R: energy-norm onset of the compact term
  double radius_bar = 1.0;       // Rbar: H-norm onset of the average cutoff
  std::int64_t lambda_cut = 0;   // N, unshifted cut of P_N
  double gamma = 0.0;            // advective family: inverse-Laplacian power
  double gamma_bar = 0.0;        // advective family: filter power
  double alpha_reg = 1.0;        // advective family: filter length scale
};

// ---------------------------------------------------------------------------
// scalar cutoff profiles (all C^2, built from the quintic smoothstep)

inline double smoothstep_quintic(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

inline double smoothstep_quintic_deriv(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 30.0 * t * t * (1.0 - t) * (1.0 - t);
}

// odd plateau: identity on [-1, 1], saturates at +-2 past |z| = 2, monotone
// quintic bridge in between (p(0)=1, p(1)=2, p'(0)=1, p'(1)=0, p''=0 at both)
inline double plateau_blend(double z) {
  const double a = std::abs(z);
  double v;
  if (a <= 1.0)
    v = a;
  else if (a >= 2.0)
    v = 2.0;
  else {
    const double t = a - 1.0;
    v = 1.0 + t * (1.0 + t * t * (4.0 + t * (-7.0 + 3.0 * t)));
  }
  return z < 0.0 ? -v : v;
}

inline double plateau_blend_deriv(double z) {
  const double a = std::abs(z);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  const double t = a - 1.0;
  return 1.0 + t * t * (12.0 + t * (-28.0 + 15.0 * t));
}

// 1 on [0, y0], 0 past 4 y0, smooth descent in between
inline double theta_cutoff(double y, double y0) {
  if (y0 <= 0.0) throw std::invalid_argument("theta_cutoff: onset must be positive");
  return 1.0 - smoothstep_quintic((y - y0) / (3.0 * y0));
}

inline double theta_cutoff_deriv(double y, double y0) {
  if (y0 <= 0.0) throw std::invalid_argument("theta_cutoff: onset must be positive");
  return -smoothstep_quintic_deriv((y - y0) / (3.0 * y0)) / (3.0 * y0);
}

// 0 on [0, y0], -1/2 past 4 y0; nonpositive and nonincreasing
inline double compact_gain(double y, double y0) {
  if (y0 <= 0.0) throw std::invalid_argument("compact_gain: onset must be positive");
  return -0.5 * smoothstep_quintic((y - y0) / (3.0 * y0));
}

inline double compact_gain_deriv(double y, double y0) {
  if (y0 <= 0.0) throw std::invalid_argument("compact_gain: onset must be positive");
  return -0.5 * smoothstep_quintic_deriv((y - y0) / (3.0 * y0)) / (3.0 * y0);
}

// ---------------------------------------------------------------------------
// coefficient box W

namespace detail {

template <typename Scalar>
double box_scale(const NonlinearitySpec& spec, std::int64_t ell) {
  const double lam = static_cast<double>(spec.op.shift + ell);
  if (lam <= 0.0) return 0.0;  // zero modes are pinned in shift-0 spaces
  return spec.c_star * std::pow(lam, -0.5 * spec.s_decay);
}

}  // namespace detail

// W(u): per mode, per real/imaginary part, b * phi(part / b) with
// b = C_* lambda^{-s/2}
template <typename Scalar>
SpectralField<Scalar> truncate_box(const SpectralField<Scalar>& u,
                                   const NonlinearitySpec& spec) {
  using Cx = std::complex<Scalar>;
  SpectralField<Scalar> out(u.components() == 1 ? u.kind() : SpaceKind::vector3,
                            u.grid_m());
  for_each_band_mode(u.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
    const double b = detail::box_scale<Scalar>(spec, norm_sq(n));
    for (int c = 0; c < u.components(); ++c) {
      const Cx v = u.comp(c)[idx];
      if (b == 0.0) {
        out.comp(c)[idx] = Cx(0, 0);
      } else {
        // parts inside the plateau pass through untouched; routing them
        // through b * phi(part / b) would cost two rounding steps and break
        // the exact-identity contract box_saturation documents
        const double re = v.real();
        const double im = v.imag();
        out.comp(c)[idx] = Cx(std::abs(re) <= b ? re : b * plateau_blend(re / b),
                              std::abs(im) <= b ? im : b * plateau_blend(im / b));
      }
    }
  });
  return out;
}

// directional derivative W'(u) v: phi'(part/b) acts on each part of v
template <typename Scalar>
SpectralField<Scalar> truncate_box_deriv(const SpectralField<Scalar>& u,
                                         const SpectralField<Scalar>& v,
                                         const NonlinearitySpec& spec) {
  using Cx = std::complex<Scalar>;
  if (u.grid_m() != v.grid_m() || u.components() != v.components())
    throw std::invalid_argument("truncate_box_deriv: incompatible fields");
  SpectralField<Scalar> out(v.components() == 1 ? v.kind() : SpaceKind::vector3,
                            v.grid_m());
  for_each_band_mode(u.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
    const double b = detail::box_scale<Scalar>(spec, norm_sq(n));
    for (int c = 0; c < u.components(); ++c) {
      if (b == 0.0) {
        out.comp(c)[idx] = Cx(0, 0);
        continue;
      }
      const Cx uu = u.comp(c)[idx];
      const Cx vv = v.comp(c)[idx];
      out.comp(c)[idx] = Cx(plateau_blend_deriv(uu.real() / b) * vv.real(),
                            plateau_blend_deriv(uu.imag() / b) * vv.imag());
    }
  });
  return out;
}

// sup over modes and parts of lambda^{s/2} |part| / C_*; W is the identity
// exactly while this is <= 1
template <typename Scalar>
double box_saturation(const SpectralField<Scalar>& u, const NonlinearitySpec& spec) {
  double worst = 0;
  for_each_band_mode(u.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
    const double b = detail::box_scale<Scalar>(spec, norm_sq(n));
    for (int c = 0; c < u.components(); ++c) {
      const auto v = u.comp(c)[idx];
      const double m = std::max(std::abs(v.real()), std::abs(v.imag()));
      if (b == 0.0) {
        if (m > 0.0) worst = std::max(worst, std::numeric_limits<double>::infinity());
      } else {
        worst = std::max(worst, m / b);
      }
    }
  });
  return worst;
}

// ---------------------------------------------------------------------------
// pointwise means against the grid quadrature (exact for band-limited data)

template <typename Scalar, typename F>
double pointwise_mean(const SpectralField<Scalar>& u, F&& fn, int degree) {
  const int p = dealias_grid(u.grid_m(), degree);
  const auto phys = to_physical(resample(u, p));
  double acc = 0;
  for (Eigen::Index i = 0; i < phys.comps[0].size(); ++i) acc += fn(phys.comps[0][i]);
  return acc / static_cast<double>(phys.comps[0].size());
}

// mean of fn(u(x)) * v(x)
template <typename Scalar, typename F>
double pointwise_pair_mean(const SpectralField<Scalar>& u, F&& fn,
                           const SpectralField<Scalar>& v, int degree) {
  if (u.grid_m() != v.grid_m())
    throw std::invalid_argument("pointwise_pair_mean: grid mismatch");
  const int p = dealias_grid(u.grid_m(), degree + 1);
  const auto pu = to_physical(resample(u, p));
  const auto pv = to_physical(resample(v, p));
  double acc = 0;
  for (Eigen::Index i = 0; i < pu.comps[0].size(); ++i)
    acc += fn(pu.comps[0][i]) * pv.comps[0][i];
  return acc / static_cast<double>(pu.comps[0].size());
}

// spatial average a(w) = <f'(w)>
template <typename Scalar>
double average_gain(const SpectralField<Scalar>& w, const NonlinearitySpec& spec) {
  const Polynomial fp = spec.f.derivative();
  return pointwise_mean(w, [&fp](double y) { return fp.eval(y); },
                        std::max(fp.degree(), 1));
}

// effective constant in front of the reinstated term, theta(|u|^2) a(W(u))
template <typename Scalar>
double effective_average(const SpectralField<Scalar>& u, const NonlinearitySpec& spec) {
  if (spec.family == Family::navier_stokes) return 0.0;
  const double theta = theta_cutoff(l2_norm_sq(u), spec.radius_bar * spec.radius_bar);
  if (theta == 0.0) return 0.0;
  return theta * average_gain(truncate_box(u, spec), spec);
}

// ---------------------------------------------------------------------------
// compact correction T

template <typename Scalar>
SpectralField<Scalar> compact_correction(const SpectralField<Scalar>& u,
                                         const NonlinearitySpec& spec) {
  const auto pu = low_pass(u, spec.lambda_cut);
  const double energy = sobolev_norm_sq(pu, 1.0, spec.op);
  const double gain = compact_gain(energy, spec.radius * spec.radius);
  if (gain == 0.0) return SpectralField<Scalar>(u.kind(), u.grid_m());
  auto out = apply_symbol(pu, op_pow(spec.op, 1.0));
  out *= static_cast<Scalar>(gain);
  return out;
}

template <typename Scalar>
SpectralField<Scalar> compact_correction_deriv(const SpectralField<Scalar>& u,
                                               const SpectralField<Scalar>& v,
                                               const NonlinearitySpec& spec) {
  const auto pu = low_pass(u, spec.lambda_cut);
  const auto pv = low_pass(v, spec.lambda_cut);
  const double energy = sobolev_norm_sq(pu, 1.0, spec.op);
  const double y0 = spec.radius * spec.radius;
  const double gain = compact_gain(energy, y0);
  const double dgain = compact_gain_deriv(energy, y0);

  auto apu = apply_symbol(pu, op_pow(spec.op, 1.0));
  auto out = apply_symbol(pv, op_pow(spec.op, 1.0));
  out *= static_cast<Scalar>(gain);
  if (dgain != 0.0) {
    const double cross = inner_hs(pu, pv, 1.0, spec.op);
    apu *= static_cast<Scalar>(2.0 * dgain * cross);
    out += apu;
  }
  return out;
}

// ---------------------------------------------------------------------------
// advective bilinear form B(a, b) = Leray (-Lap)^{-gamma} [(a . grad)(filter b)]

template <typename Scalar>
SpectralField<Scalar> advection_bilinear(const SpectralField<Scalar>& a,
                                         const SpectralField<Scalar>& b,
                                         const NonlinearitySpec& spec) {
  if (a.components() != 3 || b.components() != 3)
    throw std::invalid_argument("advection_bilinear: vector fields required");
  const auto w = spec.gamma_bar == 0.0
                     ? b
                     : apply_symbol(b, filter_symbol(spec.alpha_reg, spec.gamma_bar));
  SpectralField<Scalar> adv(SpaceKind::vector3, a.grid_m());
  for (int c = 0; c < 3; ++c) {
    SpectralField<Scalar> acc(SpaceKind::full_scalar, a.grid_m());
    for (int j = 0; j < 3; ++j) {
      acc += pointwise_product(extract_component(a, j),
                               partial_derivative(extract_component(w, c), j));
    }
    adv.comp(c) = acc.comp(0);
  }
  if (spec.gamma != 0.0) adv = apply_symbol(adv, op_pow(OperatorSpec{0}, -spec.gamma));
  return leray_project(adv);
}

// ---------------------------------------------------------------------------
// assembled nonlinearity and its derivative

template <typename Scalar>
SpectralField<Scalar> project_into_space(SpectralField<Scalar> u, SpaceKind space) {
  switch (space) {
    case SpaceKind::full_scalar:
    case SpaceKind::vector3:
      return u;
    case SpaceKind::mean_zero_scalar: {
      SpectralField<Scalar> out(SpaceKind::mean_zero_scalar, u.grid_m());
      out.comp(0) = u.comp(0);
      out.comp(0)[0] = {};
      return out;
    }
    case SpaceKind::div_free_vector:
      return leray_project(std::move(u));
  }
  throw std::logic_error("project_into_space: unreachable");
}

template <typename Scalar>
SpectralField<Scalar> F_truncated(const SpectralField<Scalar>& u,
                                  const NonlinearitySpec& spec) {
  const auto w = truncate_box(u, spec);
  if (spec.family == Family::navier_stokes)
    return project_into_space(advection_bilinear(w, w, spec), spec.space);

  const int deg = std::max(spec.f.degree(), 1);
  auto out = apply_pointwise(w, [&](double y) { return spec.f.eval(y); }, deg);
  const double a = average_gain(w, spec);
  const double theta = theta_cutoff(l2_norm_sq(u), spec.radius_bar * spec.radius_bar);
  out -= w * static_cast<Scalar>(a);
  // the reinstated term lives on u itself, gated by the H-norm cutoff
  if (theta != 0.0) {
    auto reinstated = u;
    reinstated *= static_cast<Scalar>(theta * a);
    out += reinstated;
  }
  out += compact_correction(u, spec);
  return project_into_space(std::move(out), spec.space);
}

// The five pieces of F'(u) v. total is their sum; inside the coefficient box
// (and below both cutoff onsets) it collapses to the plain linearization
// f'(u) v.
template <typename Scalar>
struct FDerivParts {
  SpectralField<Scalar> local;          // (f'(W) - a(W)) W' v
  SpectralField<Scalar> average;        // theta a(W) v
  SpectralField<Scalar> average_drift;  // -<f''(W) W'v> W
  SpectralField<Scalar> cutoff_drift;   // [2 theta' (u,v) a + theta <f''(W) W'v>] u
  SpectralField<Scalar> compact;        // T'(u) v
  SpectralField<Scalar> total;
};

template <typename Scalar>
FDerivParts<Scalar> F_deriv(const SpectralField<Scalar>& u,
                            const SpectralField<Scalar>& v,
                            const NonlinearitySpec& spec) {
  FDerivParts<Scalar> parts;
  const auto w = truncate_box(u, spec);
  const auto dw = truncate_box_deriv(u, v, spec);
  const SpectralField<Scalar> zero_like(spec.space, u.grid_m());

  if (spec.family == Family::navier_stokes) {
    auto lin = advection_bilinear(w, dw, spec) + advection_bilinear(dw, w, spec);
    parts.local = project_into_space(std::move(lin), spec.space);
    parts.average = zero_like;
    parts.average_drift = zero_like;
    parts.cutoff_drift = zero_like;
    parts.compact = zero_like;
    parts.total = parts.local;
    return parts;
  }

  const Polynomial fp = spec.f.derivative();
  const Polynomial fpp = fp.derivative();
  const int deg = std::max(spec.f.degree(), 1);

  const double a = average_gain(w, spec);
  const double norm_sq_u = l2_norm_sq(u);
  const double y0 = spec.radius_bar * spec.radius_bar;
  const double theta = theta_cutoff(norm_sq_u, y0);
  const double dtheta = theta_cutoff_deriv(norm_sq_u, y0);
  // directional derivative of the average: <f''(w) (W'v)>
  const double da = pointwise_pair_mean(
      w, [&](double y) { return fpp.eval(y); }, dw, std::max(fpp.degree(), 1));

  // local: (f'(w) - a) W'v in one dealiased pass of total degree deg, so the
  // super-band harmonics of f'(w) still fold back against W'v
  parts.local = project_into_space(
      pointwise_fn_product(w, [&](double y) { return fp.eval(y) - a; }, dw, deg),
      spec.space);

  parts.average = project_into_space(v * static_cast<Scalar>(theta * a), spec.space);

  parts.average_drift = project_into_space(w * static_cast<Scalar>(-da), spec.space);

  const double cutoff_coeff = 2.0 * dtheta * l2_inner(u, v) * a + theta * da;
  parts.cutoff_drift = project_into_space(u * static_cast<Scalar>(cutoff_coeff), spec.space);

  parts.compact = project_into_space(compact_correction_deriv(u, v, spec), spec.space);

  parts.total = parts.local + parts.average + parts.average_drift +
                parts.cutoff_drift + parts.compact;
  return parts;
}

// Monte-Carlo lower estimate of the Lipschitz constant of F - T on H,
// mixing secant ratios with directional derivatives; T is excluded because
// the cone criteria budget it separately.
template <typename Scalar>
double measure_lipschitz(const NonlinearitySpec& spec, int grid_m, Rng& rng,
                         int samples) {
  NonlinearitySpec probe = spec;
  double worst = 0;
  auto profile = [](std::int64_t ell) { return 1.0 / (1.0 + std::pow(double(ell), 1.4)); };
  auto without_compact = [&](const SpectralField<Scalar>& x) {
    auto fx = F_truncated(x, probe);
    if (probe.family != Family::navier_stokes)
      fx -= project_into_space(compact_correction(x, probe), probe.space);
    return fx;
  };
  for (int i = 0; i < samples; ++i) {
    const double scale_u = std::exp(3.0 * (rng.uniform() - 0.3));
    const double scale_v = std::exp(3.0 * (rng.uniform() - 0.3));
    auto u = make_random_field<Scalar>(spec.space, grid_m, rng, profile);
    auto v = make_random_field<Scalar>(spec.space, grid_m, rng, profile);
    u *= static_cast<Scalar>(scale_u);
    v *= static_cast<Scalar>(scale_v);

    const auto du = without_compact(u) - without_compact(v);
    auto diff = u - v;
    const double dist = std::sqrt(l2_norm_sq(diff));
    if (dist > 1e-12)
      worst = std::max(worst, std::sqrt(l2_norm_sq(du)) / dist);

    auto parts = F_deriv(u, v, probe);
    auto dir = parts.total - parts.compact;
    const double vn = std::sqrt(l2_norm_sq(v));
    if (vn > 1e-12) worst = std::max(worst, std::sqrt(l2_norm_sq(dir)) / vn);
  }
  return worst;
}

}  // namespace imlab
