#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>

#include "imlab/evolution.hpp"

using namespace imlab;
using Field = SpectralField<double>;

namespace {

// reaction family with a zero drift: the flow is exactly the damped heat semigroup
ModelConfig heat_like_config(int grid) {
  ModelConfig c;
  c.family = Family::reaction;
  c.grid_m = grid;
  c.f_coeffs = {0.0};
  c.radius = 2.0;
  c.radius_bar = 2.0;
  return c;
}

ModelConfig cubic_config(int grid) {
  ModelConfig c;
  c.family = Family::reaction;
  c.grid_m = grid;
  c.f_coeffs = {0.0, -1.0, 0.0, 1.0};
  c.radius = 2.0;
  c.radius_bar = 2.0;
  c.forcing.kind = ForcingSpec::Kind::modes;
  c.forcing.modes.push_back({{1, 0, 0}, 0, 0.02, 0.0});
  c.forcing.modes.push_back({{0, 1, 1}, 0, 0.0, 0.01});
  return c;
}

Field small_random(SpaceKind kind, int m, double norm, std::uint64_t seed) {
  Rng rng(seed);
  auto u = make_random_field<double>(kind, m, rng,
                                     [](std::int64_t ell) { return 1.0 / (1.0 + ell * ell); });
  u *= norm / std::sqrt(l2_norm_sq(u));
  return u;
}

double max_coeff_diff(const Field& a, const Field& b) {
  double d = 0;
  for (int c = 0; c < a.components(); ++c)
    d = std::max(d, (a.comp(c) - b.comp(c)).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

TEST_CASE("phi functions: values, small-z series, and branch continuity") {
  CHECK(phi1(0.0) == 1.0);
  CHECK(phi2(0.0) == 0.5);
  CHECK(phi1(-1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
  CHECK(phi2(-1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(phi1(-50.0) == doctest::Approx((1.0 - std::exp(-50.0)) / 50.0).epsilon(1e-14));
  CHECK(phi2(-50.0) == doctest::Approx((std::exp(-50.0) - 1.0 + 50.0) / 2500.0).epsilon(1e-14));
  // the series and the direct formula must agree where they hand over
  for (double z : {-0.0999, -0.1001, 0.0999, 0.1001}) {
    const double direct = (std::expm1(z) - z) / (z * z);
    CHECK(phi2(z) == doctest::Approx(direct).epsilon(1e-12));
  }
  CHECK(phi2(-1e-9) == doctest::Approx(0.5 - 1e-9 / 6.0).epsilon(1e-13));
}

TEST_CASE("zero-drift flow reproduces the damped heat semigroup exactly") {
  ModelConfig cfg = heat_like_config(8);
  cfg.forcing.kind = ForcingSpec::Kind::modes;
  cfg.forcing.modes.push_back({{1, 2, 0}, 0, 0.5, -0.25});
  const Model<double> model(cfg);
  const Evolution<double> evo(model);

  const auto u0 = small_random(SpaceKind::full_scalar, 8, 1.0, 3);
  const double T = 0.7;
  const auto uT = evo.integrate(u0, 0.0, T, 0.05);

  // per mode: u(T) = e^{-lambda T} u0 + (1 - e^{-lambda T}) g / lambda
  const auto g = evo.forcing();
  auto expected = apply_symbol(u0, heat_symbol(model.op(), 0.0, T));
  expected += apply_symbol(g, [&](std::int64_t ell) {
    const double lam = static_cast<double>(model.op().shift + ell);
    return (1.0 - std::exp(-lam * T)) / lam;
  });
  CHECK(max_coeff_diff(uT, expected) < 1e-13);

  // tangent of the zero-drift flow is the semigroup itself
  const auto w = small_random(SpaceKind::full_scalar, 8, 1.0, 5);
  auto pair = std::make_pair(u0, w);
  for (int k = 0; k < 6; ++k) pair = evo.step_with_tangent(pair.first, pair.second, 0.05);
  const auto vT = apply_symbol(w, heat_symbol(model.op(), 0.0, 0.3));
  CHECK(max_coeff_diff(pair.second, vT) < 1e-13);
}

TEST_CASE("long zero-drift run settles on the linear equilibrium") {
  ModelConfig cfg = heat_like_config(8);
  cfg.forcing.kind = ForcingSpec::Kind::modes;
  cfg.forcing.modes.push_back({{1, 1, 0}, 0, 0.3, 0.1});
  cfg.forcing.modes.push_back({{2, 0, 1}, 0, -0.2, 0.0});
  const Model<double> model(cfg);
  const Evolution<double> evo(model);

  const auto star = linear_equilibrium(evo.forcing(), model.op());
  CHECK(std::abs(star.coeff(0, {1, 1, 0}) - std::complex<double>(0.1, 0.1 / 3.0)) < 1e-15);

  const auto u0 = small_random(SpaceKind::full_scalar, 8, 2.0, 11);
  const auto uT = evo.integrate(u0, 0.0, 12.0, 0.1);
  CHECK(std::sqrt(l2_norm_sq(uT - star)) < 2e-5);
}

TEST_CASE("cubic reaction flow converges at second order") {
  const Model<double> model(cubic_config(8));
  const Evolution<double> evo(model);
  const auto u0 = small_random(SpaceKind::full_scalar, 8, 0.4, 7);

  const double T = 0.08;
  const auto ref = evo.integrate(u0, 0.0, T, T / 64.0);
  const auto c1 = evo.integrate(u0, 0.0, T, T / 4.0);
  const auto c2 = evo.integrate(u0, 0.0, T, T / 8.0);
  const double e1 = std::sqrt(l2_norm_sq(c1 - ref));
  const double e2 = std::sqrt(l2_norm_sq(c2 - ref));
  CHECK(e1 > 0.0);
  CHECK(e2 > 0.0);
  const double ratio = e1 / e2;
  CHECK(ratio > 3.2);
  CHECK(ratio < 4.8);
}

TEST_CASE("tangent stepper is the derivative of the discrete flow") {
  const Model<double> model(cubic_config(8));
  const Evolution<double> evo(model);
  const auto u0 = small_random(SpaceKind::full_scalar, 8, 0.4, 13);
  const auto w = small_random(SpaceKind::full_scalar, 8, 1.0, 17);

  const double dt = 0.01;
  const int steps = 8;
  auto march = [&](const Field& start) {
    Field u = start;
    for (int k = 0; k < steps; ++k) u = evo.step(u, dt);
    return u;
  };

  auto pair = std::make_pair(u0, w);
  for (int k = 0; k < steps; ++k) pair = evo.step_with_tangent(pair.first, pair.second, dt);
  CHECK(max_coeff_diff(pair.first, march(u0)) == 0.0);

  auto diff_error = [&](double eps) {
    const auto up = march(u0 + eps * w);
    const auto um = march(u0 - eps * w);
    Field fd = up - um;
    fd *= 1.0 / (2.0 * eps);
    return std::sqrt(l2_norm_sq(fd - pair.second));
  };
  const double e1 = diff_error(1e-4);
  const double e2 = diff_error(5e-5);
  CHECK(e1 < 1e-5);
  const double ratio = e1 / e2;
  CHECK(ratio > 3.2);
  CHECK(ratio < 4.8);
}

TEST_CASE("step rejects bad inputs and detects non-finite states") {
  const Model<double> model(cubic_config(8));
  const Evolution<double> evo(model);
  const auto u0 = small_random(SpaceKind::full_scalar, 8, 0.4, 19);
  CHECK_THROWS_AS(evo.step(u0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(evo.step(u0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(evo.integrate(u0, 1.0, 0.5, 0.1), std::invalid_argument);

  auto bad = u0;
  bad.set_coeff(0, {1, 0, 0}, {std::numeric_limits<double>::quiet_NaN(), 0.0});
  CHECK_THROWS_AS(evo.step(bad, 0.01), std::runtime_error);
}

TEST_CASE("suggested step size tracks the stiffest retained mode") {
  const Model<double> rde(cubic_config(16));
  // band limit 7, top eigenvalue 1 + 3*49 = 148, but the cap at 0.1 binds
  CHECK(max_band_eigenvalue(rde.op(), 16) == 148.0);
  CHECK(suggested_dt(rde) == 0.1);

  ModelConfig ch = preset_config("ch6");  // gamma = 2: fourth-power stiffness
  ch.grid_m = 16;
  const Model<double> chm(ch);
  CHECK(suggested_dt(chm) == doctest::Approx(50.0 / std::pow(147.0, 3.0)).epsilon(1e-12));
}

TEST_CASE("conserved-order trajectories keep zero mass and dissipate free energy") {
  ModelConfig cfg = preset_config("ch-classic");
  cfg.grid_m = 8;
  cfg.forcing.amplitude = 0.02;
  const Model<double> model(cfg);
  const Evolution<double> evo(model);
  const auto u0 = small_random(SpaceKind::mean_zero_scalar, 8, 0.3, 23);

  const auto trace = trace_trajectory(evo, u0, 0.01, 1e-4);
  REQUIRE(trace.t.size() > 50);
  REQUIRE(trace.mass.size() == trace.t.size());
  for (double m : trace.mass) CHECK(m == 0.0);

  REQUIRE(trace.lyapunov.size() == trace.t.size());
  for (std::size_t i = 1; i < trace.lyapunov.size(); ++i)
    CHECK(trace.lyapunov[i] <= trace.lyapunov[i - 1] + 1e-10 * (1.0 + std::abs(trace.lyapunov[i - 1])));
  // the state actually moves, so the monotonicity above is not vacuous
  CHECK(trace.lyapunov.front() - trace.lyapunov.back() > 1e-6);
}

TEST_CASE("unforced advective flow dissipates the filtered energy") {
  ModelConfig cfg = preset_config("nse-leray");
  cfg.grid_m = 8;
  cfg.forcing = ForcingSpec{};
  const Model<double> model(cfg);
  const Evolution<double> evo(model);
  const auto u0 = small_random(SpaceKind::div_free_vector, 8, 0.5, 29);

  const auto trace = trace_trajectory(evo, u0, 0.05, 1e-3);
  REQUIRE(trace.filtered_energy.size() == trace.t.size());
  for (std::size_t i = 1; i < trace.filtered_energy.size(); ++i)
    CHECK(trace.filtered_energy[i] <= trace.filtered_energy[i - 1] * (1.0 + 1e-12));
  CHECK(trace.filtered_energy.back() < 0.95 * trace.filtered_energy.front());

  // the mixed variant dissipates it too
  ModelConfig mixed = preset_config("nse-mixed");
  mixed.grid_m = 8;
  mixed.forcing = ForcingSpec{};
  const Model<double> mmodel(mixed);
  const Evolution<double> mevo(mmodel);
  const auto mtrace = trace_trajectory(mevo, u0, 0.05, 1e-3);
  for (std::size_t i = 1; i < mtrace.filtered_energy.size(); ++i)
    CHECK(mtrace.filtered_energy[i] <= mtrace.filtered_energy[i - 1] * (1.0 + 1e-12));
}

TEST_CASE("borderline data smooths into H^2 with the expected rate") {
  ModelConfig cfg = heat_like_config(16);
  const Model<double> model(cfg);
  const Evolution<double> evo(model);

  const auto u0 = make_borderline_state<double>(SpaceKind::full_scalar, 16, model.op(), 0.0,
                                                1.0, 31);
  CHECK(std::abs(std::sqrt(l2_norm_sq(u0)) - 1.0) < 1e-12);
  // reproducible
  const auto u0b = make_borderline_state<double>(SpaceKind::full_scalar, 16, model.op(), 0.0,
                                                 1.0, 31);
  CHECK(max_coeff_diff(u0, u0b) == 0.0);

  const auto trace = trace_trajectory(evo, u0, 5e-3, 2.5e-4);
  const double slope = loglog_slope(trace.t, trace.h2_norm, 2.4e-4, 5.1e-3);
  CHECK(slope > -1.15);
  CHECK(slope < 0.0);
  // the H^2 norm should genuinely fall while the H norm stays comparable
  CHECK(trace.h2_norm.back() < 0.8 * trace.h2_norm.front());
  CHECK(trace.h_norm.back() > 0.5 * trace.h_norm.front());
}

TEST_CASE("pair separation contracts at the exact linear rate for zero drift") {
  ModelConfig cfg = heat_like_config(8);
  const Model<double> model(cfg);
  const Evolution<double> evo(model);
  const auto u0 = small_random(SpaceKind::full_scalar, 8, 0.5, 37);

  Field w(SpaceKind::full_scalar, 8);
  w.set_mode_pair(0, {1, 0, 0}, {0.5, 0.0});  // lambda = 2
  const auto sep = pair_separation(evo, u0, w, 1e-3, 0.1, 0.01);
  REQUIRE(sep.t.size() == 11);
  for (std::size_t i = 0; i < sep.t.size(); ++i) {
    const double expect = sep.h_gap[0] * std::exp(-2.0 * sep.t[i]);
    CHECK(sep.h_gap[i] == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("slope fitting utilities") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  std::vector<double> y{3.0, 5.0, 7.0, 9.0};
  CHECK(fit_slope(x, y) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(fit_slope({1.0}, {2.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_slope({1.0, 1.0}, {2.0, 3.0}), std::invalid_argument);

  // y = c t^{-1.5} on a log-log fit
  std::vector<double> t, v;
  for (int k = 1; k <= 20; ++k) {
    t.push_back(0.01 * k);
    v.push_back(2.0 * std::pow(0.01 * k, -1.5));
  }
  CHECK(loglog_slope(t, v, 0.0, 1.0) == doctest::Approx(-1.5).epsilon(1e-12));
}
