#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "imlab/cone.hpp"

using namespace imlab;
using Field = SpectralField<double>;

namespace {

ModelConfig zero_drift_rde(int grid) {
  ModelConfig c;
  c.family = Family::reaction;
  c.grid_m = grid;
  c.f_coeffs = {0.0};
  c.radius = 2.0;
  c.radius_bar = 2.0;
  c.lambda_cut = 7;
  c.window_k = 1;
  return c;
}

ModelConfig pure_cubic_rde(int grid) {
  ModelConfig c = zero_drift_rde(grid);
  c.f_coeffs = {0.0, 0.0, 0.0, 1.0};
  c.forcing.kind = ForcingSpec::Kind::random;
  c.forcing.seed = 2026;
  c.forcing.amplitude = 0.02;
  c.forcing.decay = 2.0;
  return c;
}

Field small_random(SpaceKind kind, int m, double norm, std::uint64_t seed) {
  Rng rng(seed);
  auto u = make_random_field<double>(kind, m, rng,
                                     [](std::int64_t ell) { return 1.0 / (1.0 + ell * ell); });
  u *= norm / std::sqrt(l2_norm_sq(u));
  return u;
}

}  // namespace

TEST_CASE("cone form on hand-built splits") {
  const OperatorSpec op{0};
  Field v(SpaceKind::mean_zero_scalar, 8);
  v.set_mode_pair(0, {1, 0, 0}, {0.3, 0.0});   // ell = 1, low side
  v.set_mode_pair(0, {2, 2, 1}, {0.0, 0.2});   // ell = 9, high side
  const double gamma = 0.5;
  // each antipodal pair doubles the coefficient mass
  const double expect = 2.0 * 0.04 * std::pow(9.0, -gamma) - 2.0 * 0.09 * std::pow(1.0, -gamma);
  CHECK(cone_value(v, 7, gamma, op) == doctest::Approx(expect).epsilon(1e-14));
  // at gamma = 0 the form is the plain high/low energy difference
  CHECK(cone_value(v, 7, 0.0, op) == doctest::Approx(2.0 * 0.04 - 2.0 * 0.09).epsilon(1e-14));
  // cut above both shells puts everything on the low side
  CHECK(cone_value(v, 9, 0.0, op) == doctest::Approx(-(2.0 * 0.04 + 2.0 * 0.09)).epsilon(1e-14));
}

TEST_CASE("single-mode oracle: half dV/dt is +lambda |v|^2 low, -lambda |v|^2 high") {
  const Model<double> model(zero_drift_rde(16));
  const Field u = model.zero_field();

  struct Probe {
    ModeVec n;
    bool low;
  };
  const Probe probes[] = {
      {{1, 0, 0}, true},   // ell = 1
      {{1, 2, 1}, true},   // ell = 6, top of the low side for cut 7
      {{2, 2, 0}, false},  // ell = 8
      {{3, 1, 1}, false},  // ell = 11
  };
  for (const auto& p : probes) {
    CAPTURE(p.n[0]);
    CAPTURE(p.n[1]);
    CAPTURE(p.n[2]);
    Field v(SpaceKind::full_scalar, 16);
    v.set_mode_pair(0, p.n, {0.4, -0.3});
    const double lam = static_cast<double>(1 + norm_sq(p.n));
    const double nrm = l2_norm_sq(v);
    const auto parts = cone_derivative(model, u, v);
    const double expect = (p.low ? lam : -lam) * nrm;
    CHECK(parts.total == doctest::Approx(expect).epsilon(1e-13));
    CHECK(parts.linear == doctest::Approx(expect).epsilon(1e-13));
    CHECK(parts.local == 0.0);
    CHECK(parts.average == 0.0);
    CHECK(parts.compact == 0.0);
  }

  // conserved-order operator: the same oracle with lambda = |n|^2
  ModelConfig chc = preset_config("ch-classic");
  chc.grid_m = 16;
  chc.f_coeffs = {0.0};
  chc.forcing = ForcingSpec{};
  const Model<double> ch(chc);
  Field w(SpaceKind::mean_zero_scalar, 16);
  w.set_mode_pair(0, {2, 2, 1}, {0.1, 0.2});  // ell = 9 > cut
  const auto parts = cone_derivative(ch, ch.zero_field(), w);
  CHECK(parts.total == doctest::Approx(-9.0 * l2_norm_sq(w)).epsilon(1e-13));
}

TEST_CASE("cone derivative agrees with the metric form of the tangent equation") {
  ModelConfig cfg = preset_config("ch-classic");
  cfg.grid_m = 8;
  cfg.forcing.amplitude = 0.02;
  const Model<double> model(cfg);
  const Evolution<double> evo(model);
  const auto u = small_random(SpaceKind::mean_zero_scalar, 8, 0.3, 3);
  const auto v = small_random(SpaceKind::mean_zero_scalar, 8, 1.0, 5);

  // v' = -A^{1+gamma} v - A^gamma F'(u) v, then 1/2 dV/dt = (v', Qv - Pv)_{H^{-gamma}}
  const double gamma = model.gamma();
  auto vdot = apply_symbol(v, op_pow(model.op(), 1.0 + gamma));
  vdot *= -1.0;
  vdot += evo.load_derivative(u, v);
  const std::int64_t cut = model.config().lambda_cut;
  const auto test = high_pass(v, cut) - low_pass(v, cut);
  const double metric_form = inner_hs(vdot, test, -gamma, model.op());

  const auto parts = cone_derivative(model, u, v);
  CHECK(parts.total == doctest::Approx(metric_form).epsilon(1e-10));
}

TEST_CASE("cone derivative matches finite differences of V along the flow") {
  const Model<double> model(pure_cubic_rde(8));
  const Evolution<double> evo(model);
  const auto u0 = small_random(SpaceKind::full_scalar, 8, 0.3, 7);
  const auto v0 = small_random(SpaceKind::full_scalar, 8, 1.0, 9);
  const std::int64_t cut = model.config().lambda_cut;

  // V((t)) sampled along the discrete tangent flow, centered difference at t1
  auto fd_error = [&](double dt) {
    auto p0 = std::make_pair(u0, v0);
    const auto p1 = evo.step_with_tangent(p0.first, p0.second, dt);
    const auto p2 = evo.step_with_tangent(p1.first, p1.second, dt);
    const double va = cone_value(p0.second, cut, 0.0, model.op());
    const double vc = cone_value(p2.second, cut, 0.0, model.op());
    const double fd = (vc - va) / (2.0 * dt);
    const double exact = 2.0 * cone_derivative(model, p1.first, p1.second).total;
    return std::abs(fd - exact);
  };
  const double e1 = fd_error(0.02);
  const double e2 = fd_error(0.01);
  CHECK(e1 < 0.1);
  const double ratio = e1 / e2;
  CHECK(ratio > 2.8);
  CHECK(ratio < 5.5);
}

TEST_CASE("strong cone inequality holds along pure-cubic trajectories") {
  const Model<double> model(pure_cubic_rde(16));
  const Evolution<double> evo(model);
  const double L = 0.2;

  const auto u0 = small_random(SpaceKind::full_scalar, 16, 0.2, 11);
  const auto v0 = small_random(SpaceKind::full_scalar, 16, 1.0, 13);

  const auto rep = strong_cone_check(model, u0, v0, L);
  CHECK(rep.alpha_gap == doctest::Approx(8.0).epsilon(1e-12));  // (7 + 9) / 2
  CHECK(rep.mu == doctest::Approx(1.0 - L).epsilon(1e-12));
  CHECK(rep.satisfied);
  // the decomposition recombines exactly
  const auto& p = rep.parts;
  CHECK(p.total ==
        doctest::Approx(p.linear + p.local + p.average + p.average_drift + p.cutoff_drift +
                        p.compact).epsilon(1e-12));

  const auto probe = cone_trajectory_probe(evo, u0, v0, L, 0.2, 0.01);
  CHECK(probe.inequality_held);
  CHECK(probe.first_violation == -1);
  CHECK(probe.invariance_held);
  REQUIRE(probe.t.size() >= 20);
  for (double m : probe.margin) CHECK(m > 0.0);

  // an impossible slack demand flags immediately, exercising the failure path
  const auto strict = cone_trajectory_probe(evo, u0, v0, L, 0.02, 0.01, -1e9);
  CHECK_FALSE(strict.inequality_held);
  CHECK(strict.first_violation == 0);
}

TEST_CASE("cone invariance and high-mode squeezing along trajectories") {
  const Model<double> model(pure_cubic_rde(16));
  const Evolution<double> evo(model);
  const double L = 0.2;
  const auto u0 = small_random(SpaceKind::full_scalar, 16, 0.2, 17);

  // start inside the cone: pure low mode
  Field v_in(SpaceKind::full_scalar, 16);
  v_in.set_mode_pair(0, {1, 1, 0}, {0.5, 0.0});
  const auto inside = cone_trajectory_probe(evo, u0, v_in, L, 0.2, 0.01);
  CHECK(inside.inequality_held);
  CHECK(inside.invariance_held);
  CHECK(inside.v_value.front() < 0.0);
  CHECK(inside.v_value.back() < 0.0);

  // start outside: pure high mode; it must be squeezed at the gap rate
  Field v_out(SpaceKind::full_scalar, 16);
  v_out.set_mode_pair(0, {2, 2, 1}, {0.5, 0.0});  // lambda = 10
  const auto outside = cone_trajectory_probe(evo, u0, v_out, L, 0.2, 0.01);
  CHECK(outside.inequality_held);
  CHECK(outside.v_norm_sq.back() < 0.05 * outside.v_norm_sq.front());
}

TEST_CASE("annulus basis is orthonormal and lives in the right space") {
  const auto scalar_basis = annulus_basis<double>(SpaceKind::full_scalar, 16, 7, 1);
  // shells 6 and 8 hold 24 + 12 modes, so 18 antipodal pairs, 2 fields each
  CHECK(scalar_basis.size() == 36);
  for (std::size_t i = 0; i < scalar_basis.size(); ++i) {
    CHECK(hermitian_defect(scalar_basis[i]) == 0.0);
    for (std::size_t j = i; j < scalar_basis.size(); ++j) {
      const double want = i == j ? 1.0 : 0.0;
      CHECK(std::abs(l2_inner(scalar_basis[i], scalar_basis[j]) - want) < 1e-14);
    }
  }

  const auto vec_basis = annulus_basis<double>(SpaceKind::div_free_vector, 16, 7, 1);
  CHECK(vec_basis.size() == 72);  // two polarizations per scalar pair
  for (std::size_t i = 0; i < vec_basis.size(); ++i) {
    auto copy = vec_basis[i];
    leray_project_inplace(copy);
    double moved = 0;
    for (int c = 0; c < 3; ++c)
      moved = std::max(moved, (copy.comp(c) - vec_basis[i].comp(c)).cwiseAbs().maxCoeff());
    CHECK(moved == 0.0);  // already solenoidal
    for (std::size_t j = i; j < vec_basis.size(); ++j) {
      const double want = i == j ? 1.0 : 0.0;
      CHECK(std::abs(l2_inner(vec_basis[i], vec_basis[j]) - want) < 1e-12);
    }
  }

  CHECK_THROWS(annulus_basis<double>(SpaceKind::full_scalar, 16, 1, 1));    // touches mode zero
  CHECK_THROWS(annulus_basis<double>(SpaceKind::full_scalar, 8, 100, 1));   // off the grid
}

TEST_CASE("separated annulus sees a pointwise multiplier as a scalar") {
  ModelConfig cfg = zero_drift_rde(16);
  cfg.f_coeffs = {0.0, -1.0, 0.0, 1.0};
  const Model<double> model(cfg);

  // psi = f'(u) = 3u^2 - 1 with u on mode (3,3,3): psi lives on {0, (6,6,6)},
  // which no annulus difference or sum can reach, so the block is exactly scalar
  const double c = 1e-4;
  Field u(SpaceKind::full_scalar, 16);
  u.set_mode_pair(0, {3, 3, 3}, {0.5 * c * kL2Scale, 0.0});
  const auto clean = sa_deviation(model, u, 7, 1);
  CHECK(clean.dim == 36);
  CHECK(clean.used_svd);
  CHECK(clean.a_eff == doctest::Approx(1.5 * c * c - 1.0).epsilon(1e-10));
  CHECK(clean.delta < 1e-11);
  CHECK(clean.off_diag_max < 1e-12);

  // u on mode (1,0,0) puts psi mass on (2,0,0) = (1,1,2) + (1,-1,-2): detected
  const double cc = 0.02;
  Field u2(SpaceKind::full_scalar, 16);
  u2.set_mode_pair(0, {1, 0, 0}, {0.5 * cc * kL2Scale, 0.0});
  const auto dirty = sa_deviation(model, u2, 7, 1);
  CHECK(dirty.delta > 1e-5);
  CHECK(dirty.delta > 1e4 * clean.delta);

  // the power-iteration estimate agrees with the dense SVD
  const auto powered = sa_deviation(model, u2, 7, 1, 1e-8, 0);
  CHECK_FALSE(powered.used_svd);
  CHECK(powered.delta == doctest::Approx(dirty.delta).epsilon(1e-5));
}

TEST_CASE("advective family has zero effective average and measurable deviation") {
  ModelConfig cfg = preset_config("nse-leray");
  cfg.grid_m = 16;
  const Model<double> model(cfg);
  const auto u = small_random(SpaceKind::div_free_vector, 16, 0.3, 19);

  const auto rep = sa_deviation(model, u, 7, 1);
  CHECK(rep.dim == 72);
  CHECK(rep.a_eff == 0.0);
  CHECK(rep.delta > 0.0);
  CHECK(std::isfinite(rep.delta));
}
