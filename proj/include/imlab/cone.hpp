#pragma once
// The cone form and its evolution along the linearized flow, plus the
// spatial-averaging deviation measurement on an annulus of modes.
//
// For a difference (or tangent) field v and the split P v + Q v at the
// projector cut, the cone form is
//
//   V(v) = |Q v|^2_{H^{-gamma}} - |P v|^2_{H^{-gamma}}
//
// and along d/dt A^{-gamma} v + A v + F'(u) v = 0 its derivative is
//
//   1/2 dV/dt = -( A v + F'(u) v, Q v - P v )_H,
//
// evaluated here term by term. The strong cone inequality asks for
// 1/2 dV/dt + alpha(u) V(v) <= -mu |v|^2_H with alpha(u) combining the cut
// constant of the spectral gap and the effective scalar average of F'(u);
// the absorption of that average into alpha is exact at gamma = 0.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "imlab/evolution.hpp"
#include "imlab/lattice.hpp"
#include "imlab/model.hpp"
#include "imlab/nonlinearity.hpp"
#include "imlab/spectral_field.hpp"

namespace imlab {

template <typename Scalar>
double cone_value(const SpectralField<Scalar>& v, std::int64_t lambda_cut, double gamma,
                  OperatorSpec op) {
  const auto q = high_pass(v, lambda_cut);
  const auto p = low_pass(v, lambda_cut);
  return static_cast<double>(sobolev_norm_sq(q, -gamma, op)) -
         static_cast<double>(sobolev_norm_sq(p, -gamma, op));
}

struct ConeDerivativeParts {
  double linear = 0;         // -(A v, Qv - Pv)
  double local = 0;          // the pointwise multiplier part of F'
  double average = 0;        // the scalar-average part
  double average_drift = 0;  // drift of the average under the truncation
  double cutoff_drift = 0;   // drift of the outer cutoff
  double compact = 0;        // the low-mode compact correction
  double total = 0;          // 1/2 dV/dt
};

template <typename Scalar>
ConeDerivativeParts cone_derivative(const Model<Scalar>& model, const SpectralField<Scalar>& u,
                                    const SpectralField<Scalar>& v) {
  const std::int64_t cut = model.config().lambda_cut;
  const auto test = high_pass(v, cut) - low_pass(v, cut);  // Qv - Pv
  const auto av = apply_symbol(v, op_pow(model.op(), 1.0));
  const auto parts = model.F_deriv_parts(u, v);

  ConeDerivativeParts out;
  out.linear = -static_cast<double>(l2_inner(av, test));
  out.local = -static_cast<double>(l2_inner(parts.local, test));
  out.average = -static_cast<double>(l2_inner(parts.average, test));
  out.average_drift = -static_cast<double>(l2_inner(parts.average_drift, test));
  out.cutoff_drift = -static_cast<double>(l2_inner(parts.cutoff_drift, test));
  out.compact = -static_cast<double>(l2_inner(parts.compact, test));
  out.total = out.linear + out.local + out.average + out.average_drift + out.cutoff_drift +
              out.compact;
  return out;
}

struct StrongConeReport {
  double v_value = 0;    // V(v)
  double v_norm_sq = 0;  // |v|^2_H
  double half_dv = 0;    // 1/2 dV/dt
  double alpha_gap = 0;  // cut constant from the gap condition
  double a_eff = 0;      // effective scalar average at u
  double alpha = 0;      // alpha_gap + a_eff
  double mu = 0;         // gap margin over the Lipschitz budget
  double lhs = 0;        // 1/2 dV/dt + alpha V
  double rhs = 0;        // -mu |v|^2
  double margin = 0;     // rhs - lhs, negative margin past tol is a violation
  bool satisfied = false;
  ConeDerivativeParts parts;
};

// Evaluates the strong cone inequality at one state pair. L is the Lipschitz
// budget the gap must beat; the slack tolerance scales with |v|^2.
template <typename Scalar>
StrongConeReport strong_cone_check(const Model<Scalar>& model, const SpectralField<Scalar>& u,
                                   const SpectralField<Scalar>& v, double L,
                                   double tol = 1e-9) {
  const auto& cfg = model.config();
  const std::int64_t min_ell = model.space() == SpaceKind::full_scalar ? 0 : 1;
  const int shift = static_cast<int>(model.op().shift);
  const auto cut =
      cut_eigenvalues(ProjectorSpec{cfg.lambda_cut, cfg.window_k, shift}, min_ell);
  const auto sg = check_sg_condition(cut.lambda_lo, L, cfg.gamma, shift);

  StrongConeReport rep;
  rep.parts = cone_derivative(model, u, v);
  rep.v_value = cone_value(v, cfg.lambda_cut, cfg.gamma, model.op());
  rep.v_norm_sq = static_cast<double>(l2_norm_sq(v));
  rep.half_dv = rep.parts.total;
  rep.alpha_gap = sg.alpha;
  rep.a_eff = model.effective_average(u);
  rep.alpha = rep.alpha_gap + rep.a_eff;
  rep.mu = sg.mu;
  rep.lhs = rep.half_dv + rep.alpha * rep.v_value;
  rep.rhs = -rep.mu * rep.v_norm_sq;
  rep.margin = rep.rhs - rep.lhs;
  rep.satisfied = rep.lhs <= rep.rhs + tol * (1.0 + rep.v_norm_sq);
  return rep;
}

struct ConeTrajectoryProbe {
  std::vector<double> t;
  std::vector<double> v_value;
  std::vector<double> v_norm_sq;
  std::vector<double> margin;
  bool inequality_held = false;  // every sample satisfied the strong cone inequality
  bool invariance_held = false;  // V <= 0, once reached, was never left
  int first_violation = -1;      // sample index of the first inequality failure
};

// Marches (u, v) with the tangent stepper and scores the strong cone
// inequality at every sample.
template <typename Scalar>
ConeTrajectoryProbe cone_trajectory_probe(const Evolution<Scalar>& evo,
                                          const SpectralField<Scalar>& u0,
                                          const SpectralField<Scalar>& v0, double L,
                                          double t_max, double dt, double tol = 1e-9) {
  ConeTrajectoryProbe probe;
  auto u = u0;
  auto v = v0;
  double t = 0.0;
  bool was_inside = false;
  probe.inequality_held = true;
  probe.invariance_held = true;
  auto score = [&]() {
    const auto rep = strong_cone_check(evo.model(), u, v, L, tol);
    probe.t.push_back(t);
    probe.v_value.push_back(rep.v_value);
    probe.v_norm_sq.push_back(rep.v_norm_sq);
    probe.margin.push_back(rep.margin);
    if (!rep.satisfied && probe.first_violation < 0) {
      probe.first_violation = static_cast<int>(probe.t.size()) - 1;
      probe.inequality_held = false;
    }
    const double slack = tol * (1.0 + rep.v_norm_sq);
    if (rep.v_value <= slack) was_inside = true;
    else if (was_inside) probe.invariance_held = false;
  };
  score();
  while (t < t_max - 1e-12 * (1.0 + t_max)) {
    const double h = std::min(dt, t_max - t);
    auto next = evo.step_with_tangent(u, v, h);
    u = std::move(next.first);
    v = std::move(next.second);
    t += h;
    score();
  }
  return probe;
}

// ---------------------------------------------------------------------------
// spatial-averaging deviation on an annulus

namespace detail {

// real orthonormal pair direction for an antipodal mode pair {n, -n}
template <typename Scalar>
void add_scalar_pair_basis(std::vector<SpectralField<Scalar>>& basis, SpaceKind kind, int m,
                           const ModeVec& n) {
  const Scalar r = static_cast<Scalar>(1.0 / std::sqrt(2.0));
  SpectralField<Scalar> c(kind, m);
  c.set_mode_pair(0, n, {r, 0});
  basis.push_back(std::move(c));
  SpectralField<Scalar> s(kind, m);
  s.set_mode_pair(0, n, {0, -r});
  basis.push_back(std::move(s));
}

// orthonormal real polarization vectors spanning the plane normal to n
inline std::pair<Eigen::Vector3d, Eigen::Vector3d> polarization_pair(const ModeVec& n) {
  const Eigen::Vector3d nv(static_cast<double>(n[0]), static_cast<double>(n[1]),
                           static_cast<double>(n[2]));
  Eigen::Vector3d t = Eigen::Vector3d::UnitX();
  if (std::abs(nv.normalized().dot(t)) > 0.9) t = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d e1 = nv.cross(t).normalized();
  const Eigen::Vector3d e2 = nv.cross(e1).normalized();
  return {e1, e2};
}

template <typename Scalar>
void add_vector_pair_basis(std::vector<SpectralField<Scalar>>& basis, int m, const ModeVec& n) {
  const auto [e1, e2] = polarization_pair(n);
  const Scalar r = static_cast<Scalar>(1.0 / std::sqrt(2.0));
  for (const auto& e : {e1, e2}) {
    SpectralField<Scalar> c(SpaceKind::div_free_vector, m);
    for (int a = 0; a < 3; ++a)
      c.set_mode_pair(a, n, {r * static_cast<Scalar>(e[a]), 0});
    basis.push_back(std::move(c));
    SpectralField<Scalar> s(SpaceKind::div_free_vector, m);
    for (int a = 0; a < 3; ++a)
      s.set_mode_pair(a, n, {0, -r * static_cast<Scalar>(e[a])});
    basis.push_back(std::move(s));
  }
}

}  // namespace detail

// H-orthonormal real basis of the annulus block lambda - k <= |n|^2 <= lambda + k
template <typename Scalar>
std::vector<SpectralField<Scalar>> annulus_basis(SpaceKind kind, int grid_m,
                                                 std::int64_t lambda, std::int64_t k) {
  if (lambda - k < 1)
    throw std::invalid_argument("annulus_basis: window must stay above the zero mode");
  const std::int64_t b = band_limit(grid_m);
  if (lambda + k > 3 * b * b)
    throw std::invalid_argument("annulus_basis: annulus does not fit the grid band");
  std::vector<SpectralField<Scalar>> basis;
  for (const auto& n : annulus(ProjectorSpec{lambda, k, 0})) {
    if (n < ModeVec{0, 0, 0}) continue;  // one basis pair per antipodal mode pair
    if (!in_band(n, grid_m))
      throw std::invalid_argument("annulus_basis: annulus mode outside the grid band");
    if (is_scalar_kind(kind))
      detail::add_scalar_pair_basis(basis, kind, grid_m, n);
    else
      detail::add_vector_pair_basis(basis, grid_m, n);
  }
  if (basis.empty()) throw std::invalid_argument("annulus_basis: empty annulus on this grid");
  return basis;
}

struct DeviationReport {
  int dim = 0;            // annulus block dimension
  double a_eff = 0;       // effective scalar average at u
  double delta = 0;       // || M - a_eff I ||_2 on the block
  double off_diag_max = 0;
  bool used_svd = false;
};

// Measures how far F'(u), compressed to the annulus block, deviates from
// a_eff(u) times the identity. Dense SVD up to svd_dim_limit, power iteration
// above it.
template <typename Scalar>
DeviationReport sa_deviation(const Model<Scalar>& model, const SpectralField<Scalar>& u,
                             std::int64_t lambda, std::int64_t k, double power_tol = 1e-6,
                             int svd_dim_limit = 2000) {
  const auto basis = annulus_basis<Scalar>(model.space(), u.grid_m(), lambda, k);
  const int dim = static_cast<int>(basis.size());

  Eigen::MatrixXd M(dim, dim);
  for (int j = 0; j < dim; ++j) {
    const auto fv = model.F_deriv_parts(u, basis[j]).total;
    for (int i = 0; i < dim; ++i)
      M(i, j) = static_cast<double>(l2_inner(basis[i], fv));
  }

  DeviationReport rep;
  rep.dim = dim;
  rep.a_eff = model.effective_average(u);
  Eigen::MatrixXd B = M - rep.a_eff * Eigen::MatrixXd::Identity(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (i != j) rep.off_diag_max = std::max(rep.off_diag_max, std::abs(M(i, j)));

  if (dim <= svd_dim_limit) {
    rep.used_svd = true;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(B);
    rep.delta = svd.singularValues()(0);
  } else {
    rep.used_svd = false;
    const Eigen::MatrixXd BtB = B.transpose() * B;
    Eigen::VectorXd x = Eigen::VectorXd::Ones(dim).normalized();
    double sigma_sq = 0.0;
    for (int it = 0; it < 500; ++it) {
      Eigen::VectorXd y = BtB * x;
      const double norm = y.norm();
      if (norm == 0.0) { sigma_sq = 0.0; break; }
      y /= norm;
      const double next = y.dot(BtB * y);
      const bool done = std::abs(next - sigma_sq) <= power_tol * std::max(1.0, next);
      sigma_sq = next;
      x = std::move(y);
      if (done) break;
    }
    rep.delta = std::sqrt(std::max(0.0, sigma_sq));
  }
  return rep;
}

}  // namespace imlab
