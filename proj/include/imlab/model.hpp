#pragma once
// Model facade: ties a validated configuration to the phase space, the
// linear operator and the truncated nonlinearity. The evolution written in
// these terms is
//
//   d/dt A^{-gamma} u + A u + F(u) = g
//
// equivalently  d/dt u = -A^{1+gamma} u - A^gamma F(u) + A^gamma g, with
//   reaction family:        A = I - Laplace on scalars, gamma = 0,
//   conserved-order family: A = -Laplace on mean-zero scalars,
//   advective family:       A = -Laplace on solenoidal mean-zero fields,
//                           g already holding the A^{-gamma} of the body force.

#include <cstdint>
#include <stdexcept>

#include "imlab/config.hpp"
#include "imlab/nonlinearity.hpp"
#include "imlab/spectral_field.hpp"

namespace imlab {

template <typename Scalar>
class Model {
 public:
  using Field = SpectralField<Scalar>;

  explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    switch (cfg_.family) {
      case Family::reaction:
        space_ = SpaceKind::full_scalar;
        op_ = OperatorSpec{1};
        break;
      case Family::cahn_hilliard:
        space_ = SpaceKind::mean_zero_scalar;
        op_ = OperatorSpec{0};
        break;
      case Family::navier_stokes:
        space_ = SpaceKind::div_free_vector;
        op_ = OperatorSpec{0};
        break;
    }
    nl_.family = cfg_.family;
    nl_.space = space_;
    nl_.op = op_;
    nl_.f.coeffs = cfg_.f_coeffs;
    nl_.c_star = cfg_.c_star;
    nl_.s_decay = cfg_.s_decay;
    nl_.radius = cfg_.radius;
    nl_.radius_bar = cfg_.radius_bar;
    nl_.lambda_cut = cfg_.lambda_cut;
    nl_.gamma = cfg_.gamma;
    nl_.gamma_bar = cfg_.gamma_bar;
    nl_.alpha_reg = cfg_.alpha_reg;
  }

  const ModelConfig& config() const { return cfg_; }
  SpaceKind space() const { return space_; }
  OperatorSpec op() const { return op_; }
  const NonlinearitySpec& nonlinearity() const { return nl_; }
  double gamma() const { return cfg_.gamma; }
  int grid_m() const { return cfg_.grid_m; }

  Field zero_field() const { return Field(space_, cfg_.grid_m); }

  // the abstract right-hand side g
  Field forcing() const {
    Field g(space_, cfg_.grid_m);
    const auto& fs = cfg_.forcing;
    switch (fs.kind) {
      case ForcingSpec::Kind::none:
        break;
      case ForcingSpec::Kind::modes:
        for (const auto& m : fs.modes) {
          if (m.component < 0 || m.component >= g.components())
            throw std::invalid_argument("forcing: component out of range");
          g.set_mode_pair(m.component, m.n,
                          std::complex<Scalar>(static_cast<Scalar>(m.re),
                                               static_cast<Scalar>(m.im)));
        }
        enforce_constraints(g);
        break;
      case ForcingSpec::Kind::random: {
        Rng rng(fs.seed);
        const double p = fs.decay;
        g = make_random_field<Scalar>(space_, cfg_.grid_m, rng, [p](std::int64_t ell) {
          return std::pow(1.0 + static_cast<double>(ell), -0.5 * p);
        });
        const double norm = std::sqrt(l2_norm_sq(g));
        if (norm > 0.0) g *= static_cast<Scalar>(fs.amplitude / norm);
        break;
      }
    }
    return g;
  }

  Field F(const Field& u) const { return F_truncated(u, nl_); }
  FDerivParts<Scalar> F_deriv_parts(const Field& u, const Field& v) const {
    return F_deriv(u, v, nl_);
  }
  double effective_average(const Field& u) const {
    return imlab::effective_average(u, nl_);
  }

  // right-hand side of the mild form: du/dt = -A^{1+gamma} u + A^gamma (g - F(u))
  Field nonlinear_load(const Field& u, const Field& g) const {
    auto load = g - F(u);
    if (cfg_.gamma != 0.0) load = apply_symbol(load, op_pow(op_, cfg_.gamma));
    return load;
  }

 private:
  ModelConfig cfg_;
  SpaceKind space_ = SpaceKind::full_scalar;
  OperatorSpec op_{1};
  NonlinearitySpec nl_;
};

}  // namespace imlab
