#pragma once
// Band-limited spectral fields on the 3-torus (-pi, pi)^3.
//
// Conventions used by everything downstream:
//  * grid points x_j = -pi + 2*pi*j/m per axis, j = 0..m-1;
//  * coefficients are stored against the orthonormal basis
//    e^{i n.x} / (2 pi)^{3/2}, so the squared L^2 norm is the plain
//    coefficient sum. The Fourier-series coefficient c_n of u = sum c_n e^{inx}
//    relates by u_hat_n = (2 pi)^{3/2} c_n;
//  * storage is the full m^3 complex cube per component in DFT layout
//    (frequency f lives at index f mod m), with Hermitian symmetry enforced;
//  * the active band is |n_a| <= m/2 - 1 per axis. Nyquist planes stay zero,
//    which keeps every represented mode sign-unambiguous;
//  * multiplier symbols are functions of the unshifted integer |n|^2; the
//    operator eigenvalue is shift + |n|^2 via OperatorSpec.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "imlab/fft3.hpp"
#include "imlab/lattice.hpp"
#include "imlab/rng.hpp"

namespace imlab {

inline constexpr double kL2Scale = 15.749609945722419;       // (2 pi)^{3/2}
inline constexpr double kTwoPiCubed = kL2Scale * kL2Scale;   // (2 pi)^3

enum class SpaceKind {
  full_scalar,       // scalar, mean allowed
  mean_zero_scalar,  // scalar, zero mode pinned to 0
  div_free_vector,   // 3 components, divergence-free, zero mode pinned to 0
  vector3            // 3 unconstrained components (intermediate quantities)
};

inline constexpr int component_count(SpaceKind kind) {
  return (kind == SpaceKind::full_scalar || kind == SpaceKind::mean_zero_scalar) ? 1 : 3;
}

inline constexpr bool is_scalar_kind(SpaceKind kind) { return component_count(kind) == 1; }

// Operator A acts mode-wise with eigenvalue shift + |n|^2. The reaction
// family uses shift 1 (A = I - Laplace); the mean-zero families use shift 0.
struct OperatorSpec {
  std::int64_t shift = 0;
};

inline int band_limit(int grid_m) { return grid_m / 2 - 1; }

inline bool in_band(const ModeVec& n, int grid_m) {
  const std::int64_t b = band_limit(grid_m);
  return std::abs(n[0]) <= b && std::abs(n[1]) <= b && std::abs(n[2]) <= b;
}

inline Eigen::Index mode_index(const ModeVec& n, int grid_m) {
  auto wrap = [grid_m](std::int64_t f) {
    return static_cast<Eigen::Index>(f >= 0 ? f : f + grid_m);
  };
  return (wrap(n[0]) * grid_m + wrap(n[1])) * grid_m + wrap(n[2]);
}

// Visits every active mode (all |n_a| <= m/2 - 1) as fn(n, linear_index).
template <typename F>
void for_each_band_mode(int grid_m, F&& fn) {
  const std::int64_t b = band_limit(grid_m);
  for (std::int64_t q = -b; q <= b; ++q)
    for (std::int64_t l = -b; l <= b; ++l)
      for (std::int64_t m = -b; m <= b; ++m) {
        const ModeVec n{q, l, m};
        fn(n, mode_index(n, grid_m));
      }
}

template <typename Scalar>
class SpectralField {
 public:
  using Complex = std::complex<Scalar>;
  using CoeffVec = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

  SpectralField() = default;

  SpectralField(SpaceKind kind, int grid_m) : kind_(kind), grid_m_(grid_m) {
    if (grid_m < 4 || grid_m % 2 != 0)
      throw std::invalid_argument("SpectralField: grid must be even and at least 4");
    const Eigen::Index sz = static_cast<Eigen::Index>(grid_m) * grid_m * grid_m;
    comps_.resize(component_count(kind));
    for (auto& c : comps_) c = CoeffVec::Zero(sz);
  }

  SpaceKind kind() const { return kind_; }
  int grid_m() const { return grid_m_; }
  int components() const { return static_cast<int>(comps_.size()); }
  bool empty() const { return comps_.empty(); }

  CoeffVec& comp(int c) { return comps_.at(c); }
  const CoeffVec& comp(int c) const { return comps_.at(c); }

  // coefficient u_hat_n; zero outside the active band
  Complex coeff(int c, const ModeVec& n) const {
    if (!in_band(n, grid_m_)) return Complex(0, 0);
    return comps_.at(c)[mode_index(n, grid_m_)];
  }

  void set_coeff(int c, const ModeVec& n, Complex v) {
    if (!in_band(n, grid_m_))
      throw std::invalid_argument("set_coeff: mode outside the active band");
    comps_.at(c)[mode_index(n, grid_m_)] = v;
  }

  // pins u_hat_n = v and u_hat_{-n} = conj(v) in one call
  void set_mode_pair(int c, const ModeVec& n, Complex v) {
    set_coeff(c, n, v);
    const ModeVec neg{-n[0], -n[1], -n[2]};
    if (neg != n) set_coeff(c, neg, std::conj(v));
  }

  void set_zero() {
    for (auto& c : comps_) c.setZero();
  }

  SpectralField& operator+=(const SpectralField& o) {
    require_compatible(o);
    for (int c = 0; c < components(); ++c) comps_[c] += o.comps_[c];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    require_compatible(o);
    for (int c = 0; c < components(); ++c) comps_[c] -= o.comps_[c];
    return *this;
  }
  SpectralField& operator*=(Scalar a) {
    for (auto& c : comps_) c *= a;
    return *this;
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(Scalar s, SpectralField a) { return a *= s; }
  friend SpectralField operator*(SpectralField a, Scalar s) { return a *= s; }

 private:
  void require_compatible(const SpectralField& o) const {
    if (grid_m_ != o.grid_m_ || components() != o.components())
      throw std::invalid_argument("SpectralField: incompatible operands");
  }

  SpaceKind kind_ = SpaceKind::full_scalar;
  int grid_m_ = 0;
  std::vector<CoeffVec> comps_;
};

template <typename Scalar>
struct PhysicalField {
  int grid_m = 0;
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> comps;
};

namespace detail {

// per-axis parity sign (-1)^{f(i)} for the phase between DFT bins and the
// centered grid x_j = -pi + 2 pi j / m
inline std::vector<double> axis_signs(int m) {
  std::vector<double> s(m);
  for (int i = 0; i < m; ++i) {
    const int f = i <= m / 2 ? i : i - m;
    s[i] = (f & 1) ? -1.0 : 1.0;
  }
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// physical <-> spectral

template <typename Scalar>
PhysicalField<Scalar> to_physical(const SpectralField<Scalar>& u) {
  using Cx = std::complex<Scalar>;
  const int m = u.grid_m();
  const auto sign = detail::axis_signs(m);
  const Scalar inv_scale = static_cast<Scalar>(1.0 / kL2Scale);

  PhysicalField<Scalar> out;
  out.grid_m = m;
  out.comps.resize(u.components());
  Eigen::Matrix<Cx, Eigen::Dynamic, 1> cube(static_cast<Eigen::Index>(m) * m * m);
  for (int c = 0; c < u.components(); ++c) {
    cube.setZero();
    Eigen::Index idx = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k, ++idx) {
          const Cx v = u.comp(c)[idx];
          if (v != Cx(0, 0))
            cube[idx] = v * static_cast<Scalar>(sign[i] * sign[j] * sign[k]) * inv_scale;
        }
    dft3_unscaled(cube, m, /*inverse=*/true);
    out.comps[c] = cube.real();
  }
  return out;
}

template <typename Scalar>
void enforce_constraints(SpectralField<Scalar>& u);

template <typename Scalar>
SpectralField<Scalar> from_physical(SpaceKind kind, const PhysicalField<Scalar>& values) {
  using Cx = std::complex<Scalar>;
  const int m = values.grid_m;
  if (static_cast<int>(values.comps.size()) != component_count(kind))
    throw std::invalid_argument("from_physical: component count does not match kind");

  SpectralField<Scalar> u(kind, m);
  const auto sign = detail::axis_signs(m);
  const Scalar scale = static_cast<Scalar>(kL2Scale) /
                       static_cast<Scalar>(static_cast<double>(m) * m * m);
  Eigen::Matrix<Cx, Eigen::Dynamic, 1> cube(static_cast<Eigen::Index>(m) * m * m);
  for (int c = 0; c < component_count(kind); ++c) {
    if (values.comps[c].size() != cube.size())
      throw std::invalid_argument("from_physical: value size does not match grid");
    cube = values.comps[c].template cast<Cx>();
    dft3_unscaled(cube, m, /*inverse=*/false);
    auto& dst = u.comp(c);
    dst.setZero();
    for_each_band_mode(m, [&](const ModeVec& n, Eigen::Index idx) {
      const double s = sign[static_cast<int>(n[0] < 0 ? n[0] + m : n[0])] *
                       sign[static_cast<int>(n[1] < 0 ? n[1] + m : n[1])] *
                       sign[static_cast<int>(n[2] < 0 ? n[2] + m : n[2])];
      dst[idx] = cube[idx] * static_cast<Scalar>(s) * scale;
    });
  }
  enforce_constraints(u);
  return u;
}

// ---------------------------------------------------------------------------
// constraints

template <typename Scalar>
Scalar hermitian_defect(const SpectralField<Scalar>& u) {
  Scalar worst = 0;
  for (int c = 0; c < u.components(); ++c) {
    for_each_band_mode(u.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
      const ModeVec neg{-n[0], -n[1], -n[2]};
      const auto d = u.comp(c)[idx] - std::conj(u.comp(c)[mode_index(neg, u.grid_m())]);
      worst = std::max(worst, std::abs(d));
    });
  }
  return worst;
}

template <typename Scalar>
void leray_project_inplace(SpectralField<Scalar>& v) {
  if (v.components() != 3)
    throw std::invalid_argument("leray_project: needs a 3-component field");
  using Cx = std::complex<Scalar>;
  for_each_band_mode(v.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
    const std::int64_t ns = norm_sq(n);
    if (ns == 0) {
      for (int c = 0; c < 3; ++c) v.comp(c)[idx] = Cx(0, 0);
      return;
    }
    Cx dot(0, 0);
    for (int c = 0; c < 3; ++c) dot += static_cast<Scalar>(n[c]) * v.comp(c)[idx];
    dot /= static_cast<Scalar>(ns);
    for (int c = 0; c < 3; ++c) v.comp(c)[idx] -= static_cast<Scalar>(n[c]) * dot;
  });
}

// Nyquist planes cleared, Hermitian symmetry restored, then the kind's own
// constraint (zero mean, divergence-free).
template <typename Scalar>
void enforce_constraints(SpectralField<Scalar>& u) {
  using Cx = std::complex<Scalar>;
  const int m = u.grid_m();
  const int ny = m / 2;
  for (int c = 0; c < u.components(); ++c) {
    auto& a = u.comp(c);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
          if (i == ny || j == ny || k == ny)
            a[(static_cast<Eigen::Index>(i) * m + j) * m + k] = Cx(0, 0);
    for_each_band_mode(m, [&](const ModeVec& n, Eigen::Index idx) {
      const ModeVec neg{-n[0], -n[1], -n[2]};
      if (n < neg) return;  // visit each pair once
      const Eigen::Index jdx = mode_index(neg, m);
      if (idx == jdx) {
        a[idx] = Cx(a[idx].real(), 0);
      } else {
        const Cx mean = (a[idx] + std::conj(a[jdx])) * static_cast<Scalar>(0.5);
        a[idx] = mean;
        a[jdx] = std::conj(mean);
      }
    });
  }
  if (u.kind() == SpaceKind::mean_zero_scalar) {
    u.comp(0)[0] = Cx(0, 0);
  } else if (u.kind() == SpaceKind::div_free_vector) {
    leray_project_inplace(u);
  }
}

template <typename Scalar>
SpectralField<Scalar> leray_project(SpectralField<Scalar> v) {
  leray_project_inplace(v);
  SpectralField<Scalar> out(SpaceKind::div_free_vector, v.grid_m());
  for (int c = 0; c < 3; ++c) out.comp(c) = v.comp(c);
  return out;
}

// ---------------------------------------------------------------------------
// multipliers, norms, projectors

// sym(ell) is evaluated on the unshifted integer |n|^2
template <typename Scalar, typename Sym>
SpectralField<Scalar> apply_symbol(const SpectralField<Scalar>& u, Sym&& sym) {
  SpectralField<Scalar> out = u;
  std::vector<char> seen;
  std::vector<Scalar> cached;
  for_each_band_mode(u.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
    const std::int64_t ns = norm_sq(n);
    if (static_cast<std::size_t>(ns) >= seen.size()) {
      seen.resize(ns + 1, 0);
      cached.resize(ns + 1, Scalar(0));
    }
    if (!seen[ns]) {
      cached[ns] = static_cast<Scalar>(sym(ns));
      seen[ns] = 1;
    }
    for (int c = 0; c < out.components(); ++c) out.comp(c)[idx] *= cached[ns];
  });
  return out;
}

// (shift + |n|^2)^p; a vanishing eigenvalue maps to 0 (those coefficients are
// pinned to zero in every space that uses shift 0)
inline auto op_pow(OperatorSpec spec, double p) {
  return [spec, p](std::int64_t ell) {
    const double lam = static_cast<double>(spec.shift + ell);
    if (lam <= 0.0) return 0.0;
    return std::pow(lam, p);
  };
}

inline auto heat_symbol(OperatorSpec spec, double gamma, double t) {
  return [spec, gamma, t](std::int64_t ell) {
    const double lam = static_cast<double>(spec.shift + ell);
    if (lam <= 0.0) return 1.0;
    return std::exp(-t * std::pow(lam, 1.0 + gamma));
  };
}

// symbol of (1 + alpha |n|^2)^{-p}, the smoothing filter of the regularized
// momentum equation
inline auto filter_symbol(double alpha, double p) {
  return [alpha, p](std::int64_t ell) {
    return std::pow(1.0 + alpha * static_cast<double>(ell), -p);
  };
}

template <typename Scalar>
Scalar l2_inner(const SpectralField<Scalar>& u, const SpectralField<Scalar>& v) {
  if (u.grid_m() != v.grid_m() || u.components() != v.components())
    throw std::invalid_argument("l2_inner: incompatible fields");
  Scalar acc = 0;
  for (int c = 0; c < u.components(); ++c)
    acc += u.comp(c).dot(v.comp(c)).real();  // Eigen's dot conjugates the left factor
  return acc;
}

template <typename Scalar>
Scalar l2_norm_sq(const SpectralField<Scalar>& u) {
  Scalar acc = 0;
  for (int c = 0; c < u.components(); ++c) acc += u.comp(c).squaredNorm();
  return acc;
}

// H^s inner product sum lambda^s Re(u conj(v)) with lambda = shift + |n|^2.
// Modes with lambda = 0 are skipped; every space with shift 0 pins them to 0.
template <typename Scalar>
Scalar inner_hs(const SpectralField<Scalar>& u, const SpectralField<Scalar>& v,
                double s, OperatorSpec spec) {
  if (u.grid_m() != v.grid_m() || u.components() != v.components())
    throw std::invalid_argument("inner_hs: incompatible fields");
  if (s == 0.0 && spec.shift > 0) return l2_inner(u, v);
  double acc = 0;
  std::vector<char> seen;
  std::vector<double> cached;
  for_each_band_mode(u.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
    const std::int64_t ns = norm_sq(n);
    const double lam = static_cast<double>(spec.shift + ns);
    if (lam <= 0.0) return;
    if (static_cast<std::size_t>(ns) >= seen.size()) {
      seen.resize(ns + 1, 0);
      cached.resize(ns + 1, 0.0);
    }
    if (!seen[ns]) {
      cached[ns] = std::pow(lam, s);
      seen[ns] = 1;
    }
    for (int c = 0; c < u.components(); ++c) {
      const auto p = u.comp(c)[idx] * std::conj(v.comp(c)[idx]);
      acc += cached[ns] * static_cast<double>(p.real());
    }
  });
  return static_cast<Scalar>(acc);
}

template <typename Scalar>
Scalar sobolev_norm_sq(const SpectralField<Scalar>& u, double s, OperatorSpec spec) {
  return inner_hs(u, u, s, spec);
}

template <typename Scalar>
Scalar sobolev_norm(const SpectralField<Scalar>& u, double s, OperatorSpec spec) {
  return std::sqrt(std::max<Scalar>(0, sobolev_norm_sq(u, s, spec)));
}

// low pass keeps unshifted |n|^2 <= lambda_cut, high pass keeps the rest
template <typename Scalar>
SpectralField<Scalar> low_pass(const SpectralField<Scalar>& u, std::int64_t lambda_cut) {
  SpectralField<Scalar> out = u;
  for_each_band_mode(u.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
    if (norm_sq(n) > lambda_cut)
      for (int c = 0; c < out.components(); ++c) out.comp(c)[idx] = {};
  });
  return out;
}

template <typename Scalar>
SpectralField<Scalar> high_pass(const SpectralField<Scalar>& u, std::int64_t lambda_cut) {
  SpectralField<Scalar> out = u;
  for_each_band_mode(u.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
    if (norm_sq(n) <= lambda_cut)
      for (int c = 0; c < out.components(); ++c) out.comp(c)[idx] = {};
  });
  return out;
}

// l^1 mass of coefficients above the ball |n| <= r; divided by (2 pi)^{3/2}
// this bounds the sup norm of the tail
template <typename Scalar>
Scalar tail_coeff_l1(const SpectralField<Scalar>& u, std::int64_t r) {
  Scalar acc = 0;
  for_each_band_mode(u.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
    if (norm_sq(n) > r * r)
      for (int c = 0; c < u.components(); ++c) acc += std::abs(u.comp(c)[idx]);
  });
  return acc;
}

template <typename Scalar>
Scalar tail_linf_bound(const SpectralField<Scalar>& u, std::int64_t r) {
  return tail_coeff_l1(u, r) / static_cast<Scalar>(kL2Scale);
}

// ---------------------------------------------------------------------------
// resampling and pointwise (dealiased) operations

template <typename Scalar>
SpectralField<Scalar> resample(const SpectralField<Scalar>& u, int new_m) {
  SpectralField<Scalar> out(u.kind(), new_m);
  const int b = std::min(band_limit(u.grid_m()), band_limit(new_m));
  for (std::int64_t q = -b; q <= b; ++q)
    for (std::int64_t l = -b; l <= b; ++l)
      for (std::int64_t m = -b; m <= b; ++m) {
        const ModeVec n{q, l, m};
        const Eigen::Index src = mode_index(n, u.grid_m());
        const Eigen::Index dst = mode_index(n, new_m);
        for (int c = 0; c < u.components(); ++c) out.comp(c)[dst] = u.comp(c)[src];
      }
  return out;
}

// smallest even grid with no aliasing for products of total degree `degree`
// of fields banded at m/2 - 1
inline int dealias_grid(int grid_m, int degree) {
  const int need = (degree + 1) * band_limit(grid_m) + 1;
  int p = std::max(grid_m, need);
  if (p % 2 != 0) ++p;
  return p;
}

// pointwise product of two scalar fields, computed on a padded grid so the
// retained band is aliasing-free; result kind is full_scalar
template <typename Scalar>
SpectralField<Scalar> pointwise_product(const SpectralField<Scalar>& u,
                                        const SpectralField<Scalar>& v) {
  if (!is_scalar_kind(u.kind()) || !is_scalar_kind(v.kind()))
    throw std::invalid_argument("pointwise_product: scalar fields only");
  if (u.grid_m() != v.grid_m())
    throw std::invalid_argument("pointwise_product: grid mismatch");
  const int p = dealias_grid(u.grid_m(), 2);
  const auto pu = to_physical(resample(u, p));
  const auto pv = to_physical(resample(v, p));
  PhysicalField<Scalar> prod;
  prod.grid_m = p;
  prod.comps.push_back(pu.comps[0].cwiseProduct(pv.comps[0]));
  return resample(from_physical(SpaceKind::full_scalar, prod), u.grid_m());
}

// fn(u(x)) * v(x) in a single dealiased pass; degree is the total polynomial
// degree of the product in its band-limited inputs. Composing apply_pointwise
// with pointwise_product instead would truncate fn(u) to the band first and
// lose the fold-back of its super-band harmonics against v.
template <typename Scalar, typename F>
SpectralField<Scalar> pointwise_fn_product(const SpectralField<Scalar>& u, F&& fn,
                                           const SpectralField<Scalar>& v, int degree) {
  if (!is_scalar_kind(u.kind()) || !is_scalar_kind(v.kind()))
    throw std::invalid_argument("pointwise_fn_product: scalar fields only");
  if (u.grid_m() != v.grid_m())
    throw std::invalid_argument("pointwise_fn_product: grid mismatch");
  const int p = dealias_grid(u.grid_m(), degree);
  auto pu = to_physical(resample(u, p));
  const auto pv = to_physical(resample(v, p));
  auto& vals = pu.comps[0];
  for (Eigen::Index i = 0; i < vals.size(); ++i) vals[i] = fn(vals[i]) * pv.comps[0][i];
  return resample(from_physical(SpaceKind::full_scalar, pu), u.grid_m());
}

// fn applied to grid values, dealiased as a polynomial of the given degree;
// non-polynomial fn gets the same padded evaluation, the degree is then just
// a resolution knob
template <typename Scalar, typename F>
SpectralField<Scalar> apply_pointwise(const SpectralField<Scalar>& u, F&& fn, int degree) {
  if (!is_scalar_kind(u.kind()))
    throw std::invalid_argument("apply_pointwise: scalar fields only");
  const int p = dealias_grid(u.grid_m(), degree);
  auto phys = to_physical(resample(u, p));
  auto& vals = phys.comps[0];
  for (Eigen::Index i = 0; i < vals.size(); ++i) vals[i] = fn(vals[i]);
  return resample(from_physical(SpaceKind::full_scalar, phys), u.grid_m());
}

// ---------------------------------------------------------------------------
// vector calculus

template <typename Scalar>
SpectralField<Scalar> extract_component(const SpectralField<Scalar>& v, int c) {
  SpectralField<Scalar> out(SpaceKind::full_scalar, v.grid_m());
  out.comp(0) = v.comp(c);
  return out;
}

template <typename Scalar>
SpectralField<Scalar> assemble_vector3(const SpectralField<Scalar>& a,
                                       const SpectralField<Scalar>& b,
                                       const SpectralField<Scalar>& c) {
  SpectralField<Scalar> out(SpaceKind::vector3, a.grid_m());
  out.comp(0) = a.comp(0);
  out.comp(1) = b.comp(0);
  out.comp(2) = c.comp(0);
  return out;
}

template <typename Scalar>
SpectralField<Scalar> partial_derivative(const SpectralField<Scalar>& u, int axis) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("partial_derivative: axis");
  using Cx = std::complex<Scalar>;
  SpectralField<Scalar> out = u;
  for_each_band_mode(u.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
    const Cx in(0, static_cast<Scalar>(n[axis]));
    for (int c = 0; c < out.components(); ++c) out.comp(c)[idx] *= in;
  });
  return out;
}

template <typename Scalar>
SpectralField<Scalar> gradient(const SpectralField<Scalar>& u) {
  if (!is_scalar_kind(u.kind())) throw std::invalid_argument("gradient: scalar input");
  using Cx = std::complex<Scalar>;
  SpectralField<Scalar> out(SpaceKind::vector3, u.grid_m());
  for_each_band_mode(u.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
    const Cx v = u.comp(0)[idx];
    for (int c = 0; c < 3; ++c) out.comp(c)[idx] = Cx(0, static_cast<Scalar>(n[c])) * v;
  });
  return out;
}

template <typename Scalar>
SpectralField<Scalar> divergence(const SpectralField<Scalar>& v) {
  if (v.components() != 3) throw std::invalid_argument("divergence: vector input");
  using Cx = std::complex<Scalar>;
  SpectralField<Scalar> out(SpaceKind::full_scalar, v.grid_m());
  for_each_band_mode(v.grid_m(), [&](const ModeVec& n, Eigen::Index idx) {
    Cx acc(0, 0);
    for (int c = 0; c < 3; ++c) acc += Cx(0, static_cast<Scalar>(n[c])) * v.comp(c)[idx];
    out.comp(0)[idx] = acc;
  });
  return out;
}

// ---------------------------------------------------------------------------
// scalar reductions and constructors

template <typename Scalar>
Scalar mean_value(const SpectralField<Scalar>& u) {
  if (!is_scalar_kind(u.kind())) throw std::invalid_argument("mean_value: scalar input");
  return u.comp(0)[0].real() / static_cast<Scalar>(kL2Scale);
}

template <typename Scalar>
Scalar linf_norm(const SpectralField<Scalar>& u) {
  const auto phys = to_physical(u);
  Scalar worst = 0;
  for (const auto& c : phys.comps) worst = std::max(worst, c.cwiseAbs().maxCoeff());
  return worst;
}

// Gaussian field with amplitude profile(|n|^2) per mode, Hermitian by
// construction, then run through the kind's constraints. Deterministic for a
// fixed generator state.
template <typename Scalar, typename Profile>
SpectralField<Scalar> make_random_field(SpaceKind kind, int grid_m, Rng& rng,
                                        Profile&& profile) {
  using Cx = std::complex<Scalar>;
  SpectralField<Scalar> u(kind, grid_m);
  const double inv_sqrt2 = 0.7071067811865476;
  for_each_band_mode(grid_m, [&](const ModeVec& n, Eigen::Index idx) {
    const ModeVec neg{-n[0], -n[1], -n[2]};
    if (!(neg < n)) return;  // draw once per antipodal pair
    const double amp = profile(norm_sq(n));
    for (int c = 0; c < u.components(); ++c) {
      const Cx z(static_cast<Scalar>(rng.normal() * amp * inv_sqrt2),
                 static_cast<Scalar>(rng.normal() * amp * inv_sqrt2));
      u.comp(c)[idx] = z;
      u.comp(c)[mode_index(neg, grid_m)] = std::conj(z);
    }
  });
  if (kind == SpaceKind::full_scalar) {
    const double amp = profile(0);
    u.comp(0)[0] = Cx(static_cast<Scalar>(rng.normal() * amp), 0);
  }
  enforce_constraints(u);
  return u;
}

}  // namespace imlab
