#pragma once

// Integer lattice spectrum of the Laplacian on the 3-torus (-pi,pi)^3.
//
// Eigenvalues of -Delta are |n|^2 over wave vectors n in Z^3. Everything in
// this header is exact int64 arithmetic (no floating point enters any
// admissibility decision), so separation certificates are reproducible
// bit for bit. Floating point appears only in the derived gap/constant
// reports, computed in long double from already-certified integers.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace imlab {

using ModeVec = std::array<std::int64_t, 3>;

inline std::int64_t norm_sq(const ModeVec& n) {
  return n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
}

namespace detail {

// Largest s >= 0 with s*s <= v; exact (double sqrt can be off by one ulp).
inline std::int64_t isqrt(std::int64_t v) {
  if (v < 0) return -1;
  auto s = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
  while (s > 0 && s * s > v) --s;
  while ((s + 1) * (s + 1) <= v) ++s;
  return s;
}

inline bool is_square(std::int64_t v, std::int64_t& root) {
  if (v < 0) return false;
  root = isqrt(v);
  return root * root == v;
}

struct ModeHash {
  std::size_t operator()(const ModeVec& n) const {
    auto u = [](std::int64_t x) { return static_cast<std::uint64_t>(x + (std::int64_t(1) << 20)); };
    std::uint64_t h = (u(n[0]) << 42) ^ (u(n[1]) << 21) ^ u(n[2]);
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Shells

struct Shell {
  std::int64_t lambda = 0;        // eigenvalue, post-shift
  std::int64_t multiplicity = 0;  // lattice points on the shell
};

// Number of n in Z^3 with |n|^2 == ell.
inline std::int64_t shell_multiplicity(std::int64_t ell) {
  if (ell < 0) return 0;
  std::int64_t count = 0;
  const std::int64_t s = detail::isqrt(ell);
  for (std::int64_t q = -s; q <= s; ++q) {
    const std::int64_t rem_q = ell - q * q;
    const std::int64_t sl = detail::isqrt(rem_q);
    for (std::int64_t l = -sl; l <= sl; ++l) {
      const std::int64_t rem = rem_q - l * l;
      std::int64_t m = 0;
      if (detail::is_square(rem, m)) count += (m == 0) ? 1 : 2;
    }
  }
  return count;
}

// All modes on the shell |n|^2 == ell, in ascending lexicographic (q,l,m) order.
inline std::vector<ModeVec> shell_modes(std::int64_t ell) {
  std::vector<ModeVec> modes;
  if (ell < 0) return modes;
  const std::int64_t s = detail::isqrt(ell);
  for (std::int64_t q = -s; q <= s; ++q) {
    const std::int64_t rem_q = ell - q * q;
    const std::int64_t sl = detail::isqrt(rem_q);
    for (std::int64_t l = -sl; l <= sl; ++l) {
      const std::int64_t rem = rem_q - l * l;
      std::int64_t m = 0;
      if (detail::is_square(rem, m)) {
        if (m == 0) {
          modes.push_back({q, l, 0});
        } else {
          modes.push_back({q, l, -m});
          modes.push_back({q, l, m});
        }
      }
    }
  }
  return modes;
}

// Every shell with post-shift eigenvalue shift + |n|^2 <= lambda_max,
// including empty ones (multiplicity 0), in ascending eigenvalue order.
inline std::vector<Shell> enumerate_shells(std::int64_t lambda_max, int shift = 0) {
  if (lambda_max < 0) throw std::invalid_argument("enumerate_shells: lambda_max must be nonnegative");
  if (shift != 0 && shift != 1) throw std::invalid_argument("enumerate_shells: shift must be 0 or 1");
  const std::int64_t ell_max = lambda_max - shift;
  std::vector<Shell> shells;
  if (ell_max < 0) return shells;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(ell_max) + 1, 0);
  const std::int64_t s = detail::isqrt(ell_max);
  for (std::int64_t q = -s; q <= s; ++q)
    for (std::int64_t l = -s; l <= s; ++l) {
      const std::int64_t base = q * q + l * l;
      if (base > ell_max) continue;
      const std::int64_t sm = detail::isqrt(ell_max - base);
      for (std::int64_t m = -sm; m <= sm; ++m) ++counts[static_cast<std::size_t>(base + m * m)];
    }
  shells.reserve(counts.size());
  for (std::int64_t ell = 0; ell <= ell_max; ++ell)
    shells.push_back({ell + shift, counts[static_cast<std::size_t>(ell)]});
  return shells;
}

// ---------------------------------------------------------------------------
// Gaps

struct GapRun {
  std::int64_t first_missing = 0;  // smallest unrepresented eigenvalue of the run
  std::int64_t length = 0;         // number of consecutive unrepresented integers
};

// Runs of consecutive integers in [1, lambda_max] with empty shells
// (unshifted eigenvalues). Requires lambda_max >= 16 so the first gaps are
// inside the scanned range.
inline std::vector<GapRun> spectral_gaps(std::int64_t lambda_max) {
  if (lambda_max < 16) throw std::invalid_argument("spectral_gaps: lambda_max must be at least 16");
  const auto shells = enumerate_shells(lambda_max, 0);
  std::vector<GapRun> runs;
  std::int64_t run_start = -1;
  for (std::int64_t ell = 1; ell <= lambda_max; ++ell) {
    const bool empty = shells[static_cast<std::size_t>(ell)].multiplicity == 0;
    if (empty && run_start < 0) run_start = ell;
    if (!empty && run_start >= 0) {
      runs.push_back({run_start, ell - run_start});
      run_start = -1;
    }
  }
  if (run_start >= 0) runs.push_back({run_start, lambda_max - run_start + 1});
  return runs;
}

inline std::int64_t max_gap_length(const std::vector<GapRun>& runs) {
  std::int64_t mx = 0;
  for (const auto& r : runs) mx = std::max(mx, r.length);
  return mx;
}

// ---------------------------------------------------------------------------
// Projector bookkeeping and the separation condition

struct ProjectorSpec {
  std::int64_t lambda = 0;  // cut threshold on the unshifted eigenvalue |n|^2
  std::int64_t k = 1;       // annulus half-width
  int shift = 0;            // 0: A = -Delta, 1: A = 1 - Delta

  void validate() const {
    if (lambda < 0) throw std::invalid_argument("ProjectorSpec: lambda must be nonnegative");
    if (k < 0) throw std::invalid_argument("ProjectorSpec: k must be nonnegative");
    if (shift != 0 && shift != 1) throw std::invalid_argument("ProjectorSpec: shift must be 0 or 1");
  }
};

// Modes with lambda - k <= |n|^2 <= lambda + k (unshifted), ascending
// lexicographic (q,l,m) order.
inline std::vector<ModeVec> annulus(const ProjectorSpec& spec) {
  spec.validate();
  std::vector<ModeVec> modes;
  const std::int64_t lo = std::max<std::int64_t>(0, spec.lambda - spec.k);
  const std::int64_t hi = spec.lambda + spec.k;
  for (std::int64_t ell = lo; ell <= hi; ++ell) {
    auto sm = shell_modes(ell);
    modes.insert(modes.end(), sm.begin(), sm.end());
  }
  std::sort(modes.begin(), modes.end());
  return modes;
}

namespace detail {

// Nonzero offsets d with |d|^2 <= r^2, one representative per antipodal pair
// (lexicographically positive one).
inline std::vector<ModeVec> half_ball_offsets(std::int64_t r) {
  std::vector<ModeVec> offs;
  for (std::int64_t q = -r; q <= r; ++q)
    for (std::int64_t l = -r; l <= r; ++l)
      for (std::int64_t m = -r; m <= r; ++m) {
        const ModeVec d{q, l, m};
        if (norm_sq(d) == 0 || norm_sq(d) > r * r) continue;
        if (d > ModeVec{0, 0, 0}) offs.push_back(d);
      }
  return offs;
}

}  // namespace detail

// True iff all pairwise differences of distinct annulus modes have Euclidean
// norm > r, i.e. (C - C) intersected with the ball of radius r is {0}.
inline bool check_sa_condition(std::int64_t lambda, std::int64_t k, std::int64_t r) {
  if (r < 1) throw std::invalid_argument("check_sa_condition: r must be positive");
  ProjectorSpec spec{lambda, k, 0};
  spec.validate();
  const auto modes = annulus(spec);
  std::unordered_set<ModeVec, detail::ModeHash> set(modes.begin(), modes.end());
  const auto offsets = detail::half_ball_offsets(r);
  for (const auto& n : modes)
    for (const auto& d : offsets) {
      const ModeVec p{n[0] + d[0], n[1] + d[1], n[2] + d[2]};
      if (set.count(p)) return false;
    }
  return true;
}

struct AdmissibleRecord {
  std::int64_t lambda = 0;
  std::int64_t annulus_size = 0;
  std::int64_t min_pair_dist_sq = 0;  // 0 when fewer than two annulus modes
};

// Exact minimal pairwise squared distance among annulus modes (0 if < 2 modes).
inline std::int64_t annulus_min_pair_dist_sq(std::int64_t lambda, std::int64_t k) {
  ProjectorSpec spec{lambda, k, 0};
  const auto modes = annulus(spec);
  std::int64_t best = 0;
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = i + 1; j < modes.size(); ++j) {
      const ModeVec d{modes[i][0] - modes[j][0], modes[i][1] - modes[j][1], modes[i][2] - modes[j][2]};
      const std::int64_t ds = norm_sq(d);
      if (best == 0 || ds < best) best = ds;
    }
  return best;
}

// All lambda in [lambda_lo, lambda_hi] passing the separation condition for
// (k, r). Set stop_after_first to stop at the first certificate.
inline std::vector<AdmissibleRecord> search_admissible(std::int64_t lambda_lo, std::int64_t lambda_hi,
                                                       std::int64_t k, std::int64_t r,
                                                       bool stop_after_first = false) {
  if (lambda_lo < 0 || lambda_hi < lambda_lo)
    throw std::invalid_argument("search_admissible: need 0 <= lambda_lo <= lambda_hi");
  if (r < 1) throw std::invalid_argument("search_admissible: r must be positive");
  if (k < 0) throw std::invalid_argument("search_admissible: k must be nonnegative");
  const auto offsets = detail::half_ball_offsets(r);
  std::vector<AdmissibleRecord> out;

  // Sliding cache of shells [lambda-k, lambda+k] so each shell is enumerated once.
  std::vector<std::pair<std::int64_t, std::vector<ModeVec>>> window;
  auto shell_of = [&](std::int64_t ell) -> const std::vector<ModeVec>& {
    for (auto& e : window)
      if (e.first == ell) return e.second;
    window.emplace_back(ell, shell_modes(ell));
    return window.back().second;
  };

  for (std::int64_t lam = lambda_lo; lam <= lambda_hi; ++lam) {
    std::erase_if(window, [&](const auto& e) { return e.first < lam - k; });
    std::unordered_set<ModeVec, detail::ModeHash> set;
    std::int64_t count = 0;
    for (std::int64_t ell = std::max<std::int64_t>(0, lam - k); ell <= lam + k; ++ell) {
      const auto& sm = shell_of(ell);
      set.insert(sm.begin(), sm.end());
      count += static_cast<std::int64_t>(sm.size());
    }
    bool ok = true;
    for (auto it = set.begin(); ok && it != set.end(); ++it)
      for (const auto& d : offsets) {
        const ModeVec p{(*it)[0] + d[0], (*it)[1] + d[1], (*it)[2] + d[2]};
        if (set.count(p)) { ok = false; break; }
      }
    if (ok) {
      out.push_back({lam, count, annulus_min_pair_dist_sq(lam, k)});
      if (stop_after_first) break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gap condition and theorem-constant checks at a concrete cut

// Occupied operator eigenvalues (post-shift) bracketing the cut at
// ProjectorSpec.lambda. min_ell excludes low shells that are not part of the
// phase space (1 for mean-zero / divergence-free spaces, 0 otherwise).
struct CutEigenvalues {
  std::int64_t lambda_lo = 0;  // largest occupied <= cut
  std::int64_t lambda_hi = 0;  // smallest occupied > cut
};

inline CutEigenvalues cut_eigenvalues(const ProjectorSpec& spec, std::int64_t min_ell = 0) {
  spec.validate();
  std::int64_t lo = -1;
  for (std::int64_t ell = spec.lambda; ell >= min_ell; --ell)
    if (shell_multiplicity(ell) > 0) { lo = ell; break; }
  if (lo < 0) throw std::invalid_argument("cut_eigenvalues: no occupied shell at or below the cut");
  std::int64_t hi = -1;
  for (std::int64_t ell = spec.lambda + 1; ell <= spec.lambda + 8; ++ell)
    if (shell_multiplicity(ell) > 0) { hi = ell; break; }
  if (hi < 0) throw std::runtime_error("cut_eigenvalues: no occupied shell above the cut (unreachable)");
  return {lo + spec.shift, hi + spec.shift};
}

struct SgResult {
  bool pass = false;
  double lhs = 0.0;    // (l2^{1+g} - l1^{1+g}) / (l2^g + l1^g), must exceed L
  double alpha = 0.0;  // cone rotation constant at the cut
  double mu = 0.0;     // lhs - L
  std::int64_t lambda_n = 0;
  std::int64_t lambda_n1 = 0;
};

namespace detail {

inline long double sg_lhs(long double l1, long double l2, long double gamma) {
  return (std::pow(l2, 1.0L + gamma) - std::pow(l1, 1.0L + gamma)) /
         (std::pow(l2, gamma) + std::pow(l1, gamma));
}

inline long double sg_alpha(long double l1, long double l2, long double gamma) {
  const long double den = std::pow(l1, gamma) + std::pow(l2, gamma);
  return (std::pow(l1, 1.0L + gamma) * std::pow(l2, gamma) +
          std::pow(l2, 1.0L + gamma) * std::pow(l1, gamma)) / den;
}

}  // namespace detail

// Spectral gap condition at the cut whose lower eigenvalue is lambda_post
// (post-shift operator eigenvalue; its shell must be occupied).
inline SgResult check_sg_condition(std::int64_t lambda_post, double L, double gamma, int shift = 0) {
  if (L < 0) throw std::invalid_argument("check_sg_condition: L must be nonnegative");
  if (gamma < 0) throw std::invalid_argument("check_sg_condition: gamma must be nonnegative");
  if (shift != 0 && shift != 1) throw std::invalid_argument("check_sg_condition: shift must be 0 or 1");
  const std::int64_t ell = lambda_post - shift;
  if (ell < 0 || shell_multiplicity(ell) == 0)
    throw std::invalid_argument("check_sg_condition: lambda has zero multiplicity, no cut there");
  std::int64_t ell2 = -1;
  for (std::int64_t e = ell + 1; e <= ell + 8; ++e)
    if (shell_multiplicity(e) > 0) { ell2 = e; break; }
  if (ell2 < 0) throw std::runtime_error("check_sg_condition: no occupied shell above the cut (unreachable)");
  const long double l1 = static_cast<long double>(ell + shift);
  const long double l2 = static_cast<long double>(ell2 + shift);
  SgResult res;
  res.lambda_n = ell + shift;
  res.lambda_n1 = ell2 + shift;
  res.lhs = static_cast<double>(detail::sg_lhs(l1, l2, gamma));
  res.alpha = static_cast<double>(detail::sg_alpha(l1, l2, gamma));
  res.mu = res.lhs - L;
  res.pass = res.lhs > L;
  return res;
}

struct TheoremConstants {
  bool pass = false;
  double slack_deviation = 0.0;  // theta/8 - delta - gamma 2^{gamma+1} L k/(lambda_N - k), needs > 0
  double slack_width = 0.0;      // k/2 - 8 L^2/theta - 2 L, needs >= 0
  bool lambda_exceeds_L = false;
  bool width_within_half = false;  // k <= lambda_N / 2
  std::int64_t lambda_n = 0;       // operator eigenvalue at the cut (post-shift)
};

// Smallness conditions tying together gap floor theta, deviation budget delta,
// Lipschitz bound L and the annulus half-width k at the cut.
inline TheoremConstants check_theorem_constants(std::int64_t lambda, std::int64_t k, double theta,
                                                double delta, double L, double gamma, int shift = 0) {
  if (theta <= 0) throw std::invalid_argument("check_theorem_constants: theta must be positive");
  if (delta < 0 || L < 0 || gamma < 0)
    throw std::invalid_argument("check_theorem_constants: delta, L, gamma must be nonnegative");
  if (k < 1) throw std::invalid_argument("check_theorem_constants: k must be positive");
  const auto cut = cut_eigenvalues(ProjectorSpec{lambda, k, shift});
  TheoremConstants res;
  res.lambda_n = cut.lambda_lo;
  const long double lam = static_cast<long double>(cut.lambda_lo);
  if (lam <= k) throw std::invalid_argument("check_theorem_constants: need lambda_N > k");
  const long double g = gamma;
  res.slack_deviation = static_cast<double>(
      theta / 8.0L - delta - g * std::pow(2.0L, g + 1.0L) * L * k / (lam - k));
  res.slack_width = static_cast<double>(k / 2.0L - 8.0L * L * L / theta - 2.0L * L);
  res.lambda_exceeds_L = lam > L;
  res.width_within_half = 2 * k <= cut.lambda_lo;
  res.pass = res.slack_deviation > 0 && res.slack_width >= 0 && res.lambda_exceeds_L && res.width_within_half;
  return res;
}

}  // namespace imlab
