#pragma once
// Binary state snapshots. One file holds one field together with the model
// parameters needed to reinterpret it. Layout (all little-endian):
//
//   bytes 0..3    magic "IMLB"
//   byte  4       format version, currently 1
//   byte  5       family tag: 0 reaction, 1 conserved-order, 2 advective
//   byte  6       component count (1, 1, 3 for the tags above)
//   byte  7       reserved, written as 0
//   bytes 8..11   grid size M as u32
//   bytes 12..43  f64 gamma, gamma_bar, alpha, time
//   then          (re, im) f64 pairs, one per stored mode
//
// Only the lexicographically nonnegative half of the active band is stored
// (first nonzero index positive, or the zero mode); the other half follows
// from conjugate symmetry. Pairs are ordered by ascending (component, q, l, m).

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "imlab/config.hpp"
#include "imlab/spectral_field.hpp"

namespace imlab {

static_assert(std::numeric_limits<double>::is_iec559, "snapshots assume IEEE-754 doubles");

struct SnapshotMeta {
  Family family = Family::reaction;
  double gamma = 0.0;
  double gamma_bar = 0.0;
  double alpha_reg = 1.0;
  double t = 0.0;
};

namespace detail {

inline constexpr char kSnapshotMagic[4] = {'I', 'M', 'L', 'B'};
inline constexpr std::uint8_t kSnapshotVersion = 1;

inline std::uint8_t family_tag(Family f) {
  switch (f) {
    case Family::reaction: return 0;
    case Family::cahn_hilliard: return 1;
    case Family::navier_stokes: return 2;
  }
  throw std::logic_error("family_tag: bad family");
}

inline Family family_from_tag(std::uint8_t tag) {
  switch (tag) {
    case 0: return Family::reaction;
    case 1: return Family::cahn_hilliard;
    case 2: return Family::navier_stokes;
  }
  throw std::runtime_error("snapshot: unknown family tag");
}

inline SpaceKind space_for_family(Family f) {
  switch (f) {
    case Family::reaction: return SpaceKind::full_scalar;
    case Family::cahn_hilliard: return SpaceKind::mean_zero_scalar;
    case Family::navier_stokes: return SpaceKind::div_free_vector;
  }
  throw std::logic_error("space_for_family: bad family");
}

inline void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64_le(std::string& out, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

inline double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  double v = 0;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

inline bool lex_nonneg(const ModeVec& n) {
  if (n[0] != 0) return n[0] > 0;
  if (n[1] != 0) return n[1] > 0;
  return n[2] >= 0;
}

// stored modes per component, in storage order
template <typename Fn>
void for_each_half_mode(int grid_m, Fn&& fn) {
  const std::int64_t b = band_limit(grid_m);
  for (std::int64_t q = 0; q <= b; ++q)
    for (std::int64_t l = -b; l <= b; ++l)
      for (std::int64_t w = -b; w <= b; ++w) {
        const ModeVec n{q, l, w};
        if (lex_nonneg(n)) fn(n);
      }
}

inline std::size_t half_mode_count(int grid_m) {
  const std::size_t side = 2 * static_cast<std::size_t>(band_limit(grid_m)) + 1;
  return (side * side * side + 1) / 2;
}

constexpr std::size_t kSnapshotHeaderBytes = 44;

}  // namespace detail

template <typename Scalar>
std::string serialize_snapshot(const SpectralField<Scalar>& u, const SnapshotMeta& meta) {
  std::string out;
  out.reserve(detail::kSnapshotHeaderBytes +
              16 * u.components() * detail::half_mode_count(u.grid_m()));
  out.append(detail::kSnapshotMagic, 4);
  out.push_back(static_cast<char>(detail::kSnapshotVersion));
  out.push_back(static_cast<char>(detail::family_tag(meta.family)));
  out.push_back(static_cast<char>(u.components()));
  out.push_back(0);
  detail::put_u32_le(out, static_cast<std::uint32_t>(u.grid_m()));
  detail::put_f64_le(out, meta.gamma);
  detail::put_f64_le(out, meta.gamma_bar);
  detail::put_f64_le(out, meta.alpha_reg);
  detail::put_f64_le(out, meta.t);
  for (int c = 0; c < u.components(); ++c)
    detail::for_each_half_mode(u.grid_m(), [&](const ModeVec& n) {
      const auto v = u.coeff(c, n);
      detail::put_f64_le(out, static_cast<double>(v.real()));
      detail::put_f64_le(out, static_cast<double>(v.imag()));
    });
  return out;
}

template <typename Scalar>
struct LoadedSnapshot {
  SnapshotMeta meta;
  SpectralField<Scalar> field{SpaceKind::full_scalar, 4};
};

template <typename Scalar>
LoadedSnapshot<Scalar> parse_snapshot(const std::string& bytes) {
  using detail::kSnapshotHeaderBytes;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < kSnapshotHeaderBytes) throw std::runtime_error("snapshot: truncated header");
  if (std::memcmp(p, detail::kSnapshotMagic, 4) != 0)
    throw std::runtime_error("snapshot: bad magic");
  if (p[4] != detail::kSnapshotVersion)
    throw std::runtime_error("snapshot: unsupported version " + std::to_string(p[4]));

  LoadedSnapshot<Scalar> snap;
  snap.meta.family = detail::family_from_tag(p[5]);
  const SpaceKind kind = detail::space_for_family(snap.meta.family);
  const int comps = p[6];
  if (comps != component_count(kind))
    throw std::runtime_error("snapshot: component count does not match family");
  const std::uint32_t m = detail::get_u32_le(p + 8);
  if (m < 4 || m % 2 != 0 || m > 4096)
    throw std::runtime_error("snapshot: bad grid size " + std::to_string(m));
  snap.meta.gamma = detail::get_f64_le(p + 12);
  snap.meta.gamma_bar = detail::get_f64_le(p + 20);
  snap.meta.alpha_reg = detail::get_f64_le(p + 28);
  snap.meta.t = detail::get_f64_le(p + 36);

  const std::size_t expect =
      kSnapshotHeaderBytes +
      16 * static_cast<std::size_t>(comps) * detail::half_mode_count(static_cast<int>(m));
  if (bytes.size() != expect)
    throw std::runtime_error("snapshot: payload size mismatch (have " +
                             std::to_string(bytes.size()) + " bytes, expected " +
                             std::to_string(expect) + ")");

  snap.field = SpectralField<Scalar>(kind, static_cast<int>(m));
  std::size_t off = kSnapshotHeaderBytes;
  for (int c = 0; c < comps; ++c)
    detail::for_each_half_mode(static_cast<int>(m), [&](const ModeVec& n) {
      const double re = detail::get_f64_le(p + off);
      const double im = detail::get_f64_le(p + off + 8);
      off += 16;
      snap.field.set_mode_pair(c, n,
                               std::complex<Scalar>(static_cast<Scalar>(re),
                                                    static_cast<Scalar>(im)));
    });
  return snap;
}

template <typename Scalar>
void save_snapshot(const std::string& path, const SpectralField<Scalar>& u,
                   const SnapshotMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open snapshot for writing: " + path);
  const std::string bytes = serialize_snapshot(u, meta);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("snapshot write failed: " + path);
}

template <typename Scalar>
LoadedSnapshot<Scalar> load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_snapshot<Scalar>(bytes);
}

}  // namespace imlab
