#pragma once
// In-place 3-d DFT on a cubic grid, built on Eigen's FFT module. Unscaled in
// both directions: forward computes sum_j x_j e^{-2 pi i j k / m} along each
// axis, and the inverse is the plain conjugate transform (no 1/m^3 factor),
// so callers own the normalization.

#include <complex>
#include <cstddef>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace imlab {

template <typename Scalar>
void dft3_unscaled(Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>& data,
                   int m, bool inverse) {
  if (m < 2) throw std::invalid_argument("dft3_unscaled: grid must be at least 2");
  if (data.size() != static_cast<Eigen::Index>(m) * m * m)
    throw std::invalid_argument("dft3_unscaled: data size does not match grid");

  using Cx = std::complex<Scalar>;
  Eigen::FFT<Scalar> fft;
  Eigen::Matrix<Cx, Eigen::Dynamic, 1> line(m), out(m);

  if (inverse) data = data.conjugate();

  // layout: index of (i, j, k) is (i*m + j)*m + k
  for (int axis = 0; axis < 3; ++axis) {
    const std::ptrdiff_t stride =
        axis == 0 ? static_cast<std::ptrdiff_t>(m) * m : (axis == 1 ? m : 1);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        std::ptrdiff_t base;
        if (axis == 0)
          base = static_cast<std::ptrdiff_t>(a) * m + b;        // over (j, k)
        else if (axis == 1)
          base = static_cast<std::ptrdiff_t>(a) * m * m + b;    // over (i, k)
        else
          base = (static_cast<std::ptrdiff_t>(a) * m + b) * m;  // over (i, j)
        if (stride == 1) {
          line = data.segment(base, m);
          fft.fwd(out, line);
          data.segment(base, m) = out;
        } else {
          for (int t = 0; t < m; ++t) line[t] = data[base + t * stride];
          fft.fwd(out, line);
          for (int t = 0; t < m; ++t) data[base + t * stride] = out[t];
        }
      }
  }

  if (inverse) data = data.conjugate();
}

}  // namespace imlab
