#pragma once

// Periodic quadrature and Fourier calculus on uniform grids.

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

namespace reslab::spectral {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Trapezoid mean over one period of a uniformly sampled periodic function
/// (the endpoint is not repeated, so this is the plain arithmetic mean).
template <typename Derived>
typename Derived::Scalar periodic_mean(const Eigen::MatrixBase<Derived>& samples) {
  return samples.mean();
}

namespace detail {

// Multiplies mode j by mult(k) where k is the signed wavenumber. The Nyquist
// mode of an even-length grid is dropped.
template <typename Scalar, typename Derived, typename Mult>
Vector<Scalar> apply_multiplier(const Eigen::MatrixBase<Derived>& samples, Mult mult) {
  const Eigen::Index n = samples.size();
  Eigen::FFT<Scalar> fft;
  std::vector<Scalar> in(samples.derived().data(), samples.derived().data() + n);
  std::vector<std::complex<Scalar>> spec;
  fft.fwd(spec, in);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index k = (2 * j < n) ? j : j - n;
    if (2 * j == n) {
      spec[j] = 0;
    } else {
      spec[j] *= mult(static_cast<Scalar>(k));
    }
  }
  std::vector<Scalar> out;
  fft.inv(out, spec);
  return Eigen::Map<Vector<Scalar>>(out.data(), n);
}

}  // namespace detail

/// Derivative of a periodic function sampled at n uniform points on [0, period).
template <typename Derived>
auto derivative(const Eigen::MatrixBase<Derived>& samples, typename Derived::Scalar period) {
  using Scalar = typename Derived::Scalar;
  const Scalar base = Scalar(2) * Scalar(EIGEN_PI) / period;
  return detail::apply_multiplier<Scalar>(samples.eval(), [base](Scalar k) {
    return std::complex<Scalar>(0, k * base);
  });
}

/// Zero-mean antiderivative of a mean-free periodic function. The mean mode of
/// the input is discarded; callers check it first.
template <typename Derived>
auto antiderivative(const Eigen::MatrixBase<Derived>& samples, typename Derived::Scalar period) {
  using Scalar = typename Derived::Scalar;
  const Scalar base = Scalar(2) * Scalar(EIGEN_PI) / period;
  return detail::apply_multiplier<Scalar>(samples.eval(), [base](Scalar k) {
    if (k == Scalar(0)) return std::complex<Scalar>(0);
    return std::complex<Scalar>(0, Scalar(-1) / (k * base));
  });
}

/// Trigonometric interpolant through uniform samples, evaluated at x.
template <typename Derived>
typename Derived::Scalar interpolate(const Eigen::MatrixBase<Derived>& samples,
                                     typename Derived::Scalar period,
                                     typename Derived::Scalar x) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = samples.size();
  Eigen::FFT<Scalar> fft;
  const Vector<Scalar> s = samples;
  std::vector<Scalar> in(s.data(), s.data() + n);
  std::vector<std::complex<Scalar>> spec;
  fft.fwd(spec, in);
  const Scalar phase = Scalar(2) * Scalar(EIGEN_PI) * x / period;
  Scalar acc = spec[0].real();
  for (Eigen::Index j = 1; 2 * j < n; ++j) {
    const std::complex<Scalar> e(std::cos(j * phase), std::sin(j * phase));
    acc += Scalar(2) * (spec[j] * e).real();
  }
  return acc / static_cast<Scalar>(n);
}

}  // namespace reslab::spectral
