#ifndef NLSLAB_GRID_HPP_
#define NLSLAB_GRID_HPP_

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <stdexcept>

#include "nlslab/types.hpp"

namespace nlslab {

// Uniform periodic grid on [-L, L).  Box momenta are k_m = m pi / L with
// m = -n/2 .. n/2-1, so the free Laplacian has symbol k^2 exactly.
template <typename Scalar = double>
struct Grid1D {
  Scalar half_length = 0;  // L
  Eigen::Index n_points = 0;
  Scalar h = 0;

  Grid1D() = default;
  Grid1D(Scalar L, Eigen::Index n) : half_length(L), n_points(n), h(2 * L / Scalar(n)) {
    if (n < 8 || (n & (n - 1)) != 0) {
      throw std::invalid_argument("Grid1D: n_points must be a power of two >= 8");
    }
    if (!(L > 0)) throw std::invalid_argument("Grid1D: half_length must be positive");
  }

  Scalar x(Eigen::Index j) const { return -half_length + h * Scalar(j); }

  RealVec<Scalar> nodes() const {
    RealVec<Scalar> out(n_points);
    for (Eigen::Index j = 0; j < n_points; ++j) out[j] = x(j);
    return out;
  }

  // momentum of FFT bin j (FFT ordering: 0, 1, ..., n/2-1, -n/2, ..., -1)
  Scalar momentum(Eigen::Index j) const {
    const Eigen::Index m = (j <= n_points / 2 - 1) ? j : j - n_points;
    return Scalar(M_PI) * Scalar(m) / half_length;
  }

  RealVec<Scalar> momenta() const {
    RealVec<Scalar> out(n_points);
    for (Eigen::Index j = 0; j < n_points; ++j) out[j] = momentum(j);
    return out;
  }

  Scalar momentum_max() const { return Scalar(M_PI) * Scalar(n_points / 2) / half_length; }

  // discrete L^2(dx) inner product and norm (conjugate on the first slot)
  std::complex<Scalar> inner(const SpectralField<Scalar>& u, const SpectralField<Scalar>& v) const {
    return h * u.dot(v);
  }
  Scalar real_inner(const SpectralField<Scalar>& u, const SpectralField<Scalar>& v) const {
    return std::real(inner(u, v));
  }
  Scalar norm(const SpectralField<Scalar>& u) const { return std::sqrt(h) * u.norm(); }

  // discrete L^p(dx) norm; p = inf handled by lp_norm(inf) overflow guard at call sites
  Scalar lp_norm(const SpectralField<Scalar>& u, Scalar p) const {
    if (std::isinf(p)) return u.cwiseAbs().maxCoeff();
    return std::pow(h * u.cwiseAbs().array().pow(p).sum(), Scalar(1) / p);
  }
};

// Thin FFT wrapper; one instance per hot loop to reuse kissfft plans.
template <typename Scalar = double>
class Fft {
 public:
  CplxVec<Scalar> forward(const CplxVec<Scalar>& u) {
    CplxVec<Scalar> out(u.size());
    impl_.fwd(out, u);
    return out;
  }
  CplxVec<Scalar> inverse(const CplxVec<Scalar>& u) {
    CplxVec<Scalar> out(u.size());
    impl_.inv(out, u);
    return out;
  }

 private:
  Eigen::FFT<Scalar> impl_;
};

// Applies a momentum multiplier m(k) through the flat Fourier transform.
template <typename Scalar, typename Fn>
SpectralField<Scalar> flat_multiplier(const Grid1D<Scalar>& grid, Fn&& m,
                                      const SpectralField<Scalar>& u, Fft<Scalar>* fft = nullptr) {
  Fft<Scalar> local;
  Fft<Scalar>& f = fft ? *fft : local;
  CplxVec<Scalar> uh = f.forward(u);
  for (Eigen::Index j = 0; j < grid.n_points; ++j) uh[j] *= m(grid.momentum(j));
  return f.inverse(uh);
}

// e^{-i t H_0} with H_0 = -d^2/dx^2 on the periodic box.
template <typename Scalar>
SpectralField<Scalar> free_propagate(const Grid1D<Scalar>& grid, Scalar t,
                                     const SpectralField<Scalar>& u, Fft<Scalar>* fft = nullptr) {
  using C = std::complex<Scalar>;
  return flat_multiplier(
      grid, [t](Scalar k) { return std::exp(C(0, -1) * t * k * k); }, u, fft);
}

// || <k>^s <x>^sigma u ||_{L^2}: weight first, then the flat Bessel multiplier.
template <typename Scalar>
Scalar flat_sobolev_norm(const Grid1D<Scalar>& grid, const SpectralField<Scalar>& u, Scalar s,
                         Scalar sigma = 0) {
  SpectralField<Scalar> w = u;
  if (sigma != Scalar(0)) {
    for (Eigen::Index j = 0; j < grid.n_points; ++j) {
      const Scalar xx = grid.x(j);
      w[j] *= std::pow(Scalar(1) + xx * xx, sigma / 2);
    }
  }
  if (s != Scalar(0)) {
    w = flat_multiplier(
        grid, [s](Scalar k) { return std::pow(Scalar(1) + k * k, s / 2); }, w);
  }
  return grid.norm(w);
}

}  // namespace nlslab

#endif  // NLSLAB_GRID_HPP_
