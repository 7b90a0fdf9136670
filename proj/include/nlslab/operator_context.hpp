#ifndef NLSLAB_OPERATOR_CONTEXT_HPP_
#define NLSLAB_OPERATOR_CONTEXT_HPP_

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nlslab/grid.hpp"
#include "nlslab/potential.hpp"
#include "nlslab/types.hpp"

namespace nlslab {

// Discretization of H = -Delta + V on the periodic box with exact functional
// calculus through a dense eigendecomposition.  Immutable after construction;
// all operations below are pure functions of (context, arguments).
//
// Eigenvector columns are orthonormal in the h-weighted inner product, so
// coefficients are c_k = h * e_k^H u and fields are u = E c.
template <typename Scalar = double>
class OperatorContext {
 public:
  using Field = SpectralField<Scalar>;

  Grid1D<Scalar> grid;
  PotentialSpec<Scalar> potential_spec;
  RealVec<Scalar> potential;     // V(x_j)
  RealMat<Scalar> hamiltonian;   // dense real symmetric
  RealVec<Scalar> eigenvalues;   // ascending
  CplxMat<Scalar> eigenvectors;  // h-orthonormal columns
  std::vector<Eigen::Index> negative_indices;
  int dimension = kDefaultDimension;  // d entering exponent formulas
  bool free_exact = false;            // V == 0, exact Fourier eigenbasis

  Eigen::Index n() const { return grid.n_points; }
  bool has_negative_spectrum() const { return !negative_indices.empty(); }

  Scalar ground_energy() const {
    if (!has_negative_spectrum()) throw NumericalError("no negative eigenvalue in spectrum");
    return eigenvalues[0];
  }
  Field ground_eigenfunction() const {
    if (!has_negative_spectrum()) throw NumericalError("no negative eigenvalue in spectrum");
    Field phi = eigenvectors.col(0);
    // fix the sign so the bound state is positive (it has no node)
    Eigen::Index jmax = 0;
    phi.cwiseAbs().maxCoeff(&jmax);
    const std::complex<Scalar> ph = phi[jmax] / std::abs(phi[jmax]);
    return phi / ph;
  }

  CplxVec<Scalar> to_coeffs(const Field& u) const {
    return grid.h * (eigenvectors.adjoint() * u);
  }
  Field from_coeffs(const CplxVec<Scalar>& c) const { return eigenvectors * c; }

  Scalar orthonormality_residual() const {
    const Eigen::Index m = std::min<Eigen::Index>(n(), 64);
    CplxMat<Scalar> g =
        grid.h * (eigenvectors.leftCols(m).adjoint() * eigenvectors.leftCols(m));
    g -= CplxMat<Scalar>::Identity(m, m);
    return g.cwiseAbs().maxCoeff();
  }
  Scalar hermiticity_error() const {
    return (hamiltonian - hamiltonian.transpose()).cwiseAbs().maxCoeff();
  }
};

// H = -Delta + V with the Laplacian realized spectrally (symbol k^2).
template <typename Scalar = double>
OperatorContext<Scalar> build_operator(const Grid1D<Scalar>& grid,
                                       const PotentialSpec<Scalar>& potential,
                                       int dimension = kDefaultDimension) {
  using C = std::complex<Scalar>;
  const Eigen::Index n = grid.n_points;
  if (n > 4096) {
    throw std::invalid_argument("build_operator: dense eigendecomposition capped at n = 4096");
  }
  OperatorContext<Scalar> ctx;
  ctx.grid = grid;
  ctx.potential_spec = potential;
  ctx.potential = potential.sample(grid);
  ctx.dimension = dimension;

  // kinetic circulant from its first row: K_{j l} = row[(j - l) mod n]
  Fft<Scalar> fft;
  CplxVec<Scalar> sym(n);
  for (Eigen::Index j = 0; j < n; ++j) sym[j] = C(grid.momentum(j) * grid.momentum(j), 0);
  const CplxVec<Scalar> row = fft.inverse(sym);  // includes the 1/n factor
  ctx.hamiltonian.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index l = 0; l < n; ++l) {
      Eigen::Index r = j - l;
      if (r < 0) r += n;
      ctx.hamiltonian(j, l) = std::real(row[r]);
    }
  }
  ctx.hamiltonian.diagonal() += ctx.potential;
  ctx.hamiltonian = ((ctx.hamiltonian + ctx.hamiltonian.transpose()) / Scalar(2)).eval();

  if (ctx.potential.cwiseAbs().maxCoeff() == Scalar(0)) {
    // V == 0: the Fourier modes are the exact eigenbasis
    ctx.free_exact = true;
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      const Scalar ka = grid.momentum(a), kb = grid.momentum(b);
      if (ka * ka != kb * kb) return ka * ka < kb * kb;
      return ka < kb;
    });
    ctx.eigenvalues.resize(n);
    ctx.eigenvectors.resize(n, n);
    const Scalar nrm = Scalar(1) / std::sqrt(2 * grid.half_length);
    for (Eigen::Index c = 0; c < n; ++c) {
      const Scalar k = grid.momentum(order[c]);
      ctx.eigenvalues[c] = k * k;
      for (Eigen::Index j = 0; j < n; ++j) {
        ctx.eigenvectors(j, c) = nrm * std::exp(C(0, k * grid.x(j)));
      }
    }
  } else {
    Eigen::SelfAdjointEigenSolver<RealMat<Scalar>> es(ctx.hamiltonian);
    if (es.info() != Eigen::Success) throw NumericalError("build_operator: eigensolver failed");
    ctx.eigenvalues = es.eigenvalues();
    // h-weighted orthonormalization of the plain-orthonormal eigenvectors
    ctx.eigenvectors = (es.eigenvectors() / std::sqrt(grid.h)).template cast<C>();
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (ctx.eigenvalues[k] < Scalar(0)) ctx.negative_indices.push_back(k);
  }
  return ctx;
}

// f(H) u = sum_k f(lambda_k) <e_k, u> e_k ; errors out if f is not finite on
// the spectrum.
template <typename Scalar, typename Fn>
SpectralField<Scalar> apply_function(const OperatorContext<Scalar>& ctx, Fn&& f,
                                     const SpectralField<Scalar>& u) {
  if (u.size() != ctx.n()) throw std::invalid_argument("apply_function: field size mismatch");
  CplxVec<Scalar> c = ctx.to_coeffs(u);
  for (Eigen::Index k = 0; k < ctx.n(); ++k) {
    const Scalar fv = Scalar(f(ctx.eigenvalues[k]));
    if (!std::isfinite(fv)) {
      throw NumericalError("apply_function: f not finite at eigenvalue " +
                           std::to_string(double(ctx.eigenvalues[k])));
    }
    c[k] *= fv;
  }
  return ctx.from_coeffs(c);
}

template <typename Scalar>
SpectralField<Scalar> projector_continuous(const OperatorContext<Scalar>& ctx,
                                           const SpectralField<Scalar>& u) {
  if (u.size() != ctx.n()) throw std::invalid_argument("projector_continuous: size mismatch");
  if (!ctx.has_negative_spectrum()) return u;
  SpectralField<Scalar> out = u;
  for (Eigen::Index k : ctx.negative_indices) {
    const CplxVec<Scalar> e = ctx.eigenvectors.col(k);
    out -= e * (ctx.grid.h * e.dot(u));
  }
  return out;
}

template <typename Scalar>
SpectralField<Scalar> projector_point(const OperatorContext<Scalar>& ctx,
                                      const SpectralField<Scalar>& u) {
  return u - projector_continuous(ctx, u);
}

// e^{-i t H} (generator H) or e^{-i t H_0} (generator H0).
enum class Generator { kPerturbed, kFree };

template <typename Scalar>
SpectralField<Scalar> linear_propagate(const OperatorContext<Scalar>& ctx, Scalar t,
                                       const SpectralField<Scalar>& u,
                                       Generator gen = Generator::kPerturbed) {
  using C = std::complex<Scalar>;
  if (gen == Generator::kFree) return free_propagate(ctx.grid, t, u);
  CplxVec<Scalar> c = ctx.to_coeffs(u);
  for (Eigen::Index k = 0; k < ctx.n(); ++k) c[k] *= std::exp(C(0, -t * ctx.eigenvalues[k]));
  return ctx.from_coeffs(c);
}

enum class Flavor { kFlat, kDistorted };

// Sobolev norm || <sqrt H>^s (<x>^sigma u) ||_{L^2}; the distorted flavor uses
// <sqrt(max(lambda, 0))> so negative eigenvalues sit in the low part.
template <typename Scalar>
Scalar sobolev_norm(const OperatorContext<Scalar>& ctx, const SpectralField<Scalar>& u, Scalar s,
                    Flavor flavor = Flavor::kDistorted, Scalar sigma = 0) {
  if (flavor == Flavor::kFlat) return flat_sobolev_norm(ctx.grid, u, s, sigma);
  if (s < Scalar(0) && ctx.has_negative_spectrum()) {
    throw NumericalError("sobolev_norm: negative s undefined for distorted flavor "
                         "in the presence of negative eigenvalues");
  }
  SpectralField<Scalar> w = u;
  if (sigma != Scalar(0)) {
    for (Eigen::Index j = 0; j < ctx.n(); ++j) {
      const Scalar xx = ctx.grid.x(j);
      w[j] *= std::pow(Scalar(1) + xx * xx, sigma / 2);
    }
  }
  if (s != Scalar(0)) {
    w = apply_function(
        ctx, [s](Scalar lam) { return std::pow(Scalar(1) + std::max(lam, Scalar(0)), s / 2); }, w);
  }
  return ctx.grid.norm(w);
}

}  // namespace nlslab

#endif  // NLSLAB_OPERATOR_CONTEXT_HPP_
