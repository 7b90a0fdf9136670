#ifndef NLSLAB_LITTLEWOOD_PALEY_HPP_
#define NLSLAB_LITTLEWOOD_PALEY_HPP_

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nlslab/cutoffs.hpp"
#include "nlslab/operator_context.hpp"

namespace nlslab {

inline bool is_dyadic(long N) { return N >= 1 && (N & (N - 1)) == 0; }

// Frequency coordinate of an eigenvalue: block at N localizes sqrt(lambda)
// around N, so sigma-localization matches |xi| ~ N.  Negative eigenvalues map
// to 0 and land in the low block.
template <typename Scalar>
Scalar energy_coordinate(Scalar lambda) {
  return std::sqrt(std::max(lambda, Scalar(0)));
}

// Dyadic block list 2, 4, ..., N_max covering the resolved momentum range;
// together with the low block these reconstruct the identity on fields.
template <typename Scalar>
std::vector<long> dyadic_blocks(const Grid1D<Scalar>& grid) {
  std::vector<long> out;
  const Scalar kmax = grid.momentum_max();
  long N = 2;
  while (true) {
    out.push_back(N);
    if (Scalar(N) >= kmax) break;
    N *= 2;
  }
  return out;
}

template <typename Scalar>
SpectralField<Scalar> lp_block(const OperatorContext<Scalar>& ctx, long N,
                               const SpectralField<Scalar>& u, Flavor flavor) {
  if (!is_dyadic(N) || N < 2) throw std::invalid_argument("lp_block: N must be dyadic >= 2");
  if (flavor == Flavor::kFlat) {
    return flat_multiplier(ctx.grid,
                           [N](Scalar k) { return lp_phi(std::abs(k) / Scalar(N)); }, u);
  }
  return apply_function(
      ctx, [N](Scalar lam) { return lp_phi(energy_coordinate(lam) / Scalar(N)); }, u);
}

template <typename Scalar>
SpectralField<Scalar> lp_low_block(const OperatorContext<Scalar>& ctx,
                                   const SpectralField<Scalar>& u, Flavor flavor) {
  if (flavor == Flavor::kFlat) {
    return flat_multiplier(ctx.grid, [](Scalar k) { return lp_psi(std::abs(k)); }, u);
  }
  return apply_function(ctx, [](Scalar lam) { return lp_psi(energy_coordinate(lam)); }, u);
}

// Flat block by FFT only (no context); used by the big free-space sweeps.
template <typename Scalar>
SpectralField<Scalar> flat_lp_block(const Grid1D<Scalar>& grid, long N,
                                    const SpectralField<Scalar>& u, Fft<Scalar>* fft = nullptr) {
  if (!is_dyadic(N) || N < 2) throw std::invalid_argument("flat_lp_block: N must be dyadic >= 2");
  return flat_multiplier(grid, [N](Scalar k) { return lp_phi(std::abs(k) / Scalar(N)); }, u, fft);
}

template <typename Scalar>
SpectralField<Scalar> lp_reconstruct(const OperatorContext<Scalar>& ctx,
                                     const SpectralField<Scalar>& u, Flavor flavor) {
  SpectralField<Scalar> acc = lp_low_block(ctx, u, flavor);
  for (long N : dyadic_blocks(ctx.grid)) acc += lp_block(ctx, N, u, flavor);
  return acc;
}

// L^p norm of the square function.  Uses the energy-normalized sqrt cutoffs,
// whose squares tile exactly; for p = 2 the result equals ||u||_2 by
// Plancherel.
template <typename Scalar>
Scalar square_function_norm(const OperatorContext<Scalar>& ctx, const SpectralField<Scalar>& u,
                            Scalar p, Flavor flavor = Flavor::kDistorted) {
  RealVec<Scalar> sq = RealVec<Scalar>::Zero(ctx.n());
  auto add = [&](const SpectralField<Scalar>& b) { sq += b.cwiseAbs2(); };
  if (flavor == Flavor::kFlat) {
    add(flat_multiplier(ctx.grid, [](Scalar k) { return sqrt_lp_psi(std::abs(k)); }, u));
    for (long N : dyadic_blocks(ctx.grid)) {
      add(flat_multiplier(
          ctx.grid, [N](Scalar k) { return sqrt_lp_phi(std::abs(k) / Scalar(N)); }, u));
    }
  } else {
    add(apply_function(ctx, [](Scalar lam) { return sqrt_lp_psi(energy_coordinate(lam)); }, u));
    for (long N : dyadic_blocks(ctx.grid)) {
      add(apply_function(
          ctx, [N](Scalar lam) { return sqrt_lp_phi(energy_coordinate(lam) / Scalar(N)); }, u));
    }
  }
  SpectralField<Scalar> lam_field = sq.cwiseSqrt().template cast<std::complex<Scalar>>();
  return ctx.grid.lp_norm(lam_field, p);
}

// Bernstein quotient ||block u||_inf / (N^{d/2} ||block u||_2).
template <typename Scalar>
Scalar bernstein_ratio(const OperatorContext<Scalar>& ctx, long N, const SpectralField<Scalar>& u,
                       Flavor flavor = Flavor::kDistorted) {
  const SpectralField<Scalar> b = lp_block(ctx, N, u, flavor);
  const Scalar l2 = ctx.grid.norm(b);
  if (l2 == Scalar(0)) return Scalar(0);
  const Scalar linf = b.cwiseAbs().maxCoeff();
  return linf / (std::pow(Scalar(N), Scalar(ctx.dimension) / 2) * l2);
}

enum class CrossOrder { kFlatThenDistorted, kDistortedThenFlat };

// L^2 -> L^2 operator norm of Delta_K(flat) composed with tilde-Delta_N
// (distorted), computed as the largest singular value of the coupling block
// between the flat Fourier basis and the H-eigenbasis.
template <typename Scalar>
Scalar cross_localization_norm(const OperatorContext<Scalar>& ctx, long K, long N,
                               CrossOrder order = CrossOrder::kFlatThenDistorted) {
  if (!is_dyadic(K) || !is_dyadic(N) || K < 2 || N < 2) {
    throw std::invalid_argument("cross_localization_norm: K, N must be dyadic >= 2");
  }
  const Eigen::Index n = ctx.n();
  if (ctx.free_exact) {
    // both multipliers are diagonal in the Fourier basis; the composition is
    // the pointwise product of the symbols
    Scalar worst = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Scalar k = std::abs(ctx.grid.momentum(j));
      worst = std::max(worst, std::abs(lp_phi(k / Scalar(K)) * lp_phi(k / Scalar(N))));
    }
    return worst;
  }
  std::vector<Eigen::Index> rows;  // Fourier bins with phi(|k|/K) != 0
  std::vector<Scalar> wk;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar w = lp_phi(std::abs(ctx.grid.momentum(j)) / Scalar(K));
    if (w != Scalar(0)) {
      rows.push_back(j);
      wk.push_back(w);
    }
  }
  std::vector<Eigen::Index> cols;  // eigenvectors with phi(kappa/N) != 0
  std::vector<Scalar> wn;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar w = lp_phi(energy_coordinate(ctx.eigenvalues[k]) / Scalar(N));
    if (w != Scalar(0)) {
      cols.push_back(k);
      wn.push_back(w);
    }
  }
  if (rows.empty() || cols.empty()) return Scalar(0);

  // coupling in h-orthonormal bases: <fourier_j, e_k>_h via one FFT per column
  Fft<Scalar> fft;
  const Scalar nrm = ctx.grid.h / std::sqrt(2 * ctx.grid.half_length);
  CplxMat<Scalar> B(rows.size(), cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    CplxVec<Scalar> col = ctx.eigenvectors.col(cols[c]);
    // plane wave on [-L, L): e^{i k x_j} = e^{-i k L} * e^{2 pi i m j / n}
    CplxVec<Scalar> hat = fft.forward(col);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Scalar k = ctx.grid.momentum(rows[r]);
      const std::complex<Scalar> phase =
          std::exp(std::complex<Scalar>(0, k * ctx.grid.half_length));
      B(r, c) = nrm * phase * hat[rows[r]];
    }
  }
  for (std::size_t r = 0; r < rows.size(); ++r) B.row(r) *= wk[r];
  for (std::size_t c = 0; c < cols.size(); ++c) B.col(c) *= wn[c];
  if (order == CrossOrder::kDistortedThenFlat) B.adjointInPlace();
  Eigen::JacobiSVD<CplxMat<Scalar>> svd(B);
  return svd.singularValues()[0];
}

}  // namespace nlslab

#endif  // NLSLAB_LITTLEWOOD_PALEY_HPP_
