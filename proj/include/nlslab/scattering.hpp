#ifndef NLSLAB_SCATTERING_HPP_
#define NLSLAB_SCATTERING_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "nlslab/lattice_helmholtz.hpp"
#include "nlslab/littlewood_paley.hpp"
#include "nlslab/operator_context.hpp"

namespace nlslab {

// ---------------------------------------------------------------------------
// Limiting absorption: R+(lambda) f by two-term-linear Richardson in epsilon.
// ---------------------------------------------------------------------------

template <typename Scalar>
struct ResolventResult {
  SpectralField<Scalar> field;      // extrapolated R+(lambda) f
  Scalar error_estimate = 0;        // change of the extrapolant between the last two pairs
  Scalar last_defect = 0;           // || extrap - smallest-epsilon value ||
  std::vector<Scalar> epsilons;
};

template <typename Scalar>
std::vector<Scalar> default_epsilon_schedule(Scalar eps0 = Scalar(1e-3), int terms = 4,
                                             Scalar ratio = Scalar(0.5)) {
  std::vector<Scalar> out;
  Scalar e = eps0;
  for (int i = 0; i < terms; ++i, e *= ratio) out.push_back(e);
  return out;
}

template <typename Scalar>
ResolventResult<Scalar> resolvent_limit(const OperatorContext<Scalar>& ctx, Scalar lambda,
                                        const SpectralField<Scalar>& f,
                                        std::vector<Scalar> schedule = {},
                                        Scalar collision_tol = Scalar(1e-3)) {
  using C = std::complex<Scalar>;
  if (!(lambda > Scalar(0))) throw std::invalid_argument("resolvent_limit: lambda must be > 0");
  if (schedule.empty()) schedule = default_epsilon_schedule<Scalar>();
  if (schedule.size() < 2) throw std::invalid_argument("resolvent_limit: need >= 2 epsilons");
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (!(schedule[i] < schedule[i - 1]) || !(schedule[i] > Scalar(0))) {
      throw std::invalid_argument("resolvent_limit: schedule must be positive decreasing");
    }
  }
  Scalar dist = std::numeric_limits<Scalar>::max();
  Scalar nearest = 0;
  for (Eigen::Index k = 0; k < ctx.n(); ++k) {
    const Scalar d = std::abs(ctx.eigenvalues[k] - lambda);
    if (d < dist) { dist = d; nearest = ctx.eigenvalues[k]; }
  }
  if (dist < collision_tol) {
    throw NumericalError("resolvent_limit: lambda collides with discrete eigenvalue " +
                         std::to_string(double(nearest)));
  }
  const CplxVec<Scalar> c = ctx.to_coeffs(f);
  auto resolvent_at = [&](Scalar eps) {
    CplxVec<Scalar> rc(ctx.n());
    for (Eigen::Index k = 0; k < ctx.n(); ++k) {
      rc[k] = c[k] / (C(ctx.eigenvalues[k] - lambda, -eps));
    }
    return rc;
  };
  // linear model R(eps) ~ R0 + c eps, extrapolated from consecutive pairs
  auto extrapolate = [&](Scalar e1, const CplxVec<Scalar>& r1, Scalar e2,
                         const CplxVec<Scalar>& r2) {
    return ((e1 * r2 - e2 * r1) / (e1 - e2)).eval();
  };
  std::vector<CplxVec<Scalar>> rs;
  for (Scalar e : schedule) rs.push_back(resolvent_at(e));
  const std::size_t m = schedule.size();
  const CplxVec<Scalar> ex_last =
      extrapolate(schedule[m - 2], rs[m - 2], schedule[m - 1], rs[m - 1]);
  ResolventResult<Scalar> out;
  out.field = ctx.from_coeffs(ex_last);
  if (m >= 3) {
    const CplxVec<Scalar> ex_prev =
        extrapolate(schedule[m - 3], rs[m - 3], schedule[m - 2], rs[m - 2]);
    out.error_estimate = std::sqrt(ctx.grid.h) * (ex_last - ex_prev).norm();
  }
  out.last_defect = std::sqrt(ctx.grid.h) * (ex_last - rs[m - 1]).norm();
  if (m < 3) out.error_estimate = out.last_defect;
  out.epsilons = schedule;
  return out;
}

// ||(H - lambda) u - f||_{L^2} with eigencomponents inside the shell
// |lambda_k - lambda| < shell_halfwidth removed; the boundary value of the
// resolvent only exists off the energy shell on a finite grid.
template <typename Scalar>
Scalar helmholtz_residual_off_shell(const OperatorContext<Scalar>& ctx, Scalar lambda,
                                    const SpectralField<Scalar>& u, const SpectralField<Scalar>& f,
                                    Scalar shell_halfwidth) {
  CplxVec<Scalar> r = ctx.to_coeffs(u);
  const CplxVec<Scalar> cf = ctx.to_coeffs(f);
  for (Eigen::Index k = 0; k < ctx.n(); ++k) {
    if (std::abs(ctx.eigenvalues[k] - lambda) < shell_halfwidth) {
      r[k] = 0;
    } else {
      r[k] = (ctx.eigenvalues[k] - lambda) * r[k] - cf[k];
    }
  }
  return std::sqrt(ctx.grid.h) * ctx.from_coeffs(r).norm();
}

// ---------------------------------------------------------------------------
// Generalized plane waves by the Lippmann-Schwinger equation.
// ---------------------------------------------------------------------------

template <typename Scalar>
struct PlaneWaveSolution {
  Scalar xi = 0;
  SpectralField<Scalar> wave;     // e(., xi) on the full grid
  Scalar residual = 0;            // interior lattice Helmholtz residual, relative
  Scalar residual_absolute = 0;
};

// Solves e = e^{i xi x} - R+(xi^2)(V e) as a dense system on the support of V,
// with R+ realized by the outgoing lattice kernel.  The returned residual is
// measured with the same 7-point operator the kernel inverts.
template <typename Scalar>
PlaneWaveSolution<Scalar> solve_plane_wave(const OperatorContext<Scalar>& ctx, Scalar xi,
                                           Scalar support_cut = Scalar(1e-13)) {
  using C = std::complex<Scalar>;
  if (xi == Scalar(0)) throw std::invalid_argument("solve_plane_wave: xi must be nonzero");
  const Scalar axi = std::abs(xi);
  const Eigen::Index n = ctx.n();
  const Scalar h = ctx.grid.h;

  PlaneWaveSolution<Scalar> out;
  out.xi = xi;
  const Scalar vmax = ctx.potential.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (vmax > 0 && std::abs(ctx.potential[j]) > support_cut * vmax) support.push_back(j);
  }
  if (support.empty()) {
    // V == 0: the continuum exponential solves the problem as stated
    out.wave.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) out.wave[j] = std::exp(C(0, xi * ctx.grid.x(j)));
    out.residual = 0;
    return out;
  }

  const LatticeHelmholtzKernel<Scalar> g(axi, h, n);
  // incident wave = the exact propagating lattice mode at energy xi^2, so the
  // free part satisfies the discrete Helmholtz identity to machine precision.
  // Near the lattice band edge (xi h approaching the symbol maximum) the mode
  // drifts or ceases to exist; the continuum exponential is used there.
  Scalar kk = g.lattice_momentum();
  if (!(kk > 0) || std::abs(kk - axi) > Scalar(0.05) * axi) kk = axi;
  if (xi < 0) kk = -kk;
  SpectralField<Scalar> einc(n);
  for (Eigen::Index j = 0; j < n; ++j) einc[j] = std::exp(C(0, kk * ctx.grid.x(j)));
  if (support.front() < 8 || support.back() >= n - 8) {
    throw std::invalid_argument("solve_plane_wave: potential not supported well inside the box");
  }

  const Eigen::Index s = Eigen::Index(support.size());
  CplxMat<Scalar> A = CplxMat<Scalar>::Identity(s, s);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) {
      A(a, b) += g(support[a] - support[b]) * ctx.potential[support[b]] * h;
    }
  }
  Eigen::PartialPivLU<CplxMat<Scalar>> lu(A);
  CplxVec<Scalar> rhs(s);
  for (Eigen::Index a = 0; a < s; ++a) rhs[a] = einc[support[a]];
  const CplxVec<Scalar> es = lu.solve(rhs);
  if (!es.allFinite() || (A * es - rhs).norm() > Scalar(1e-8) * rhs.norm()) {
    throw NumericalError("solve_plane_wave: singular Lippmann-Schwinger system at energy " +
                         std::to_string(double(xi * xi)));
  }

  out.wave = einc;
  for (Eigen::Index j = 0; j < n; ++j) {
    C acc(0, 0);
    for (Eigen::Index b = 0; b < s; ++b) {
      acc += g(j - support[b]) * ctx.potential[support[b]] * es[b] * h;
    }
    out.wave[j] -= acc;
  }

  Scalar worst = 0;
  for (Eigen::Index j = 3; j < n - 3; ++j) {
    worst = std::max(worst, std::abs(g.residual_row(out.wave, ctx.potential, axi, j)));
  }
  out.residual_absolute = worst;
  out.residual = worst / (std::sqrt(h) * out.wave.norm());
  return out;
}

template <typename Scalar>
struct PlaneWaveTable {
  RealVec<Scalar> momenta;
  CplxMat<Scalar> waves;  // column m = e(., xi_m)
  RealVec<Scalar> residuals;
};

// ---------------------------------------------------------------------------
// Distorted Fourier transform.
// ---------------------------------------------------------------------------

enum class TransformRoute { kEigenbasis, kLippmannSchwinger };

// Partial isometry onto Ran P_c.  forward() returns momentum-side
// coefficients c_m; inverse() is the adjoint.  Rows carry their energy
// coordinate (and, for the LS route, a signed momentum).
template <typename Scalar = double>
struct DistortedTransform {
  TransformRoute route = TransformRoute::kEigenbasis;
  CplxMat<Scalar> rows;          // n_rows x n, already normalized
  RealVec<Scalar> row_energy;    // lambda coordinate of each row
  RealVec<Scalar> row_momentum;  // signed xi (LS route); sqrt(lambda) for eigen route
  Scalar grid_weight = 0;        // h of the underlying grid

  CplxVec<Scalar> forward(const SpectralField<Scalar>& u) const {
    return grid_weight * (rows.conjugate() * u);
  }
  SpectralField<Scalar> inverse(const CplxVec<Scalar>& c) const {
    return rows.transpose() * c;
  }
};

template <typename Scalar>
DistortedTransform<Scalar> build_transform(const OperatorContext<Scalar>& ctx,
                                           TransformRoute route) {
  DistortedTransform<Scalar> t;
  t.route = route;
  t.grid_weight = ctx.grid.h;
  const Eigen::Index n = ctx.n();
  if (route == TransformRoute::kEigenbasis) {
    const Eigen::Index npos = n - Eigen::Index(ctx.negative_indices.size());
    t.rows.resize(npos, n);
    t.row_energy.resize(npos);
    t.row_momentum.resize(npos);
    Eigen::Index r = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (ctx.eigenvalues[k] < Scalar(0)) continue;
      t.rows.row(r) = ctx.eigenvectors.col(k).transpose();
      t.row_energy[r] = ctx.eigenvalues[k];
      // the eigenbasis does not resolve the +-xi degeneracy in d = 1; rows
      // carry the nonnegative energy coordinate (radial symbols only)
      t.row_momentum[r] = energy_coordinate(ctx.eigenvalues[k]);
      ++r;
    }
    return t;
  }
  // Lippmann-Schwinger route on the exact box momenta, xi != 0
  if (n > 2048) {
    throw std::invalid_argument("build_transform: LS route capped at n = 2048 (momentum "
                                "grid too fine for the dense per-momentum solves)");
  }
  std::vector<Scalar> momenta;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar xi = ctx.grid.momentum(j);
    if (xi != Scalar(0)) momenta.push_back(xi);
  }
  std::sort(momenta.begin(), momenta.end());
  const Eigen::Index rows = Eigen::Index(momenta.size());
  t.rows.resize(rows, n);
  t.row_energy.resize(rows);
  t.row_momentum.resize(rows);
  const Scalar nrm = Scalar(1) / std::sqrt(2 * ctx.grid.half_length);
  for (Eigen::Index m = 0; m < rows; ++m) {
    const Scalar xi = momenta[m];
    PlaneWaveSolution<Scalar> pw = solve_plane_wave(ctx, xi);
    t.rows.row(m) = (nrm * pw.wave).transpose();
    t.row_energy[m] = xi * xi;
    t.row_momentum[m] = xi;
  }
  return t;
}

// M_m(H) u through a constructed transform; m is sampled at the signed row
// momentum.  Bounded m enforced sample-wise.
template <typename Scalar, typename Fn>
SpectralField<Scalar> transform_multiplier(const DistortedTransform<Scalar>& t, Fn&& m,
                                           const SpectralField<Scalar>& u) {
  CplxVec<Scalar> c = t.forward(u);
  for (Eigen::Index r = 0; r < c.size(); ++r) {
    const Scalar mv = Scalar(m(t.row_momentum[r]));
    if (!std::isfinite(mv)) throw NumericalError("transform_multiplier: unbounded symbol sample");
    c[r] *= mv;
  }
  return t.inverse(c);
}

// Radial distorted multiplier through the exact functional calculus:
// m(xi) = f(|xi|^2) gives M_m(H) = f(H) P_c.  The symbol is sampled at the
// nonnegative energy coordinate sqrt(lambda); in d = 1 non-radial symbols
// need the LS-route transform.
template <typename Scalar, typename Fn>
SpectralField<Scalar> distorted_multiplier(const OperatorContext<Scalar>& ctx, Fn&& m,
                                           const SpectralField<Scalar>& u) {
  SpectralField<Scalar> pc = projector_continuous(ctx, u);
  return apply_function(
      ctx, [&m](Scalar lam) { return m(energy_coordinate(lam)); }, pc);
}

// ---------------------------------------------------------------------------
// Wave operators at finite time.
// ---------------------------------------------------------------------------

template <typename Scalar>
struct WaveOperatorResult {
  SpectralField<Scalar> field;         // e^{i t H} e^{-i t H0} u at t = t_max
  std::vector<Scalar> times;           // Cauchy checkpoints
  std::vector<Scalar> increments;      // || W_{t_k} u - W_{t_{k-1}} u ||
  Scalar edge_mass_fraction = 0;       // worst free-evolution mass near the box edge
};

template <typename Scalar>
WaveOperatorResult<Scalar> wave_operator_apply(const OperatorContext<Scalar>& ctx,
                                               const SpectralField<Scalar>& u, Scalar t_max,
                                               int checkpoints = 5,
                                               Scalar leakage_threshold = Scalar(1e-4)) {
  if (checkpoints < 2) throw std::invalid_argument("wave_operator_apply: need >= 2 checkpoints");
  WaveOperatorResult<Scalar> out;
  const Eigen::Index n = ctx.n();
  const Scalar total = ctx.grid.norm(u);
  SpectralField<Scalar> prev;
  for (int c = 1; c <= checkpoints; ++c) {
    const Scalar t = t_max * Scalar(c) / Scalar(checkpoints);
    SpectralField<Scalar> freeu = free_propagate(ctx.grid, t, u);
    Scalar edge = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(ctx.grid.x(j)) >= Scalar(0.9) * ctx.grid.half_length) {
        edge += std::norm(freeu[j]);
      }
    }
    edge = std::sqrt(ctx.grid.h * edge) / total;
    out.edge_mass_fraction = std::max(out.edge_mass_fraction, edge);
    SpectralField<Scalar> w = linear_propagate(ctx, -t, freeu);  // e^{+i t H}
    out.times.push_back(t);
    if (prev.size() > 0) out.increments.push_back(ctx.grid.norm(SpectralField<Scalar>(w - prev)));
    prev = w;
    if (c == checkpoints) out.field = w;
  }
  if (out.edge_mass_fraction > leakage_threshold) {
    const Scalar suggestion = ctx.grid.half_length * 2;
    throw NumericalError("wave_operator_apply: mass leakage " +
                         std::to_string(double(out.edge_mass_fraction)) +
                         " beyond threshold; increase the box (suggested L >= " +
                         std::to_string(double(suggestion)) + ")");
  }
  return out;
}

// adjoint W_t^* = e^{i t H0} e^{-i t H}
template <typename Scalar>
SpectralField<Scalar> wave_operator_adjoint_apply(const OperatorContext<Scalar>& ctx,
                                                  const SpectralField<Scalar>& u, Scalar t_max) {
  return free_propagate(ctx.grid, -t_max, linear_propagate(ctx, t_max, u));
}

}  // namespace nlslab

#endif  // NLSLAB_SCATTERING_HPP_
