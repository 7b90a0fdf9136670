#ifndef NLSLAB_RANDOMIZATION_HPP_
#define NLSLAB_RANDOMIZATION_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "nlslab/cutoffs.hpp"
#include "nlslab/fit.hpp"
#include "nlslab/littlewood_paley.hpp"
#include "nlslab/operator_context.hpp"
#include "nlslab/rng.hpp"

namespace nlslab {

// Unit-cube partition of the (nonnegative) distorted frequency axis:
// psi_n(kappa) = wiener_bump(kappa - n), n = 0 .. n_cubes-1, which tiles the
// represented momentum range [0, kmax].
template <typename Scalar = double>
struct WienerPartition {
  int n_cubes = 0;

  static WienerPartition covering(const OperatorContext<Scalar>& ctx) {
    WienerPartition p;
    p.n_cubes = int(std::ceil(double(ctx.grid.momentum_max()))) + 2;
    return p;
  }

  Scalar cube_value(int cube, Scalar kappa) const {
    return wiener_bump(kappa - Scalar(cube));
  }

  Scalar partition_residual(const OperatorContext<Scalar>& ctx) const {
    Scalar worst = 0;
    for (Eigen::Index k = 0; k < ctx.n(); ++k) {
      const Scalar kap = energy_coordinate(ctx.eigenvalues[k]);
      if (ctx.eigenvalues[k] < Scalar(0)) continue;  // point part is not covered
      Scalar s = 0;
      for (int c = 0; c < n_cubes; ++c) s += cube_value(c, kap);
      worst = std::max(worst, std::abs(s - Scalar(1)));
    }
    return worst;
  }
};

// M_{psi_n}(H) u (zero on the point spectrum).
template <typename Scalar>
SpectralField<Scalar> cube_multiplier(const OperatorContext<Scalar>& ctx,
                                      const WienerPartition<Scalar>& part, int cube,
                                      const SpectralField<Scalar>& u) {
  return apply_function(
      ctx,
      [&](Scalar lam) {
        if (lam < Scalar(0)) return Scalar(0);
        return part.cube_value(cube, energy_coordinate(lam));
      },
      u);
}

// Per-cube coefficient draws for one sample; pure function of
// (seed, cube index, sample index) per the reproducibility contract.
inline std::vector<std::complex<double>> draw_cube_coefficients(const CoefficientLaw& law,
                                                                int n_cubes, std::uint64_t seed,
                                                                std::uint64_t sample_index) {
  std::vector<std::complex<double>> g(n_cubes);
  for (int c = 0; c < n_cubes; ++c) {
    CounterRng rng(seed, std::uint64_t(c), sample_index);
    g[c] = law.sample(rng);
  }
  return g;
}

template <typename Scalar>
struct RandomizedField {
  SpectralField<Scalar> field;
  bool projected_input = false;  // set when u0 had to be projected onto Ran P_c
};

// Wiener randomization u0 -> sum_n g_n(omega) M_{psi_n}(H) u0.  The
// multipliers and the propagator are simultaneously diagonal, so this
// commutes with e^{-itH} realization-by-realization.
template <typename Scalar>
RandomizedField<Scalar> randomize(const OperatorContext<Scalar>& ctx,
                                  const WienerPartition<Scalar>& part,
                                  const SpectralField<Scalar>& u0, const CoefficientLaw& law,
                                  std::uint64_t seed, std::uint64_t sample_index = 0) {
  using C = std::complex<Scalar>;
  RandomizedField<Scalar> out;
  CplxVec<Scalar> c = ctx.to_coeffs(u0);
  Scalar point_mass = 0, total = c.norm();
  for (Eigen::Index k : ctx.negative_indices) point_mass += std::norm(c[k]);
  point_mass = std::sqrt(point_mass);
  if (total == Scalar(0) || total - point_mass <= Scalar(1e-14) * total) {
    throw std::invalid_argument("randomize: datum has no continuous-spectrum content");
  }
  if (point_mass > Scalar(1e-12) * total) out.projected_input = true;
  const auto g = draw_cube_coefficients(law, part.n_cubes, seed, sample_index);
  for (Eigen::Index k = 0; k < ctx.n(); ++k) {
    if (ctx.eigenvalues[k] < Scalar(0)) {
      c[k] = C(0, 0);
      continue;
    }
    const Scalar kap = energy_coordinate(ctx.eigenvalues[k]);
    C gain(0, 0);
    for (int cube = 0; cube < part.n_cubes; ++cube) {
      const Scalar w = part.cube_value(cube, kap);
      if (w != Scalar(0)) gain += C(g[cube]) * w;
    }
    c[k] *= gain;
  }
  out.field = ctx.from_coeffs(c);
  return out;
}

// sum_n || M_{psi_n} u0 ||^2, the exact mean of ||u0^omega||^2 for
// unit-variance laws.
template <typename Scalar>
Scalar cube_energy_sum(const OperatorContext<Scalar>& ctx, const WienerPartition<Scalar>& part,
                       const SpectralField<Scalar>& u0, Scalar sobolev_s = 0) {
  CplxVec<Scalar> c = ctx.to_coeffs(u0);
  std::vector<double> terms;
  for (int cube = 0; cube < part.n_cubes; ++cube) {
    Scalar acc = 0;
    for (Eigen::Index k = 0; k < ctx.n(); ++k) {
      if (ctx.eigenvalues[k] < Scalar(0)) continue;
      const Scalar kap = energy_coordinate(ctx.eigenvalues[k]);
      const Scalar w = part.cube_value(cube, kap);
      const Scalar bessel = std::pow(Scalar(1) + ctx.eigenvalues[k], sobolev_s);
      acc += w * w * bessel * std::norm(c[k]);
    }
    terms.push_back(double(acc));
  }
  return Scalar(pairwise_sum(terms));
}

// ---------------------------------------------------------------------------
// Khinchin moment check.
// ---------------------------------------------------------------------------

struct KhinchinReport {
  double p = 2;
  double moment = 0;        // (E |sum g_n c_n|^p)^{1/p}
  double raw_ratio = 0;     // moment / ||c||_2
  double normalized = 0;    // moment / (sqrt(p) ||c||_2)
};

inline KhinchinReport khinchin_check(const CoefficientLaw& law,
                                     const std::vector<std::complex<double>>& c, double p,
                                     int n_samples, std::uint64_t seed) {
  if (p < 1.0) throw std::invalid_argument("khinchin_check: p must be >= 1");
  std::vector<double> vals(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    const auto g = draw_cube_coefficients(law, int(c.size()), seed, std::uint64_t(s));
    std::complex<double> acc(0, 0);
    for (std::size_t i = 0; i < c.size(); ++i) acc += g[i] * c[i];
    vals[s] = std::pow(std::abs(acc), p);
  }
  double l2 = 0;
  for (const auto& x : c) l2 += std::norm(x);
  l2 = std::sqrt(l2);
  KhinchinReport rep;
  rep.p = p;
  rep.moment = std::pow(pairwise_sum(vals) / n_samples, 1.0 / p);
  rep.raw_ratio = rep.moment / l2;
  rep.normalized = rep.raw_ratio / std::sqrt(p);
  return rep;
}

// ---------------------------------------------------------------------------
// Monte-Carlo tail probabilities.
// ---------------------------------------------------------------------------

struct EnsembleReport {
  std::uint64_t seed = 0;
  int n_samples = 0;
  std::vector<double> samples;        // per-sample norm values
  std::vector<double> lambda_grid;
  std::vector<double> tail_probability;
  LinearFit fit;                      // log P vs lambda^2 on the tail region
  bool fit_valid = false;
  bool pass = false;                  // fit valid and slope < 0
};

// norm_of_sample maps the per-cube coefficient draws of one sample to the
// norm value; the registered space-time norms below precompute the evolved
// cube pieces so each sample is a cheap linear combination.
inline EnsembleReport tail_probability_mc(
    const std::function<double(const std::vector<std::complex<double>>&)>& norm_of_sample,
    const CoefficientLaw& law, int n_cubes, std::vector<double> lambda_grid, int n_samples,
    std::uint64_t seed) {
  if (n_samples < 1000) throw std::invalid_argument("tail_probability_mc: need >= 1e3 samples");
  EnsembleReport rep;
  rep.seed = seed;
  rep.n_samples = n_samples;
  rep.samples.resize(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    rep.samples[s] = norm_of_sample(draw_cube_coefficients(law, n_cubes, seed, std::uint64_t(s)));
  }
  std::vector<double> sorted = rep.samples;
  std::sort(sorted.begin(), sorted.end());
  if (lambda_grid.empty()) {
    // quantile-spaced grid through the upper half of the sample distribution
    for (int i = 0; i <= 40; ++i) {
      const double q = 0.5 + 0.4999 * double(i) / 40.0;
      lambda_grid.push_back(sorted[std::size_t(q * (n_samples - 1))]);
    }
    lambda_grid.erase(std::unique(lambda_grid.begin(), lambda_grid.end()), lambda_grid.end());
  }
  rep.lambda_grid = lambda_grid;
  rep.tail_probability.resize(lambda_grid.size());
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), lambda_grid[i]);
    rep.tail_probability[i] = double(sorted.end() - it) / n_samples;
  }
  bool all_one = true;
  for (double p : rep.tail_probability) all_one = all_one && (p >= 1.0);
  if (all_one) {
    throw std::invalid_argument(
        "tail_probability_mc: lambda grid below all samples; rescale toward max sample " +
        std::to_string(sorted.back()));
  }
  // weighted LS on the tail region P in [10/n, 0.1]; weights ~ n P / (1 - P)
  std::vector<double> xs, ys, ws;
  const double pmin = 10.0 / n_samples;
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    const double p = rep.tail_probability[i];
    if (p < pmin || p > 0.1) continue;
    xs.push_back(lambda_grid[i] * lambda_grid[i]);
    ys.push_back(std::log(p));
    ws.push_back(n_samples * p / (1.0 - p));
  }
  if (xs.size() >= 3) {
    rep.fit = linear_fit(xs, ys, ws);
    rep.fit_valid = true;
    rep.pass = rep.fit.slope < 0;
  }
  return rep;
}

// Registered norm functionals -------------------------------------------------

// || . ||_{L^2} of the randomized datum itself.
template <typename Scalar>
std::function<double(const std::vector<std::complex<double>>&)> make_data_l2_norm(
    const OperatorContext<Scalar>& ctx, const WienerPartition<Scalar>& part,
    const SpectralField<Scalar>& u0) {
  CplxVec<Scalar> c = ctx.to_coeffs(projector_continuous(ctx, u0));
  // adjacent cubes overlap, so per-eigenvalue gains are stored rather than
  // per-cube norms
  const Eigen::Index n = ctx.n();
  RealMat<Scalar> gains(part.n_cubes, n);
  for (int cube = 0; cube < part.n_cubes; ++cube) {
    for (Eigen::Index k = 0; k < n; ++k) {
      gains(cube, k) = (ctx.eigenvalues[k] < Scalar(0))
                           ? Scalar(0)
                           : part.cube_value(cube, energy_coordinate(ctx.eigenvalues[k]));
    }
  }
  std::vector<std::complex<double>> coeffs(n);
  for (Eigen::Index k = 0; k < n; ++k) coeffs[k] = std::complex<double>(c[k]);
  const int ncubes = part.n_cubes;
  return [gains, coeffs, n, ncubes](const std::vector<std::complex<double>>& g) {
    double acc = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      std::complex<double> gain(0, 0);
      for (int cube = 0; cube < ncubes; ++cube) {
        const double w = double(gains(cube, k));
        if (w != 0.0) gain += g[cube] * w;
      }
      acc += std::norm(gain * coeffs[k]);
    }
    return std::sqrt(acc);
  };
}

// || e^{-itH} u^omega ||_{L^q_t L^r_x([0, horizon])} with trapezoid in t.
template <typename Scalar>
std::function<double(const std::vector<std::complex<double>>&)> make_evolved_lqlr_norm(
    const OperatorContext<Scalar>& ctx, const WienerPartition<Scalar>& part,
    const SpectralField<Scalar>& u0, double q, double r, double horizon, int n_times) {
  using C = std::complex<Scalar>;
  const Eigen::Index n = ctx.n();
  // evolved cube pieces at the quadrature times
  std::vector<std::vector<CplxVec<Scalar>>> pieces(n_times + 1);
  std::vector<double> times(n_times + 1);
  CplxVec<Scalar> c0 = ctx.to_coeffs(projector_continuous(ctx, u0));
  for (int it = 0; it <= n_times; ++it) {
    const Scalar t = Scalar(horizon) * Scalar(it) / Scalar(n_times);
    times[it] = double(t);
    pieces[it].resize(part.n_cubes);
    for (int cube = 0; cube < part.n_cubes; ++cube) {
      CplxVec<Scalar> ck(n);
      for (Eigen::Index k = 0; k < n; ++k) {
        Scalar w = (ctx.eigenvalues[k] < Scalar(0))
                       ? Scalar(0)
                       : part.cube_value(cube, energy_coordinate(ctx.eigenvalues[k]));
        ck[k] = c0[k] * w * std::exp(C(0, -t * ctx.eigenvalues[k]));
      }
      pieces[it][cube] = ctx.from_coeffs(ck);
    }
  }
  const Grid1D<Scalar> grid = ctx.grid;
  const int ncubes = part.n_cubes;
  return [pieces, times, grid, q, r, ncubes](const std::vector<std::complex<double>>& g) {
    std::vector<double> pow_q(times.size());
    CplxVec<Scalar> field(pieces[0][0].size());
    for (std::size_t it = 0; it < times.size(); ++it) {
      field.setZero();
      for (int cube = 0; cube < ncubes; ++cube) {
        field += std::complex<Scalar>(g[cube]) * pieces[it][cube];
      }
      pow_q[it] = std::pow(double(grid.lp_norm(field, Scalar(r))), q);
    }
    return std::pow(trapezoid(times, pow_q), 1.0 / q);
  };
}

}  // namespace nlslab

#endif  // NLSLAB_RANDOMIZATION_HPP_
