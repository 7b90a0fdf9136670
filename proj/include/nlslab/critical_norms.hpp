#ifndef NLSLAB_CRITICAL_NORMS_HPP_
#define NLSLAB_CRITICAL_NORMS_HPP_

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "nlslab/evolution.hpp"
#include "nlslab/littlewood_paley.hpp"
#include "nlslab/operator_context.hpp"

namespace nlslab {

// Hilbert-space-valued path sampled at increasing times.  With zero_prefix an
// implicit zero state precedes the first sample (the right-continuous,
// vanishing-at -infinity convention); the first jump then counts toward the
// variation.
template <typename Scalar = double>
struct DiscretePath {
  std::vector<Scalar> times;
  std::vector<CplxVec<Scalar>> values;
  bool zero_prefix = true;

  void validate() const {
    if (times.size() != values.size()) {
      throw std::invalid_argument("DiscretePath: times/values size mismatch");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (!(times[i] > times[i - 1])) {
        throw std::invalid_argument("DiscretePath: times must be strictly increasing");
      }
    }
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i].size() != values[0].size()) {
        throw std::invalid_argument("DiscretePath: inconsistent vector dimensions");
      }
    }
  }
};

// Exact sup over sub-partitions of (sum ||increments||^q)^{1/q} by dynamic
// programming over chain endpoints: best[k] = max_{j<k} best[j] + ||x_k-x_j||^q.
// The grid supremum is a lower bound for the continuum V^q norm of an
// interpolating path; reports label it "grid V^q".
template <typename Scalar>
Scalar q_variation(const DiscretePath<Scalar>& path, Scalar q) {
  path.validate();
  if (q < Scalar(1)) throw std::invalid_argument("q_variation: q must be >= 1");
  std::vector<const CplxVec<Scalar>*> pts;
  CplxVec<Scalar> zero;
  if (path.zero_prefix && !path.values.empty()) {
    zero = CplxVec<Scalar>::Zero(path.values[0].size());
    pts.push_back(&zero);
  }
  for (const auto& v : path.values) pts.push_back(&v);
  const std::size_t n = pts.size();
  if (n < 2) throw std::invalid_argument("q_variation: need >= 2 effective samples");
  std::vector<Scalar> best(n, Scalar(0));
  Scalar overall = 0;
  for (std::size_t k = 1; k < n; ++k) {
    Scalar b = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const Scalar inc = (*pts[k] - *pts[j]).norm();
      b = std::max(b, best[j] + std::pow(inc, q));
    }
    best[k] = b;
    overall = std::max(overall, b);
  }
  return std::pow(overall, Scalar(1) / q);
}

// || v ||_{V_H^q} with Sobolev weight: pull back samples by e^{+ t_k H},
// apply <sqrt H>^s, then take the grid q-variation.
template <typename Scalar>
Scalar adapted_norm(const OperatorContext<Scalar>& ctx, const DiscretePath<Scalar>& path, Scalar q,
                    Generator gen = Generator::kPerturbed, Scalar s = 0) {
  path.validate();
  DiscretePath<Scalar> pulled;
  pulled.zero_prefix = path.zero_prefix;
  pulled.times = path.times;
  pulled.values.reserve(path.values.size());
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    SpectralField<Scalar> w = (gen == Generator::kPerturbed)
                                  ? linear_propagate(ctx, -path.times[i], path.values[i])
                                  : free_propagate(ctx.grid, -path.times[i], path.values[i]);
    if (s != Scalar(0)) {
      if (gen == Generator::kPerturbed) {
        w = apply_function(
            ctx, [s](Scalar lam) { return std::pow(1 + std::max(lam, Scalar(0)), s / 2); }, w);
      } else {
        w = flat_multiplier(
            ctx.grid, [s](Scalar k) { return std::pow(1 + k * k, s / 2); }, w);
      }
    }
    // the grid weight makes the DP's Euclidean norms L^2(dx) norms
    pulled.values.push_back(std::sqrt(ctx.grid.h) * w);
  }
  return q_variation(pulled, q);
}

// X^{(d-2)/2} surrogate: blockwise adapted V^2 norms in a weighted l^2, with
// the low block counted at N = 1.  U^2 is not computed; U^2 -> V^2 embedding
// is noted in the report wherever this value stands in for the atomic norm.
template <typename Scalar>
Scalar x_norm(const OperatorContext<Scalar>& ctx, const DiscretePath<Scalar>& path) {
  path.validate();
  const Scalar d = Scalar(ctx.dimension);
  std::vector<long> blocks = dyadic_blocks(ctx.grid);
  Scalar acc = 0;
  // low block
  {
    DiscretePath<Scalar> bp;
    bp.zero_prefix = path.zero_prefix;
    bp.times = path.times;
    for (const auto& v : path.values) bp.values.push_back(lp_low_block(ctx, v, Flavor::kDistorted));
    const Scalar vn = adapted_norm(ctx, bp, Scalar(2));
    acc += vn * vn;  // N = 1 weight
  }
  for (long N : blocks) {
    DiscretePath<Scalar> bp;
    bp.zero_prefix = path.zero_prefix;
    bp.times = path.times;
    for (const auto& v : path.values) bp.values.push_back(lp_block(ctx, N, v, Flavor::kDistorted));
    const Scalar vn = adapted_norm(ctx, bp, Scalar(2));
    acc += std::pow(Scalar(N), d - 2) * vn * vn;
  }
  return std::sqrt(acc);
}

// B(u, v) = sum_i <u(t_i) - u(t_{i-1}), v(t_i)> for a right-continuous step
// path u with u(t_0) = 0 (complex pairing, conjugate on the increments).
template <typename Scalar>
std::complex<Scalar> duality_pairing(const DiscretePath<Scalar>& u, const DiscretePath<Scalar>& v) {
  u.validate();
  v.validate();
  if (!u.zero_prefix) {
    throw std::invalid_argument("duality_pairing: step path must start from zero (zero_prefix)");
  }
  if (u.times.size() != v.times.size()) {
    throw std::invalid_argument("duality_pairing: paths must share sample times");
  }
  std::complex<Scalar> acc(0, 0);
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const CplxVec<Scalar> inc = (i == 0) ? u.values[0] : (u.values[i] - u.values[i - 1]).eval();
    acc += inc.dot(v.values[i]);
  }
  return acc;
}

// sqrt( int || P_c psi ||^2_{H^{1, sigma}} dt ) over a sampled trajectory;
// shares its quadrature with evolution::local_smoothing_ratio.
template <typename Scalar>
Scalar weighted_spacetime_norm(const OperatorContext<Scalar>& ctx, const std::vector<Scalar>& times,
                               const std::vector<SpectralField<Scalar>>& fields,
                               Scalar sigma = Scalar(-0.6)) {
  if (times.size() != fields.size() || times.size() < 2) {
    throw std::invalid_argument("weighted_spacetime_norm: need >= 2 samples");
  }
  return std::sqrt(weighted_local_energy_sq(ctx, times, fields, sigma));
}

}  // namespace nlslab

#endif  // NLSLAB_CRITICAL_NORMS_HPP_
