#ifndef NLSLAB_TESTS_FIXTURES_HPP_
#define NLSLAB_TESTS_FIXTURES_HPP_

#include <complex>
#include <list>

#include "nlslab/operator_context.hpp"
#include "nlslab/rng.hpp"

namespace nlslab::testing {

// The standard well of the test suite: V(x) = -2 sech^2(x), whose continuum
// operator has the single bound state e0 = -1, phi0 = sech(x)/sqrt(2), and is
// reflectionless.  Contexts are cached per (L, n) since the dense solve is
// the expensive part of most tests.
inline const OperatorContext<double>& sech_context(double L, Eigen::Index n) {
  struct Key {
    double L;
    Eigen::Index n;
  };
  static std::list<std::pair<Key, OperatorContext<double>>> cache;
  for (const auto& [key, ctx] : cache) {
    if (key.L == L && key.n == n) return ctx;
  }
  Grid1D<double> grid(L, n);
  cache.emplace_back(Key{L, n}, build_operator(grid, PotentialSpec<double>::sech2(2.0)));
  return cache.back().second;
}

inline const OperatorContext<double>& free_context(double L, Eigen::Index n) {
  struct Key {
    double L;
    Eigen::Index n;
  };
  static std::list<std::pair<Key, OperatorContext<double>>> cache;
  for (const auto& [key, ctx] : cache) {
    if (key.L == L && key.n == n) return ctx;
  }
  Grid1D<double> grid(L, n);
  cache.emplace_back(Key{L, n}, build_operator(grid, PotentialSpec<double>::zero()));
  return cache.back().second;
}

inline SpectralField<double> random_field(const Grid1D<double>& grid, std::uint64_t seed,
                                          std::uint64_t index = 0) {
  CounterRng rng(seed, 0, index);
  SpectralField<double> u(grid.n_points);
  for (Eigen::Index j = 0; j < grid.n_points; ++j) {
    u[j] = std::complex<double>(rng.normal(), rng.normal());
  }
  return u;
}

// random field band-limited to |k| <= kcut (smooth enough for quadratures)
inline SpectralField<double> random_smooth_field(const Grid1D<double>& grid, double kcut,
                                                 std::uint64_t seed, std::uint64_t index = 0) {
  Fft<double> fft;
  SpectralField<double> u = random_field(grid, seed, index);
  CplxVec<double> uh = fft.forward(u);
  for (Eigen::Index j = 0; j < grid.n_points; ++j) {
    if (std::abs(grid.momentum(j)) > kcut) uh[j] = 0;
  }
  return fft.inverse(uh);
}

}  // namespace nlslab::testing

#endif  // NLSLAB_TESTS_FIXTURES_HPP_
