#ifndef NLSLAB_RNG_HPP_
#define NLSLAB_RNG_HPP_

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nlslab {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Counter-based generator: every draw is a pure function of
// (seed, stream, index, draw counter), so ensembles are reproducible
// independent of evaluation order or threading.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
      : key_(detail::splitmix64(seed ^ detail::splitmix64(stream ^ detail::splitmix64(index)))) {}

  std::uint64_t next_u64() {
    return detail::splitmix64(key_ ^ detail::splitmix64(counter_++));
  }

  // uniform in (0, 1)
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard real normal via Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

enum class LawKind { kComplexGaussian, kRademacher, kUniformDisc };

inline LawKind law_from_string(const std::string& s) {
  if (s == "complex-gaussian") return LawKind::kComplexGaussian;
  if (s == "rademacher") return LawKind::kRademacher;
  if (s == "uniform-disc") return LawKind::kUniformDisc;
  throw std::invalid_argument("unknown coefficient law: " + s);
}

// Mean-zero coefficient law with E|g|^2 = variance and a subgaussian
// moment-generating bound |E exp(gamma X)| <= exp(c gamma^2) for the real
// marginals.  The constants below are exact for the shipped families.
struct CoefficientLaw {
  LawKind kind = LawKind::kComplexGaussian;
  double variance = 1.0;

  // subgaussian constant for the real marginal at unit total variance
  double subgaussian_c() const {
    switch (kind) {
      case LawKind::kComplexGaussian: return 0.25;  // Re g ~ N(0, 1/2)
      case LawKind::kRademacher: return 0.5;        // |E e^{g x}| <= e^{x^2/2}
      case LawKind::kUniformDisc: return 0.5;       // compact support in [-sqrt 2, sqrt 2]
    }
    return 0.5;
  }

  std::complex<double> sample(CounterRng& rng) const {
    const double s = std::sqrt(variance);
    switch (kind) {
      case LawKind::kComplexGaussian: {
        const double a = rng.normal() / std::sqrt(2.0);
        const double b = rng.normal() / std::sqrt(2.0);
        return {s * a, s * b};
      }
      case LawKind::kRademacher: {
        return {(rng.uniform() < 0.5) ? -s : s, 0.0};
      }
      case LawKind::kUniformDisc: {
        // uniform on the disc of radius sqrt(2) has E|g|^2 = 1
        const double r = std::sqrt(2.0 * rng.uniform());
        const double a = 2.0 * M_PI * rng.uniform();
        return {s * r * std::cos(a), s * r * std::sin(a)};
      }
    }
    return {0.0, 0.0};
  }

  // E exp(gamma * Re g), by closed form or quadrature; used to audit the
  // subgaussian hypothesis.
  double mgf_real(double gamma) const {
    switch (kind) {
      case LawKind::kComplexGaussian:
        return std::exp(0.25 * variance * gamma * gamma);
      case LawKind::kRademacher:
        return std::cosh(gamma * std::sqrt(variance));
      case LawKind::kUniformDisc: {
        // density of Re g on [-R, R], R = sqrt(2 variance):
        // f(x) = 2 sqrt(R^2 - x^2) / (pi R^2); integrate by Simpson
        const double R = std::sqrt(2.0 * variance);
        const int m = 2000;
        double acc = 0.0;
        const double dx = 2.0 * R / m;
        for (int i = 0; i <= m; ++i) {
          const double x = -R + i * dx;
          const double f = 2.0 * std::sqrt(std::max(R * R - x * x, 0.0)) / (M_PI * R * R);
          const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
          acc += w * f * std::exp(gamma * x);
        }
        return acc * dx / 3.0;
      }
    }
    return 1.0;
  }
};

}  // namespace nlslab

#endif  // NLSLAB_RNG_HPP_
