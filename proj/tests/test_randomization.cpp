#include <doctest.h>

#include <cmath>
#include <complex>

#include "nlslab/randomization.hpp"
#include "support/fixtures.hpp"

using namespace nlslab;
using testing::random_field;
using testing::sech_context;

TEST_CASE("Wiener partition tiles the represented momentum range") {
  const auto& ctx = sech_context(20.0, 256);
  const auto part = WienerPartition<double>::covering(ctx);
  CHECK(part.partition_residual(ctx) < 1e-12);

  // partition of unity at the operator level: sum of cube multipliers = P_c
  const auto u = random_field(ctx.grid, 5);
  SpectralField<double> acc = SpectralField<double>::Zero(ctx.n());
  for (int c = 0; c < part.n_cubes; ++c) acc += cube_multiplier(ctx, part, c, u);
  const auto pc = projector_continuous(ctx, u);
  CHECK(ctx.grid.norm(SpectralField<double>(acc - pc)) < 1e-11 * ctx.grid.norm(u));
}

TEST_CASE("randomize: determinism, P_c purity, projection warning") {
  const auto& ctx = sech_context(20.0, 256);
  const auto part = WienerPartition<double>::covering(ctx);
  CoefficientLaw law{LawKind::kComplexGaussian, 1.0};
  const auto u0 = projector_continuous(ctx, testing::random_smooth_field(ctx.grid, 8.0, 6));

  const auto a = randomize(ctx, part, u0, law, 42);
  const auto b = randomize(ctx, part, u0, law, 42);
  CHECK((a.field - b.field).norm() == 0.0);  // bit-identical
  CHECK_FALSE(a.projected_input);

  CHECK(ctx.grid.norm(projector_point(ctx, a.field)) < 1e-12);

  // datum with a bound-state component gets projected, with the warning flag
  SpectralField<double> dirty = u0 + 0.5 * ctx.ground_eigenfunction();
  const auto c = randomize(ctx, part, dirty, law, 42);
  CHECK(c.projected_input);
  CHECK(ctx.grid.norm(projector_point(ctx, c.field)) < 1e-12);

  // pure bound-state datum has no continuous content
  SpectralField<double> pure = ctx.ground_eigenfunction();
  CHECK_THROWS_AS(randomize(ctx, part, pure, law, 1), std::invalid_argument);
}

TEST_CASE("randomize commutes with the perturbed flow, same realization") {
  const auto& ctx = sech_context(20.0, 256);
  const auto part = WienerPartition<double>::covering(ctx);
  CoefficientLaw law{LawKind::kComplexGaussian, 1.0};
  const auto u0 = projector_continuous(ctx, testing::random_smooth_field(ctx.grid, 8.0, 7));
  const double t = 1.7;
  const auto lhs = linear_propagate(ctx, t, randomize(ctx, part, u0, law, 9).field);
  const auto rhs = randomize(ctx, part, linear_propagate(ctx, t, u0), law, 9).field;
  CHECK(ctx.grid.norm(SpectralField<double>(lhs - rhs)) < 1e-12 * ctx.grid.norm(lhs));
}

TEST_CASE("randomize: mean of ||u^omega||^2 matches the cube energy sum") {
  const auto& ctx = sech_context(20.0, 256);
  const auto part = WienerPartition<double>::covering(ctx);
  CoefficientLaw law{LawKind::kComplexGaussian, 1.0};
  const auto u0 = projector_continuous(ctx, testing::random_smooth_field(ctx.grid, 8.0, 8));

  auto l2 = make_data_l2_norm(ctx, part, u0);
  const int n_samples = 10000;
  std::vector<double> sq(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    const double v = l2(draw_cube_coefficients(law, part.n_cubes, 77, std::uint64_t(s)));
    sq[s] = v * v;
  }
  const double mc = pairwise_sum(sq) / n_samples;
  const double direct = cube_energy_sum(ctx, part, u0);
  CHECK(mc == doctest::Approx(direct).epsilon(0.02));
}

TEST_CASE("randomize: regularity preservation in mean for s in {0, 1/2}") {
  const auto& ctx = sech_context(20.0, 256);
  const auto part = WienerPartition<double>::covering(ctx);
  CoefficientLaw law{LawKind::kComplexGaussian, 1.0};
  const auto u0 = projector_continuous(ctx, testing::random_smooth_field(ctx.grid, 8.0, 9));
  for (double s : {0.0, 0.5}) {
    const int n_samples = 4000;
    std::vector<double> sq(n_samples);
    for (int k = 0; k < n_samples; ++k) {
      const auto r = randomize(ctx, part, u0, law, 123, std::uint64_t(k));
      const double v = sobolev_norm(ctx, r.field, s, Flavor::kDistorted);
      sq[k] = v * v;
    }
    const double mc = pairwise_sum(sq) / n_samples;
    const double direct = cube_energy_sum(ctx, part, u0, s);
    CHECK(mc == doctest::Approx(direct).epsilon(0.05));
  }
}

TEST_CASE("coefficient laws: mean zero, unit variance, subgaussian mgf") {
  for (LawKind kind : {LawKind::kComplexGaussian, LawKind::kRademacher, LawKind::kUniformDisc}) {
    CoefficientLaw law{kind, 1.0};
    std::complex<double> mean(0, 0);
    double var = 0;
    const int n = 20000;
    for (int s = 0; s < n; ++s) {
      CounterRng rng(5, 0, std::uint64_t(s));
      const auto g = law.sample(rng);
      mean += g;
      var += std::norm(g);
    }
    CHECK(std::abs(mean) / double(n) < 0.02);
    CHECK(var / n == doctest::Approx(1.0).epsilon(0.03));
    for (double gamma : {-2.0, -0.5, 0.5, 1.0, 2.0, 4.0}) {
      CHECK(law.mgf_real(gamma) <=
            std::exp(law.subgaussian_c() * gamma * gamma) * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("khinchin: second moments and the gaussian fourth moment") {
  CoefficientLaw gauss{LawKind::kComplexGaussian, 1.0};
  CoefficientLaw rade{LawKind::kRademacher, 1.0};
  std::vector<std::complex<double>> c = {{0.3, 0.1}, {-0.5, 0.2}, {0.1, -0.7}, {0.4, 0.0}};

  const auto g2 = khinchin_check(gauss, c, 2.0, 40000, 11);
  CHECK(g2.raw_ratio == doctest::Approx(1.0).epsilon(0.02));

  const auto r2 = khinchin_check(rade, c, 2.0, 40000, 12);
  CHECK(r2.raw_ratio == doctest::Approx(1.0).epsilon(0.02));

  // one nonzero entry, gaussian, p = 4: E|g|^4 = 2 for unit-variance complex
  std::vector<std::complex<double>> single = {{0.8, 0.0}};
  const auto g4 = khinchin_check(gauss, single, 4.0, 40000, 13);
  CHECK(g4.raw_ratio == doctest::Approx(std::pow(2.0, 0.25)).epsilon(0.03));

  // normalized ratios bounded over random coefficient vectors, p in {2,4,6}
  for (double p : {2.0, 4.0, 6.0}) {
    double worst = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      CounterRng rng(600 + s, 0, 0);
      std::vector<std::complex<double>> cc(6);
      for (auto& x : cc) x = {rng.normal(), rng.normal()};
      const auto rep = khinchin_check(gauss, cc, p, 2000, 700 + s);
      worst = std::max(worst, rep.normalized);
    }
    CHECK(worst < 1.5);
  }
}

TEST_CASE("tail MC: single-coefficient gaussian oracle") {
  const auto& ctx = sech_context(20.0, 256);
  const auto part = WienerPartition<double>::covering(ctx);
  CoefficientLaw law{LawKind::kComplexGaussian, 1.0};

  // datum = one eigenvector, so the randomized datum is a single effective
  // gaussian with sigma_eff^2 = sum_n psi_n(kappa)^2 and the law is exact:
  // P(||u^omega|| > lambda) = exp(-lambda^2 / (sigma_eff ||p||)^2)
  Eigen::Index pick = 0;
  double bestdist = 1e300;
  for (Eigen::Index k = 0; k < ctx.n(); ++k) {
    const double kap = energy_coordinate(ctx.eigenvalues[k]);
    if (kap < 2.0 || kap > 6.0) continue;
    const double dist = std::abs(kap - std::round(kap));
    if (dist < bestdist) {
      bestdist = dist;
      pick = k;
    }
  }
  const double kappa = energy_coordinate(ctx.eigenvalues[pick]);
  double sig2 = 0;
  for (int c = 0; c < part.n_cubes; ++c) sig2 += std::pow(part.cube_value(c, kappa), 2.0);
  const SpectralField<double> u0 = ctx.eigenvectors.col(pick);
  const double pnorm = ctx.grid.norm(u0);

  auto l2 = make_data_l2_norm(ctx, part, u0);
  const auto rep = tail_probability_mc(l2, law, part.n_cubes, {}, 10000, 99);
  REQUIRE(rep.fit_valid);
  const double expected_slope = -1.0 / (sig2 * pnorm * pnorm);
  CHECK(rep.fit.slope == doctest::Approx(expected_slope).epsilon(0.05));
  CHECK(rep.pass);

  // tail probabilities are nonincreasing in lambda
  for (std::size_t i = 1; i < rep.tail_probability.size(); ++i) {
    CHECK(rep.tail_probability[i] <= rep.tail_probability[i - 1] + 1e-15);
  }
}

TEST_CASE("tail MC: mis-scaled grid is an error with a rescale hint") {
  const auto& ctx = sech_context(20.0, 256);
  const auto part = WienerPartition<double>::covering(ctx);
  CoefficientLaw law{LawKind::kComplexGaussian, 1.0};
  const auto u0 = projector_continuous(ctx, testing::random_smooth_field(ctx.grid, 8.0, 10));
  auto l2 = make_data_l2_norm(ctx, part, u0);
  CHECK_THROWS_AS(tail_probability_mc(l2, law, part.n_cubes, {1e-9, 2e-9}, 1000, 1),
                  std::invalid_argument);
}

TEST_CASE("tail MC: evolved L4 space-time functional has a subgaussian tail") {
  const auto& ctx = sech_context(20.0, 256);
  const auto part = WienerPartition<double>::covering(ctx);
  CoefficientLaw law{LawKind::kComplexGaussian, 1.0};
  const auto u0 = projector_continuous(ctx, testing::random_smooth_field(ctx.grid, 8.0, 11));
  auto l4 = make_evolved_lqlr_norm(ctx, part, u0, 4.0, 4.0, 1.0, 24);
  const auto rep = tail_probability_mc(l4, law, part.n_cubes, {}, 10000, 7);
  REQUIRE(rep.fit_valid);
  CHECK(rep.fit.slope < 0);
  CHECK(rep.fit.r2 >= 0.9);
}
