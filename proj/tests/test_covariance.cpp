#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "wsde/approx.hpp"
#include "wsde/covariance.hpp"
#include "wsde/limit_kernels.hpp"
#include "wsde/matrix.hpp"

using namespace wsde;

TEST_CASE("scaling scheme cutoffs and the primary-condition check") {
  auto s = ScalingScheme::make(4096, 0.25);
  CHECK(s.ell_N == Catch::Approx(std::pow(4096.0, -0.75)).epsilon(1e-15));
  CHECK(s.r_N == Catch::Approx(1.0 - s.ell_N));
  CHECK(s.tau_N == s.ell_N);
  CHECK(s.primary_condition_ok(0.5));
  CHECK_FALSE(ScalingScheme::make(16, 0.49).primary_condition_ok(0.05));
  CHECK_THROWS_AS(ScalingScheme::make(8, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(ScalingScheme::make(1024, 0.5), std::invalid_argument);
}

TEST_CASE("lattice index floor semantics") {
  CHECK(lattice_index(1.0, 1.0, 100) == 110);
  CHECK(lattice_index(0.0, 1.0, 100) == 100);
  CHECK(lattice_index(0.0, 0.37, 100) == 37);
  CHECK(lattice_index(-10.0, 1.0, 100) == 0);
  CHECK_THROWS_AS(lattice_index(-10.5, 1.0, 100), std::invalid_argument);
}

TEST_CASE("profiles: limits and finite-N drift") {
  // mu_j(r) = (x_j - y_j) r
  auto pr = profiles({1.5, 0.0}, {0.5, 0.0}, 1.0, 2.0, 0.5, 4096);
  CHECK(pr.mu[0] == Catch::Approx(0.5));
  CHECK(pr.mu[1] == Catch::Approx(0.0));
  // sigma_j(r)^2 = r (2 - r/s - r/t)
  CHECK(pr.sigma_sq[0] == Catch::Approx(0.5 * (2.0 - 0.5 - 0.25)));

  // endpoint degeneracy r = s = t
  auto edge = profiles({0, 0}, {0, 0}, 1.0, 1.0, 1.0, 1024);
  CHECK(edge.sigma_sq[0] == Catch::Approx(0.0).margin(1e-15));

  // |mu_j(r;N) - mu_j(r)| <= 2/sqrt(N) along the N ladder
  for (int e = 10; e <= 16; e += 2) {
    const std::int64_t n = 1LL << e;
    auto p = profiles({0.7, -0.3}, {-0.2, 0.4}, 1.0, 2.0, 0.8, n);
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(p.mu_N[j] - p.mu[j]) <= 2.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("covariance_exact pinned values") {
  // S_0 == S'_0 == 0: integrand is 1
  CHECK(covariance_exact({0, 0}, {0, 0}, 0.7, 1.3) == Catch::Approx(0.7).epsilon(1e-12));
  // m = (1,0), m' = (0,0), s = t = 1: P(S_1(r) = 0) = 1 - r, integral 1/2
  CHECK(covariance_exact({1, 0}, {0, 0}, 1.0, 1.0) == Catch::Approx(0.5).epsilon(1e-10));
  CHECK_THROWS_AS(covariance_exact({1, 0}, {0, 0}, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("covariance_exact Gram matrix is positive semidefinite") {
  std::mt19937_64 gen(17);
  std::vector<std::pair<DeathPair, double>> pts;
  for (int i = 0; i < 5; ++i)
    pts.push_back({{static_cast<std::int64_t>(gen() % 6), static_cast<std::int64_t>(gen() % 6)},
                   0.25 + 0.25 * static_cast<double>(gen() % 8)});
  Matrix gram(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const auto& [mi, ti] = pts[i];
      const auto& [mj, tj] = pts[j];
      gram(i, j) = ti <= tj ? covariance_exact(mi, mj, ti, tj)
                            : covariance_exact(mj, mi, tj, ti);
    }
  auto eigs = symmetric_eigen(gram, nullptr);
  for (double e : eigs) CHECK(e >= -1e-8);
}

TEST_CASE("c1 integrand endpoints") {
  // r -> 0+: P(V(0)=V'(0)) = 1 and the correction vanishes
  const double p_small = skellam_match({1e-12, 1e-12}, 0);
  CHECK(p_small == Catch::Approx(1.0).epsilon(1e-9));
  // r = 1e4: P^2 - 1/(4 pi r) is a small relative correction, 1/r^{3/2}-compatible
  const double r = 1e4;
  const double p = skellam_match({r, r}, 0);
  const double asym = 1.0 / (4.0 * std::numbers::pi * r);
  CHECK(std::abs(p * p - asym) <= 1e-2 * asym);
}

TEST_CASE("c1 is stable under tolerance halving and r_max doubling") {
  QuadratureConfig loose, tight;
  loose.rel_tol = 2e-9;
  loose.abs_tol = 1e-11;
  tight.rel_tol = 1e-9;
  tight.abs_tol = 5e-12;
  const double a = c1_constant(loose, 1e6);
  const double b = c1_constant(tight, 2e6);
  CHECK(std::abs(a - b) <= 1e-6);
}

TEST_CASE("recentering constant ladder") {
  QuadratureConfig cfg;
  const double c1 = recentering_constant(1, cfg);
  CHECK(c1 == Catch::Approx(c1_constant(cfg.with_tol(1e-10, 1e-12))).margin(1e-8));
  // c_{2N} - c_N = ln 2 / (4 pi) exactly as computed
  const double gap = recentering_constant(2048, cfg) - recentering_constant(1024, cfg);
  CHECK(gap == Catch::Approx(std::log(2.0) / (4.0 * std::numbers::pi)).margin(1e-15));
  // N = nearest integer to e^{4 pi}: c_N - c_1 = 1 within 1e-5
  CHECK(recentering_constant(286751, cfg) - c1 == Catch::Approx(1.0).margin(1e-5));
}

TEST_CASE("increment metric") {
  CHECK(increment_metric({3, 4}, 0.8, 0.8) == 0.0);
  CHECK(increment_metric({0, 0}, 0.0, 1.0) == Catch::Approx(1.0).epsilon(1e-12));

  // value / ((max(m) v 1) |t-s|) bounded by one constant over the grid
  double worst_ratio = 0.0;
  for (std::int64_t m : {1, 5, 20})
    for (double dt : {0.1, 0.01}) {
      const double v = increment_metric({m, m}, 1.0, 1.0 + dt);
      CHECK(v >= 0.0);
      worst_ratio = std::max(worst_ratio, v / (static_cast<double>(m) * dt));
    }
  CHECK(worst_ratio <= 10.0);
}

TEST_CASE("rescaled covariance at coincident points matches covariance_exact") {
  const auto scheme = ScalingScheme::make(1024, 0.25);
  const SpaceTimePoint p{{0.3, -0.2}, 1.0};
  auto rep = covariance_rescaled(p, p, scheme);
  CHECK_FALSE(rep.limit_exists);
  const DeathPair m{lattice_index(0.3, 1.0, 1024), lattice_index(-0.2, 1.0, 1024)};
  const double exact = covariance_exact(m, m, 1024.0, 1024.0);
  CHECK(rep.raw_value == Catch::Approx(exact).epsilon(1e-6));
  // additivity of the breakdown
  CHECK(rep.raw_value == Catch::Approx(rep.interval_breakdown[0] + rep.interval_breakdown[1] +
                                       rep.interval_breakdown[2])
                             .margin(1e-12));
}

TEST_CASE("rescaled covariance is symmetric at equal times") {
  const auto scheme = ScalingScheme::make(1024, 0.25);
  const SpaceTimePoint p1{{0.4, 0.1}, 1.0}, p2{{-0.3, 0.6}, 1.0};
  auto a = covariance_rescaled(p1, p2, scheme);
  auto b = covariance_rescaled(p2, p1, scheme);
  CHECK(a.raw_value == Catch::Approx(b.raw_value).epsilon(1e-9));
}

TEST_CASE("microscopic and macroscopic integral forms agree") {
  // int_0^{Ns} b^N dr = int_0^s b_N drho by the change of variables r = N rho
  const std::int64_t n = 64;
  const double s = 1.0, t = 1.5;
  const std::array<std::int64_t, 2> M{lattice_index(0.5, s, n), lattice_index(-0.25, s, n)};
  const std::array<std::int64_t, 2> Mp{lattice_index(0.25, t, n), lattice_index(0.0, t, n)};
  QuadratureConfig cfg;
  cfg.rel_tol = 1e-11;
  auto micro = integrate(
      [&](double r) {
        const double q1 = std::min(1.0, r / (n * s)), q2 = std::min(1.0, r / (n * t));
        return match_prob({M[0], q1}, {Mp[0], q2}) * match_prob({M[1], q1}, {Mp[1], q2});
      },
      0.0, n * s, cfg.with_hints(geometric_hints(1.0, n * s, 2.0)));
  auto macro = integrate(
      [&](double rho) {
        const double q1 = std::min(1.0, rho / s), q2 = std::min(1.0, rho / t);
        return static_cast<double>(n) * match_prob({M[0], q1}, {Mp[0], q2}) *
               match_prob({M[1], q1}, {Mp[1], q2});
      },
      0.0, s, cfg.with_hints(geometric_hints(1.0 / n, s, 2.0)));
  CHECK(micro.value ==
        Catch::Approx(macro.value).margin(2.0 * (micro.error + macro.error) + 1e-10));
}

TEST_CASE("rescaled covariance Gram matrix is positive semidefinite") {
  const auto scheme = ScalingScheme::make(256, 0.25);
  std::vector<SpaceTimePoint> pts{
      {{0.0, 0.0}, 0.8}, {{0.5, -0.5}, 1.0}, {{-0.4, 0.3}, 1.2}, {{1.0, 1.0}, 1.5}};
  Matrix gram(pts.size(), pts.size());
  double trace = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      gram(i, j) = covariance_rescaled(pts[i], pts[j], scheme).raw_value;
      if (i == j) trace += gram(i, i);
    }
  // symmetrize round-off before the eigenvalue check
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double v = 0.5 * (gram(i, j) + gram(j, i));
      gram(i, j) = v;
      gram(j, i) = v;
    }
  auto eigs = symmetric_eigen(gram, nullptr);
  for (double e : eigs) CHECK(e >= -1e-6 * trace);
}

TEST_CASE("recentered covariance approaches the limit from the convergence study") {
  QuadratureConfig cfg;
  cfg.rel_tol = 1e-8;
  cfg.abs_tol = 1e-10;
  const double limit = limit_covariance_point({0, 0}, 1.0, {1, 1}, 2.0, cfg);
  const double err_small =
      std::abs(covariance_rescaled({{0, 0}, 1.0}, {{1, 1}, 2.0}, ScalingScheme::make(1 << 10))
                   .recentered_value -
               limit);
  const double err_large =
      std::abs(covariance_rescaled({{0, 0}, 1.0}, {{1, 1}, 2.0}, ScalingScheme::make(1 << 12))
                   .recentered_value -
               limit);
  CHECK(err_large < err_small);
  // the convergence study places the N = 2^12 recentered value at 10.5% of
  // the limit; the strict 10% gate applies to the final sweep entry N = 2^16
  // in the acceptance suite
  CHECK(err_large <= 0.12 * std::abs(limit));
}

TEST_CASE("left interval matches its Poisson surrogate at the expected rate") {
  // integrated difference between b^N and the Poisson matching probabilities
  // over [0, Ns ell_N] decays at least like N^{-2 eta}
  const double s = 1.0, t = 2.0;
  QuadratureConfig cfg;
  cfg.rel_tol = 1e-9;
  cfg.abs_tol = 1e-12;
  double diffs[3];
  int idx = 0;
  for (int e : {10, 12, 14}) {
    const auto scheme = ScalingScheme::make(1LL << e, 0.25);
    const double nd = static_cast<double>(scheme.N);
    const std::array<std::int64_t, 2> M{lattice_index(0.0, s, scheme.N),
                                        lattice_index(0.0, s, scheme.N)};
    const std::array<std::int64_t, 2> Mp{lattice_index(1.0, t, scheme.N),
                                         lattice_index(1.0, t, scheme.N)};
    auto f = [&](double r) {
      double b = 1.0, surrogate = 1.0;
      for (int j = 0; j < 2; ++j) {
        b *= match_prob({M[j], std::min(1.0, r / (nd * s))},
                        {Mp[j], std::min(1.0, r / (nd * t))});
        surrogate *= skellam_match(
            {static_cast<double>(M[j]) * r / (nd * s),
             static_cast<double>(Mp[j]) * r / (nd * t)},
            0);
      }
      return std::abs(b - surrogate);
    };
    const double edge = nd * s * scheme.ell_N;
    diffs[idx++] =
        integrate(f, 0.0, edge, cfg.with_hints(geometric_hints(0.5, edge, 2.0))).value;
  }
  // N^{-2 eta} = N^{-1/2}: each 4x step in N should shrink the difference by
  // about 2x; allow generous slack on the constant
  CHECK(diffs[1] <= diffs[0] * 0.5 * 1.5);
  CHECK(diffs[2] <= diffs[1] * 0.5 * 1.5);
}
