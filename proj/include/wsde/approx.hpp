#pragma once

// The quantified approximation toolkit: Gaussian densities, Poisson pmfs,
// Skellam matching probabilities through exponentially scaled Bessel I_k,
// Stein-Chen total-variation bounds, and Poisson/binomial local-CLT error
// probes with their bound shapes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "wsde/binomial.hpp"

namespace wsde {

inline double gaussian_density(double sigma_sq, double x) {
  if (!(sigma_sq > 0.0))
    throw std::invalid_argument("gaussian_density: sigma_sq must be positive");
  return std::exp(-x * x / (2.0 * sigma_sq)) /
         std::sqrt(2.0 * std::numbers::pi * sigma_sq);
}

struct PoissonPair {
  double lambda = 0.0;
  double lambda_prime = 0.0;
};

// Poisson pmf via log-gamma (never factorial tables: lambda reaches 1e5).
inline double poisson_pmf(double lambda, std::int64_t k) {
  if (lambda < 0.0) throw std::invalid_argument("poisson_pmf: lambda must be >= 0");
  if (k < 0) return 0.0;
  if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(-lambda + static_cast<double>(k) * std::log(lambda) -
                  std::lgamma(static_cast<double>(k) + 1.0));
}

namespace detail {

// Exponentially scaled modified Bessel function e^{-x} I_k(x) for integer
// k >= 0 and x >= 0.
//
// Two regimes per the decorrelation range of the integrands:
//  - large argument, small order: Hankel's asymptotic expansion;
//  - everything else: the power series summed outward from its largest term,
//    so arguments ~1e5 and orders ~1e3 work without underflow at the anchor.
inline double scaled_bessel_i(std::int64_t k, double x) {
  if (k < 0) k = -k;
  if (x < 0.0) throw std::invalid_argument("scaled_bessel_i: x must be >= 0");
  if (x == 0.0) return k == 0 ? 1.0 : 0.0;

  if (x >= 1e4 && static_cast<double>(4 * k * k) < 0.1 * x) {
    // I_k(x) ~ e^x/sqrt(2 pi x) sum_j (-1)^j a_j(k)/x^j,
    // a_j(k) = (4k^2-1)(4k^2-9)...(4k^2-(2j-1)^2) / (j! 8^j)
    const double mu = 4.0 * static_cast<double>(k) * static_cast<double>(k);
    double term = 1.0, sum = 1.0;
    for (int j = 1; j <= 30; ++j) {
      const double odd = 2.0 * j - 1.0;
      term *= -(mu - odd * odd) / (8.0 * x * j);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * x);
  }

  // Series terms t_j = (x/2)^{2j+k} / (j! (j+k)!) peak near
  // j* = (-k + sqrt(k^2 + x^2)) / 2; accumulate relative to the peak.
  const long double half = 0.5L * static_cast<long double>(x);
  const long double ratio_num = half * half;
  const auto jstar = static_cast<std::int64_t>(std::max(
      0.0, 0.5 * (-static_cast<double>(k) +
                  std::hypot(static_cast<double>(k), static_cast<double>(x)))));
  const long double log_peak =
      static_cast<long double>(2 * jstar + k) * std::log(half) -
      detail::log_factorial(jstar) - detail::log_factorial(jstar + k);

  long double sum = 1.0L;  // the peak term, scaled to 1
  long double term = 1.0L;
  for (std::int64_t j = jstar;; ++j) {  // forward from the peak
    term *= ratio_num / (static_cast<long double>(j + 1) *
                         static_cast<long double>(j + 1 + k));
    if (term < 1e-21L * sum) break;
    sum += term;
  }
  term = 1.0L;
  for (std::int64_t j = jstar; j > 0; --j) {  // backward from the peak
    term *= (static_cast<long double>(j) * static_cast<long double>(j + k)) /
            ratio_num;
    if (term < 1e-21L * sum) break;
    sum += term;
  }
  return static_cast<double>(
      std::exp(log_peak - static_cast<long double>(x) + std::log(sum)));
}

// log P(V(lambda) >= j) Chernoff bound for j >= lambda (and the mirrored
// lower-tail bound for j <= lambda).
inline double poisson_tail_log_bound(double lambda, std::int64_t j) {
  const double jj = static_cast<double>(j);
  if (jj <= 0.0) return 0.0;
  return jj - lambda - jj * std::log(jj / lambda);
}

}  // namespace detail

// P(V(lambda) - V'(lambda') = k) via the scaled Bessel form
//   e^{-(l+l')} (l/l')^{k/2} I_k(2 sqrt(l l')).
inline double skellam_match(const PoissonPair& pair, std::int64_t k) {
  const double l = pair.lambda, lp = pair.lambda_prime;
  if (l < 0.0 || lp < 0.0)
    throw std::invalid_argument("skellam_match: means must be >= 0");
  if (l == 0.0 && lp == 0.0) return k == 0 ? 1.0 : 0.0;
  if (l == 0.0) return poisson_pmf(lp, -k);
  if (lp == 0.0) return poisson_pmf(l, k);
  const double x = 2.0 * std::sqrt(l * lp);
  // -(l+l') + x = -(sqrt(l) - sqrt(l'))^2 <= 0, so no overflow
  const double log_prefactor =
      -(l + lp) + x + 0.5 * static_cast<double>(k) * (std::log(l) - std::log(lp));
  return std::exp(log_prefactor) * detail::scaled_bessel_i(k, x);
}

// The double-sum oracle for the same probability:
//   sum_j e^{-l-l'} l^{j+k} l'^j / ((j+k)! j!).
inline double skellam_match_series(const PoissonPair& pair, std::int64_t k) {
  double l = pair.lambda, lp = pair.lambda_prime;
  if (l < 0.0 || lp < 0.0)
    throw std::invalid_argument("skellam_match_series: means must be >= 0");
  if (k < 0) {
    std::swap(l, lp);
    k = -k;
  }
  if (lp == 0.0) return poisson_pmf(l, k);
  const long double ll = std::log(static_cast<long double>(l));
  const long double llp = std::log(static_cast<long double>(lp));
  const long double base = -static_cast<long double>(l) - static_cast<long double>(lp);
  long double sum = 0.0L;
  const double mode = std::sqrt(l * lp);
  const auto j_max =
      static_cast<std::int64_t>(mode + 20.0 * std::sqrt(mode + 1.0) + 60.0);
  for (std::int64_t j = 0; j <= j_max; ++j) {
    const long double lt = base + static_cast<long double>(j + k) * ll +
                           static_cast<long double>(j) * llp -
                           detail::log_factorial(j + k) - detail::log_factorial(j);
    sum += std::exp(lt);
  }
  return static_cast<double>(sum);
}

// Stein-Chen bound for d_TV(Binomial(m,p), Poisson(mp)) with equal success
// probabilities: (1 - e^{-mp}) p. Evaluated in extended precision and
// rounded outward so the returned double never understates the bound; at
// m = 1 the distance attains the bound exactly, so the direction of the
// final rounding decides the literal comparison.
inline double stein_chen_bound(std::int64_t m, double p) {
  if (m < 1 || !(p > 0.0 && p < 1.0))
    throw std::invalid_argument("stein_chen_bound: requires m >= 1, p in (0,1)");
  const long double mp = static_cast<long double>(m) * static_cast<long double>(p);
  const long double bound = -std::expm1(-mp) * static_cast<long double>(p);
  return std::nextafter(static_cast<double>(bound),
                        std::numeric_limits<double>::infinity());
}

// Exact d_TV(Binomial(m,p), Poisson(mp)) = (1/2) sum_k |b_k - q_k|. The sum
// is windowed with both omitted tails certified < 1e-15 and runs in extended
// precision; omitting nonnegative tail terms means the result never
// overstates the distance.
inline double tv_binom_poisson(std::int64_t m, double p) {
  if (m < 0 || !(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("tv_binom_poisson: bad (m, p)");
  if (m == 0 || p == 0.0) return 0.0;
  const long double lambda = static_cast<long double>(m) * static_cast<long double>(p);

  constexpr double kLogEps = -34.6;  // < log(1e-15)
  detail::Window wb = detail::certified_window(m, p, kLogEps);
  // Poisson window by doubling a 12-sigma band until the Chernoff bound clears
  std::int64_t plo = 0, phi = 0;
  {
    const double lam = static_cast<double>(lambda);
    double w = 12.0 * std::sqrt(lam) + 16.0;
    for (;;) {
      plo = std::max<std::int64_t>(0, static_cast<std::int64_t>(lam - w));
      phi = static_cast<std::int64_t>(lam + w) + 1;
      const bool lo_ok = plo == 0 || detail::poisson_tail_log_bound(lam, plo) < kLogEps;
      const bool hi_ok = detail::poisson_tail_log_bound(lam, phi) < kLogEps;
      if (lo_ok && hi_ok) break;
      w *= 2.0;
    }
  }
  const std::int64_t lo = std::min(wb.lo, plo);
  const std::int64_t hi = std::max(wb.hi, phi);
  const long double log_lambda = std::log(lambda);
  long double sum = 0.0L;
  // c = ln(1-p) + p, the relative-accurate seed of the k = 0 and k = 1
  // cancellation-free forms below
  const long double c = std::log1p(-static_cast<long double>(p)) +
                        static_cast<long double>(p);
  for (std::int64_t k = lo; k <= hi; ++k) {
    if (k == 0 && p < 1.0) {
      // |e^{-mp} - (1-p)^m| = e^{-mp} |expm1(m (ln(1-p) + p))|
      sum += std::exp(-lambda) * std::abs(std::expm1(static_cast<long double>(m) * c));
      continue;
    }
    if (k == 1 && m >= 1 && p < 1.0) {
      // |mp (1-p)^{m-1} - mp e^{-mp}| = mp e^{-mp} |expm1(p + (m-1)(ln(1-p) + p))|
      const long double delta = static_cast<long double>(p) +
                                static_cast<long double>(m - 1) * c;
      sum += lambda * std::exp(-lambda) * std::abs(std::expm1(delta));
      continue;
    }
    const long double b =
        (k <= m && (p < 1.0 || k == m))
            ? (p >= 1.0 ? 1.0L : std::exp(detail::log_binom_pmf(m, p, k)))
            : 0.0L;
    const long double q = std::exp(-lambda + static_cast<long double>(k) * log_lambda -
                                   detail::log_factorial(k));
    sum += std::abs(b - q);
  }
  return std::min(1.0, static_cast<double>(0.5L * sum));
}

struct LcltParams {
  std::int64_t M = 0;
  std::int64_t M_prime = 0;
  double q = 0.0;
  double q_prime = 0.0;
  std::int64_t N = 1;

  double mu() const {
    return (static_cast<double>(M) * q - static_cast<double>(M_prime) * q_prime) /
           std::sqrt(static_cast<double>(N));
  }
  double sigma_sq() const {
    return (static_cast<double>(M) / static_cast<double>(N)) * q * (1.0 - q) +
           (static_cast<double>(M_prime) / static_cast<double>(N)) * q_prime *
               (1.0 - q_prime);
  }
};

struct PoissonLcltError {
  double sup_error = 0.0;
  double est = 0.0;  // sup_error * (lambda + lambda'), the bound-shape constant
  std::int64_t argmax = 0;
};

// sup over integer shifts a of
//   | P(V = V' + a) - (l+l')^{-1/2} g(1; (-l+l'+a)/(l+l')^{1/2}) |
// scanned over a 12-standard-deviation window around the mean difference.
inline PoissonLcltError poisson_lclt_error(const PoissonPair& pair) {
  if (!(pair.lambda > 0.0 && pair.lambda_prime > 0.0))
    throw std::invalid_argument("poisson_lclt_error: means must be positive");
  const double total = pair.lambda + pair.lambda_prime;
  const double sd = std::sqrt(total);
  const auto center = static_cast<std::int64_t>(std::llround(pair.lambda - pair.lambda_prime));
  const auto halfwidth = static_cast<std::int64_t>(12.0 * sd) + 8;
  PoissonLcltError out;
  for (std::int64_t a = center - halfwidth; a <= center + halfwidth; ++a) {
    const double gauss =
        gaussian_density(1.0, (-pair.lambda + pair.lambda_prime + a) / sd) / sd;
    const double err = std::abs(skellam_match(pair, a) - gauss);
    if (err > out.sup_error) {
      out.sup_error = err;
      out.argmax = a;
    }
  }
  out.est = out.sup_error * total;
  return out;
}

struct BinomLcltResult {
  double approximation = 0.0;  // g(sigma^2; a/sqrt(N) - mu)
  double error_budget = 0.0;   // 1/(sqrt(N) sigma^2), the bound up to a constant
  double exact = 0.0;          // sqrt(N) * P(S_M(q) = S'_{M'}(q') + a)
};

inline BinomLcltResult binom_lclt_approx(const LcltParams& params, std::int64_t a) {
  const double sig2 = params.sigma_sq();
  if (!(sig2 > 0.0))
    throw std::invalid_argument("binom_lclt_approx: sigma_sq must be positive");
  const double sqrt_n = std::sqrt(static_cast<double>(params.N));
  BinomLcltResult r;
  r.approximation = gaussian_density(sig2, static_cast<double>(a) / sqrt_n - params.mu());
  r.error_budget = 1.0 / (sqrt_n * sig2);
  r.exact = sqrt_n *
            match_prob({params.M, params.q}, {params.M_prime, params.q_prime}, a);
  return r;
}

// |g(a;x) - g(b;y)| <= C (|b-a|/a^{3/2} + |x-y|/b) for 0 < a <= b. C = 1
// suffices empirically; the calibration grid lives in the test suite.
inline constexpr double kHeatKernelLipschitzC = 1.0;

struct HeatKernelLipschitz {
  double bound = 0.0;
  double difference = 0.0;
  bool holds = false;
};

inline HeatKernelLipschitz heat_kernel_lipschitz(double a, double b, double x, double y) {
  if (!(0.0 < a && a <= b))
    throw std::invalid_argument("heat_kernel_lipschitz: requires 0 < a <= b");
  HeatKernelLipschitz r;
  r.bound = std::abs(b - a) / std::pow(a, 1.5) + std::abs(x - y) / b;
  r.difference = std::abs(gaussian_density(a, x) - gaussian_density(b, y));
  r.holds = r.difference <= kHeatKernelLipschitzC * r.bound + 1e-300;
  return r;
}

}  // namespace wsde
