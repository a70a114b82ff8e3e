#pragma once

// Binomial pmfs, matching probabilities P(S_m(p) = S'_{m'}(p') + a) for
// independent binomial sums, and the exact algebraic identities they satisfy
// (complement, shift recursions, integration by parts, time derivative).
//
// The matching probability is the covariance integrand of the whole artifact
// and gets called with m up to ~2^17, so its convolution is windowed: terms
// are summed only inside an interval around both modes whose omitted mass is
// certified below 1e-15 by Chernoff bounds. That makes one evaluation
// O(sqrt(m)) instead of O(m).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace wsde {

struct BinomialSpec {
  std::int64_t m = 0;  // trial count, >= 0
  double p = 0.0;      // success probability in [0,1]
};

namespace detail {

inline void validate(const BinomialSpec& s) {
  if (s.m < 0) throw std::invalid_argument("BinomialSpec: m must be >= 0");
  if (!(s.p >= 0.0 && s.p <= 1.0))
    throw std::invalid_argument("BinomialSpec: p must lie in [0,1]");
}

// log(k!) in extended precision, grown on demand. Thread-local so lookups in
// parallel sweeps stay lock-free.
inline long double log_factorial(std::int64_t k) {
  thread_local std::vector<long double> table;
  const auto n = static_cast<std::size_t>(k);
  if (n >= table.size()) {
    const std::size_t target =
        std::max<std::size_t>(n + 1, table.empty() ? 256 : 2 * table.size());
    const std::size_t old = table.size();
    table.resize(target);
    for (std::size_t i = old; i < target; ++i)
      table[i] = std::lgamma(static_cast<long double>(i) + 1.0L);
  }
  return table[n];
}

inline long double log_binom_coeff(std::int64_t m, std::int64_t k) {
  return log_factorial(m) - log_factorial(k) - log_factorial(m - k);
}

// log pmf of S_m(p) at k, long double throughout; requires 0 <= k <= m and
// p in (0,1).
inline long double log_binom_pmf(std::int64_t m, double p, std::int64_t k) {
  const long double lp = std::log(static_cast<long double>(p));
  const long double l1p = std::log(1.0L - static_cast<long double>(p));
  return log_binom_coeff(m, k) + static_cast<long double>(k) * lp +
         static_cast<long double>(m - k) * l1p;
}

// Chernoff (KL) certificates for binomial tails:
//   log P(S_m(p) >= j) <= -m KL(j/m || p) for j >= mp,
//   log P(S_m(p) <= j) <= -m KL(j/m || p) for j <= mp.
inline double binom_tail_log_bound(std::int64_t m, double p, std::int64_t j) {
  if (m == 0) return 0.0;
  const double a = static_cast<double>(j) / static_cast<double>(m);
  double kl = 0.0;
  if (a <= 0.0)
    kl = -std::log1p(-p);
  else if (a >= 1.0)
    kl = -std::log(p);
  else
    kl = a * std::log(a / p) + (1.0 - a) * std::log((1.0 - a) / (1.0 - p));
  return -static_cast<double>(m) * kl;
}

// Smallest window [lo,hi] (inside the support) whose two omitted tails each
// carry log-mass below log_eps. Starts at 12 standard deviations and doubles
// until the Chernoff certificate clears.
struct Window {
  std::int64_t lo, hi;
};

// Dense pmf(m, p, k) for k in [k_lo, k_hi]: one anchored log evaluation at
// the in-window mode, extended by the adjacent-k recurrence
//   pmf(k+1)/pmf(k) = ((m-k)/(k+1)) (p/(1-p)).
// Windows span O(sqrt(m)) terms, so the recurrence drift stays ~1e-13.
inline void binom_pmf_window(std::int64_t m, double p, std::int64_t k_lo,
                             std::int64_t k_hi, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(k_hi - k_lo + 1), 0.0);
  if (p <= 0.0) {
    if (k_lo <= 0 && 0 <= k_hi) out[static_cast<std::size_t>(-k_lo)] = 1.0;
    return;
  }
  if (p >= 1.0) {
    if (k_lo <= m && m <= k_hi) out[static_cast<std::size_t>(m - k_lo)] = 1.0;
    return;
  }
  const std::int64_t lo = std::max<std::int64_t>(k_lo, 0);
  const std::int64_t hi = std::min(k_hi, m);
  if (lo > hi) return;
  const std::int64_t anchor = std::clamp(
      static_cast<std::int64_t>(std::llround(static_cast<double>(m) * p)), lo, hi);
  const long double l0 = log_binom_pmf(m, p, anchor);
  if (l0 < -700.0L) return;  // the whole window is numerically zero
  const double t0 = static_cast<double>(std::exp(l0));
  const double odds = p / (1.0 - p);
  out[static_cast<std::size_t>(anchor - k_lo)] = t0;
  double t = t0;
  for (std::int64_t k = anchor; k < hi; ++k) {
    t *= static_cast<double>(m - k) / static_cast<double>(k + 1) * odds;
    out[static_cast<std::size_t>(k + 1 - k_lo)] = t;
  }
  t = t0;
  for (std::int64_t k = anchor; k > lo; --k) {
    t *= static_cast<double>(k) / static_cast<double>(m - k + 1) / odds;
    out[static_cast<std::size_t>(k - 1 - k_lo)] = t;
  }
}

inline Window certified_window(std::int64_t m, double p, double log_eps) {
  if (m == 0 || p <= 0.0) return {0, 0};
  if (p >= 1.0) return {m, m};
  const double mu = static_cast<double>(m) * p;
  const double sd = std::sqrt(mu * (1.0 - p));
  auto clampi = [m](double x) {
    return std::min<std::int64_t>(m, std::max<std::int64_t>(0, std::llround(x)));
  };
  double w = 12.0 * sd + 16.0;
  for (;;) {
    const std::int64_t lo = clampi(std::floor(mu - w));
    const std::int64_t hi = clampi(std::ceil(mu + w));
    const bool lo_ok = lo == 0 || binom_tail_log_bound(m, p, lo) < log_eps;
    const bool hi_ok = hi == m || binom_tail_log_bound(m, p, hi) < log_eps;
    if (lo_ok && hi_ok) return {lo, hi};
    w *= 2.0;
    if (w > 2.0 * static_cast<double>(m)) return {0, m};
  }
}

}  // namespace detail

// pmf of S_m(p) at k: C(m,k) p^k (1-p)^{m-k}. Exact endpoint handling; exact
// binomial coefficients for m <= 50, log-gamma in extended precision beyond,
// so deep tails near 1e-300 stay finite and relative error stays ~1e-14.
inline double binom_pmf(const BinomialSpec& s, std::int64_t k) {
  detail::validate(s);
  if (k < 0 || k > s.m) return 0.0;
  if (s.p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (s.p == 1.0) return k == s.m ? 1.0 : 0.0;
  if (s.m <= 50) {
    // binomial coefficients up to C(50,25) are exactly representable
    const std::int64_t kk = std::min(k, s.m - k);
    double c = 1.0;
    for (std::int64_t i = 1; i <= kk; ++i)
      c = c * static_cast<double>(s.m - kk + i) / static_cast<double>(i);
    return c * std::pow(s.p, static_cast<double>(k)) *
           std::pow(1.0 - s.p, static_cast<double>(s.m - k));
  }
  return static_cast<double>(std::exp(detail::log_binom_pmf(s.m, s.p, k)));
}

// P(S_m1(p1) = S'_m2(p2) + shift) = sum_k pmf1(k+shift) pmf2(k).
//
// The summation window is the intersection of the two certified windows
// (each tail < 0.25e-15), so the omitted mass is provably < 1e-15. Terms are
// accumulated in log-space per term with compensated summation. For shift=0
// the summand and the ascending-k order are symmetric in the two arguments,
// so match_prob(s1,s2,0) == match_prob(s2,s1,0) exactly as computed.
inline double match_prob(const BinomialSpec& s1, const BinomialSpec& s2,
                         std::int64_t shift = 0) {
  detail::validate(s1);
  detail::validate(s2);
  // point-mass short-circuits (p exactly 0 or 1, or empty sums)
  if (s1.p == 0.0 || s1.m == 0) return binom_pmf(s2, -shift);
  if (s1.p == 1.0) return binom_pmf(s2, s1.m - shift);
  if (s2.p == 0.0 || s2.m == 0) return binom_pmf(s1, shift);
  if (s2.p == 1.0) return binom_pmf(s1, s2.m + shift);

  // log(0.25e-15): four certified tails keep the omitted mass below 1e-15
  constexpr double kLogEps = -35.9252;
  const detail::Window w1 = detail::certified_window(s1.m, s1.p, kLogEps);
  const detail::Window w2 = detail::certified_window(s2.m, s2.p, kLogEps);
  // k runs over S' values; S takes k + shift
  const std::int64_t lo = std::max(w2.lo, w1.lo - shift);
  const std::int64_t hi = std::min(w2.hi, w1.hi - shift);
  if (lo > hi) return 0.0;

  // terms t_k = pmf1(k+shift) pmf2(k): anchored near the product mode and
  // extended by the adjacent-k recurrence of both factors. Every step
  // combines the two factors through commutative products, so a swap of the
  // arguments at shift 0 reproduces bit-identical terms and sums.
  const std::int64_t anchor = std::clamp(
      static_cast<std::int64_t>(std::llround(
          0.5 * (static_cast<double>(s1.m) * s1.p - static_cast<double>(shift) +
                 static_cast<double>(s2.m) * s2.p))),
      lo, hi);
  const long double l0 = detail::log_binom_pmf(s1.m, s1.p, anchor + shift) +
                         detail::log_binom_pmf(s2.m, s2.p, anchor);
  if (l0 < -700.0L) return 0.0;  // below 1e-300 across the whole window
  const double t0 = static_cast<double>(std::exp(l0));
  const double odds1 = s1.p / (1.0 - s1.p);
  const double odds2 = s2.p / (1.0 - s2.p);

  long double sum = t0, comp = 0.0L;
  auto accumulate = [&sum, &comp](double term) {
    const long double y = static_cast<long double>(term) - comp;
    const long double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };
  double t = t0;
  for (std::int64_t k = anchor; k < hi && t != 0.0; ++k) {
    const double num = (static_cast<double>(s1.m - k - shift) * odds1) *
                       (static_cast<double>(s2.m - k) * odds2);
    const double den = static_cast<double>(k + 1 + shift) * static_cast<double>(k + 1);
    t *= num / den;
    accumulate(t);
  }
  t = t0;
  for (std::int64_t k = anchor; k > lo && t != 0.0; --k) {
    const double num = static_cast<double>(k + shift) * static_cast<double>(k);
    const double den = (static_cast<double>(s1.m - k - shift + 1) * odds1) *
                       (static_cast<double>(s2.m - k + 1) * odds2);
    t *= num / den;
    accumulate(t);
  }
  return static_cast<double>(sum);
}

// Full-range convolution, test/diagnostic oracle for the windowed version.
inline double match_prob_full(const BinomialSpec& s1, const BinomialSpec& s2,
                              std::int64_t shift = 0) {
  detail::validate(s1);
  detail::validate(s2);
  long double sum = 0.0L;
  const std::int64_t lo = std::max<std::int64_t>(0, -shift);
  const std::int64_t hi = std::min(s2.m, s1.m - shift);
  for (std::int64_t k = lo; k <= hi; ++k)
    sum += static_cast<long double>(binom_pmf(s1, k + shift)) *
           static_cast<long double>(binom_pmf(s2, k));
  return static_cast<double>(sum);
}

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  bool pass = false;
};

// P(S_m(p) = S'_{m'}(p') + n) = P(S_m(1-p) = S'_{m'}(1-p') + m - m' - n),
// checked to 1e-14.
inline IdentityCheck complement_identity_check(const BinomialSpec& s1,
                                               const BinomialSpec& s2,
                                               std::int64_t shift) {
  IdentityCheck c;
  c.lhs = match_prob(s1, s2, shift);
  c.rhs = match_prob({s1.m, 1.0 - s1.p}, {s2.m, 1.0 - s2.p}, s1.m - s2.m - shift);
  c.residual = std::abs(c.lhs - c.rhs);
  c.pass = c.residual <= 1e-14;
  return c;
}

struct ShiftIdentityReport {
  double obs0_residual = 0.0;  // p(E F(S_m) - E F(S_m + 1)) = E F(S_m) - E F(S_{m+1})
  double obs2_residual = 0.0;  // two-step expansion of E F(S_m + 2)
  double ibp_residual = 0.0;   // E[S_m F(S_m)] = m p E[F(S_{m-1} + 1)]
  double max_residual = 0.0;
  bool pass = false;
};

// Checks the shift recursions and the binomial integration by parts for a
// bounded F on [0, m+2]; each identity must hold to 1e-13.
inline ShiftIdentityReport shift_identities_check(
    const std::function<double(std::int64_t)>& F, std::int64_t m, double p) {
  if (m < 0 || !(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("shift_identities_check: bad (m, p)");
  if (p == 0.0)
    throw std::invalid_argument(
        "shift_identities_check: p = 0 not allowed (two-step expansion divides by p^2)");

  // pmfs, expectations, and their combinations stay in extended precision:
  // the two-step expansion divides by p^2, which amplifies rounding for
  // small p
  const long double pl = p;
  const long double log_p = std::log(pl);
  const long double log_q = std::log1p(-pl);
  auto pmf_ld = [&](std::int64_t mm, std::int64_t k) {
    const std::int64_t kk = std::min(k, mm - k);
    long double coeff = 1.0L;
    for (std::int64_t i = 1; i <= kk; ++i)
      coeff = coeff * static_cast<long double>(mm - kk + i) / static_cast<long double>(i);
    return coeff * std::exp(static_cast<long double>(k) * log_p +
                            static_cast<long double>(mm - k) * log_q);
  };
  auto mean = [&](std::int64_t mm, std::int64_t offset) {
    long double s = 0.0L;
    for (std::int64_t k = 0; k <= mm; ++k)
      s += pmf_ld(mm, k) * static_cast<long double>(F(k + offset));
    return s;
  };

  ShiftIdentityReport r;
  const long double e_m0 = mean(m, 0), e_m1 = mean(m, 1), e_m2 = mean(m, 2);
  const long double e_mp1 = mean(m + 1, 0), e_mp2 = mean(m + 2, 0);
  r.obs0_residual =
      static_cast<double>(std::abs(pl * (e_m0 - e_m1) - (e_m0 - e_mp1)));
  const long double q = 1.0L - pl;
  r.obs2_residual = static_cast<double>(
      std::abs(e_m2 - (e_mp2 - 2.0L * q * e_mp1 + q * q * e_m0) / (pl * pl)));

  long double lhs = 0.0L;
  for (std::int64_t k = 0; k <= m; ++k)
    lhs += pmf_ld(m, k) * k * static_cast<long double>(F(k));
  const long double rhs = m == 0 ? 0.0L : static_cast<long double>(m) * pl * mean(m - 1, 1);
  r.ibp_residual = static_cast<double>(std::abs(lhs - rhs));

  r.max_residual = std::max({r.obs0_residual, r.obs2_residual, r.ibp_residual});
  r.pass = r.max_residual <= 1e-13;
  return r;
}

// d/da P(S_m(r/a) = n) = (1/a) [ (n+1) P(S_m(r/a) = n+1) - n P(S_m(r/a) = n) ]
// for 0 < r < a.
inline double pmf_time_derivative(std::int64_t m, double r, double a, std::int64_t n) {
  if (!(0.0 < r && r < a))
    throw std::invalid_argument("pmf_time_derivative: requires 0 < r < a");
  const BinomialSpec s{m, r / a};
  return (static_cast<double>(n + 1) * binom_pmf(s, n + 1) -
          static_cast<double>(n) * binom_pmf(s, n)) /
         a;
}

}  // namespace wsde
