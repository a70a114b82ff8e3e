#pragma once

// The limiting covariance machinery: the 2D heat semigroup, the constant
// kappa_0, the glue identity joining a finite heat-kernel time integral to
// its log-kernel limit, the limiting space-time covariance, the stationary
// log kernel, and the weak-form limit for Gaussian-mixture test functions.

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "wsde/mixture.hpp"
#include "wsde/quadrature.hpp"

namespace wsde {

struct HeatKernelQuery {
  double time = 1.0;
  Vec2 x{};
  Vec2 y{};
};

// Q_t(x,y) = (2 pi t)^{-1} exp(-|x-y|^2 / (2t))
inline double heat_semigroup(const HeatKernelQuery& q) {
  if (!(q.time > 0.0)) throw std::invalid_argument("heat_semigroup: time must be positive");
  const Vec2 d = q.x - q.y;
  return std::exp(-(d.x * d.x + d.y * d.y) / (2.0 * q.time)) /
         (2.0 * std::numbers::pi * q.time);
}

namespace detail {

// int_A^infty (e^{-1/(4v)} - 1_{[1,inf)}(v)) / (4 pi v) dv for A >= 0.
//
// The far tail is handled analytically: substituting u = 1/(4v) turns
// int_V^infty (e^{-1/(4v)} - 1)/(4 pi v) dv into
// (1/4pi) int_0^{1/(4V)} (e^{-u} - 1)/u du, whose Taylor series converges
// fast once 1/(4V) is small. V is chosen so the series remainder is far
// below the requested tolerance.
inline double log_kernel_tail(double A, const QuadratureConfig& cfg) {
  if (A < 0.0) throw std::invalid_argument("log_kernel_tail: A must be >= 0");
  const double pi = std::numbers::pi;
  double total = 0.0;

  if (A < 1.0) {
    // e^{-1/(4v)}/(4 pi v) on [A, 1]; the essential singularity at v = 0 is
    // suppressed (integrand -> 0), so plain adaptive quadrature is enough.
    auto f = [pi](double v) {
      return v <= 0.0 ? 0.0 : std::exp(-1.0 / (4.0 * v)) / (4.0 * pi * v);
    };
    total += integrate_or_throw(f, A, 1.0, cfg.with_hints({0.05, 0.25})).value;
  }

  const double lo = std::max(A, 1.0);
  const double V = std::max(1e4, 16.0 * lo);
  auto g = [pi](double v) { return std::expm1(-1.0 / (4.0 * v)) / (4.0 * pi * v); };
  total += integrate_or_throw(g, lo, V, cfg.with_hints(geometric_hints(lo, V, 4.0))).value;

  const double w = 1.0 / (4.0 * V);
  total += (-w + w * w / 4.0 - w * w * w / 18.0) / (4.0 * pi);
  return total;
}

}  // namespace detail

// kappa_0 = int_0^infty (e^{-1/(4v)} - 1_{[1,inf)}(v)) / (4 pi v) dv,
// split at v = 1 with a certified analytic tail.
inline double kappa0_constant(const QuadratureConfig& cfg = {}) {
  return detail::log_kernel_tail(0.0, cfg);
}

// kappa_0 at a fixed tight tolerance, computed once per process.
inline double kappa0_cached() {
  static std::once_flag flag;
  static double value = 0.0;
  std::call_once(flag, [] {
    QuadratureConfig cfg;
    cfg.rel_tol = 1e-13;
    cfg.abs_tol = 1e-14;
    value = kappa0_constant(cfg);
  });
  return value;
}

struct GlueReport {
  double lhs = 0.0;       // int_0^T Q_{2r}(y1,y2) dr by quadrature
  double rhs = 0.0;       // kappa_0 - ln|y1-y2|/(2 pi) + ln T/(4 pi) + eps_1+2+3
  double eps1 = 0.0, eps2 = 0.0, eps3 = 0.0;
  double residual = 0.0;
};

// The glue identity: for y1 != y2 and T > 0,
//   int_0^T Q_{2r}(y1,y2) dr
//     = kappa_0 - (1/2pi) ln|y1-y2| + ln T/(4 pi) + eps_1 + eps_2 + eps_3
// with the three error functions evaluated exactly as defined.
inline GlueReport glue_identity_check(Vec2 y1, Vec2 y2, double T,
                                      const QuadratureConfig& cfg = {}) {
  const double d = norm(y1 - y2);
  if (!(d > 0.0)) throw std::invalid_argument("glue_identity_check: y1 must differ from y2");
  if (!(T > 0.0)) throw std::invalid_argument("glue_identity_check: T must be positive");
  const double pi = std::numbers::pi;
  const double d2 = d * d;

  GlueReport rep;
  auto q2r = [&](double r) {
    return r <= 0.0 ? 0.0 : std::exp(-d2 / (4.0 * r)) / (4.0 * pi * r);
  };
  std::vector<double> hints{d2 / 16.0, d2 / 4.0, d2};
  for (double h : geometric_hints(std::max(d2, 1e-8), T, 4.0)) hints.push_back(h);
  rep.lhs = integrate_or_throw(q2r, 0.0, T, cfg.with_hints(hints)).value;

  const double ratio = T / d2;
  rep.eps1 = -detail::log_kernel_tail(ratio, cfg);
  rep.eps2 = ratio < 1.0 ? -std::log(T) / (4.0 * pi) : 0.0;
  rep.eps3 = ratio < 1.0 ? std::log(d) / (2.0 * pi) : 0.0;
  rep.rhs = kappa0_cached() - std::log(d) / (2.0 * pi) + std::log(T) / (4.0 * pi) +
            rep.eps1 + rep.eps2 + rep.eps3;
  rep.residual = std::abs(rep.lhs - rep.rhs);
  return rep;
}

namespace detail {

// (1/2pi) * pairing of two unit bumps against the -ln kernel:
//   (1/2pi) int int g_V-bump_at_c1(y') (-ln|y'-y''|) g-bump_at_c2(y'') dy' dy''
//     = lim_T [ int_0^T Q_{2r+V}(c1,c2) dr - ln T/(4 pi) ] - kappa_0
// where V is the summed widths. The T limit is taken through the glue
// identity: its error terms vanish identically once written out, leaving
//   -ln D/(2 pi) - int_0^{V/2} Q_{2w}(c1,c2) dw          (D > 0)
//   (ln 2 - ln V)/(4 pi) - kappa_0                        (D = 0)
// so the only numerical error left is the 1D quadrature.
inline double log_kernel_pairing(double D, double V, const QuadratureConfig& cfg) {
  if (!(V > 0.0)) throw std::invalid_argument("log_kernel_pairing: V must be positive");
  const double pi = std::numbers::pi;
  if (D == 0.0) return (std::log(2.0) - std::log(V)) / (4.0 * pi) - kappa0_cached();
  const double d2 = D * D;
  auto q2w = [&](double w) {
    return w <= 0.0 ? 0.0 : std::exp(-d2 / (4.0 * w)) / (4.0 * pi * w);
  };
  const double upper = 0.5 * V;
  std::vector<double> hints{d2 / 16.0, d2 / 4.0, d2};
  for (double h : geometric_hints(std::max(d2, 1e-8), upper, 4.0)) hints.push_back(h);
  const auto head = integrate_or_throw(q2w, 0.0, upper, cfg.with_hints(hints));
  return -std::log(D) / (2.0 * pi) - head.value;
}

}  // namespace detail

// The limiting recentered covariance at two space-time points:
//   (1/2pi) iint Q_{1/s}(y',x) (-ln|y'-y''|) Q_{1/t}(y'',y) dy' dy''
//     + int_0^{1/t} int Q_{1/s-r}(z,x) Q_{1/t-r}(z,y) dz dr,
// both reduced to 1D integrals through Chapman-Kolmogorov.
inline double limit_covariance_point(Vec2 x, double s, Vec2 y, double t,
                                     const QuadratureConfig& cfg = {}) {
  if (!(0.0 < s && s <= t))
    throw std::invalid_argument("limit_covariance_point: requires 0 < s <= t");
  const double D = norm(x - y);
  if (s == t && D == 0.0)
    throw std::invalid_argument(
        "limit_covariance_point: no limit at equal times and equal points (requires s < t "
        "or x != y)");
  const double u = 1.0 / s + 1.0 / t;
  const double first = detail::log_kernel_pairing(D, u, cfg);

  // second term: int_0^{1/t} Q_{u-2r}(x,y) dr
  const double d2 = D * D;
  auto f = [&](double r) {
    const double w = u - 2.0 * r;
    if (w <= 0.0) return 0.0;
    return std::exp(-d2 / (2.0 * w)) / (2.0 * std::numbers::pi * w);
  };
  const double upper = 1.0 / t;
  const double second =
      integrate_or_throw(f, 0.0, upper, cfg.with_hints({0.5 * upper, 0.9 * upper, 0.99 * upper}))
          .value;
  return first + second;
}

// Stationary kernel kappa_0 - (1/2pi) ln|x-y|.
inline double stationary_kernel(Vec2 x, Vec2 y) {
  const double d = norm(x - y);
  if (!(d > 0.0)) throw std::invalid_argument("stationary_kernel: x must differ from y");
  return kappa0_cached() - std::log(d) / (2.0 * std::numbers::pi);
}

// Cov[X_{1/s}(phi1); X_{1/t}(phi2)] for Gaussian-mixture test functions:
// the log-kernel double integral reduces to pairwise log_kernel_pairing
// calls and the noise term to pairwise 1D time integrals.
inline double weak_limit_covariance(const GaussianMixture& phi1,
                                    const GaussianMixture& phi2, double s, double t,
                                    const QuadratureConfig& cfg = {}) {
  if (!(0.0 < s && s <= t))
    throw std::invalid_argument("weak_limit_covariance: requires 0 < s <= t");
  const double pi = std::numbers::pi;

  double term1 = 0.0;
  const GaussianMixture a = phi1.heat_evolved(1.0 / s);
  const GaussianMixture b = phi2.heat_evolved(1.0 / t);
  for (const auto& ta : a.terms())
    for (const auto& tb : b.terms())
      term1 += ta.weight * tb.weight *
               detail::log_kernel_pairing(norm(ta.center - tb.center),
                                          ta.width + tb.width, cfg);

  double term2 = 0.0;
  const double upper = 1.0 / t;
  for (const auto& ta : phi1.terms())
    for (const auto& tb : phi2.terms()) {
      const Vec2 d = ta.center - tb.center;
      const double d2 = d.x * d.x + d.y * d.y;
      const double base = ta.width + tb.width + 1.0 / s + 1.0 / t;
      auto f = [&](double r) {
        const double w = base - 2.0 * r;
        return std::exp(-d2 / (2.0 * w)) / (2.0 * pi * w);
      };
      term2 += ta.weight * tb.weight *
               integrate_or_throw(f, 0.0, upper, cfg.with_hints({0.5 * upper})).value;
    }
  return term1 + term2;
}

}  // namespace wsde
