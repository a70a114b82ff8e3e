#pragma once

// Adaptive 1D quadrature (Gauss-Kronrod 7/15) with caller-supplied split
// hints. Globally adaptive: the interval with the largest error estimate is
// bisected until the requested tolerance or the evaluation budget is hit.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wsde {

struct QuadratureConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  std::size_t max_intervals = 20000;
  std::vector<double> split_hints;  // interior subdivision points, any order

  QuadratureConfig with_tol(double rel, double abs) const {
    QuadratureConfig c = *this;
    c.rel_tol = rel;
    c.abs_tol = abs;
    return c;
  }
  QuadratureConfig with_hints(std::vector<double> hints) const {
    QuadratureConfig c = *this;
    c.split_hints = std::move(hints);
    return c;
  }
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double value, double error_estimate)
      : std::runtime_error(what), value(value), error_estimate(error_estimate) {}
  double value;
  double error_estimate;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evals = 0;
  bool converged = true;
};

namespace detail {

// 15-point Kronrod nodes and weights with the embedded 7-point Gauss rule.
struct Gk15 {
  static constexpr double xgk[8] = {
      0.991455371120812639206854697526329,
      0.949107912342758524526189684047851,
      0.864864423359769072789712788640926,
      0.741531185599394439863864773280788,
      0.586087235467691130294144838258730,
      0.405845151377397166906606412076961,
      0.207784955007898467600689403773245,
      0.000000000000000000000000000000000};
  static constexpr double wgk[8] = {
      0.022935322010529224963732008058970,
      0.063092092629978553290700663189204,
      0.104790010322250183839876322541518,
      0.140653259715525918745189590510238,
      0.169004726639267902826583426598550,
      0.190350578064785409913256402421014,
      0.204432940075298892414161999234649,
      0.209482141084727828012999174891714};
  static constexpr double wg[4] = {
      0.129484966168869693270611432679082,
      0.279705391489276667901467771423780,
      0.381830050505118944950369775488975,
      0.417959183673469387755102040816327};
};

struct GkEstimate {
  double integral;
  double error;
};

template <class F>
GkEstimate gk15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[15];
  // order: pairs (c - h*x, c + h*x) for xgk[0..6], then the center
  double result_k = 0.0, result_g = 0.0;
  for (int i = 0; i < 7; ++i) {
    const double x = h * Gk15::xgk[i];
    const double f1 = f(c - x);
    const double f2 = f(c + x);
    fv[2 * i] = f1;
    fv[2 * i + 1] = f2;
    result_k += Gk15::wgk[i] * (f1 + f2);
    if (i % 2 == 1) result_g += Gk15::wg[(i - 1) / 2] * (f1 + f2);
  }
  const double fc = f(c);
  fv[14] = fc;
  result_k += Gk15::wgk[7] * fc;
  result_g += Gk15::wg[3] * fc;

  const double integral = result_k * h;
  // QUADPACK-style rescaled error estimate
  const double mean = result_k * 0.5;
  double asc = Gk15::wgk[7] * std::abs(fc - mean);
  for (int i = 0; i < 7; ++i)
    asc += Gk15::wgk[i] * (std::abs(fv[2 * i] - mean) + std::abs(fv[2 * i + 1] - mean));
  asc *= std::abs(h);
  double err = std::abs((result_k - result_g) * h);
  if (asc != 0.0 && err != 0.0)
    err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  return {integral, err};
}

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration, cached per n.
inline const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  auto legendre_and_slope = [n](double z) {
    double p0 = 1.0, p1 = 0.0;
    for (int j = 0; j < n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
    }
    return std::pair<double, double>(p0, n * (z * p0 - p1) / (z * z - 1.0));
  };

  std::vector<double> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre_and_slope(z);
      const double dz = p / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    const auto [p, dp] = legendre_and_slope(z);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

}  // namespace detail

// Integrates f over [a,b]; never throws on non-convergence, the result
// carries the achieved error estimate and a converged flag.
template <class F>
QuadResult integrate(const F& f, double a, double b, const QuadratureConfig& cfg = {}) {
  QuadResult out;
  if (a == b) return out;

  struct Interval {
    double a, b, integral, error;
    bool operator<(const Interval& o) const { return error < o.error; }
  };

  std::vector<double> edges;
  edges.push_back(a);
  for (double h : cfg.split_hints)
    if (h > std::min(a, b) && h < std::max(a, b)) edges.push_back(h);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  if (a > b) std::reverse(edges.begin(), edges.end());

  std::priority_queue<Interval> queue;
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    auto est = detail::gk15(f, edges[i], edges[i + 1]);
    out.evals += 15;
    queue.push({edges[i], edges[i + 1], est.integral, est.error});
    total += est.integral;
    total_err += est.error;
  }

  std::size_t n_intervals = edges.size() - 1;
  while (total_err > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total)) &&
         n_intervals < cfg.max_intervals) {
    Interval worst = queue.top();
    if (worst.error == 0.0) break;
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid == worst.a || mid == worst.b) {  // interval at floating-point resolution
      queue.push({worst.a, worst.b, worst.integral, 0.0});
      total_err -= worst.error;
      continue;
    }
    auto left = detail::gk15(f, worst.a, mid);
    auto right = detail::gk15(f, mid, worst.b);
    out.evals += 30;
    total += left.integral + right.integral - worst.integral;
    total_err += left.error + right.error - worst.error;
    queue.push({worst.a, mid, left.integral, left.error});
    queue.push({mid, worst.b, right.integral, right.error});
    ++n_intervals;
  }

  // re-sum interval contributions largest-error-last for a stable total
  std::vector<Interval> parts;
  parts.reserve(n_intervals);
  while (!queue.empty()) {
    parts.push_back(queue.top());
    queue.pop();
  }
  double sum = 0.0, err = 0.0;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    sum += it->integral;
    err += it->error;
  }
  out.value = sum;
  out.error = err;
  out.converged = err <= std::max(cfg.abs_tol, cfg.rel_tol * std::abs(sum));
  return out;
}

// Same as integrate() but failure to converge is a hard error carrying the
// achieved estimate.
template <class F>
QuadResult integrate_or_throw(const F& f, double a, double b,
                              const QuadratureConfig& cfg = {}) {
  QuadResult r = integrate(f, a, b, cfg);
  if (!r.converged)
    throw QuadratureError("quadrature did not reach the requested tolerance", r.value,
                          r.error);
  return r;
}

// Geometric subdivision hints for integrands whose scale changes over decades.
inline std::vector<double> geometric_hints(double lo, double hi, double ratio = 4.0) {
  std::vector<double> hints;
  for (double x = lo; x < hi; x *= ratio) hints.push_back(x);
  return hints;
}

}  // namespace wsde
