#pragma once

// Finite-N weak-form covariances of zeta^N_s(phi) and the Hölder-modulus
// decomposition I_N, J_N, K_N with its scaling criterion.
//
// Gaussian-mixture test functions factor per coordinate, so the 4D space
// pairing collapses: for each time r and coordinate, the weighted pmf
// profiles
//   U_k = int g(x) P(S_{M(x,u)}(p) = k) dx
// turn the spatial double integral into sum_k U_k V_k. U is computed on a
// Gauss-Legendre grid when the pmf bump is wide in x, and by exact staircase
// summation over lattice cells when it is narrow (near the equal-time edge,
// where p -> 1 and the kernel sharpens).
//
// Radial integrals use fixed composite Gauss-Kronrod panels: the integrand
// carries O(1e-5) spatial-grid noise, which defeats adaptive refinement, so
// panel ladders are placed at the known decomposition points instead.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "wsde/binomial.hpp"
#include "wsde/covariance.hpp"
#include "wsde/mixture.hpp"
#include "wsde/quadrature.hpp"

namespace wsde {

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// One mixture term in one coordinate at macroscopic time u: the 1D bump
// g(width; x - center) restricted to x >= -sqrt(N).
struct CoordProfile {
  double center = 0.0;
  double width = 1.0;  // variance
  double u = 1.0;
  std::int64_t N = 0;
  double x_lo = 0.0, x_hi = 0.0;
  std::int64_t m_lo = 0, m_hi = 0;
};

inline CoordProfile make_coord_profile(double center, double width, double u,
                                       std::int64_t N) {
  CoordProfile c;
  c.center = center;
  c.width = width;
  c.u = u;
  c.N = N;
  const double sd = std::sqrt(width);
  const double sqrt_n = std::sqrt(static_cast<double>(N));
  c.x_lo = std::max(center - 8.5 * sd, -sqrt_n);
  c.x_hi = center + 8.5 * sd;
  if (c.x_hi <= c.x_lo)
    throw std::invalid_argument("weak form: bump support entirely below -sqrt(N)");
  c.m_lo = lattice_index(c.x_lo, u, N);
  c.m_hi = lattice_index(c.x_hi, u, N);
  return c;
}

// All per-term coordinate profiles of a mixture at macroscopic time u.
struct MixtureProfiles {
  std::vector<double> weights;
  std::vector<std::array<CoordProfile, 2>> coords;
};

inline MixtureProfiles make_mixture_profiles(const GaussianMixture& phi, double u,
                                             std::int64_t N) {
  MixtureProfiles mp;
  for (const auto& t : phi.terms()) {
    mp.weights.push_back(t.weight);
    mp.coords.push_back({make_coord_profile(t.center.x, t.width, u, N),
                         make_coord_profile(t.center.y, t.width, u, N)});
  }
  return mp;
}

struct KWindow {
  std::int64_t lo = 0, hi = -1;
};

inline KWindow profile_k_window(const CoordProfile& c, double p) {
  if (p <= 0.0) return {0, 0};
  const Window w1 = certified_window(c.m_lo, p, -38.0);
  const Window w2 = certified_window(c.m_hi, p, -38.0);
  return {std::min(w1.lo, w2.lo), std::max(w1.hi, w2.hi)};
}

// U_k = int g(x) P(S_{M(x,u)}(p) = k) dx for k in [win.lo, win.hi].
inline std::vector<double> pmf_profile(const CoordProfile& c, double p,
                                       const KWindow& win) {
  std::vector<double> out(static_cast<std::size_t>(win.hi - win.lo + 1), 0.0);
  if (p <= 0.0) {
    // S == 0: all bump mass lands on k = 0
    if (win.lo <= 0 && 0 <= win.hi) out[static_cast<std::size_t>(-win.lo)] = 1.0;
    return out;
  }
  const double sqrt_n = std::sqrt(static_cast<double>(c.N));
  const double steps_per_x = c.u * sqrt_n;  // dM/dx
  const double m_mid = 0.5 * static_cast<double>(c.m_lo + c.m_hi);
  // x-extent of the pmf bump for fixed k, measured in lattice steps
  const double sigma_steps =
      p < 1.0 ? std::sqrt(std::max(m_mid, 1.0) * (1.0 - p) / p) : 0.0;

  if (sigma_steps > 60.0) {
    // wide regime: composite Gauss-Legendre in x, ~4 nodes per feature width
    const double span = c.x_hi - c.x_lo;
    const double feature = sigma_steps / steps_per_x;
    const int n_target = std::clamp(static_cast<int>(4.0 * span / feature) + 16, 32, 1024);
    const int panel_order = 16;
    const int n_panels = (n_target + panel_order - 1) / panel_order;
    const auto& [gx, gw] = gauss_legendre(panel_order);
    const double inv_sd = 1.0 / std::sqrt(c.width);
    const double norm = inv_sd / std::sqrt(2.0 * std::numbers::pi);
    std::vector<double> pmf;
    for (int panel = 0; panel < n_panels; ++panel) {
      const double a = c.x_lo + span * panel / n_panels;
      const double b = c.x_lo + span * (panel + 1) / n_panels;
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (int i = 0; i < panel_order; ++i) {
        const double x = mid + half * gx[i];
        const double z = (x - c.center) * inv_sd;
        const double gweight = gw[i] * half * norm * std::exp(-0.5 * z * z);
        const std::int64_t m = lattice_index(x, c.u, c.N);
        const Window kw = certified_window(m, p, -38.0);
        const std::int64_t klo = std::max(kw.lo, win.lo);
        const std::int64_t khi = std::min(kw.hi, win.hi);
        if (klo > khi) continue;
        binom_pmf_window(m, p, klo, khi, pmf);
        for (std::int64_t k = klo; k <= khi; ++k)
          out[static_cast<std::size_t>(k - win.lo)] +=
              gweight * pmf[static_cast<std::size_t>(k - klo)];
      }
    }
    return out;
  }

  // narrow regime: exact staircase sum over lattice cells. For each k the
  // pmf in M concentrates on ~sigma_steps cells, and the x-cell carrying M
  // has exact Gaussian mass Phi(x_{M+1}) - Phi(x_M). The pmf runs along m
  // by the recurrence pmf(m+1,k)/pmf(m,k) = (1-p)(m+1)/(m+1-k) from an
  // anchored mode evaluation.
  const double inv_sd = 1.0 / std::sqrt(c.width);
  const double nu = static_cast<double>(c.N) * c.u;
  auto cell_left_x = [&](std::int64_t m) {
    return (static_cast<double>(m) - nu) / steps_per_x;
  };
  const double q1 = 1.0 - p;
  for (std::int64_t k = std::max<std::int64_t>(win.lo, 0); k <= win.hi; ++k) {
    const double delta = 12.0 * std::sqrt(static_cast<double>(k) * (1.0 - p) + 4.0) + 8.0;
    const std::int64_t m_from =
        std::max({c.m_lo, k,
                  static_cast<std::int64_t>((static_cast<double>(k) - delta) / p)});
    const std::int64_t m_to = std::min(
        c.m_hi, static_cast<std::int64_t>((static_cast<double>(k) + delta) / p) + 1);
    if (m_from > m_to) continue;
    double acc = 0.0;
    if (p >= 1.0) {
      if (c.m_lo <= k && k <= c.m_hi) {
        const double z_lo = (cell_left_x(k) - c.center) * inv_sd;
        const double z_hi = (cell_left_x(k + 1) - c.center) * inv_sd;
        acc = std::max(0.0, normal_cdf(z_hi) - normal_cdf(z_lo));
      }
      out[static_cast<std::size_t>(k - win.lo)] = acc;
      continue;
    }
    const std::int64_t anchor =
        std::clamp(static_cast<std::int64_t>(std::llround(static_cast<double>(k) / p)),
                   m_from, m_to);
    const long double l0 = log_binom_pmf(anchor, p, k);
    if (l0 < -700.0L) continue;
    const double t0 = static_cast<double>(std::exp(l0));
    auto cell_mass = [&](std::int64_t m) {
      const double z_lo = (cell_left_x(m) - c.center) * inv_sd;
      const double z_hi = (cell_left_x(m + 1) - c.center) * inv_sd;
      return normal_cdf(z_hi) - normal_cdf(z_lo);
    };
    acc = t0 * cell_mass(anchor);
    double t = t0;
    for (std::int64_t m = anchor; m < m_to && t != 0.0; ++m) {
      t *= q1 * static_cast<double>(m + 1) / static_cast<double>(m + 1 - k);
      acc += t * cell_mass(m + 1);
    }
    t = t0;
    for (std::int64_t m = anchor; m > m_from && t != 0.0; --m) {
      t *= static_cast<double>(m - k) / (q1 * static_cast<double>(m));
      acc += t * cell_mass(m - 1);
    }
    out[static_cast<std::size_t>(k - win.lo)] = acc;
  }
  return out;
}

// all profiles of one mixture at one success probability
struct ProfileSet {
  const MixtureProfiles* source = nullptr;
  std::vector<std::array<KWindow, 2>> windows;
  std::vector<std::array<std::vector<double>, 2>> values;
};

inline ProfileSet make_profile_set(const MixtureProfiles& mp, double p) {
  ProfileSet set;
  set.source = &mp;
  set.windows.resize(mp.weights.size());
  set.values.resize(mp.weights.size());
  for (std::size_t i = 0; i < mp.weights.size(); ++i)
    for (int c = 0; c < 2; ++c) {
      set.windows[i][c] = profile_k_window(mp.coords[i][c], p);
      set.values[i][c] = pmf_profile(mp.coords[i][c], p, set.windows[i][c]);
    }
  return set;
}

inline double profile_dot(const KWindow& wu, const std::vector<double>& u,
                          const KWindow& wv, const std::vector<double>& v) {
  const std::int64_t lo = std::max(wu.lo, wv.lo);
  const std::int64_t hi = std::min(wu.hi, wv.hi);
  double s = 0.0, comp = 0.0;
  for (std::int64_t k = lo; k <= hi; ++k) {
    const double term = u[static_cast<std::size_t>(k - wu.lo)] *
                        v[static_cast<std::size_t>(k - wv.lo)];
    const double y = term - comp;
    const double t = s + y;
    comp = (t - s) - y;
    s = t;
  }
  return s;
}

// sum_{i,j} W_i W_j prod_c sum_k U^{i,c}_k V^{j,c}_k
inline double pair_sum(const ProfileSet& a, const ProfileSet& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    for (std::size_t j = 0; j < b.values.size(); ++j) {
      double prod = a.source->weights[i] * b.source->weights[j];
      for (int c = 0; c < 2; ++c)
        prod *= profile_dot(a.windows[i][c], a.values[i][c], b.windows[j][c],
                            b.values[j][c]);
      total += prod;
    }
  return total;
}

// Composite Gauss-Kronrod over fixed panel edges for an n-component
// integrand evaluated on shared nodes.
template <std::size_t K, class F>
std::pair<std::array<double, K>, double> composite_gk(const F& f,
                                                      const std::vector<double>& edges) {
  std::array<double, K> totals{};
  std::array<double, K> gauss{};
  double err = 0.0;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double c = 0.5 * (edges[e] + edges[e + 1]);
    const double h = 0.5 * (edges[e + 1] - edges[e]);
    if (h <= 0.0) continue;
    std::array<double, K> rk{}, rg{};
    auto tally = [&](double x, double wk, double wg) {
      const std::array<double, K> v = f(x);
      for (std::size_t q = 0; q < K; ++q) {
        rk[q] += wk * v[q];
        rg[q] += wg * v[q];
      }
    };
    for (int i = 0; i < 7; ++i) {
      const double dx = h * Gk15::xgk[i];
      const double wg = i % 2 == 1 ? Gk15::wg[(i - 1) / 2] : 0.0;
      tally(c - dx, Gk15::wgk[i], wg);
      tally(c + dx, Gk15::wgk[i], wg);
    }
    tally(c, Gk15::wgk[7], Gk15::wg[3]);
    double panel_err = 0.0;
    for (std::size_t q = 0; q < K; ++q) {
      totals[q] += rk[q] * h;
      gauss[q] += rg[q] * h;
      panel_err = std::max(panel_err, std::abs(rk[q] - rg[q]) * h);
    }
    err += panel_err;
  }
  return {totals, err};
}

// panel ladder refined geometrically toward both endpoints
inline std::vector<double> edge_refined_panels(double a, double b, double finest,
                                               double ratio = 4.0) {
  std::vector<double> edges{a, b};
  for (double g = finest; g < 0.5 * (b - a); g *= ratio) {
    edges.push_back(a + g);
    edges.push_back(b - g);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace detail

struct WeakCovariance {
  double raw = 0.0;
  double recentered = 0.0;  // raw - c_N (int phi1)(int phi2)
  double quadrature_error = 0.0;
  double mass_product = 0.0;
};

// Cov[zeta^N_s(phi1); zeta^N_t(phi2)] over the domain x, y >= -sqrt(N) 1,
// split at the scheme cutoffs like the pointwise engine.
inline WeakCovariance weak_rescaled_covariance(const GaussianMixture& phi1,
                                               const GaussianMixture& phi2, double s,
                                               double t, const ScalingScheme& scheme,
                                               const QuadratureConfig& cfg = {}) {
  (void)cfg;
  if (!(0.0 < s && s <= t))
    throw std::invalid_argument("weak_rescaled_covariance: requires 0 < s <= t");
  const std::int64_t N = scheme.N;
  const double nd = static_cast<double>(N);
  const auto pa = detail::make_mixture_profiles(phi1, s, N);
  const auto pb = detail::make_mixture_profiles(phi2, t, N);

  auto b_micro = [&](double r) -> std::array<double, 1> {
    const auto sa = detail::make_profile_set(pa, std::min(1.0, r / (nd * s)));
    const auto sb = detail::make_profile_set(pb, std::min(1.0, r / (nd * t)));
    return {detail::pair_sum(sa, sb)};
  };
  auto b_macro = [&](double rho) -> std::array<double, 1> {
    const auto sa = detail::make_profile_set(pa, std::min(1.0, rho / s));
    const auto sb = detail::make_profile_set(pb, std::min(1.0, rho / t));
    return {nd * detail::pair_sum(sa, sb)};
  };

  WeakCovariance out;
  out.mass_product = phi1.total_mass() * phi2.total_mass();

  const double left_edge = nd * s * scheme.ell_N;
  const bool three_intervals = (t - s) <= scheme.tau_N;
  {
    std::vector<double> edges{0.0};
    for (double g : geometric_hints(std::min(1.0, 0.25 * left_edge), left_edge, 4.0))
      edges.push_back(g);
    edges.push_back(left_edge);
    const auto [v, e] = detail::composite_gk<1>(b_micro, edges);
    out.raw += v[0];
    out.quadrature_error += e;
  }
  const double mid_hi = three_intervals ? s * scheme.r_N : s;
  {
    const auto edges =
        detail::edge_refined_panels(s * scheme.ell_N, mid_hi, 2.0 * s * scheme.ell_N, 3.0);
    const auto [v, e] = detail::composite_gk<1>(b_macro, edges);
    out.raw += v[0];
    out.quadrature_error += e;
  }
  if (three_intervals) {
    const double right_edge = nd * s * scheme.r_N;
    const auto edges = detail::edge_refined_panels(right_edge, nd * s,
                                                   0.125 * (nd * s - right_edge), 2.0);
    const auto [v, e] = detail::composite_gk<1>(b_micro, edges);
    out.raw += v[0];
    out.quadrature_error += e;
  }
  out.recentered = out.raw - recentering_constant(N) * out.mass_product;
  return out;
}

struct HolderReport {
  double I_N = 0.0;
  double J_N = 0.0;
  double K_N = 0.0;
  double total = 0.0;       // I_N - J_N - K_N = E|zeta^N_s(phi) - zeta^N_t(phi)|^2
  double ratio_half = 0.0;  // |I_N| / (t-s)^{1/2}
  double ratio_one_J = 0.0;  // |J_N| / (t-s)
  double ratio_one_K = 0.0;  // |K_N| / (t-s)
  double quadrature_error = 0.0;
};

// The three-term decomposition of the squared weak increment. phi must have
// total mass zero (the log-divergent constants cancel only on the mass-zero
// subspace).
inline HolderReport holder_decomposition(const GaussianMixture& phi, double s, double t,
                                         const ScalingScheme& scheme,
                                         const QuadratureConfig& cfg = {}) {
  (void)cfg;
  if (!(0.0 < s && s < t))
    throw std::invalid_argument("holder_decomposition: requires 0 < s < t");
  if (std::abs(phi.total_mass()) > 1e-12 * std::max(1.0, phi.weight_scale()))
    throw std::invalid_argument("holder_decomposition: phi must have total mass zero");
  const std::int64_t N = scheme.N;
  const double nd = static_cast<double>(N);
  const auto at_s = detail::make_mixture_profiles(phi, s, N);
  const auto at_t = detail::make_mixture_profiles(phi, t, N);

  HolderReport rep;
  {
    // I_N: equal-time kernel at t over [s, t]; the kernel sharpens as
    // rho -> t, so panels refine geometrically toward t
    auto f = [&](double rho) -> std::array<double, 1> {
      const auto pt = detail::make_profile_set(at_t, std::min(1.0, rho / t));
      return {nd * detail::pair_sum(pt, pt)};
    };
    std::vector<double> edges{s, t};
    for (double g = t / nd; g < 0.5 * (t - s); g *= 3.0) edges.push_back(t - g);
    std::sort(edges.begin(), edges.end());
    const auto [v, e] = detail::composite_gk<1>(f, edges);
    rep.I_N = v[0];
    rep.quadrature_error += e;
  }
  {
    // J_N and K_N share B(rho; s, t), so both integrands ride one profile pass
    auto f = [&](double rho) -> std::array<double, 2> {
      const auto ps = detail::make_profile_set(at_s, std::min(1.0, rho / s));
      const auto pt = detail::make_profile_set(at_t, std::min(1.0, rho / t));
      const double b_st = nd * detail::pair_sum(ps, pt);
      const double b_ss = nd * detail::pair_sum(ps, ps);
      const double b_tt = nd * detail::pair_sum(pt, pt);
      return {b_st - b_ss, b_st - b_tt};
    };
    const auto edges = detail::edge_refined_panels(0.0, s, s / 512.0, 3.0);
    const auto [v, e] = detail::composite_gk<2>(f, edges);
    rep.J_N = v[0];
    rep.K_N = v[1];
    rep.quadrature_error += 2.0 * e;
  }
  rep.total = rep.I_N - rep.J_N - rep.K_N;
  const double dt = t - s;
  rep.ratio_half = std::abs(rep.I_N) / std::sqrt(dt);
  rep.ratio_one_J = std::abs(rep.J_N) / dt;
  rep.ratio_one_K = std::abs(rep.K_N) / dt;
  return rep;
}

struct HolderScanRow {
  std::int64_t N = 0;
  double s = 0.0, t = 0.0;
  HolderReport report;
};

// Sweep of the decomposition over a (s,t) grid and a list of schemes; the
// ratio columns are the boundedness witnesses.
inline std::vector<HolderScanRow> holder_scan(
    const GaussianMixture& phi, const std::vector<std::pair<double, double>>& st_grid,
    const std::vector<ScalingScheme>& schemes, const QuadratureConfig& cfg = {}) {
  std::vector<HolderScanRow> rows;
  for (const auto& scheme : schemes)
    for (const auto& [s, t] : st_grid)
      rows.push_back({scheme.N, s, t, holder_decomposition(phi, s, t, scheme, cfg)});
  return rows;
}

}  // namespace wsde
