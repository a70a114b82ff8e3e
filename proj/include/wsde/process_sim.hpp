#pragma once

// Monte Carlo engines: linear pure death chains, exact Gaussian sampling of
// the stochastic-integral field, exact log-time OU stepping of the Whittaker
// SDE, the q-Whittaker interlacing particle system, and covariance
// estimation with jackknife errors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wsde/covariance.hpp"
#include "wsde/lattice.hpp"
#include "wsde/matrix.hpp"
#include "wsde/quadrature.hpp"
#include "wsde/rng.hpp"

namespace wsde {

// ---------------------------------------------------------------------------
// linear pure death chain: k -> k-1 at rate k; marginal Binomial(m0, e^{-t})

struct DeathChainPath {
  std::int64_t m0 = 0;
  std::vector<double> jump_times;  // strictly increasing, all <= horizon

  std::int64_t state_at(double t) const {
    const auto jumps = std::upper_bound(jump_times.begin(), jump_times.end(), t) -
                       jump_times.begin();
    return m0 - static_cast<std::int64_t>(jumps);
  }
};

inline DeathChainPath simulate_death_chain(std::int64_t m0, double horizon,
                                           RngStream& rng) {
  if (m0 < 0) throw std::invalid_argument("simulate_death_chain: m0 must be >= 0");
  DeathChainPath path;
  path.m0 = m0;
  double t = 0.0;
  for (std::int64_t k = m0; k > 0; --k) {
    t += rng.exponential() / static_cast<double>(k);
    if (t > horizon) break;
    path.jump_times.push_back(t);
  }
  return path;
}

// ---------------------------------------------------------------------------
// PSD factorization with eigenvalue clipping

// Returns B with B B^T = C (up to clipping). Eigenvalues in
// [-rel_clip * scale, 0) are clipped to 0; anything lower throws, since a
// decisively negative eigenvalue signals a covariance bug upstream.
inline Matrix factor_psd(const Matrix& c, double rel_clip = 1e-10) {
  const std::size_t n = c.rows();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale += std::abs(c(i, i));
  if (scale == 0.0) scale = 1.0;
  Matrix v;
  std::vector<double> eigs = symmetric_eigen(c, &v);
  for (double& e : eigs) {
    if (e < -rel_clip * scale)
      throw std::runtime_error("factor_psd: matrix is not positive semidefinite (eig " +
                               std::to_string(e) + ", scale " + std::to_string(scale) + ")");
    e = std::max(0.0, e);
  }
  Matrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = v(i, j) * std::sqrt(eigs[j]);
  return b;
}

// ---------------------------------------------------------------------------
// exact Gaussian sampling of {zeta_t(a)} at a finite set of space-time points

class WhittakerGaussianSampler {
 public:
  WhittakerGaussianSampler(std::vector<std::pair<LatticePoint, double>> points,
                           const QuadratureConfig& cfg = {})
      : points_(std::move(points)) {
    const std::size_t n = points_.size();
    if (n == 0) throw std::invalid_argument("WhittakerGaussianSampler: no points");
    cov_ = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        const auto& [ai, ti] = points_[i];
        const auto& [aj, tj] = points_[j];
        const double v = ti <= tj
                             ? covariance_exact(delta_map(ai), delta_map(aj), ti, tj, cfg)
                             : covariance_exact(delta_map(aj), delta_map(ai), tj, ti, cfg);
        cov_(i, j) = v;
        cov_(j, i) = v;
      }
    factor_ = factor_psd(cov_);
  }

  const Matrix& covariance() const { return cov_; }
  std::size_t dimension() const { return points_.size(); }

  std::vector<double> sample(RngStream& rng) const {
    const std::size_t n = points_.size();
    std::vector<double> z(n);
    for (auto& x : z) x = rng.normal();
    return factor_.apply(z);
  }

 private:
  std::vector<std::pair<LatticePoint, double>> points_;
  Matrix cov_;
  Matrix factor_;
};

// ---------------------------------------------------------------------------
// exact OU stepping of the Whittaker SDE in log time

struct PathSample {
  std::vector<double> times;  // strictly increasing
  Matrix values;              // row per time, column per lattice point
};

// Integrates zeta across `times` (all positive, increasing) with the exact
// per-step update in u = ln t:
//   Y_{u+d} = e^{dA} Y_u + G,  Cov G = e^{u+d} K(d),
//   K(d) = int_0^d e^{wA} e^{wA^T} e^{-w} dw,
// so refining the grid changes nothing beyond Monte Carlo noise.
inline PathSample simulate_whittaker_euler(int L, const std::vector<double>& xi0,
                                           const std::vector<double>& times,
                                           RngStream& rng) {
  const TriangularLattice lat(L);
  const std::size_t n = lat.size();
  if (xi0.size() != n)
    throw std::invalid_argument("simulate_whittaker_euler: xi0 has wrong dimension");
  if (times.empty())
    throw std::invalid_argument("simulate_whittaker_euler: empty time grid");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!(times[i] > 0.0) || (i > 0 && times[i] <= times[i - 1]))
      throw std::invalid_argument(
          "simulate_whittaker_euler: times must be positive and strictly increasing");

  const Matrix a = generator(L).entries;
  const auto& [gx, gw] = detail::gauss_legendre(24);

  // per-step-size cache of (e^{dA}, PSD factor of K(d))
  std::map<std::int64_t, std::pair<Matrix, Matrix>> step_cache;
  auto step_matrices = [&](double d) -> const std::pair<Matrix, Matrix>& {
    const auto key = static_cast<std::int64_t>(std::llround(d * 1e12));
    auto it = step_cache.find(key);
    if (it != step_cache.end()) return it->second;
    Matrix ad = a;
    ad *= d;
    Matrix ed = expm(ad);
    Matrix k(n, n);
    for (int i = 0; i < 24; ++i) {
      const double w = 0.5 * d * (gx[i] + 1.0);
      Matrix aw = a;
      aw *= w;
      const Matrix ew = expm(aw);
      Matrix m = ew * ew.transpose();
      m *= std::exp(-w) * (0.5 * d * gw[i]);
      k += m;
    }
    return step_cache.emplace(key, std::make_pair(std::move(ed), factor_psd(k, 1e-9)))
        .first->second;
  };

  PathSample out;
  out.times = times;
  out.values = Matrix(times.size(), n);
  std::vector<double> y = xi0;
  for (std::size_t j = 0; j < n; ++j) out.values(0, j) = y[j];
  for (std::size_t step = 1; step < times.size(); ++step) {
    const double u0 = std::log(times[step - 1]);
    const double u1 = std::log(times[step]);
    const auto& [ed, kfac] = step_matrices(u1 - u0);
    std::vector<double> z(n);
    for (auto& v : z) v = rng.normal();
    std::vector<double> noise = kfac.apply(z);
    const double amp = std::exp(0.5 * u1);
    y = ed.apply(y);
    for (std::size_t j = 0; j < n; ++j) y[j] += amp * noise[j];
    for (std::size_t j = 0; j < n; ++j) out.values(step, j) = y[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// q-Whittaker interlacing particle system (Gillespie)

struct ParticleConfig {
  int L = 3;
  std::vector<std::int64_t> positions;  // lattice order of TriangularLattice(L)
};

inline bool interlacing_ok(const TriangularLattice& lat, const std::vector<std::int64_t>& pos) {
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const LatticePoint a = lat.point(i);
    if (a.a2 < 2 || a.a2 < a.a1 + 1) continue;
    const std::int64_t below_right = lat.index({a.a1, a.a2 - 1});
    const std::int64_t lower = lat.index({a.a1 + 1, a.a2});
    // lambda(a1+1, a2) <= lambda(a1, a2-1) <= lambda(a1, a2)
    if (pos[static_cast<std::size_t>(below_right)] > pos[i]) return false;
    if (lower >= 0 &&
        pos[static_cast<std::size_t>(lower)] > pos[static_cast<std::size_t>(below_right)])
      return false;
  }
  return true;
}

inline ParticleConfig flat_particle_config(int L) {
  const TriangularLattice lat(L);
  return {L, std::vector<std::int64_t>(lat.size(), 0)};
}

// jump rate of the particle at a: blocked exactly when
// lambda(a1-1, a2-1) == lambda(a1, a2); missing neighbours contribute 1.
inline double qwhittaker_rate(const TriangularLattice& lat,
                              const std::vector<std::int64_t>& pos, LatticePoint a,
                              double q) {
  const auto at = [&](LatticePoint b) -> std::int64_t {
    return pos[static_cast<std::size_t>(lat.index(b))];
  };
  const std::int64_t la = at(a);
  double numerator = 1.0;
  if (lat.index({a.a1 - 1, a.a2 - 1}) >= 0)
    numerator *= 1.0 - std::pow(q, static_cast<double>(at({a.a1 - 1, a.a2 - 1}) - la));
  if (lat.index({a.a1 + 1, a.a2}) >= 0)
    numerator *= 1.0 - std::pow(q, static_cast<double>(la - at({a.a1 + 1, a.a2}) + 1));
  double denominator = 1.0;
  if (lat.index({a.a1, a.a2 - 1}) >= 0)
    denominator = 1.0 - std::pow(q, static_cast<double>(la - at({a.a1, a.a2 - 1}) + 1));
  return numerator / denominator;
}

struct QEvent {
  double time = 0.0;
  LatticePoint particle;
  std::int64_t new_position = 0;
  int pushed = 0;  // particles moved by propagation above the jumper
};

struct QTrajectory {
  std::vector<QEvent> events;
  ParticleConfig final_config;
};

class InterlacingViolation : public std::runtime_error {
 public:
  explicit InterlacingViolation(std::string what) : std::runtime_error(std::move(what)) {}
};

// Gillespie simulation until `horizon` (or max_events). The interlacing
// invariant is revalidated after every event; the dynamics preserve it by
// construction, so a violation aborts with the recent event log.
inline QTrajectory simulate_qwhittaker(int L, double q, const ParticleConfig& config0,
                                       double horizon, RngStream& rng,
                                       std::size_t max_events = SIZE_MAX) {
  if (!(q >= 0.0 && q < 1.0))
    throw std::invalid_argument("simulate_qwhittaker: q must lie in [0,1)");
  const TriangularLattice lat(L);
  if (config0.positions.size() != lat.size())
    throw std::invalid_argument("simulate_qwhittaker: config has wrong dimension");
  if (!interlacing_ok(lat, config0.positions))
    throw std::invalid_argument("simulate_qwhittaker: initial condition violates interlacing");

  QTrajectory traj;
  traj.final_config = config0;
  auto& pos = traj.final_config.positions;
  std::vector<double> rates(lat.size());
  std::deque<QEvent> recent;

  double t = 0.0;
  while (traj.events.size() < max_events) {
    double total = 0.0;
    for (std::size_t i = 0; i < lat.size(); ++i) {
      rates[i] = qwhittaker_rate(lat, pos, lat.point(i), q);
      total += rates[i];
    }
    if (total <= 0.0) break;
    t += rng.exponential() / total;
    if (t > horizon) break;

    double target = rng.uniform() * total;
    std::size_t chosen = 0;
    for (; chosen + 1 < lat.size(); ++chosen) {
      target -= rates[chosen];
      if (target <= 0.0) break;
    }
    const LatticePoint a = lat.point(chosen);
    const std::int64_t old_pos = pos[chosen];
    pos[chosen] = old_pos + 1;
    // push the maximal vertical string above a that shared its position
    int pushed = 0;
    for (std::int64_t lvl = a.a2 + 1; lvl <= L; ++lvl) {
      const std::int64_t idx = lat.index({a.a1, lvl});
      if (idx < 0 || pos[static_cast<std::size_t>(idx)] != old_pos) break;
      pos[static_cast<std::size_t>(idx)] = old_pos + 1;
      ++pushed;
    }

    QEvent ev{t, a, old_pos + 1, pushed};
    traj.events.push_back(ev);
    recent.push_back(ev);
    if (recent.size() > 50) recent.pop_front();

    if (!interlacing_ok(lat, pos)) {
      std::ostringstream oss;
      oss << "interlacing violated after event " << traj.events.size()
          << "; recent events (time, a1, a2, new_pos, pushed):\n";
      for (const auto& e : recent)
        oss << "  " << e.time << " " << e.particle.a1 << " " << e.particle.a2 << " "
            << e.new_position << " " << e.pushed << "\n";
      throw InterlacingViolation(oss.str());
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------
// covariance estimation

struct CovEstimate {
  double value = 0.0;
  double stderr_jackknife = 0.0;
};

// Unbiased covariance of the given column pairs with leave-one-out jackknife
// standard errors.
inline std::vector<CovEstimate> empirical_covariance(
    const Matrix& samples, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  const std::size_t n = samples.rows();
  if (n < 2) throw std::invalid_argument("empirical_covariance: need at least 2 samples");
  std::vector<CovEstimate> out;
  out.reserve(pairs.size());
  const double dn = static_cast<double>(n);
  for (const auto& [ci, cj] : pairs) {
    double sx = 0.0, sy = 0.0, sxy = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      sx += samples(r, ci);
      sy += samples(r, cj);
      sxy += samples(r, ci) * samples(r, cj);
    }
    const double cov = (sxy - sx * sy / dn) / (dn - 1.0);
    // leave-one-out estimates from the totals
    double mean_loo = 0.0;
    std::vector<double> loo(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double x = samples(r, ci), y = samples(r, cj);
      const double sx_r = sx - x, sy_r = sy - y, sxy_r = sxy - x * y;
      loo[r] = (sxy_r - sx_r * sy_r / (dn - 1.0)) / (dn - 2.0);
      mean_loo += loo[r];
    }
    mean_loo /= dn;
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) ss += (loo[r] - mean_loo) * (loo[r] - mean_loo);
    out.push_back({cov, std::sqrt((dn - 1.0) / dn * ss)});
  }
  return out;
}

}  // namespace wsde
