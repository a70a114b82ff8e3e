#pragma once

// Finite signed combinations of isotropic 2D Gaussian bumps. The family is
// closed under the heat semigroup, which keeps every space integral of the
// weak formulation semi-analytic.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace wsde {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

struct GaussianBump {
  double weight = 1.0;
  Vec2 center{};
  double width = 1.0;  // per-coordinate variance; the bump integrates to weight
};

class GaussianMixture {
 public:
  GaussianMixture() = default;
  explicit GaussianMixture(std::vector<GaussianBump> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_)
      if (!(t.width > 0.0))
        throw std::invalid_argument("GaussianMixture: widths must be positive");
  }

  static GaussianMixture bump(double weight, Vec2 center, double width) {
    return GaussianMixture({GaussianBump{weight, center, width}});
  }

  const std::vector<GaussianBump>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double total_mass() const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.weight;
    return s;
  }

  double weight_scale() const {
    double s = 0.0;
    for (const auto& t : terms_) s += std::abs(t.weight);
    return s;
  }

  double operator()(Vec2 p) const {
    double s = 0.0;
    for (const auto& t : terms_) {
      const Vec2 d = p - t.center;
      s += t.weight * std::exp(-(d.x * d.x + d.y * d.y) / (2.0 * t.width)) /
           (2.0 * std::numbers::pi * t.width);
    }
    return s;
  }

  // heat flow: a bump of width w becomes a bump of width w + u, same center
  GaussianMixture heat_evolved(double u) const {
    if (u < 0.0) throw std::invalid_argument("heat_evolved: u must be >= 0");
    std::vector<GaussianBump> out = terms_;
    for (auto& t : out) t.width += u;
    return GaussianMixture(std::move(out));
  }

  GaussianMixture scaled(double factor) const {
    std::vector<GaussianBump> out = terms_;
    for (auto& t : out) t.weight *= factor;
    return GaussianMixture(std::move(out));
  }

  GaussianMixture plus(const GaussianMixture& other) const {
    std::vector<GaussianBump> out = terms_;
    out.insert(out.end(), other.terms_.begin(), other.terms_.end());
    return GaussianMixture(std::move(out));
  }

 private:
  std::vector<GaussianBump> terms_;
};

// R phi = phi - (int phi) psi, a projection onto the mass-zero subspace.
// psi must have unit mass. Mass already at round-off is left untouched so
// the projection is termwise idempotent.
inline GaussianMixture recenter(const GaussianMixture& phi, const GaussianMixture& psi) {
  if (std::abs(psi.total_mass() - 1.0) > 1e-12)
    throw std::invalid_argument("recenter: psi must have total mass 1");
  const double mass = phi.total_mass();
  if (std::abs(mass) <= 1e-14 * std::max(1.0, phi.weight_scale())) return phi;
  return phi.plus(psi.scaled(-mass));
}

inline GaussianMixture default_recentering_psi() {
  return GaussianMixture::bump(1.0, {0.0, 0.0}, 1.0);
}

}  // namespace wsde
