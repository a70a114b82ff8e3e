#pragma once

// The upper-triangular lattice T_L, the Sigma/Delta coordinate maps between
// lattice points and death-chain pairs, the generator matrix A_L, and two
// independent computations of the Markov semigroup e^{t A_L}: a dense matrix
// exponential and the binomial product formula.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wsde/binomial.hpp"
#include "wsde/matrix.hpp"

namespace wsde {

struct LatticePoint {
  std::int64_t a1 = 1;
  std::int64_t a2 = 1;
  bool operator==(const LatticePoint&) const = default;
};

struct DeathPair {
  std::int64_t m1 = 0;
  std::int64_t m2 = 0;
  bool operator==(const DeathPair&) const = default;
};

inline bool in_lattice(LatticePoint a) { return 1 <= a.a1 && a.a1 <= a.a2; }

inline LatticePoint sigma_map(DeathPair m) {
  if (m.m1 < 0 || m.m2 < 0)
    throw std::invalid_argument("sigma_map: death pair components must be >= 0");
  return {m.m1 + 1, m.m1 + m.m2 + 1};
}

inline DeathPair delta_map(LatticePoint a) {
  if (!in_lattice(a))
    throw std::invalid_argument("delta_map: point outside the triangular lattice");
  return {a.a1 - 1, a.a2 - a.a1};
}

// T_L enumerated lexicographically by (a2, a1); this ordering fixes the
// row/column indexing of every matrix built on T_L, so outputs are
// reproducible bit-for-bit.
class TriangularLattice {
 public:
  explicit TriangularLattice(int L) : L_(L) {
    if (L < 3) throw std::invalid_argument("TriangularLattice: L must be >= 3");
    points_.reserve(static_cast<std::size_t>(L) * (L + 1) / 2);
    for (std::int64_t a2 = 1; a2 <= L; ++a2)
      for (std::int64_t a1 = 1; a1 <= a2; ++a1) points_.push_back({a1, a2});
  }

  int L() const { return L_; }
  std::size_t size() const { return points_.size(); }
  LatticePoint point(std::size_t idx) const { return points_[idx]; }

  // index of a in the (a2, a1) ordering, or -1 if a lies outside T_L
  std::int64_t index(LatticePoint a) const {
    if (!in_lattice(a) || a.a2 > L_) return -1;
    return (a.a2 - 1) * a.a2 / 2 + (a.a1 - 1);
  }

 private:
  int L_;
  std::vector<LatticePoint> points_;
};

struct GeneratorMatrix {
  int L = 0;
  Matrix entries;  // |T_L| x |T_L|, indexed in lattice order
};

// A_L: from a, rate a1-1 to a-(1,1) and rate a2-a1 to a-(0,1); rows sum to 0.
inline GeneratorMatrix generator(int L) {
  const TriangularLattice lat(L);
  const std::size_t n = lat.size();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const LatticePoint a = lat.point(i);
    const double block_rate = static_cast<double>(a.a1 - 1);
    const double push_rate = static_cast<double>(a.a2 - a.a1);
    const std::int64_t j_block = lat.index({a.a1 - 1, a.a2 - 1});
    const std::int64_t j_push = lat.index({a.a1, a.a2 - 1});
    if (j_block >= 0 && block_rate > 0.0) m(i, static_cast<std::size_t>(j_block)) = block_rate;
    if (j_push >= 0 && push_rate > 0.0) m(i, static_cast<std::size_t>(j_push)) = push_rate;
    m(i, i) = -(block_rate + push_rate);
  }
  return {L, std::move(m)};
}

// e^{t A_L} by scaling-and-squaring; negative round-off is clipped to 0 so
// downstream probabilities stay nonnegative.
inline Matrix semigroup_dense(int L, double t) {
  if (t < 0.0) throw std::invalid_argument("semigroup_dense: t must be >= 0");
  GeneratorMatrix g = generator(L);
  g.entries *= t;
  Matrix e = expm(g.entries);
  for (std::size_t i = 0; i < e.rows(); ++i)
    for (std::size_t j = 0; j < e.cols(); ++j)
      e(i, j) = std::min(1.0, std::max(0.0, e(i, j)));
  return e;
}

// e^{tA}(a, b) via the death-chain representation:
//   P(S_{D1 a}(e^{-t}) = D1 b) * P(S_{D2 a}(e^{-t}) = D2 b).
inline double semigroup_product(LatticePoint a, LatticePoint b, double t) {
  if (t < 0.0) throw std::invalid_argument("semigroup_product: t must be >= 0");
  const DeathPair da = delta_map(a);
  const DeathPair db = delta_map(b);
  const double p = std::exp(-t);
  return binom_pmf({da.m1, p}, db.m1) * binom_pmf({da.m2, p}, db.m2);
}

}  // namespace wsde
