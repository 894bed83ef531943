#pragma once

// Independent reference computations used by unit and acceptance tests. None
// of these call into the library code they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

namespace pushdet::oracle {

/// Unsigned angle ABC in degrees via atan2(|cross|, dot), in long double.
inline long double angle_atan2(double ax, double ay, double bx, double by, double cx, double cy) {
  const long double ux = (long double)ax - bx, uy = (long double)ay - by;
  const long double vx = (long double)cx - bx, vy = (long double)cy - by;
  const long double cross = ux * vy - uy * vx;
  const long double dot = ux * vx + uy * vy;
  return std::atan2(std::fabs(cross), dot) * 180.0L / std::numbers::pi_v<long double>;
}

/// Exact fraction p/q with q > 0, compared by cross multiplication.
struct Fraction {
  long long p, q;
  bool operator<(const Fraction& o) const { return p * o.q < o.p * q; }
  bool operator==(const Fraction& o) const { return p * o.q == o.p * q; }
};

/// Weighted child Gini impurity as an exact fraction, written directly from
/// the textbook definition: (nL * G(L) + nR * G(R)) / n with G = 1 - sum p^2.
inline Fraction weighted_gini(long long l0, long long l1, long long r0, long long r1) {
  const long long nl = l0 + l1, nr = r0 + r1, n = nl + nr;
  // nL*G(L) = (nL^2 - l0^2 - l1^2) / nL, likewise for R; common denominator nL*nR*n.
  const long long num = (nl * nl - l0 * l0 - l1 * l1) * nr + (nr * nr - r0 * r0 - r1 * r1) * nl;
  return {num, nl * nr * n};
}

struct OracleNode {
  bool leaf = true;
  std::size_t feature = 0;
  double threshold = 0.0;
  std::array<long long, 2> counts{};
  std::vector<OracleNode> children;  // left, right
};

struct Row {
  std::vector<double> x;
  int y;  // 0 normal, 1 push
};

/// Exhaustive best split per node over every (feature, midpoint) pair; ties
/// resolved toward the lower feature index, then the lower threshold.
inline OracleNode brute_force_tree(const std::vector<Row>& rows, std::size_t depth, std::size_t max_depth,
                                   std::size_t min_split, std::size_t min_leaf) {
  OracleNode node;
  for (const Row& r : rows) ++node.counts[r.y];
  const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
  if (pure || depth >= max_depth || rows.size() < min_split) return node;

  const std::size_t dim = rows.front().x.size();
  std::optional<Fraction> best;
  std::size_t best_f = 0;
  double best_t = 0.0;
  for (std::size_t f = 0; f < dim; ++f) {
    std::vector<double> values;
    for (const Row& r : rows) values.push_back(r.x[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const double t = (values[i] + values[i + 1]) / 2.0;
      long long l[2] = {0, 0}, r[2] = {0, 0};
      for (const Row& row : rows) (row.x[f] <= t ? l : r)[row.y]++;
      if (std::size_t(l[0] + l[1]) < min_leaf || std::size_t(r[0] + r[1]) < min_leaf) continue;
      const Fraction g = weighted_gini(l[0], l[1], r[0], r[1]);
      // Strictly better only; enumeration order already realises the tie-break.
      if (!best || g < *best) {
        best = g;
        best_f = f;
        best_t = t;
      }
    }
  }
  if (!best) return node;

  std::vector<Row> left, right;
  for (const Row& r : rows) (r.x[best_f] <= best_t ? left : right).push_back(r);
  node.leaf = false;
  node.feature = best_f;
  node.threshold = best_t;
  node.children.push_back(brute_force_tree(left, depth + 1, max_depth, min_split, min_leaf));
  node.children.push_back(brute_force_tree(right, depth + 1, max_depth, min_split, min_leaf));
  return node;
}

/// Best-sum assignment of a 2x2 weight matrix: true when the identity
/// permutation (0->0, 1->1) scores at least as high as the swap.
inline bool identity_is_best(const std::array<std::array<double, 2>, 2>& w) {
  return w[0][0] + w[1][1] >= w[0][1] + w[1][0];
}

}  // namespace pushdet::oracle
