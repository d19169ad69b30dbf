#pragma once

#include <utility>
#include <vector>

#include "hubnet/matrix.hpp"
#include "hubnet/types.hpp"

namespace hubnet {

// Co-occurrence matrix O = G'G / T.  O_ij is the fraction of observations
// containing both v_i and v_j; the diagonal holds appearance frequencies.
inline SquareMatrix co_occurrence(const GroupedData& g) {
  const int n = g.n();
  std::vector<std::vector<long>> counts(n, std::vector<long>(n, 0));
  for (int t = 0; t < g.T(); ++t) {
    const auto& m = g.members(t);
    for (std::size_t a = 0; a < m.size(); ++a)
      for (std::size_t b = a; b < m.size(); ++b) {
        counts[m[a]][m[b]]++;
        if (a != b) counts[m[b]][m[a]]++;
      }
  }
  SquareMatrix o(n);
  const double T = static_cast<double>(g.T());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) o(i, j) = static_cast<double>(counts[i][j]) / T;
  return o;
}

struct HalfWeightResult {
  SquareMatrix matrix;
  // Pairs (i,j), i <= j, where neither node ever appears; those entries are
  // 0/0 and reported as 0 by convention.
  std::vector<std::pair<int, int>> undefined_pairs;
};

// Half weight index H_ij = 2 * #{t : i,j both in group t} / (#t with i + #t with j).
inline HalfWeightResult half_weight(const GroupedData& g) {
  const int n = g.n();
  std::vector<long> appear(n, 0);
  std::vector<std::vector<long>> joint(n, std::vector<long>(n, 0));
  for (int t = 0; t < g.T(); ++t) {
    const auto& m = g.members(t);
    for (std::size_t a = 0; a < m.size(); ++a) {
      appear[m[a]]++;
      for (std::size_t b = a; b < m.size(); ++b) {
        joint[m[a]][m[b]]++;
        if (a != b) joint[m[b]][m[a]]++;
      }
    }
  }
  HalfWeightResult out{SquareMatrix(n), {}};
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const long den = appear[i] + appear[j];
      double h = 0.0;
      if (den > 0) {
        h = static_cast<double>(2 * joint[i][j]) / static_cast<double>(den);
      } else {
        out.undefined_pairs.emplace_back(i, j);
      }
      out.matrix(i, j) = h;
      out.matrix(j, i) = h;
    }
  return out;
}

}  // namespace hubnet
