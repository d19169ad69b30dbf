#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "hubnet/error.hpp"
#include "hubnet/rng.hpp"
#include "hubnet/types.hpp"

namespace hubnet {

struct SimConfig {
  int n = 10;
  int T = 1000;
  double power = 2.0;
  double alpha = 1.0;
  double beta = 4.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1) throw Error(Errc::invalid_argument, "n must be >= 1");
    if (T < 1) throw Error(Errc::invalid_argument, "T must be >= 1");
    if (!(power > 1.0)) throw Error(Errc::invalid_argument, "power must be > 1");
    if (!(alpha > 0.0 && beta > 0.0))
      throw Error(Errc::invalid_argument, "alpha and beta must be > 0");
  }
};

// Normalized i.i.d. uniforms: rho_i = X_i / sum(X).
inline HubWeights gen_hub_weights(int n, Rng& rng) {
  if (n < 1) throw Error(Errc::invalid_argument, "n must be >= 1");
  std::vector<double> x(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    x[i] = rng.uniform_open();
    sum += x[i];
  }
  for (int i = 0; i < n; ++i) x[i] /= sum;
  return HubWeights(std::move(x));
}

namespace detail {

// Degree sequence from a discretized power law on [1, n-1], P(d) ~ d^-power.
// If the stub count ends up odd, the first node with spare capacity gets one
// extra stub.
inline std::vector<int> power_law_degrees(int n, double power, Rng& rng) {
  const int max_deg = n - 1;
  std::vector<double> cdf(max_deg);
  double sum = 0.0;
  for (int d = 1; d <= max_deg; ++d) {
    sum += std::pow(static_cast<double>(d), -power);
    cdf[d - 1] = sum;
  }
  std::vector<int> deg(n);
  long total = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01() * sum;
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    deg[i] = static_cast<int>(it - cdf.begin()) + 1;
    total += deg[i];
  }
  if (total % 2 != 0) {
    for (int i = 0; i < n; ++i) {
      if (deg[i] < max_deg) {
        deg[i]++;
        break;
      }
    }
  }
  return deg;
}

// Erased configuration model: pair stubs uniformly, then drop self-loops and
// collapse multi-edges.  Returns the simple edge set.
inline std::set<std::pair<int, int>> configuration_edges(
    const std::vector<int>& degrees, Rng& rng) {
  std::vector<int> stubs;
  for (std::size_t i = 0; i < degrees.size(); ++i)
    stubs.insert(stubs.end(), degrees[i], static_cast<int>(i));
  rng.shuffle(stubs);
  std::set<std::pair<int, int>> edges;
  for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
    const int a = stubs[k], b = stubs[k + 1];
    if (a == b) continue;
    edges.emplace(std::min(a, b), std::max(a, b));
  }
  return edges;
}

}  // namespace detail

// Random latent network: power-law configuration-model structure with
// Beta(alpha, beta) weights on the surviving edges, unit diagonal, exact
// zeros elsewhere.
inline AdjacencyMatrix gen_network(int n, double power, double alpha,
                                   double beta, Rng& rng) {
  if (n < 2) throw Error(Errc::invalid_argument, "gen_network needs n >= 2");
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const auto degrees = detail::power_law_degrees(n, power, rng);
    const auto edges = detail::configuration_edges(degrees, rng);
    if (edges.empty()) continue;
    AdjacencyMatrix a(n);
    for (const auto& [i, j] : edges) a.set(i, j, rng.beta(alpha, beta));
    return a;
  }
  throw Error(Errc::degenerate_degree_sequence,
              "no usable graph after retry budget");
}

namespace detail {

// Two-step hub mechanism over a dense matrix (used both for the symmetric
// model and the free-matrix diagnostics): draw the hub from rho, then
// include each other node j independently with probability A(hub, j).
// Observation t uses substream t of the supplied stream.
inline std::pair<std::vector<std::vector<std::uint8_t>>, std::vector<int>>
sample_rows(const SquareMatrix& A, const HubWeights& rho, int T, const Rng& rng) {
  const int n = A.size();
  std::vector<double> cum(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += rho[i];
    cum[i] = acc;
  }
  std::vector<std::vector<std::uint8_t>> rows(T);
  std::vector<int> hubs(T);
  for (int t = 0; t < T; ++t) {
    Rng rt = rng.derive(static_cast<std::uint64_t>(t));
    const double u = rt.uniform01() * acc;
    int hub = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (hub >= n) hub = n - 1;
    std::vector<std::uint8_t> row(n, 0);
    row[hub] = 1;
    for (int j = 0; j < n; ++j) {
      if (j == hub) continue;
      if (rt.bernoulli(A(hub, j))) row[j] = 1;
    }
    rows[t] = std::move(row);
    hubs[t] = hub;
  }
  return {std::move(rows), std::move(hubs)};
}

}  // namespace detail

// Sample T groups (and their hubs) from the hub mechanism.
inline std::pair<GroupedData, HubAssignments> gen_groups(
    const AdjacencyMatrix& A, const HubWeights& rho, int T, const Rng& rng,
    const std::vector<std::string>& labels = {}) {
  if (rho.size() != A.size())
    throw Error(Errc::dimension_mismatch, "adjacency/weight sizes differ");
  if (T < 1) throw Error(Errc::invalid_argument, "T must be >= 1");
  auto [rows, hubs] = detail::sample_rows(A.dense(), rho, T, rng);
  std::vector<std::string> names = labels;
  if (names.empty()) {
    names.reserve(A.size());
    for (int i = 1; i <= A.size(); ++i) names.push_back("v" + std::to_string(i));
  }
  GroupedData g(std::move(names), std::move(rows));
  HubAssignments s(g, std::move(hubs));
  return {std::move(g), std::move(s)};
}

}  // namespace hubnet
