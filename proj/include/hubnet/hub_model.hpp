#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hubnet/error.hpp"
#include "hubnet/matrix.hpp"
#include "hubnet/parallel.hpp"
#include "hubnet/rng.hpp"
#include "hubnet/types.hpp"

namespace hubnet {

inline constexpr double kDefaultOffDiagonalCap = 1.0 - 1e-12;

// Multistart EM settings.
struct EmConfig {
  int restarts = 10;
  int max_iterations = 100;
  double rel_ll_tolerance = 1e-4;
  double zero_threshold = 1e-4;
  std::uint64_t seed = 0;
  double off_diagonal_cap = kDefaultOffDiagonalCap;

  void validate() const {
    if (restarts < 1)
      throw Error(Errc::invalid_argument, "restarts must be >= 1");
    if (max_iterations < 1)
      throw Error(Errc::invalid_argument, "max_iterations must be >= 1");
    if (!(rel_ll_tolerance > 0.0 && rel_ll_tolerance < 1.0))
      throw Error(Errc::invalid_argument, "rel_ll_tolerance must be in (0,1)");
    if (!(zero_threshold > 0.0 && zero_threshold < 1.0))
      throw Error(Errc::invalid_argument, "zero_threshold must be in (0,1)");
    if (!(off_diagonal_cap > 0.0 && off_diagonal_cap < 1.0))
      throw Error(Errc::invalid_argument, "off_diagonal_cap must be in (0,1)");
  }
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Log weight of hub candidate x for group row g under a dense matrix.
// Handles every valid parameter value (entries 0 and 1 included): terms are
// either finite or -inf, never +inf, so no NaN can form.
inline double hub_log_weight(const std::vector<std::uint8_t>& g,
                             const SquareMatrix& A,
                             const std::vector<double>& rho, int x) {
  const int n = A.size();
  double lw = std::log(rho[x]);
  for (int j = 0; j < n; ++j) {
    if (j == x) continue;
    const double a = A(x, j);
    lw += g[j] ? std::log(a) : std::log1p(-a);
  }
  return lw;
}

// Log P(g | A, rho): log-sum-exp over member hub candidates.
// Returns -inf when the group has probability zero (including an all-zero g).
inline double log_group_probability(const std::vector<std::uint8_t>& g,
                                    const SquareMatrix& A,
                                    const std::vector<double>& rho) {
  const int n = A.size();
  double maxw = kNegInf;
  std::vector<double> w;
  w.reserve(8);
  for (int x = 0; x < n; ++x) {
    if (!g[x]) continue;
    const double lw = rho[x] > 0.0 ? hub_log_weight(g, A, rho, x) : kNegInf;
    w.push_back(lw);
    maxw = std::max(maxw, lw);
  }
  if (maxw == kNegInf) return kNegInf;
  double s = 0.0;
  for (double lw : w) s += std::exp(lw - maxw);
  return maxw + std::log(s);
}

// Grouped data collapsed to unique rows with multiplicities.  Responsibility
// rows depend only on the row pattern, so the EM inner loop runs over unique
// rows and weights every sum by the multiplicity.
struct CompressedGroups {
  int n = 0;
  double total = 0.0;  // == T
  std::vector<std::vector<int>> members;
  std::vector<double> weight;
  std::vector<int> row_to_unique;

  static CompressedGroups from(const GroupedData& g) {
    CompressedGroups cg;
    cg.n = g.n();
    cg.total = static_cast<double>(g.T());
    cg.row_to_unique.resize(g.T());
    std::map<std::vector<std::uint8_t>, int> index;
    for (int t = 0; t < g.T(); ++t) {
      auto [it, inserted] = index.try_emplace(g.row(t), static_cast<int>(cg.members.size()));
      if (inserted) {
        cg.members.push_back(g.members(t));
        cg.weight.push_back(0.0);
      }
      cg.weight[it->second] += 1.0;
      cg.row_to_unique[t] = it->second;
    }
    return cg;
  }
};

// Per-iteration log tables for the fast E-step.  Requires off-diagonal
// entries strictly below 1 so that log(1-A) stays finite; the EM loop
// guarantees this through the off-diagonal cap.
struct LogTables {
  int n = 0;
  std::vector<double> log_a, log_1m, base, log_rho;

  void compute(const SquareMatrix& A, const std::vector<double>& rho) {
    n = A.size();
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    log_a.assign(nn, 0.0);
    log_1m.assign(nn, 0.0);
    base.assign(n, 0.0);
    log_rho.assign(n, 0.0);
    for (int x = 0; x < n; ++x) {
      double b = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == x) continue;
        const double a = A(x, j);
        log_a[static_cast<std::size_t>(x) * n + j] = std::log(a);
        const double l1m = std::log1p(-a);
        log_1m[static_cast<std::size_t>(x) * n + j] = l1m;
        b += l1m;
      }
      base[x] = b;
      log_rho[x] = std::log(rho[x]);
    }
  }
};

// One E-step over compressed rows.  Fills resp[u] (aligned with members[u])
// and returns the weighted log likelihood, or nullopt if some group has
// probability zero under the current parameters.
inline std::optional<double> e_step_compressed(
    const CompressedGroups& cg, const LogTables& lt,
    std::vector<std::vector<double>>& resp) {
  const int n = lt.n;
  double ll = 0.0;
  for (std::size_t u = 0; u < cg.members.size(); ++u) {
    const auto& m = cg.members[u];
    auto& r = resp[u];
    r.resize(m.size());
    double maxw = kNegInf;
    for (std::size_t a = 0; a < m.size(); ++a) {
      const int x = m[a];
      double lw = lt.log_rho[x] + lt.base[x];
      const std::size_t row = static_cast<std::size_t>(x) * n;
      for (int j : m) {
        if (j == x) continue;
        lw += lt.log_a[row + j] - lt.log_1m[row + j];
      }
      r[a] = lw;
      maxw = std::max(maxw, lw);
    }
    if (maxw == kNegInf) return std::nullopt;
    double s = 0.0;
    for (double& v : r) {
      v = std::exp(v - maxw);
      s += v;
    }
    for (double& v : r) v /= s;
    ll += cg.weight[u] * (maxw + std::log(s));
  }
  return ll;
}

// One M-step over compressed responsibilities: estimating-equation updates
// for A (symmetric or free) and the normalized responsibility means for rho.
inline void m_step_compressed(const CompressedGroups& cg,
                              const std::vector<std::vector<double>>& resp,
                              bool symmetric, double cap, SquareMatrix& A,
                              std::vector<double>& rho) {
  const int n = cg.n;
  std::vector<double> colsum(n, 0.0);
  SquareMatrix cross(n);  // cross(x,y) = sum over groups containing y of resp(x)
  for (std::size_t u = 0; u < cg.members.size(); ++u) {
    const auto& m = cg.members[u];
    const auto& r = resp[u];
    const double w = cg.weight[u];
    for (std::size_t a = 0; a < m.size(); ++a) {
      const double wr = w * r[a];
      colsum[m[a]] += wr;
      for (int y : m) cross(m[a], y) += wr;
    }
  }
  if (symmetric) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double den = colsum[i] + colsum[j];
        double a = den > 0.0 ? (cross(i, j) + cross(j, i)) / den : 0.0;
        a = std::clamp(a, 0.0, cap);
        A(i, j) = a;
        A(j, i) = a;
      }
  } else {
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        if (x == y) continue;
        double a = colsum[x] > 0.0 ? cross(x, y) / colsum[x] : 0.0;
        A(x, y) = std::clamp(a, 0.0, cap);
      }
  }
  for (int i = 0; i < n; ++i) A(i, i) = 1.0;
  double total = 0.0;
  for (int x = 0; x < n; ++x) {
    rho[x] = colsum[x] / cg.total;
    total += rho[x];
  }
  for (int x = 0; x < n; ++x) rho[x] /= total;
}

struct EmRun {
  SquareMatrix A;
  std::vector<double> rho;
  double final_ll = kNegInf;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  std::vector<double> ll_trace;
};

// One restart: random initialization followed by E/M iterations until the
// relative log-likelihood change drops to the tolerance or the iteration cap
// is reached.  The convergence test is skipped on the first pass.
inline EmRun run_em_restart(const CompressedGroups& cg, bool symmetric,
                            const EmConfig& cfg, Rng rng) {
  const int n = cg.n;
  EmRun out;
  out.A = SquareMatrix(n);
  for (int i = 0; i < n; ++i) out.A(i, i) = 1.0;
  // Draw order is part of the reproducibility contract: off-diagonal entries
  // of A first (upper triangle, row by row; both triangles independently in
  // the free-matrix mode), then the n uniforms behind rho.
  if (symmetric) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double a = rng.uniform_open();
        out.A(i, j) = a;
        out.A(j, i) = a;
      }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) out.A(i, j) = rng.uniform_open();
  }
  out.rho.resize(n);
  double xsum = 0.0;
  for (int i = 0; i < n; ++i) {
    out.rho[i] = rng.uniform_open();
    xsum += out.rho[i];
  }
  for (int i = 0; i < n; ++i) out.rho[i] /= xsum;

  LogTables lt;
  std::vector<std::vector<double>> resp(cg.members.size());
  double ll_prev = 0.0;
  bool have_prev = false;
  for (int m = 1; m <= cfg.max_iterations; ++m) {
    lt.compute(out.A, out.rho);
    const auto ll = e_step_compressed(cg, lt, resp);
    if (!ll) {
      out.degenerate = true;
      out.final_ll = kNegInf;
      return out;
    }
    out.ll_trace.push_back(*ll);
    if (have_prev && std::abs(*ll - ll_prev) <= cfg.rel_ll_tolerance * std::abs(ll_prev)) {
      out.converged = true;
      out.final_ll = *ll;
      return out;
    }
    ll_prev = *ll;
    have_prev = true;
    m_step_compressed(cg, resp, symmetric, cfg.off_diagonal_cap, out.A, out.rho);
    out.iterations = m;
  }
  // Iteration cap reached: the last M-step changed the parameters, so their
  // log likelihood still has to be evaluated once.
  lt.compute(out.A, out.rho);
  const auto ll = e_step_compressed(cg, lt, resp);
  if (!ll) {
    out.degenerate = true;
    out.final_ll = kNegInf;
    return out;
  }
  out.ll_trace.push_back(*ll);
  out.final_ll = *ll;
  return out;
}

// Multistart driver shared by the symmetric fit and the free-matrix
// diagnostic fit.  Returns the per-restart runs; the caller selects.
inline std::vector<EmRun> run_em_multistart(const CompressedGroups& cg,
                                            bool symmetric, const EmConfig& cfg,
                                            int jobs) {
  const Rng master(cfg.seed);
  std::vector<EmRun> runs(cfg.restarts);
  run_indexed(jobs, cfg.restarts, [&](int r) {
    runs[r] = run_em_restart(cg, symmetric, cfg, master.derive(static_cast<std::uint64_t>(r)));
  });
  return runs;
}

inline int select_best_run(const std::vector<EmRun>& runs) {
  int best = -1;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (runs[r].degenerate) continue;
    if (best < 0 || runs[r].final_ll > runs[best].final_ll) best = static_cast<int>(r);
  }
  return best;
}

}  // namespace detail

// P(g | A, rho): probability that the hub mechanism emits exactly the group g.
// Mixture components are evaluated in log space and summed with a max shift.
inline double group_probability(const std::vector<std::uint8_t>& g,
                                const AdjacencyMatrix& A, const HubWeights& rho) {
  if (static_cast<int>(g.size()) != A.size() || rho.size() != A.size())
    throw Error(Errc::dimension_mismatch, "group/adjacency/weight sizes differ");
  const double lp = detail::log_group_probability(g, A.dense(), rho.values());
  return lp == detail::kNegInf ? 0.0 : std::exp(lp);
}

// Sum over observations of log P(G^(t) | A, rho); -inf if any observation
// has probability zero.
inline double log_likelihood(const GroupedData& g, const AdjacencyMatrix& A,
                             const HubWeights& rho) {
  if (g.n() != A.size() || rho.size() != A.size())
    throw Error(Errc::dimension_mismatch, "data/adjacency/weight sizes differ");
  double ll = 0.0;
  for (int t = 0; t < g.T(); ++t)
    ll += detail::log_group_probability(g.row(t), A.dense(), rho.values());
  return ll;
}

// Posterior hub probabilities P(S_x = 1 | G^(t)) for every observation.
inline Responsibilities e_step(const GroupedData& g, const AdjacencyMatrix& A,
                               const HubWeights& rho) {
  if (g.n() != A.size() || rho.size() != A.size())
    throw Error(Errc::dimension_mismatch, "data/adjacency/weight sizes differ");
  std::vector<std::vector<double>> values(g.T(), std::vector<double>(g.n(), 0.0));
  std::vector<double> w;
  for (int t = 0; t < g.T(); ++t) {
    const auto& m = g.members(t);
    w.resize(m.size());
    double maxw = detail::kNegInf;
    for (std::size_t a = 0; a < m.size(); ++a) {
      w[a] = rho[m[a]] > 0.0
                 ? detail::hub_log_weight(g.row(t), A.dense(), rho.values(), m[a])
                 : detail::kNegInf;
      maxw = std::max(maxw, w[a]);
    }
    if (maxw == detail::kNegInf)
      throw Error(Errc::zero_probability_group,
                  "observation " + std::to_string(t + 1) +
                      " has probability 0 under the current parameters");
    double s = 0.0;
    for (double& v : w) {
      v = std::exp(v - maxw);
      s += v;
    }
    for (std::size_t a = 0; a < m.size(); ++a) values[t][m[a]] = w[a] / s;
  }
  return Responsibilities(g, std::move(values));
}

// Estimating-equation update: symmetric A and rho from one responsibility
// matrix.  Pairs with zero combined responsibility get weight 0.
inline std::pair<AdjacencyMatrix, HubWeights> m_step(
    const GroupedData& g, const Responsibilities& r,
    double off_diagonal_cap = kDefaultOffDiagonalCap) {
  if (r.T() != g.T())
    throw Error(Errc::dimension_mismatch, "responsibilities do not match data");
  const int n = g.n();
  std::vector<double> colsum(n, 0.0);
  SquareMatrix cross(n);
  for (int t = 0; t < g.T(); ++t) {
    const auto& m = g.members(t);
    for (int x : m) {
      const double rx = r(t, x);
      colsum[x] += rx;
      for (int y : m) cross(x, y) += rx;
    }
  }
  AdjacencyMatrix A(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double den = colsum[i] + colsum[j];
      double a = den > 0.0 ? (cross(i, j) + cross(j, i)) / den : 0.0;
      A.set(i, j, std::clamp(a, 0.0, off_diagonal_cap));
    }
  std::vector<double> rho(n);
  double total = 0.0;
  for (int x = 0; x < n; ++x) {
    rho[x] = colsum[x] / static_cast<double>(g.T());
    total += rho[x];
  }
  for (int x = 0; x < n; ++x) rho[x] /= total;
  return {std::move(A), HubWeights(std::move(rho))};
}

// Multistart EM fit of the hub model.  Each restart starts from an
// independent random point; the restart with the highest final log
// likelihood wins (ties go to the lowest index).  Entries of the winning
// matrix at or below cfg.zero_threshold are set to exactly zero; rho is
// left unthresholded.
inline FitResult fit_em(const GroupedData& g, const EmConfig& cfg, int jobs = 1) {
  cfg.validate();
  if (g.n() < 2)
    throw Error(Errc::invalid_argument, "fit_em needs a population of >= 2 nodes");
  const auto cg = detail::CompressedGroups::from(g);
  const auto runs = detail::run_em_multistart(cg, /*symmetric=*/true, cfg, jobs);
  const int best = detail::select_best_run(runs);
  if (best < 0)
    throw Error(Errc::all_restarts_degenerate,
                "every restart hit a zero-probability group");

  FitResult out;
  out.zero_threshold = cfg.zero_threshold;
  out.chosen_restart = best;
  out.log_likelihood = runs[best].final_ll;
  const Rng master(cfg.seed);
  for (int r = 0; r < cfg.restarts; ++r) {
    RestartRecord rec;
    rec.seed = master.derive(static_cast<std::uint64_t>(r)).seed();
    rec.iterations = runs[r].iterations;
    rec.final_ll = runs[r].final_ll;
    rec.converged = runs[r].converged;
    rec.ll_trace = runs[r].ll_trace;
    out.restarts.push_back(std::move(rec));
  }
  const int n = g.n();
  AdjacencyMatrix raw(n), thresholded(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double a = runs[best].A(i, j);
      raw.set(i, j, a);
      thresholded.set(i, j, a <= cfg.zero_threshold ? 0.0 : a);
    }
  out.A_raw = std::move(raw);
  out.A = std::move(thresholded);
  out.rho = HubWeights(runs[best].rho);
  return out;
}

// Closed-form estimator when hub identities are observed.
struct KhmResult {
  AdjacencyMatrix A;
  HubWeights rho;
  // Pairs (x,y), x < y, where neither node is ever a hub; their entries are
  // reported as 0 by convention.
  std::vector<std::pair<int, int>> undefined_pairs;
};

inline KhmResult fit_known_hub(const GroupedData& g, const HubAssignments& s) {
  if (s.T() != g.T())
    throw Error(Errc::dimension_mismatch, "hub assignments do not match data");
  const int n = g.n();
  std::vector<long> hub_count(n, 0);
  SquareMatrix recruit(n);  // recruit(x,y) = #{t : hub x, y in group}
  for (int t = 0; t < g.T(); ++t) {
    const int h = s.hub(t);
    hub_count[h]++;
    for (int y : g.members(t)) recruit(h, y) += 1.0;
  }
  KhmResult out{AdjacencyMatrix(n), HubWeights(), {}};
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      const long den = hub_count[x] + hub_count[y];
      if (den == 0) {
        out.undefined_pairs.emplace_back(x, y);
        out.A.set(x, y, 0.0);
      } else {
        out.A.set(x, y, (recruit(x, y) + recruit(y, x)) / static_cast<double>(den));
      }
    }
  std::vector<double> rho(n);
  for (int x = 0; x < n; ++x)
    rho[x] = static_cast<double>(hub_count[x]) / static_cast<double>(g.T());
  out.rho = HubWeights(std::move(rho));
  return out;
}

// Method-of-moments estimate of A_xy from the empirical frequencies of the
// two singletons {x}, {y} and the doubleton {x,y}.  Returns nullopt when all
// three frequencies are zero.
inline std::optional<double> mom_pair_estimate(const GroupedData& g, int x, int y) {
  if (x == y) throw Error(Errc::invalid_argument, "node pair must be distinct");
  if (x < 0 || y < 0 || x >= g.n() || y >= g.n())
    throw Error(Errc::invalid_argument, "node index out of range");
  long cx = 0, cy = 0, cxy = 0;
  for (int t = 0; t < g.T(); ++t) {
    const auto& m = g.members(t);
    if (m.size() == 1) {
      if (m[0] == x) cx++;
      if (m[0] == y) cy++;
    } else if (m.size() == 2) {
      const int lo = std::min(x, y), hi = std::max(x, y);
      if (m[0] == lo && m[1] == hi) cxy++;
    }
  }
  if (cx + cy + cxy == 0) return std::nullopt;
  const double T = static_cast<double>(g.T());
  const double px = cx / T, py = cy / T, pxy = cxy / T;
  return pxy / (px + py + pxy);
}

}  // namespace hubnet
