#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "hubnet/error.hpp"
#include "hubnet/hub_model.hpp"
#include "hubnet/matrix.hpp"
#include "hubnet/parallel.hpp"
#include "hubnet/rng.hpp"
#include "hubnet/types.hpp"

namespace hubnet {

// Fraction of node pairs i<j whose edge status agrees: an edge is present in
// the truth when A_true > 0 and in the estimate when A_est > threshold.
inline double structure_accuracy(const AdjacencyMatrix& a_true,
                                 const AdjacencyMatrix& a_est, double threshold) {
  const int n = a_true.size();
  if (a_est.size() != n)
    throw Error(Errc::dimension_mismatch, "matrix sizes differ");
  if (n < 2) throw Error(Errc::invalid_argument, "need at least two nodes");
  long agree = 0, pairs = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const bool t = a_true(i, j) > 0.0;
      const bool e = a_est(i, j) > threshold;
      agree += (t == e);
      pairs++;
    }
  return static_cast<double>(agree) / static_cast<double>(pairs);
}

// Mean absolute error over the strict upper triangle.
inline double mae_matrix(const AdjacencyMatrix& a_true, const AdjacencyMatrix& a_est) {
  const int n = a_true.size();
  if (a_est.size() != n)
    throw Error(Errc::dimension_mismatch, "matrix sizes differ");
  if (n < 2) throw Error(Errc::invalid_argument, "need at least two nodes");
  double sum = 0.0;
  long pairs = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      sum += std::abs(a_est(i, j) - a_true(i, j));
      pairs++;
    }
  return sum / static_cast<double>(pairs);
}

inline double mae_vector(const HubWeights& rho_true, const HubWeights& rho_est) {
  if (rho_true.size() != rho_est.size())
    throw Error(Errc::dimension_mismatch, "vector sizes differ");
  double sum = 0.0;
  for (int i = 0; i < rho_true.size(); ++i)
    sum += std::abs(rho_est[i] - rho_true[i]);
  return sum / static_cast<double>(rho_true.size());
}

// Two-community assignment; sides are numbered 1 and 2.
class Partition {
 public:
  explicit Partition(std::vector<int> side) : side_(std::move(side)) {
    int c1 = 0, c2 = 0;
    for (int s : side_) {
      if (s == 1)
        c1++;
      else if (s == 2)
        c2++;
      else
        throw Error(Errc::invalid_argument, "community labels must be 1 or 2");
    }
    if (c1 == 0 || c2 == 0)
      throw Error(Errc::empty_community, "both communities must be non-empty");
  }

  int size() const { return static_cast<int>(side_.size()); }
  int side(int i) const { return side_[i]; }

 private:
  std::vector<int> side_;
};

// Normalized cut: cut/assoc(C1) + cut/assoc(C2).  Association sums run over
// all ordered pairs inside a community, diagonal included.
inline double normalized_cut(const SquareMatrix& a, const Partition& p) {
  const int n = a.size();
  if (p.size() != n)
    throw Error(Errc::dimension_mismatch, "partition does not match matrix");
  double cut = 0.0, assoc1 = 0.0, assoc2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (p.side(i) == 1 && p.side(j) == 2) cut += a(i, j);
      if (p.side(i) == 1 && p.side(j) == 1) assoc1 += a(i, j);
      if (p.side(i) == 2 && p.side(j) == 2) assoc2 += a(i, j);
    }
  if (assoc1 == 0.0 || assoc2 == 0.0)
    throw Error(Errc::zero_association,
                "a community has zero internal association weight");
  return cut / assoc1 + cut / assoc2;
}

// Model probability that nodes i and j appear in the same group:
// sum_k rho_k * A_ki * A_kj.
inline double cooccurrence_probability(const AdjacencyMatrix& a,
                                       const HubWeights& rho, int i, int j) {
  if (rho.size() != a.size())
    throw Error(Errc::dimension_mismatch, "adjacency/weight sizes differ");
  if (i == j) throw Error(Errc::invalid_argument, "node pair must be distinct");
  if (i < 0 || j < 0 || i >= a.size() || j >= a.size())
    throw Error(Errc::invalid_argument, "node index out of range");
  double p = 0.0;
  for (int k = 0; k < a.size(); ++k) p += rho[k] * a(k, i) * a(k, j);
  return p;
}

// The locus that ties the two free entries of a pair together when the
// symmetry constraint is dropped: A_xy as a function of A_yx and the
// singleton/doubleton probabilities p_x, p_y, p_xy.
inline double asym_curve(double p_x, double p_y, double p_xy, double a_yx) {
  const double num = p_xy - a_yx * (p_y + p_xy);
  const double den = (p_x + p_xy) - a_yx * (p_x + p_y + p_xy);
  if (den == 0.0)
    throw Error(Errc::singular_denominator, "curve denominator is zero");
  return num / den;
}

struct BootstrapSummary {
  SquareMatrix sd_A;            // per-entry standard deviation of the fitted A
  std::vector<double> sd_rho;   // per-entry standard deviation of the fitted rho
  // Percentiles of the off-diagonal (i<j) standard deviations of A.
  struct Percentiles {
    double max = 0, p95 = 0, p75 = 0, median = 0, p25 = 0, p5 = 0, min = 0;
  } percentiles;
  int replicates = 0;  // successful refits
  int dropped = 0;     // replicates abandoned as degenerate
};

namespace detail {

// Percentile with linear interpolation between order statistics.
inline double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  if (sorted.size() == 1) return sorted[0];
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace detail

// Nonparametric bootstrap of the EM estimator: resample the T observations
// with replacement, refit, and summarize per-parameter standard deviations.
// Replicate r draws its rows from substream (2r) and its EM seed from
// substream (2r+1) of the master seed.
inline BootstrapSummary bootstrap(const GroupedData& g, int reps,
                                  const EmConfig& cfg, const Rng& rng,
                                  int jobs = 1) {
  if (reps < 2) throw Error(Errc::invalid_argument, "reps must be >= 2");
  cfg.validate();
  const int n = g.n();
  struct Replicate {
    bool ok = false;
    AdjacencyMatrix A;
    HubWeights rho;
  };
  std::vector<Replicate> results(reps);
  run_indexed(jobs, reps, [&](int r) {
    Rng draw = rng.derive(2 * static_cast<std::uint64_t>(r));
    std::vector<int> idx(g.T());
    for (int t = 0; t < g.T(); ++t)
      idx[t] = static_cast<int>(draw.uniform_below(static_cast<std::uint64_t>(g.T())));
    const GroupedData sample = g.resample(idx);
    EmConfig rep_cfg = cfg;
    rep_cfg.seed = rng.derive(2 * static_cast<std::uint64_t>(r) + 1).seed();
    try {
      FitResult fit = fit_em(sample, rep_cfg);
      results[r] = {true, std::move(fit.A), std::move(fit.rho)};
    } catch (const Error& e) {
      if (e.code() != Errc::all_restarts_degenerate) throw;
    }
  });

  BootstrapSummary out;
  out.sd_A = SquareMatrix(n);
  out.sd_rho.assign(n, 0.0);
  int used = 0;
  for (const auto& r : results) used += r.ok;
  out.replicates = used;
  out.dropped = reps - used;
  if (used < 2)
    throw Error(Errc::invalid_argument,
                "fewer than 2 bootstrap replicates succeeded");

  // Two-pass standard deviations (ddof = 1), accumulated in replicate order.
  const double m = static_cast<double>(used);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double mean = 0.0;
      for (const auto& r : results)
        if (r.ok) mean += r.A(i, j);
      mean /= m;
      double ss = 0.0;
      for (const auto& r : results)
        if (r.ok) ss += (r.A(i, j) - mean) * (r.A(i, j) - mean);
      const double sd = std::sqrt(ss / (m - 1.0));
      out.sd_A(i, j) = sd;
      out.sd_A(j, i) = sd;
    }
  for (int i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& r : results)
      if (r.ok) mean += r.rho[i];
    mean /= m;
    double ss = 0.0;
    for (const auto& r : results)
      if (r.ok) ss += (r.rho[i] - mean) * (r.rho[i] - mean);
    out.sd_rho[i] = std::sqrt(ss / (m - 1.0));
  }

  std::vector<double> sds;
  sds.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) sds.push_back(out.sd_A(i, j));
  std::sort(sds.begin(), sds.end());
  out.percentiles.min = sds.front();
  out.percentiles.p5 = detail::percentile(sds, 5);
  out.percentiles.p25 = detail::percentile(sds, 25);
  out.percentiles.median = detail::percentile(sds, 50);
  out.percentiles.p75 = detail::percentile(sds, 75);
  out.percentiles.p95 = detail::percentile(sds, 95);
  out.percentiles.max = sds.back();
  return out;
}

}  // namespace hubnet
