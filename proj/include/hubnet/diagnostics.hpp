#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hubnet/error.hpp"
#include "hubnet/hub_model.hpp"
#include "hubnet/matrix.hpp"
#include "hubnet/simulate.hpp"
#include "hubnet/types.hpp"

namespace hubnet {

// Diagnostic-mode fit with the symmetry constraint disabled.  The free
// matrix is not an estimator (the model is unidentifiable without the
// constraint); repeated fits trace out the ridge of equal-likelihood
// solutions that asym_curve describes.
struct AsymFitResult {
  SquareMatrix A;  // diag 1, off-diagonal free in [0,1)
  HubWeights rho;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  std::vector<RestartRecord> restarts;
  int chosen_restart = -1;
};

inline AsymFitResult fit_em_asymmetric(const GroupedData& g, const EmConfig& cfg,
                                       int jobs = 1) {
  cfg.validate();
  if (g.n() < 2)
    throw Error(Errc::invalid_argument, "fit needs a population of >= 2 nodes");
  const auto cg = detail::CompressedGroups::from(g);
  const auto runs = detail::run_em_multistart(cg, /*symmetric=*/false, cfg, jobs);
  const int best = detail::select_best_run(runs);
  if (best < 0)
    throw Error(Errc::all_restarts_degenerate,
                "every restart hit a zero-probability group");
  AsymFitResult out;
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
  out.A = runs[best].A;
  for (int i = 0; i < cg.n; ++i)
    for (int j = 0; j < cg.n; ++j)
      if (i != j && out.A(i, j) <= cfg.zero_threshold) out.A(i, j) = 0.0;
  out.rho = HubWeights(runs[best].rho);
  return out;
}

// Probability of one group row under a free (possibly asymmetric) matrix.
inline double group_probability_free(const std::vector<std::uint8_t>& g,
                                     const SquareMatrix& A, const HubWeights& rho) {
  if (static_cast<int>(g.size()) != A.size() || rho.size() != A.size())
    throw Error(Errc::dimension_mismatch, "group/matrix/weight sizes differ");
  const double lp = detail::log_group_probability(g, A, rho.values());
  return lp == detail::kNegInf ? 0.0 : std::exp(lp);
}

// Sample grouped data from a free-matrix truth (hub mechanism with A(hub, j)
// inclusion probabilities; no symmetry assumed).
inline std::pair<GroupedData, HubAssignments> gen_groups_free(
    const SquareMatrix& A, const HubWeights& rho, int T, const Rng& rng) {
  if (rho.size() != A.size())
    throw Error(Errc::dimension_mismatch, "matrix/weight sizes differ");
  if (T < 1) throw Error(Errc::invalid_argument, "T must be >= 1");
  auto [rows, hubs] = detail::sample_rows(A, rho, T, rng);
  std::vector<std::string> names;
  names.reserve(A.size());
  for (int i = 1; i <= A.size(); ++i) names.push_back("v" + std::to_string(i));
  GroupedData g(std::move(names), std::move(rows));
  HubAssignments s(g, std::move(hubs));
  return {std::move(g), std::move(s)};
}

}  // namespace hubnet
