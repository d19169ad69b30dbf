#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "hubnet/hubnet.hpp"
#include "test_util.hpp"

using Catch::Approx;
using hubnet::Errc;
using hubnet::Error;

namespace {

bool fails_with(Errc code, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

hubnet::AdjacencyMatrix two_node(double a12) {
  hubnet::AdjacencyMatrix a(2);
  a.set(0, 1, a12);
  return a;
}

// The four-node parameter set whose distribution concentrates on two groups
// with probability 1/2 each; the matrix is intentionally asymmetric.
hubnet::SquareMatrix nonidentifiable_matrix() {
  return hubnet::SquareMatrix::from_rows({{1, 1, 1, 0},
                                          {1, 1, 1, 0},
                                          {0, 1, 1, 1},
                                          {0, 1, 1, 1}});
}

}  // namespace

TEST_CASE("group probability of the two-block counterexample is 1/2") {
  const hubnet::SquareMatrix a = nonidentifiable_matrix();
  const hubnet::HubWeights rho({0.25, 0.25, 0.25, 0.25});
  CHECK(hubnet::group_probability_free({1, 1, 1, 0}, a, rho) == Approx(0.5).margin(1e-14));
  CHECK(hubnet::group_probability_free({0, 1, 1, 1}, a, rho) == Approx(0.5).margin(1e-14));
  CHECK(hubnet::group_probability_free({1, 1, 1, 1}, a, rho) == 0.0);
  CHECK(hubnet::group_probability_free({1, 0, 0, 0}, a, rho) == 0.0);
}

TEST_CASE("a lone node always forms its singleton") {
  const hubnet::AdjacencyMatrix a(1);
  const hubnet::HubWeights rho({1.0});
  CHECK(hubnet::group_probability({1}, a, rho) == Approx(1.0).margin(1e-15));
}

TEST_CASE("two-node group probabilities match the hand enumeration") {
  const auto a = two_node(0.3);
  const hubnet::HubWeights rho({0.6, 0.4});
  CHECK(hubnet::group_probability({1, 0}, a, rho) == Approx(0.42).margin(1e-15));
  CHECK(hubnet::group_probability({0, 1}, a, rho) == Approx(0.28).margin(1e-15));
  CHECK(hubnet::group_probability({1, 1}, a, rho) == Approx(0.30).margin(1e-15));
  CHECK(fails_with(Errc::dimension_mismatch,
                   [&] { hubnet::group_probability({1, 0, 1}, a, rho); }));
}

TEST_CASE("log likelihood sums the per-observation logs") {
  const auto a = two_node(0.3);
  const hubnet::HubWeights rho({0.6, 0.4});
  const hubnet::GroupedData g({"v1", "v2"}, {{1, 0}, {1, 1}});
  CHECK(hubnet::log_likelihood(g, a, rho) ==
        Approx(std::log(0.42) + std::log(0.30)).margin(1e-12));

  const hubnet::GroupedData ones({"v1"}, {{1}, {1}, {1}});
  CHECK(hubnet::log_likelihood(ones, hubnet::AdjacencyMatrix(1), hubnet::HubWeights({1.0})) == 0.0);

  // A zero-probability observation drives the sum to -inf.
  const hubnet::HubWeights degenerate({1.0, 0.0});
  const hubnet::GroupedData bad({"v1", "v2"}, {{0, 1}});
  CHECK(std::isinf(hubnet::log_likelihood(bad, two_node(0.0), degenerate)));
}

TEST_CASE("log likelihood of the counterexample dataset is T log(1/2)") {
  const hubnet::SquareMatrix a = nonidentifiable_matrix();
  const hubnet::HubWeights rho({0.25, 0.25, 0.25, 0.25});
  const std::vector<std::vector<std::uint8_t>> rows = {{1, 1, 1, 0}, {0, 1, 1, 1}};
  double ll = 0.0;
  for (const auto& row : rows) ll += std::log(hubnet::group_probability_free(row, a, rho));
  CHECK(ll == Approx(2.0 * std::log(0.5)).margin(1e-12));
}

TEST_CASE("e-step posteriors match the direct evaluation") {
  const auto a = two_node(0.3);
  const hubnet::GroupedData both({"v1", "v2"}, {{1, 1}});
  const hubnet::GroupedData solo({"v1", "v2"}, {{1, 0}});

  const auto sym = hubnet::e_step(both, a, hubnet::HubWeights({0.5, 0.5}));
  CHECK(sym(0, 0) == Approx(0.5).margin(1e-15));
  CHECK(sym(0, 1) == Approx(0.5).margin(1e-15));

  const auto single = hubnet::e_step(solo, a, hubnet::HubWeights({0.5, 0.5}));
  CHECK(single(0, 0) == 1.0);
  CHECK(single(0, 1) == 0.0);

  const auto skew = hubnet::e_step(both, a, hubnet::HubWeights({0.6, 0.4}));
  CHECK(skew(0, 0) == Approx(0.6).margin(1e-15));
  CHECK(skew(0, 1) == Approx(0.4).margin(1e-15));

  const hubnet::GroupedData unreachable({"v1", "v2"}, {{0, 1}});
  CHECK(fails_with(Errc::zero_probability_group, [&] {
    hubnet::e_step(unreachable, a, hubnet::HubWeights({1.0, 0.0}));
  }));
}

TEST_CASE("m-step reduces to frequency counts for degenerate responsibilities") {
  // All responsibility on node 1, which belongs to every group.
  const hubnet::GroupedData g({"v1", "v2", "v3"},
                              {{1, 1, 0}, {1, 0, 1}, {1, 1, 1}});
  const hubnet::Responsibilities r(g, {{1, 0, 0}, {1, 0, 0}, {1, 0, 0}});
  const auto [a, rho] = hubnet::m_step(g, r);
  CHECK(rho[0] == 1.0);
  CHECK(rho[1] == 0.0);
  CHECK(rho[2] == 0.0);
  CHECK(a(0, 1) == Approx(2.0 / 3.0).margin(1e-15));  // v2 appears in 2 of 3 groups
  CHECK(a(0, 2) == Approx(2.0 / 3.0).margin(1e-15));
  // Pair (v2,v3) carries no responsibility at all: 0/0 -> 0 by convention.
  CHECK(a(1, 2) == 0.0);
}

TEST_CASE("m-step matches the hand-evaluated two-observation case") {
  const hubnet::GroupedData g({"v1", "v2"}, {{1, 1}, {1, 0}});
  const hubnet::Responsibilities r(g, {{1, 0}, {1, 0}});
  const auto [a, rho] = hubnet::m_step(g, r);
  CHECK(rho[0] == 1.0);
  CHECK(rho[1] == 0.0);
  CHECK(a(0, 1) == Approx(0.5).margin(1e-15));
}

TEST_CASE("one m-step from the truth stays within sampling error at large T") {
  hubnet::Rng rng(20240801);
  hubnet::Rng net_rng = rng.derive(0);
  hubnet::Rng rho_rng = rng.derive(1);
  hubnet::Rng grp_rng = rng.derive(2);
  const auto a_true = hubnet::gen_network(6, 2.0, 1.0, 4.0, net_rng);
  const auto rho_true = hubnet::gen_hub_weights(6, rho_rng);
  auto [g, s] = hubnet::gen_groups(a_true, rho_true, 50000, grp_rng);

  const auto r = hubnet::e_step(g, a_true, rho_true);
  const auto [a_hat, rho_hat] = hubnet::m_step(g, r);
  CHECK(hubnet::mae_matrix(a_true, a_hat) < 0.02);
  CHECK(hubnet::mae_vector(rho_true, rho_hat) < 0.01);
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j)
      CHECK(std::abs(a_hat(i, j) - a_true(i, j)) < 0.06);
}

TEST_CASE("the mixture distribution sums to one over all non-empty groups") {
  hubnet::Rng rng(77);
  for (int n : {2, 5, 12}) {
    const auto a = testutil::random_adjacency(n, rng);
    const auto rho = testutil::random_weights(n, rng);
    double total = 0.0;
    for (const auto& row : testutil::all_nonempty_rows(n))
      total += hubnet::group_probability(row, a, rho);
    CHECK(total == Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("fit recovers an exact zero when two nodes never co-occur") {
  std::vector<std::vector<std::uint8_t>> rows;
  for (int k = 0; k < 12; ++k) rows.push_back({1, 0});
  for (int k = 0; k < 8; ++k) rows.push_back({0, 1});
  const hubnet::GroupedData g({"v1", "v2"}, rows);
  hubnet::EmConfig cfg;
  cfg.seed = 5;
  const auto fit = hubnet::fit_em(g, cfg);
  CHECK(fit.A(0, 1) == 0.0);
  CHECK(fit.A_raw(0, 1) == 0.0);  // exact zero before thresholding: self-sparsity
  CHECK(fit.rho[0] == Approx(0.6).margin(1e-9));
}

TEST_CASE("fit is deterministic given the seed") {
  const auto g = testutil::table1();
  hubnet::EmConfig cfg;
  cfg.seed = 7;
  const auto fit1 = hubnet::fit_em(g, cfg);
  const auto fit2 = hubnet::fit_em(g, cfg);
  CHECK(fit1.A == fit2.A);
  CHECK(fit1.rho == fit2.rho);
  CHECK(fit1.log_likelihood == fit2.log_likelihood);
  const auto doc1 = hubnet::result_to_json(g.labels(), fit1.A, fit1.rho,
                                           fit1.log_likelihood, fit1.restarts);
  const auto doc2 = hubnet::result_to_json(g.labels(), fit2.A, fit2.rho,
                                           fit2.log_likelihood, fit2.restarts);
  CHECK(doc1.dump() == doc2.dump());

  // Restart bookkeeping: the chosen restart attains the reported maximum.
  REQUIRE(fit1.chosen_restart >= 0);
  for (const auto& r : fit1.restarts) CHECK(fit1.log_likelihood >= r.final_ll);
  CHECK(fit1.restarts[fit1.chosen_restart].final_ll == fit1.log_likelihood);
}

TEST_CASE("fit results are identical for any job count") {
  const auto g = testutil::table1();
  hubnet::EmConfig cfg;
  cfg.seed = 11;
  const auto serial = hubnet::fit_em(g, cfg, 1);
  const auto parallel = hubnet::fit_em(g, cfg, 4);
  CHECK(serial.A == parallel.A);
  CHECK(serial.rho == parallel.rho);
  CHECK(serial.log_likelihood == parallel.log_likelihood);
}

TEST_CASE("log likelihood is monotone within every restart") {
  hubnet::Rng rng(99);
  hubnet::Rng net_rng = rng.derive(0);
  hubnet::Rng rho_rng = rng.derive(1);
  hubnet::Rng grp_rng = rng.derive(2);
  const auto a_true = hubnet::gen_network(8, 2.0, 1.0, 4.0, net_rng);
  const auto rho_true = hubnet::gen_hub_weights(8, rho_rng);
  auto [g, s] = hubnet::gen_groups(a_true, rho_true, 400, grp_rng);

  hubnet::EmConfig cfg;
  cfg.seed = 17;
  cfg.restarts = 4;
  const auto fit = hubnet::fit_em(g, cfg);
  for (const auto& r : fit.restarts) {
    REQUIRE(r.ll_trace.size() >= 2);
    for (std::size_t k = 1; k < r.ll_trace.size(); ++k)
      CHECK(r.ll_trace[k] >= r.ll_trace[k - 1] - 1e-9);
  }
}

TEST_CASE("EM updates preserve symmetry, unit diagonal, and weight normalization") {
  hubnet::Rng rng(1234);
  hubnet::Rng grp_rng = rng.derive(2);
  const auto a0 = testutil::random_adjacency(5, rng, 0.05, 0.9);
  const auto rho0 = testutil::random_weights(5, rng);
  auto [g, s] = hubnet::gen_groups(a0, rho0, 200, grp_rng);

  hubnet::AdjacencyMatrix a = testutil::random_adjacency(5, rng, 0.1, 0.9);
  hubnet::HubWeights rho = testutil::random_weights(5, rng);
  for (int it = 0; it < 10; ++it) {
    const auto r = hubnet::e_step(g, a, rho);
    for (int t = 0; t < g.T(); ++t) {
      double sum = 0.0;
      for (int i = 0; i < g.n(); ++i) sum += r(t, i);
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    std::tie(a, rho) = hubnet::m_step(g, r);
    double rho_sum = 0.0;
    for (int i = 0; i < g.n(); ++i) rho_sum += rho[i];
    CHECK(std::abs(rho_sum - 1.0) <= 1e-12);
    for (int i = 0; i < g.n(); ++i) {
      CHECK(a(i, i) == 1.0);
      for (int j = 0; j < g.n(); ++j) CHECK(a(i, j) == a(j, i));
    }
  }
}

TEST_CASE("zero is an absorbing state for both parameter families") {
  // Inject an exact zero edge; the pair still co-occurs in the data.
  const hubnet::GroupedData g({"v1", "v2", "v3"},
                              {{1, 1, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}});
  hubnet::AdjacencyMatrix a(3);
  a.set(0, 1, 0.0);
  a.set(0, 2, 0.6);
  a.set(1, 2, 0.7);
  const hubnet::HubWeights rho({0.4, 0.35, 0.25});
  auto r = hubnet::e_step(g, a, rho);
  auto [a1, rho1] = hubnet::m_step(g, r);
  CHECK(a1(0, 1) == 0.0);

  // Inject a zero hub weight.
  hubnet::AdjacencyMatrix b(3);
  b.set(0, 1, 0.5);
  b.set(0, 2, 0.6);
  b.set(1, 2, 0.7);
  const hubnet::HubWeights rho_zero({0.6, 0.0, 0.4});
  r = hubnet::e_step(g, b, rho_zero);
  auto [b1, rho2] = hubnet::m_step(g, r);
  CHECK(rho2[1] == 0.0);
}

TEST_CASE("converged fits satisfy the estimating equations") {
  hubnet::Rng rng(31);
  hubnet::Rng net_rng = rng.derive(0);
  hubnet::Rng rho_rng = rng.derive(1);
  hubnet::Rng grp_rng = rng.derive(2);
  const auto a_true = hubnet::gen_network(6, 2.0, 1.0, 4.0, net_rng);
  const auto rho_true = hubnet::gen_hub_weights(6, rho_rng);
  auto [g, s] = hubnet::gen_groups(a_true, rho_true, 400, grp_rng);

  hubnet::EmConfig cfg;
  cfg.seed = 13;
  cfg.restarts = 2;
  cfg.rel_ll_tolerance = 1e-14;
  cfg.max_iterations = 20000;
  const auto fit = hubnet::fit_em(g, cfg);

  const auto r = hubnet::e_step(g, fit.A_raw, fit.rho);
  const auto [a_next, rho_next] = hubnet::m_step(g, r);
  for (int i = 0; i < g.n(); ++i) {
    CHECK(std::abs(rho_next[i] - fit.rho[i]) <= 1e-6);
    for (int j = i + 1; j < g.n(); ++j)
      CHECK(std::abs(a_next(i, j) - fit.A_raw(i, j)) <= 1e-6);
  }
}

TEST_CASE("known-hub estimator matches the hand counts on the notional data") {
  const auto g = testutil::table1();
  // Hubs: e1->v1, e2->v1, e3->v2, e4->v1, e5->v3.
  const hubnet::HubAssignments s(g, {0, 0, 1, 0, 2});
  const auto res = hubnet::fit_known_hub(g, s);
  CHECK(res.rho[0] == Approx(0.6).margin(1e-15));
  CHECK(res.rho[1] == Approx(0.2).margin(1e-15));
  CHECK(res.rho[2] == Approx(0.2).margin(1e-15));
  CHECK(res.rho[3] == 0.0);
  CHECK(res.A(0, 1) == Approx(0.5).margin(1e-15));
  CHECK(res.A(0, 2) == Approx(0.25).margin(1e-15));
  CHECK(res.A(0, 3) == Approx(1.0 / 3.0).margin(1e-15));
  CHECK(res.A(1, 2) == Approx(0.5).margin(1e-15));
  CHECK(res.A(1, 3) == 0.0);
  CHECK(res.A(2, 3) == 1.0);
  CHECK(res.undefined_pairs.empty());
}

TEST_CASE("known-hub estimator handles singleton-only data and undefined pairs") {
  const hubnet::GroupedData singles({"a", "b", "c"}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const hubnet::HubAssignments s(singles, {0, 1, 2});
  const auto res = hubnet::fit_known_hub(singles, s);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) CHECK(res.A(i, j) == 0.0);
  CHECK(res.undefined_pairs.empty());

  const hubnet::GroupedData g({"a", "b", "c"}, {{1, 1, 0}, {1, 0, 1}});
  const hubnet::HubAssignments hubs(g, {0, 0});
  const auto partial = hubnet::fit_known_hub(g, hubs);
  CHECK(partial.A(1, 2) == 0.0);
  const std::vector<std::pair<int, int>> expected = {{1, 2}};
  CHECK(partial.undefined_pairs == expected);
}

TEST_CASE("known-hub estimator is consistent on simulated data") {
  hubnet::Rng rng(555);
  hubnet::Rng net_rng = rng.derive(0);
  hubnet::Rng rho_rng = rng.derive(1);
  hubnet::Rng grp_rng = rng.derive(2);
  const auto a_true = hubnet::gen_network(8, 2.0, 1.0, 4.0, net_rng);
  const auto rho_true = hubnet::gen_hub_weights(8, rho_rng);
  auto [g, s] = hubnet::gen_groups(a_true, rho_true, 50000, grp_rng);
  const auto res = hubnet::fit_known_hub(g, s);
  CHECK(hubnet::mae_vector(rho_true, res.rho) < 0.01);
  CHECK(hubnet::mae_matrix(a_true, res.A) < 0.03);
}

TEST_CASE("method of moments recovers the enumerated ratio") {
  std::vector<std::vector<std::uint8_t>> rows;
  for (int k = 0; k < 42; ++k) rows.push_back({1, 0});
  for (int k = 0; k < 28; ++k) rows.push_back({0, 1});
  for (int k = 0; k < 30; ++k) rows.push_back({1, 1});
  const hubnet::GroupedData g({"v1", "v2"}, rows);
  const auto est = hubnet::mom_pair_estimate(g, 0, 1);
  REQUIRE(est.has_value());
  CHECK(*est == Approx(0.30).margin(1e-15));
}

TEST_CASE("method of moments edge cases") {
  const hubnet::GroupedData no_pair({"v1", "v2", "v3"},
                                    {{1, 0, 0}, {0, 1, 0}, {1, 1, 1}});
  const auto zero = hubnet::mom_pair_estimate(no_pair, 0, 1);
  REQUIRE(zero.has_value());
  CHECK(*zero == 0.0);

  const hubnet::GroupedData no_support({"v1", "v2", "v3"}, {{1, 1, 1}});
  CHECK_FALSE(hubnet::mom_pair_estimate(no_support, 0, 1).has_value());

  CHECK(fails_with(Errc::invalid_argument,
                   [&] { hubnet::mom_pair_estimate(no_support, 1, 1); }));
}

TEST_CASE("EM and known-hub estimates agree on simulated data") {
  double total_diff = 0.0;
  const int datasets = 2;
  for (int d = 0; d < datasets; ++d) {
    hubnet::Rng rng(8000 + d);
    hubnet::Rng net_rng = rng.derive(0);
    hubnet::Rng rho_rng = rng.derive(1);
    hubnet::Rng grp_rng = rng.derive(2);
    const auto a_true = hubnet::gen_network(10, 2.0, 1.0, 4.0, net_rng);
    const auto rho_true = hubnet::gen_hub_weights(10, rho_rng);
    auto [g, s] = hubnet::gen_groups(a_true, rho_true, 50000, grp_rng);

    hubnet::EmConfig cfg;
    cfg.seed = 900 + d;
    const auto em = hubnet::fit_em(g, cfg);
    const auto khm = hubnet::fit_known_hub(g, s);
    total_diff += hubnet::mae_matrix(khm.A, em.A);
  }
  CHECK(total_diff / datasets <= 0.03);
}

TEST_CASE("method of moments and EM converge together as T grows") {
  // n=3: the pair estimator uses only singleton/doubleton frequencies while
  // EM uses all groups, so the two genuinely differ at finite T.
  hubnet::AdjacencyMatrix a_true(3);
  a_true.set(0, 1, 0.3);
  a_true.set(0, 2, 0.2);
  a_true.set(1, 2, 0.4);
  const hubnet::HubWeights rho_true({0.5, 0.3, 0.2});
  std::vector<double> mean_diff;
  for (int exp10 = 3; exp10 <= 5; ++exp10) {
    int T = 1;
    for (int k = 0; k < exp10; ++k) T *= 10;
    double total = 0.0;
    const int reps = 3;
    for (int rep = 0; rep < reps; ++rep) {
      hubnet::Rng grp_rng(4000 + 10 * exp10 + rep);
      auto [g, s] = hubnet::gen_groups(a_true, rho_true, T, grp_rng);
      hubnet::EmConfig cfg;
      cfg.seed = 4100 + rep;
      const auto em = hubnet::fit_em(g, cfg);
      const auto mom = hubnet::mom_pair_estimate(g, 0, 1);
      REQUIRE(mom.has_value());
      total += std::abs(*mom - em.A(0, 1));
    }
    mean_diff.push_back(total / reps);
  }
  CHECK(mean_diff[0] > mean_diff[1]);
  CHECK(mean_diff[1] > mean_diff[2]);
  CHECK(mean_diff[2] < 0.01);
}

TEST_CASE("EM and MoM coincide exactly when n = 2") {
  // With two nodes the estimating equation for the pair reduces to the
  // doubleton frequency, which is also the method-of-moments value.
  const auto a_true = two_node(0.3);
  const hubnet::HubWeights rho_true({0.6, 0.4});
  hubnet::Rng grp_rng(4400);
  auto [g, s] = hubnet::gen_groups(a_true, rho_true, 5000, grp_rng);
  hubnet::EmConfig cfg;
  cfg.seed = 4401;
  const auto em = hubnet::fit_em(g, cfg);
  const auto mom = hubnet::mom_pair_estimate(g, 0, 1);
  REQUIRE(mom.has_value());
  CHECK(em.A_raw(0, 1) == Approx(*mom).margin(1e-12));
}

TEST_CASE("em config validation rejects out-of-range settings") {
  hubnet::EmConfig cfg;
  cfg.restarts = 0;
  CHECK(fails_with(Errc::invalid_argument, [&] { cfg.validate(); }));
  cfg = {};
  cfg.rel_ll_tolerance = 0.0;
  CHECK(fails_with(Errc::invalid_argument, [&] { cfg.validate(); }));
  cfg = {};
  cfg.zero_threshold = 1.0;
  CHECK(fails_with(Errc::invalid_argument, [&] { cfg.validate(); }));
  cfg = {};
  CHECK(fails_with(Errc::invalid_argument, [&] {
    const hubnet::GroupedData one({"a"}, {{1}});
    hubnet::fit_em(one, cfg);
  }));
}
