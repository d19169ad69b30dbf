// hubnet command line tool: simulate grouped data, fit hub-model and
// baseline estimators, and evaluate/diagnose the results.  Every subcommand
// that writes an artifact also writes a "<artifact>.manifest.json" with the
// argument vector, seed, input digests, and wall-clock duration.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hubnet/hubnet.hpp"
#include "hubnet/manifest.hpp"

namespace {

using hubnet::json;

struct CommandContext {
  hubnet::RunManifest manifest;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void finish(const std::vector<std::string>& artifacts) {
    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    for (const auto& path : artifacts) manifest.write_alongside(path);
  }
};

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// Resolves the --seed flag: required in strict mode, generated (and
// announced) otherwise.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& given, bool strict,
                           const std::string& subcommand) {
  if (given) return *given;
  if (strict)
    throw hubnet::Error(hubnet::Errc::invalid_argument,
                        subcommand + ": --seed is required in --strict mode");
  const std::uint64_t s = fresh_seed();
  std::cerr << "note: no --seed given; using generated seed " << s << "\n";
  return s;
}

std::pair<std::string, std::string> parse_pair_flag(const std::string& pair) {
  const auto pos = pair.find(',');
  if (pos == std::string::npos || pos == 0 || pos + 1 >= pair.size())
    throw hubnet::Error(hubnet::Errc::invalid_argument,
                        "--pair expects two labels separated by a comma");
  return {pair.substr(0, pos), pair.substr(pos + 1)};
}

void emit(const json& doc, const std::optional<std::string>& out,
          CommandContext& ctx) {
  const std::string text = doc.dump(2) + "\n";
  if (out) {
    hubnet::write_file(*out, text);
    ctx.finish({*out});
  } else {
    std::cout << text;
    ctx.finish({});
  }
}

struct EmFlags {
  int restarts = 10;
  int max_iter = 100;
  double tol = 1e-4;
  double threshold = 1e-4;
  int jobs = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--restarts", restarts, "independent EM restarts");
    cmd->add_option("--max-iter", max_iter, "iteration cap per restart");
    cmd->add_option("--tol", tol, "relative log-likelihood convergence tolerance");
    cmd->add_option("--threshold", threshold, "zero-threshold applied to the fitted matrix");
    cmd->add_option("--jobs", jobs, "worker threads for restarts/replicates");
  }

  hubnet::EmConfig config(std::uint64_t seed) const {
    hubnet::EmConfig cfg;
    cfg.restarts = restarts;
    cfg.max_iterations = max_iter;
    cfg.rel_ll_tolerance = tol;
    cfg.zero_threshold = threshold;
    cfg.seed = seed;
    return cfg;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"latent network inference from grouped observations"};
  app.set_version_flag("--version", HUBNET_VERSION);
  app.require_subcommand(1);
  bool strict = false;
  app.add_flag("--strict", strict, "require explicit --seed on randomized subcommands");

  // ---- simulate ----------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "sample grouped data from a random hub-model truth");
  int sim_nodes = 10, sim_groups = 1000;
  double sim_power = 2.0, sim_alpha = 1.0, sim_beta = 4.0;
  std::optional<std::uint64_t> sim_seed;
  std::string sim_out_groups, sim_out_truth;
  std::string sim_hub_col;
  sim->add_option("--nodes", sim_nodes, "population size")->required();
  sim->add_option("--groups", sim_groups, "number of observations")->required();
  sim->add_option("--power", sim_power, "degree-distribution exponent");
  sim->add_option("--alpha", sim_alpha, "Beta shape alpha for edge weights");
  sim->add_option("--beta", sim_beta, "Beta shape beta for edge weights");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--out-groups", sim_out_groups, "grouped-data CSV to write")->required();
  sim->add_option("--out-truth", sim_out_truth, "truth JSON to write")->required();
  sim->add_option("--hub-col", sim_hub_col,
                  "also record the true hub of each group in this CSV column");

  // ---- fit ---------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "fit the hub model by multistart EM (or KHM with --hub-col)");
  std::string fit_input, fit_out;
  std::string fit_hub_col;
  std::optional<std::uint64_t> fit_seed;
  EmFlags fit_em_flags;
  fit->add_option("--input", fit_input, "grouped-data CSV")->required();
  fit->add_option("--out", fit_out, "result JSON to write")->required();
  fit->add_option("--hub-col", fit_hub_col, "hub column name; switches to the known-hub estimator");
  fit->add_option("--seed", fit_seed, "master seed");
  fit_em_flags.attach(fit);

  // ---- describe ----------------------------------------------------------
  auto* desc = app.add_subcommand("describe", "baseline descriptive matrices");
  std::string desc_input, desc_measure, desc_out, desc_format = "matrix-csv";
  desc->add_option("--input", desc_input, "grouped-data CSV")->required();
  desc->add_option("--measure", desc_measure, "cooccurrence or halfweight")
      ->required()
      ->check(CLI::IsMember({"cooccurrence", "halfweight"}));
  desc->add_option("--format", desc_format, "matrix-csv, edge-list, or json")
      ->check(CLI::IsMember({"matrix-csv", "edge-list", "json"}));
  desc->add_option("--out", desc_out, "output path")->required();

  // ---- evaluate ----------------------------------------------------------
  auto* eval = app.add_subcommand("evaluate", "compare an estimate against a simulation truth");
  std::string eval_truth, eval_estimate;
  double eval_threshold = 1e-4;
  std::optional<std::string> eval_out;
  eval->add_option("--truth", eval_truth, "truth JSON from simulate")->required();
  eval->add_option("--estimate", eval_estimate, "result JSON from fit")->required();
  eval->add_option("--threshold", eval_threshold, "edge-present threshold for the estimate");
  eval->add_option("--out", eval_out, "write the metrics JSON here instead of stdout");

  // ---- ncut --------------------------------------------------------------
  auto* ncut = app.add_subcommand("ncut", "normalized cut of a matrix under a 2-way partition");
  std::string ncut_matrix, ncut_partition;
  std::optional<std::string> ncut_out;
  ncut->add_option("--matrix", ncut_matrix, "matrix CSV")->required();
  ncut->add_option("--partition", ncut_partition, "partition CSV (label,community)")->required();
  ncut->add_option("--out", ncut_out, "write the value JSON here instead of stdout");

  // ---- mom ---------------------------------------------------------------
  auto* mom = app.add_subcommand("mom", "method-of-moments estimate for one node pair");
  std::string mom_input, mom_pair;
  std::optional<std::string> mom_out;
  mom->add_option("--input", mom_input, "grouped-data CSV")->required();
  mom->add_option("--pair", mom_pair, "two node labels, e.g. v1,v2")->required();
  mom->add_option("--out", mom_out, "write the estimate JSON here instead of stdout");

  // ---- bootstrap ---------------------------------------------------------
  auto* boot = app.add_subcommand("bootstrap", "bootstrap standard errors of the EM fit");
  std::string boot_input, boot_out;
  int boot_reps = 200;
  std::optional<std::uint64_t> boot_seed;
  EmFlags boot_em_flags;
  boot->add_option("--input", boot_input, "grouped-data CSV")->required();
  boot->add_option("--reps", boot_reps, "bootstrap replicates");
  boot->add_option("--seed", boot_seed, "master seed");
  boot->add_option("--out", boot_out, "summary JSON to write")->required();
  boot_em_flags.attach(boot);

  // ---- diagnose ----------------------------------------------------------
  auto* diag = app.add_subcommand("diagnose", "identifiability diagnostics");
  diag->require_subcommand(1);
  auto* asym = diag->add_subcommand(
      "asym-curve", "repeated fits with the symmetry constraint disabled");
  std::string asym_input, asym_pair, asym_out;
  int asym_fits = 100;
  std::optional<std::uint64_t> asym_seed;
  EmFlags asym_em_flags;
  asym->add_option("--input", asym_input, "grouped-data CSV")->required();
  asym->add_option("--pair", asym_pair, "two node labels, e.g. v1,v2")->required();
  asym->add_option("--fits", asym_fits, "number of independent free-matrix fits");
  asym->add_option("--seed", asym_seed, "master seed");
  asym->add_option("--out", asym_out, "diagnostics JSON to write")->required();
  asym_em_flags.attach(asym);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Map every argument problem to the documented validation exit code;
    // --help and --version exit cleanly.
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  CommandContext ctx;
  for (int i = 0; i < argc; ++i) ctx.manifest.argv.emplace_back(argv[i]);

  if (sim->parsed()) {
    ctx.manifest.subcommand = "simulate";
    if (sim_nodes < 1)
      throw hubnet::Error(hubnet::Errc::invalid_argument, "--nodes must be >= 1");
    const std::uint64_t seed = resolve_seed(sim_seed, strict, "simulate");
    ctx.manifest.seed = seed;
    hubnet::SimConfig cfg{sim_nodes, sim_groups, sim_power, sim_alpha, sim_beta, seed};
    cfg.validate();
    hubnet::Rng master(seed);
    hubnet::Rng rho_rng = master.derive(1);
    hubnet::Rng net_rng = master.derive(2);
    hubnet::Rng group_rng = master.derive(3);
    const hubnet::HubWeights rho = hubnet::gen_hub_weights(cfg.n, rho_rng);
    hubnet::AdjacencyMatrix a(cfg.n);
    if (cfg.n >= 2)
      a = hubnet::gen_network(cfg.n, cfg.power, cfg.alpha, cfg.beta, net_rng);
    auto [groups, hubs] = hubnet::gen_groups(a, rho, cfg.T, group_rng);
    if (sim_hub_col.empty())
      hubnet::save_grouped_data(groups, sim_out_groups);
    else
      hubnet::save_grouped_data(groups, sim_out_groups, &hubs, sim_hub_col);
    hubnet::write_file(sim_out_truth,
                       hubnet::truth_to_json(groups.labels(), a, rho).dump(2) + "\n");
    ctx.finish({sim_out_groups, sim_out_truth});
    return 0;
  }

  if (fit->parsed()) {
    ctx.manifest.subcommand = "fit";
    ctx.manifest.add_input(fit_input);
    const bool khm = !fit_hub_col.empty();
    auto [groups, hubs] = hubnet::load_grouped_data(
        fit_input, khm ? std::optional<std::string>(fit_hub_col) : std::nullopt);
    json doc;
    if (khm) {
      const hubnet::KhmResult res = hubnet::fit_known_hub(groups, *hubs);
      for (const auto& [i, j] : res.undefined_pairs)
        std::cerr << "note: pair (" << groups.labels()[i] << "," << groups.labels()[j]
                  << ") has no hub observations; entry reported as 0\n";
      const double ll = hubnet::log_likelihood(groups, res.A, res.rho);
      doc = hubnet::result_to_json(groups.labels(), res.A, res.rho, ll, {});
    } else {
      const std::uint64_t seed = resolve_seed(fit_seed, strict, "fit");
      ctx.manifest.seed = seed;
      const hubnet::FitResult res =
          hubnet::fit_em(groups, fit_em_flags.config(seed), fit_em_flags.jobs);
      doc = hubnet::result_to_json(groups.labels(), res.A, res.rho,
                                   res.log_likelihood, res.restarts);
    }
    hubnet::write_file(fit_out, doc.dump(2) + "\n");
    ctx.finish({fit_out});
    return 0;
  }

  if (desc->parsed()) {
    ctx.manifest.subcommand = "describe";
    ctx.manifest.add_input(desc_input);
    auto [groups, hubs] = hubnet::load_grouped_data(desc_input);
    const hubnet::MatrixFormat format = hubnet::matrix_format_from_name(desc_format);
    if (desc_measure == "cooccurrence") {
      hubnet::save_matrix(hubnet::co_occurrence(groups), groups.labels(), desc_out, format);
    } else {
      const hubnet::HalfWeightResult hw = hubnet::half_weight(groups);
      for (const auto& [i, j] : hw.undefined_pairs)
        std::cerr << "note: nodes " << groups.labels()[i] << "," << groups.labels()[j]
                  << " never appear; half-weight entry reported as 0\n";
      hubnet::save_matrix(hw.matrix, groups.labels(), desc_out, format, hw.undefined_pairs);
    }
    ctx.finish({desc_out});
    return 0;
  }

  if (eval->parsed()) {
    ctx.manifest.subcommand = "evaluate";
    ctx.manifest.add_input(eval_truth);
    ctx.manifest.add_input(eval_estimate);
    const hubnet::ResultDocument truth = hubnet::load_result(eval_truth);
    const hubnet::ResultDocument est = hubnet::load_result(eval_estimate);
    if (truth.labels != est.labels)
      throw hubnet::Error(hubnet::Errc::invalid_argument,
                          "truth and estimate label sets differ");
    json doc;
    doc["structure_accuracy"] =
        hubnet::structure_accuracy(truth.A, est.A, eval_threshold);
    doc["mae_A"] = hubnet::mae_matrix(truth.A, est.A);
    doc["mae_rho"] = hubnet::mae_vector(truth.rho, est.rho);
    doc["threshold"] = eval_threshold;
    emit(doc, eval_out, ctx);
    return 0;
  }

  if (ncut->parsed()) {
    ctx.manifest.subcommand = "ncut";
    ctx.manifest.add_input(ncut_matrix);
    ctx.manifest.add_input(ncut_partition);
    auto [labels, matrix] = hubnet::load_matrix_csv(ncut_matrix);
    const hubnet::Partition part = hubnet::load_partition(ncut_partition, labels);
    json doc;
    doc["normalized_cut"] = hubnet::normalized_cut(matrix, part);
    emit(doc, ncut_out, ctx);
    return 0;
  }

  if (mom->parsed()) {
    ctx.manifest.subcommand = "mom";
    ctx.manifest.add_input(mom_input);
    auto [groups, hubs] = hubnet::load_grouped_data(mom_input);
    const auto [lx, ly] = parse_pair_flag(mom_pair);
    const int x = groups.label_index(lx), y = groups.label_index(ly);
    const std::optional<double> est = hubnet::mom_pair_estimate(groups, x, y);
    json doc;
    doc["pair"] = {lx, ly};
    doc["defined"] = est.has_value();
    doc["estimate"] = est ? json(*est) : json(nullptr);
    emit(doc, mom_out, ctx);
    return 0;
  }

  if (boot->parsed()) {
    ctx.manifest.subcommand = "bootstrap";
    ctx.manifest.add_input(boot_input);
    const std::uint64_t seed = resolve_seed(boot_seed, strict, "bootstrap");
    ctx.manifest.seed = seed;
    auto [groups, hubs] = hubnet::load_grouped_data(boot_input);
    // Replicates derive from substream 1, EM restart seeds inside each
    // replicate from the replicate's own substreams.
    hubnet::Rng master(seed);
    hubnet::Rng rep_rng = master.derive(1);
    const hubnet::BootstrapSummary summary = hubnet::bootstrap(
        groups, boot_reps, boot_em_flags.config(seed), rep_rng, boot_em_flags.jobs);
    if (summary.dropped > 0)
      std::cerr << "note: " << summary.dropped << " replicate(s) dropped as degenerate\n";
    hubnet::write_file(boot_out,
                       hubnet::bootstrap_to_json(summary, groups.labels()).dump(2) + "\n");
    ctx.finish({boot_out});
    return 0;
  }

  if (asym->parsed()) {
    ctx.manifest.subcommand = "diagnose asym-curve";
    ctx.manifest.add_input(asym_input);
    const std::uint64_t seed = resolve_seed(asym_seed, strict, "diagnose asym-curve");
    ctx.manifest.seed = seed;
    auto [groups, hubs] = hubnet::load_grouped_data(asym_input);
    const auto [lx, ly] = parse_pair_flag(asym_pair);
    const int x = groups.label_index(lx), y = groups.label_index(ly);
    if (x == y)
      throw hubnet::Error(hubnet::Errc::invalid_argument, "--pair must name two nodes");
    if (asym_fits < 1)
      throw hubnet::Error(hubnet::Errc::invalid_argument, "--fits must be >= 1");

    // Empirical singleton/doubleton frequencies pin the curve.
    long cx = 0, cy = 0, cxy = 0;
    for (int t = 0; t < groups.T(); ++t) {
      const auto& m = groups.members(t);
      if (m.size() == 1) {
        if (m[0] == x) cx++;
        if (m[0] == y) cy++;
      } else if (m.size() == 2 && m[0] == std::min(x, y) && m[1] == std::max(x, y)) {
        cxy++;
      }
    }
    const double T = static_cast<double>(groups.T());
    const double px = cx / T, py = cy / T, pxy = cxy / T;

    const hubnet::Rng master(seed);
    json fits = json::array();
    for (int k = 0; k < asym_fits; ++k) {
      hubnet::EmConfig cfg = asym_em_flags.config(master.derive(k).seed());
      cfg.restarts = 1;
      const hubnet::AsymFitResult res =
          hubnet::fit_em_asymmetric(groups, cfg, asym_em_flags.jobs);
      json rec;
      rec["a_xy"] = res.A(x, y);
      rec["a_yx"] = res.A(y, x);
      rec["log_likelihood"] = res.log_likelihood;
      try {
        const double on_curve = hubnet::asym_curve(px, py, pxy, res.A(y, x));
        rec["curve_a_xy"] = on_curve;
        rec["residual"] = res.A(x, y) - on_curve;
      } catch (const hubnet::Error&) {
        rec["curve_a_xy"] = nullptr;
        rec["residual"] = nullptr;
      }
      fits.push_back(std::move(rec));
    }
    json doc;
    doc["pair"] = {lx, ly};
    doc["p_x"] = px;
    doc["p_y"] = py;
    doc["p_xy"] = pxy;
    doc["fits"] = std::move(fits);
    hubnet::write_file(asym_out, doc.dump(2) + "\n");
    ctx.finish({asym_out});
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hubnet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
