#include <charconv>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arraynormal/io.hpp"
#include "arraynormal/risk.hpp"

namespace arraynormal {

namespace {

std::vector<std::int64_t> parse_dims_flag(const std::string& raw) {
  // Accept both "4,4,4" and "4x4x4".
  std::string normalized = raw;
  for (char& c : normalized)
    if (c == ',') c = 'x';
  return parse_dims(normalized);
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* value = std::getenv("ARRAYNORMAL_SEED");
  if (value == nullptr) return std::nullopt;
  std::uint64_t seed = 0;
  const std::string s(value);
  const auto result = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (result.ec != std::errc() || result.ptr != s.data() + s.size())
    throw std::invalid_argument("ARRAYNORMAL_SEED is not a valid unsigned integer: '" + s + "'");
  return seed;
}

int run_sample(const std::string& dims_raw, std::int64_t n, std::uint64_t seed,
               const std::string& truth_path, const std::string& out_path) {
  const std::vector<std::int64_t> dims = parse_dims_flag(dims_raw);
  const SeparableCovariance truth = truth_path.empty()
                                        ? SeparableCovariance::identity(dims)
                                        : read_covariance_file(truth_path);
  if (truth.dims() != dims)
    throw std::invalid_argument("sample: --truth dimensions do not match --dims");
  RngStream rng(seed, 0);
  const Tensor x = sample_array_normal(truth, n, rng);
  write_tensor_file(out_path, x);
  return 0;
}

int run_estimate(const std::string& method, const std::string& in_path, std::int64_t iters,
                 std::int64_t burnin, std::uint64_t seed, std::int64_t mwte_t, double tol,
                 std::int64_t max_iter, const std::string& out_path) {
  const Tensor x = read_tensor_file(in_path);
  EstimatorOutput out = [&] {
    if (method == "mle") return mle_flipflop(x, tol, max_iter);
    GibbsConfig cfg;
    cfg.total_iters = iters;
    cfg.burn_in = burnin;
    cfg.rng = RngStream(seed, 0);
    if (method == "umree") return umree(gibbs_chain(x, cfg));
    if (method == "stein_umree") {
      cfg.accumulate_full_precision = true;
      return stein_umree(gibbs_chain(x, cfg), tol, max_iter);
    }
    return mwte(x, mwte_t, cfg, RngStream(seed, 0));
  }();
  for (const std::string& w : out.warnings) std::cerr << "warning: " << w << "\n";
  write_estimate_file(out_path, out, seed);
  return 0;
}

int run_simulate(const std::string& config_path, const std::string& out_path,
                 const std::string& aggregate_path, const std::string& json_path) {
  SimConfig cfg = sim_config_from_json(read_text_file(config_path));
  if (const auto env_seed = seed_from_environment()) cfg.master_seed = *env_seed;
  const RiskReport report = run_risk_study(cfg);
  for (const ConfigReport& config : report.configs)
    for (const std::string& w : config.warnings) std::cerr << "warning: " << w << "\n";
  write_text_file(out_path, report_to_replicate_csv(report));
  if (!aggregate_path.empty()) write_text_file(aggregate_path, report_to_aggregate_csv(report));
  if (!json_path.empty()) write_text_file(json_path, report_to_json(report));
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Separable-covariance estimation for the array normal model"};
  app.require_subcommand(1);

  std::string dims_raw;
  std::int64_t n = 1;
  std::uint64_t seed = 0;
  std::string truth_path;
  std::string out_path;
  CLI::App* sample = app.add_subcommand("sample", "Draw array normal data and write a tensor file");
  sample->add_option("--dims", dims_raw, "Mode dimensions, e.g. 4,4,4")->required();
  sample->add_option("--n", n, "Sample count (trailing mode)")->check(CLI::PositiveNumber);
  sample->add_option("--seed", seed, "RNG seed");
  sample->add_option("--truth", truth_path, "Covariance JSON to sample under (default identity)");
  sample->add_option("--out", out_path, "Output .tnsr.json path")->required();

  std::string method;
  std::string in_path;
  std::int64_t iters = 1250;
  std::int64_t burnin = 250;
  std::int64_t mwte_t = 3;
  double tol = 1e-10;
  std::int64_t max_iter = 1000;
  std::string est_out;
  CLI::App* estimate = app.add_subcommand("estimate", "Fit one estimator to a tensor file");
  estimate->add_option("--method", method, "One of: mle, umree, stein_umree, mwte")
      ->required()
      ->check(CLI::IsMember({"mle", "umree", "stein_umree", "mwte"}));
  estimate->add_option("--in", in_path, "Input .tnsr.json path")->required();
  estimate->add_option("--iters", iters, "Total Gibbs iterations")->check(CLI::PositiveNumber);
  estimate->add_option("--burnin", burnin, "Discarded initial iterations")
      ->check(CLI::NonNegativeNumber);
  estimate->add_option("--seed", seed, "RNG seed");
  estimate->add_option("--mwte-T", mwte_t, "Rotation rounds for mwte")->check(CLI::PositiveNumber);
  estimate->add_option("--tol", tol, "Convergence tolerance (mle, stein_umree)");
  estimate->add_option("--max-iter", max_iter, "Sweep limit (mle, stein_umree)")
      ->check(CLI::PositiveNumber);
  estimate->add_option("--out", est_out, "Output estimate JSON path")->required();

  std::string config_path;
  std::string sim_out;
  std::string aggregate_path;
  std::string json_path;
  CLI::App* simulate = app.add_subcommand("simulate", "Run the Monte Carlo risk study");
  simulate->add_option("--config", config_path, "SimConfig JSON path")->required();
  simulate->add_option("--out", sim_out, "Per-replicate CSV path")->required();
  simulate->add_option("--aggregate-out", aggregate_path, "Aggregate CSV path");
  simulate->add_option("--json-out", json_path, "Full report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (sample->parsed()) return run_sample(dims_raw, n, seed, truth_path, out_path);
    if (estimate->parsed())
      return run_estimate(method, in_path, iters, burnin, seed, mwte_t, tol, max_iter, est_out);
    return run_simulate(config_path, sim_out, aggregate_path, json_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace arraynormal
