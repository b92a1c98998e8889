#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arraynormal/covariance.hpp"
#include "arraynormal/estimators.hpp"

namespace arraynormal {

// Monte Carlo risk study configuration. `dims_list` holds one or more
// dimension tuples (p_1..p_K); every (tuple, replicate) pair gets its own
// deterministic stream id ((tuple index << 32) | replicate), so replicates
// can run on any number of workers with identical results.
struct SimConfig {
  std::vector<std::vector<std::int64_t>> dims_list{{4, 4, 4}};
  std::int64_t n = 1;
  std::int64_t replicates = 100;
  std::vector<std::string> estimators{"mle", "umree", "mwte"};
  std::int64_t mwte_t = 3;
  std::int64_t gibbs_total_iters = 1250;
  std::int64_t gibbs_burn_in = 250;
  // Data-generating parameter; identity factors with sigma^2 = 1 when
  // absent. An explicit truth requires a single matching dims tuple.
  std::optional<SeparableCovariance> truth;
  std::uint64_t master_seed = 0;
  std::int64_t parallelism = 1;
};

SimConfig sim_config_from_json(const std::string& text);

struct ReplicateOutcome {
  std::int64_t replicate = 0;
  std::uint64_t stream_id = 0;
  // One entry per requested estimator: the realized loss, or an error
  // message when the estimator failed on this draw.
  std::map<std::string, double> losses;
  std::map<std::string, std::string> errors;
  std::vector<std::string> warnings;
};

struct EstimatorSummary {
  std::string estimator;
  double risk = 0.0;                       // mean loss over successes
  std::optional<double> ratio_vs_mle;      // risk / risk(mle)
  std::optional<double> ratio_sd;          // sd of per-replicate loss ratios
  std::int64_t failures = 0;
};

struct ConfigReport {
  std::vector<std::int64_t> dims;
  std::int64_t n = 0;
  std::vector<ReplicateOutcome> replicates;
  std::vector<EstimatorSummary> summaries;  // ordered as requested
  std::vector<std::string> warnings;        // deduplicated estimator warnings
};

struct RiskReport {
  std::vector<ConfigReport> configs;
};

// Signature of a pluggable estimator: data in, fitted output out. Used by
// tests to inject oracles (e.g. an estimator that returns the truth).
using EstimatorFn = std::function<EstimatorOutput(const Tensor&, const RngStream&)>;

// Runs the study: per replicate, one data draw shared by all estimators
// (paired comparison), losses under multiway Stein's loss against the
// truth, aggregation ordered by replicate index. Deterministic given cfg,
// independent of the worker count.
RiskReport run_risk_study(const SimConfig& cfg);

// Same, with a custom estimator table (name -> function) replacing the
// built-in set.
RiskReport run_risk_study_with(const SimConfig& cfg,
                               const std::map<std::string, EstimatorFn>& estimators);

// Per-replicate rows: dims,n,replicate,estimator,loss,seed. Failed
// replicates leave the loss field empty. Floats use the shortest exact
// decimal form.
std::string report_to_replicate_csv(const RiskReport& report);

// Aggregate rows: dims,estimator,risk,ratio_vs_mle,ratio_sd,failures.
std::string report_to_aggregate_csv(const RiskReport& report);

// Full report as JSON (per-replicate losses plus aggregates).
std::string report_to_json(const RiskReport& report);

// Parses a per-replicate CSV back into (dims, n, replicate, estimator,
// loss, seed) tuples; used by the round-trip contract tests.
struct ReplicateCsvRow {
  std::vector<std::int64_t> dims;
  std::int64_t n = 0;
  std::int64_t replicate = 0;
  std::string estimator;
  std::optional<double> loss;
  std::uint64_t seed = 0;
};
std::vector<ReplicateCsvRow> parse_replicate_csv(const std::string& text);

// CLI entry point (subcommands: sample, estimate, simulate). Returns 0 on
// success, 1 on a usage error, 2 on a numerical or input failure. The
// ARRAYNORMAL_SEED environment variable overrides the simulate master seed.
int cli_main(int argc, const char* const* argv);

}  // namespace arraynormal
