#include "arraynormal/risk.hpp"

#include <atomic>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "arraynormal/io.hpp"

namespace arraynormal {

using nlohmann::json;

SimConfig sim_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  SimConfig cfg;
  if (j.contains("dims")) {
    const auto& dims = j.at("dims");
    if (!dims.is_array() || dims.empty())
      throw std::invalid_argument("sim config: dims must be a nonempty array");
    cfg.dims_list.clear();
    if (dims[0].is_array()) {
      for (const auto& d : dims) cfg.dims_list.push_back(d.get<std::vector<std::int64_t>>());
    } else {
      cfg.dims_list.push_back(dims.get<std::vector<std::int64_t>>());
    }
  }
  if (j.contains("n")) cfg.n = j.at("n").get<std::int64_t>();
  if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<std::int64_t>();
  if (j.contains("estimators"))
    cfg.estimators = j.at("estimators").get<std::vector<std::string>>();
  if (j.contains("mwte_T")) cfg.mwte_t = j.at("mwte_T").get<std::int64_t>();
  if (j.contains("gibbs")) {
    const auto& g = j.at("gibbs");
    if (g.contains("total_iters")) cfg.gibbs_total_iters = g.at("total_iters").get<std::int64_t>();
    if (g.contains("burn_in")) cfg.gibbs_burn_in = g.at("burn_in").get<std::int64_t>();
  }
  if (j.contains("truth")) cfg.truth = covariance_from_json(j.at("truth").dump());
  if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("parallelism")) cfg.parallelism = j.at("parallelism").get<std::int64_t>();
  return cfg;
}

namespace {

void validate_config(const SimConfig& cfg) {
  if (cfg.dims_list.empty()) throw std::invalid_argument("risk study: need at least one dims tuple");
  for (const auto& dims : cfg.dims_list) Shape check(dims);
  if (cfg.replicates < 1) throw std::invalid_argument("risk study: replicates must be >= 1");
  if (cfg.estimators.empty()) throw std::invalid_argument("risk study: estimator set is empty");
  if (cfg.n < 1) throw std::invalid_argument("risk study: n must be >= 1");
  if (cfg.mwte_t < 1) throw std::invalid_argument("risk study: mwte_T must be >= 1");
  if (cfg.parallelism < 1) throw std::invalid_argument("risk study: parallelism must be >= 1");
  if (cfg.truth) {
    if (cfg.dims_list.size() != 1 || cfg.truth->dims() != cfg.dims_list.front())
      throw std::invalid_argument(
          "risk study: an explicit truth requires a single matching dims tuple");
  }
}

std::map<std::string, EstimatorFn> builtin_estimators(const SimConfig& cfg) {
  std::map<std::string, EstimatorFn> table;
  table["mle"] = [](const Tensor& x, const RngStream&) { return mle_flipflop(x); };
  const std::int64_t total = cfg.gibbs_total_iters;
  const std::int64_t burn = cfg.gibbs_burn_in;
  table["umree"] = [total, burn](const Tensor& x, const RngStream& rng) {
    GibbsConfig gc;
    gc.total_iters = total;
    gc.burn_in = burn;
    gc.rng = rng;
    return umree(gibbs_chain(x, gc));
  };
  const std::int64_t t_rounds = cfg.mwte_t;
  table["mwte"] = [total, burn, t_rounds](const Tensor& x, const RngStream& rng) {
    GibbsConfig gc;
    gc.total_iters = total;
    gc.burn_in = burn;
    return mwte(x, t_rounds, gc, rng);
  };
  return table;
}

struct Task {
  std::size_t config_idx;
  std::int64_t replicate;
};

}  // namespace

RiskReport run_risk_study_with(const SimConfig& cfg,
                               const std::map<std::string, EstimatorFn>& estimators) {
  validate_config(cfg);
  for (const std::string& name : cfg.estimators)
    if (estimators.find(name) == estimators.end())
      throw std::invalid_argument("risk study: unknown estimator '" + name + "'");

  RiskReport report;
  report.configs.resize(cfg.dims_list.size());
  for (std::size_t c = 0; c < cfg.dims_list.size(); ++c) {
    report.configs[c].dims = cfg.dims_list[c];
    report.configs[c].n = cfg.n;
    report.configs[c].replicates.resize(static_cast<std::size_t>(cfg.replicates));
  }

  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cfg.dims_list.size(); ++c)
    for (std::int64_t r = 0; r < cfg.replicates; ++r) tasks.push_back({c, r});

  const auto run_task = [&](const Task& task) {
    const std::vector<std::int64_t>& dims = cfg.dims_list[task.config_idx];
    const std::uint64_t stream_id =
        (static_cast<std::uint64_t>(task.config_idx) << 32) |
        static_cast<std::uint64_t>(task.replicate);
    const RngStream rep_rng(cfg.master_seed, stream_id);
    const SeparableCovariance truth =
        cfg.truth ? *cfg.truth : SeparableCovariance::identity(dims);

    ReplicateOutcome outcome;
    outcome.replicate = task.replicate;
    outcome.stream_id = stream_id;

    RngStream data_rng = rep_rng.substream(0);
    const Tensor x = sample_array_normal(truth, cfg.n, data_rng);

    std::uint64_t estimator_tag = 1;
    for (const std::string& name : cfg.estimators) {
      const RngStream est_rng = rep_rng.substream(estimator_tag++);
      try {
        const EstimatorOutput est = estimators.at(name)(x, est_rng);
        outcome.losses[name] = multiway_stein_loss(truth, est.estimate);
        outcome.warnings.insert(outcome.warnings.end(), est.warnings.begin(),
                                est.warnings.end());
      } catch (const std::exception& err) {
        outcome.errors[name] = err.what();
      }
    }
    report.configs[task.config_idx].replicates[static_cast<std::size_t>(task.replicate)] =
        std::move(outcome);
  };

  const std::int64_t workers =
      std::min<std::int64_t>(cfg.parallelism, static_cast<std::int64_t>(tasks.size()));
  if (workers <= 1) {
    for (const Task& task : tasks) run_task(task);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (std::int64_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          run_task(tasks[i]);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  // Deterministic fold over replicate order.
  for (ConfigReport& config : report.configs) {
    std::set<std::string> warning_set;
    for (const ReplicateOutcome& rep : config.replicates)
      warning_set.insert(rep.warnings.begin(), rep.warnings.end());
    for (const std::string& name : cfg.estimators) {
      EstimatorSummary summary;
      summary.estimator = name;
      double sum = 0.0;
      std::int64_t successes = 0;
      for (const ReplicateOutcome& rep : config.replicates) {
        const auto it = rep.losses.find(name);
        if (it != rep.losses.end()) {
          sum += it->second;
          ++successes;
        } else {
          ++summary.failures;
        }
      }
      summary.risk = successes > 0 ? sum / static_cast<double>(successes) : 0.0;
      config.summaries.push_back(summary);
    }
    const auto mle_summary = [&]() -> const EstimatorSummary* {
      for (const EstimatorSummary& s : config.summaries)
        if (s.estimator == "mle") return &s;
      return nullptr;
    }();
    if (mle_summary != nullptr && mle_summary->risk > 0.0) {
      for (EstimatorSummary& s : config.summaries) {
        s.ratio_vs_mle = s.risk / mle_summary->risk;
        // Dispersion of the per-replicate loss ratios (pairs where both
        // estimators succeeded).
        std::vector<double> ratios;
        for (const ReplicateOutcome& rep : config.replicates) {
          const auto est = rep.losses.find(s.estimator);
          const auto mle = rep.losses.find("mle");
          if (est != rep.losses.end() && mle != rep.losses.end() && mle->second > 0.0)
            ratios.push_back(est->second / mle->second);
        }
        if (ratios.size() >= 2) {
          double mean = 0.0;
          for (double r : ratios) mean += r;
          mean /= static_cast<double>(ratios.size());
          double ss = 0.0;
          for (double r : ratios) ss += (r - mean) * (r - mean);
          s.ratio_sd = std::sqrt(ss / static_cast<double>(ratios.size() - 1));
        } else if (ratios.size() == 1) {
          s.ratio_sd = 0.0;
        }
      }
    }
    config.warnings.assign(warning_set.begin(), warning_set.end());
  }
  return report;
}

RiskReport run_risk_study(const SimConfig& cfg) {
  return run_risk_study_with(cfg, builtin_estimators(cfg));
}

std::string report_to_replicate_csv(const RiskReport& report) {
  std::ostringstream out;
  out << "dims,n,replicate,estimator,loss,seed\n";
  for (const ConfigReport& config : report.configs) {
    const std::string dims = format_dims(config.dims);
    for (const ReplicateOutcome& rep : config.replicates) {
      for (const EstimatorSummary& summary : config.summaries) {
        const auto it = rep.losses.find(summary.estimator);
        out << dims << ',' << config.n << ',' << rep.replicate << ',' << summary.estimator
            << ',' << (it != rep.losses.end() ? format_double(it->second) : std::string())
            << ',' << rep.stream_id << '\n';
      }
    }
  }
  return out.str();
}

std::string report_to_aggregate_csv(const RiskReport& report) {
  std::ostringstream out;
  out << "dims,estimator,risk,ratio_vs_mle,ratio_sd,failures\n";
  for (const ConfigReport& config : report.configs) {
    const std::string dims = format_dims(config.dims);
    for (const EstimatorSummary& s : config.summaries) {
      out << dims << ',' << s.estimator << ',' << format_double(s.risk) << ','
          << (s.ratio_vs_mle ? format_double(*s.ratio_vs_mle) : std::string()) << ','
          << (s.ratio_sd ? format_double(*s.ratio_sd) : std::string()) << ',' << s.failures
          << '\n';
    }
  }
  return out.str();
}

std::string report_to_json(const RiskReport& report) {
  json configs = json::array();
  for (const ConfigReport& config : report.configs) {
    json jc;
    jc["dims"] = config.dims;
    jc["n"] = config.n;
    json reps = json::array();
    for (const ReplicateOutcome& rep : config.replicates) {
      json jr;
      jr["replicate"] = rep.replicate;
      jr["seed"] = rep.stream_id;
      jr["losses"] = rep.losses;
      jr["errors"] = rep.errors;
      reps.push_back(std::move(jr));
    }
    jc["replicates"] = std::move(reps);
    json sums = json::array();
    for (const EstimatorSummary& s : config.summaries) {
      json js;
      js["estimator"] = s.estimator;
      js["risk"] = s.risk;
      if (s.ratio_vs_mle) js["ratio_vs_mle"] = *s.ratio_vs_mle;
      if (s.ratio_sd) js["ratio_sd"] = *s.ratio_sd;
      js["failures"] = s.failures;
      sums.push_back(std::move(js));
    }
    jc["summaries"] = std::move(sums);
    configs.push_back(std::move(jc));
  }
  json root;
  root["configs"] = std::move(configs);
  return root.dump();
}

std::vector<ReplicateCsvRow> parse_replicate_csv(const std::string& text) {
  std::vector<ReplicateCsvRow> rows;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line != "dims,n,replicate,estimator,loss,seed")
        throw std::invalid_argument("replicate CSV: unexpected header '" + line + "'");
      continue;
    }
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t next = line.find(',', pos);
      fields.push_back(line.substr(pos, next == std::string::npos ? next : next - pos));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (fields.size() != 6)
      throw std::invalid_argument("replicate CSV: expected 6 fields, got line '" + line + "'");
    ReplicateCsvRow row;
    row.dims = parse_dims(fields[0]);
    row.n = std::stoll(fields[1]);
    row.replicate = std::stoll(fields[2]);
    row.estimator = fields[3];
    if (!fields[4].empty()) row.loss = parse_double(fields[4]);
    row.seed = std::stoull(fields[5]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace arraynormal
