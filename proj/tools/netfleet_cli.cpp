// netfleet: command-line front end for runs, sweeps, lemma audits and
// step-size certificates.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "netfleet/harness.hpp"

namespace {

using namespace netfleet;

struct Flags {
  std::string config_file;
  KeyValues overrides;
};

void add_run_flags(CLI::App* app, Flags& flags) {
  app->add_option("--config", flags.config_file, "key=value config file; flags override its keys");
  const std::pair<const char*, const char*> keys[] = {
      {"algo", "netfleet | dsgd | gtsgd | ldsgd"},
      {"workers", "number of workers m"},
      {"rounds", "outer (communication) rounds S"},
      {"local-steps", "local steps per outer round K"},
      {"eta", "step size, or 'auto' for the linear-speedup schedule"},
      {"c-eta", "schedule constant for --eta auto"},
      {"topology", "er:<p_c> | ring | complete | path"},
      {"objective", "quad:p=..,h=..,sigma=.. | logreg:<path>,partition=<iid|shards:k>"},
      {"batch", "minibatch size"},
      {"seed", "master seed"},
      {"metric-every", "record a trace row every n-th inner step"},
      {"eta-decay-every", "halve eta every n outer rounds (0 = off)"},
      {"out", "output directory"},
      {"threads", "worker threads"},
      {"wall-clock", "record elapsed_ms in the trace (true/false)"},
  };
  for (const auto& [key, help] : keys) {
    const std::string name = key;
    app->add_option_function<std::string>(
        "--" + name, [&flags, name](const std::string& v) { flags.overrides[name] = v; }, help);
  }
}

KeyValues merged_keys(const Flags& flags) {
  KeyValues keys;
  if (!flags.config_file.empty()) {
    std::ifstream in(flags.config_file);
    if (!in) throw std::runtime_error("cannot read config file '" + flags.config_file + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    keys = parse_key_values(buf.str());
  }
  for (const auto& [k, v] : flags.overrides) keys[k] = v;
  return keys;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized federated learning simulator (NET-FLEET and baselines)"};
  app.require_subcommand(1);

  Flags run_flags;
  auto* run = app.add_subcommand("run", "run one experiment and write trace.csv and summary.txt");
  add_run_flags(run, run_flags);

  Flags sweep_flags;
  std::string axis, values;
  int seeds = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "sweep one axis over several seeds");
  add_run_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--sweep-axis", axis, "workers | local_rounds | connectivity | eta");
  sweep_cmd->add_option("--sweep-values", values, "comma-separated axis values");
  sweep_cmd->add_option("--seeds", seeds, "seeds per cell")->check(CLI::PositiveNumber);

  Flags audit_flags;
  std::string audit_out;
  auto* audit = app.add_subcommand("audit", "run NET-FLEET with a noiseless oracle and audit every round");
  add_run_flags(audit, audit_flags);
  audit->add_option("--report", audit_out, "write the audit report to this file instead of stdout");

  double cert_L = 1.0, cert_lambda = 0.0;
  int cert_m = 1, cert_K = 1;
  auto* cert = app.add_subcommand("certificate", "evaluate the eight-term step-size bound");
  cert->add_option("--L", cert_L, "smoothness constant")->required();
  cert->add_option("--lambda", cert_lambda, "second-largest eigenvalue magnitude of W")->required();
  cert->add_option("--workers", cert_m, "number of workers")->required();
  cert->add_option("--local-steps", cert_K, "local steps K")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto config = RunConfig::from_keys(merged_keys(run_flags));
      const auto result = run_experiment(config);
      std::cout << result.summary.to_text();
      if (result.summary.eta_warn)
        std::cerr << fmt::format("warning: eta={} exceeds the convergence certificate eta_max={} ({})\n",
                                 result.summary.eta, result.summary.eta_max, result.summary.argmin_term);
    } else if (sweep_cmd->parsed()) {
      auto keys = merged_keys(sweep_flags);
      if (axis.empty() && keys.count("sweep-axis")) axis = keys["sweep-axis"];
      if (values.empty() && keys.count("sweep-values")) values = keys["sweep-values"];
      if (keys.count("seeds") && sweep_cmd->count("--seeds") == 0) seeds = std::stoi(keys["seeds"]);
      if (axis.empty() || values.empty()) throw std::invalid_argument("sweep needs --sweep-axis and --sweep-values");
      SweepGrid grid;
      grid.base = RunConfig::from_keys(keys);
      grid.axis = SweepGrid::parse_axis(axis);
      grid.values = SweepGrid::parse_values(values);
      grid.seeds = seeds;
      const auto table = sweep(grid);
      if (!grid.base.out.empty()) {
        write_text_file(grid.base.out + "/sweep_rows.csv", table.rows_csv());
        write_text_file(grid.base.out + "/sweep_summary.csv", table.aggregates_csv());
      }
      std::cout << table.aggregates_csv();
    } else if (audit->parsed()) {
      const auto config = RunConfig::from_keys(merged_keys(audit_flags));
      config.validate();
      if (!config.eta) throw std::invalid_argument("audit needs an explicit --eta");
      const auto topo = build_topology(TopologySpec::parse(config.topology), config.workers, config.seed);
      const auto W = consensus_matrix(topo);
      const auto objset = build_objective_set(ObjectiveSpec::parse(config.objective), config.workers, config.seed);
      LemmaAuditor auditor(W, objset);
      TrainingOptions opts;
      opts.algo = Algorithm::netfleet;
      opts.S = config.rounds;
      opts.K = config.local_steps;
      opts.eta = *config.eta;
      opts.batch_size = config.batch;
      opts.seed = config.seed;
      opts.metric_every = config.metric_every;
      opts.eta_decay_every = config.eta_decay_every;
      opts.threads = config.threads;
      opts.on_round = [&](const RoundHistory& r) { auditor.add(r); };
      run_training(opts, objset, W);
      const std::string text = auditor.report().to_text();
      if (audit_out.empty()) std::cout << text;
      else write_text_file(audit_out, text);
      return auditor.report().passed() ? 0 : 2;
    } else if (cert->parsed()) {
      const auto c = step_size_certificate(cert_L, cert_lambda, cert_m, cert_K);
      for (std::size_t i = 0; i < c.terms.size(); ++i)
        std::cout << fmt::format("{}={}\n", StepSizeCertificate::names[i], c.terms[i]);
      std::cout << fmt::format("eta_max={}\nargmin_term={}\n", c.eta_max, c.argmin);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
