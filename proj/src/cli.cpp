#include "peerfx/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "peerfx/dgp.hpp"
#include "peerfx/error.hpp"
#include "peerfx/estimator.hpp"
#include "peerfx/io.hpp"
#include "peerfx/montecarlo.hpp"

namespace peerfx {

namespace {

const std::vector<std::string> kPhiNames = {"zero", "linear", "exp3", "sine3"};

std::string fixed(double v, int width = 11) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%*.4f", width, v);
  return buf;
}

std::string full(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << text;
  if (!f) throw DataError("write failed for '" + path + "'");
}

struct EstimateOptions {
  std::string edges;
  std::string nodes;
  std::string mode = "E";
  int steps = 4;
  std::string model = "full";
  bool second_moments = false;
  bool hausman = false;
  bool diagnostics = false;
  std::string out;
};

int cmd_estimate(const EstimateOptions& o, std::ostream& out) {
  const Dataset d = load_dataset(o.edges, o.nodes);
  if (!has_outcomes(d)) throw DataError(o.nodes + ": estimation needs a finite y column");
  const ModelSpec mspec{o.model == "full" ? Model::full : Model::baseline};
  const InstrumentSpec ispec{o.mode == "E" ? InstrumentMode::E : InstrumentMode::X, o.steps, o.second_moments};

  std::ostringstream machine;
  std::optional<Diagnostics> diag;
  if (o.diagnostics) diag = diagnostics(d, mspec, ispec);

  const FitResult fit = tsls_fit(d, mspec, ispec);
  const TStatistics ts = t_statistics(fit, Eigen::VectorXd::Zero(fit.theta.size()));

  out << fit.estimator << "  model=" << o.model << "  groups=" << fit.groups << "  observations=" << fit.observations
      << "  instruments=" << fit.instrument_count << '\n';
  out << "instruments:";
  for (const auto& l : fit.instrument_labels) out << ' ' << l;
  out << "\n\n";
  out << "coef          estimate    std.err     t-stat    p-value\n";
  machine << "estimator=" << fit.estimator << '\n' << "model=" << o.model << '\n'
          << "groups=" << fit.groups << '\n' << "observations=" << fit.observations << '\n'
          << "instruments=" << fit.instrument_count << '\n';
  for (std::size_t k = 0; k < fit.labels.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    std::string label = fit.labels[k];
    label.resize(8, ' ');
    out << label << fixed(fit.theta(i)) << fixed(fit.std_errors(i)) << fixed(ts.t(i)) << fixed(ts.p_values(i))
        << '\n';
    const std::string key = "coef." + fit.labels[k] + ".";
    machine << key << "estimate=" << full(fit.theta(i)) << '\n'
            << key << "std_error=" << full(fit.std_errors(i)) << '\n'
            << key << "t=" << full(ts.t(i)) << '\n'
            << key << "p=" << full(ts.p_values(i)) << '\n';
  }

  if (o.hausman) {
    InstrumentSpec e_spec = ispec;
    InstrumentSpec x_spec{InstrumentMode::X, o.steps, false};
    e_spec.mode = InstrumentMode::E;
    const FitResult fit_e = ispec.mode == InstrumentMode::E ? fit : tsls_fit(d, mspec, e_spec);
    const FitResult fit_x = ispec.mode == InstrumentMode::X ? fit : tsls_fit(d, mspec, x_spec);
    const TestResult test = hausman_test(fit_e, fit_x);
    out << "\nHausman test (TSLS-X vs TSLS-E on " << (mspec.model == Model::full ? "delta, gamma" : "gamma")
        << "): statistic=" << fixed(test.statistic, 0) << "  dof=" << test.dof << "  p-value="
        << fixed(test.p_value, 0) << '\n';
    machine << "hausman.statistic=" << full(test.statistic) << '\n'
            << "hausman.dof=" << test.dof << '\n'
            << "hausman.p=" << full(test.p_value) << '\n';
  }

  if (diag) {
    out << "\nDiagnostics\n"
        << "  min eigenvalue sum Z'Z/n        " << fixed(diag->min_eig_zz) << '\n'
        << "  min eigenvalue sum Z'ee'Z/n     " << fixed(diag->min_eig_zeez) << '\n'
        << "  min singular value sum Z'X/n    " << fixed(diag->min_sv_zx) << '\n'
        << "  max n_g^2/n                     " << fixed(diag->max_cluster_ratio) << '\n';
    for (const auto& w : diag->warnings) out << "  warning: " << w << '\n';
    machine << "diagnostics.min_eig_zz=" << full(diag->min_eig_zz) << '\n'
            << "diagnostics.min_eig_zeez=" << full(diag->min_eig_zeez) << '\n'
            << "diagnostics.min_sv_zx=" << full(diag->min_sv_zx) << '\n'
            << "diagnostics.max_cluster_ratio=" << full(diag->max_cluster_ratio) << '\n'
            << "diagnostics.cond_zz=" << full(diag->cond_zz) << '\n'
            << "diagnostics.cond_zx=" << full(diag->cond_zx) << '\n';
  }
  if (!o.out.empty()) write_text(o.out, machine.str());
  return kExitOk;
}

struct SimulateOptions {
  std::size_t groups = 250;
  std::size_t size = 25;
  std::string phi = "zero";
  std::uint64_t seed = 1;
  std::uint64_t replication = 0;
  StructuralParams params;
  std::string prefix;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  DesignConfig design;
  design.groups = o.groups;
  design.group_size = o.size;
  design.params = o.params;
  design.coupling.phi = parse_phi(o.phi);
  const Dataset d = simulate_dataset(design, o.seed, o.replication);
  const std::string edges = o.prefix + "_edges.csv";
  const std::string nodes = o.prefix + "_nodes.csv";
  write_dataset(d, std::filesystem::path(edges), std::filesystem::path(nodes));
  out << "wrote " << edges << " and " << nodes << " (" << d.group_count() << " groups, " << d.observation_count()
      << " agents)\n";
  return kExitOk;
}

struct MonteCarloOptions {
  std::string config;
  std::size_t groups = 0;
  std::size_t size = 0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  int steps = 0;
  double level = 0.0;
  std::vector<std::string> phis;
  bool hausman = false;
  std::string out;
};

int cmd_montecarlo(const MonteCarloOptions& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  if (!o.config.empty()) cfg = load_run_config(o.config);
  auto& mc = cfg.mc;
  if (sub.count("--groups")) mc.design.groups = o.groups;
  if (sub.count("--size")) mc.design.group_size = o.size;
  if (sub.count("--reps")) mc.replications = o.reps;
  if (sub.count("--seed")) mc.seed = o.seed;
  if (sub.count("--workers")) mc.workers = o.workers;
  if (sub.count("--level")) mc.level = o.level;
  if (sub.count("--hausman")) mc.hausman = true;
  if (sub.count("--steps")) {
    for (auto& e : mc.estimators) e.max_step = o.steps;
  }
  if (sub.count("--phi")) {
    cfg.phis.clear();
    for (const auto& p : o.phis) cfg.phis.push_back(parse_phi(p));
  }

  std::vector<McReport> reports;
  for (Phi phi : cfg.phis) {
    McConfig run = mc;
    run.design.coupling.phi = phi;
    reports.push_back(run_design(run));
    err << to_string(phi) << ": " << run.replications << " replications in " << fixed(reports.back().seconds, 0)
        << " s\n";
  }
  out << format_table(reports);
  if (!o.out.empty()) write_text(o.out, format_machine(reports));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Peer-effects estimation with leave-own-out network instruments"};
  app.require_subcommand(1);

  EstimateOptions est;
  auto* estimate = app.add_subcommand("estimate", "Fit the linear-in-means model by pooled 2SLS");
  estimate->add_option("--edges", est.edges, "Edge list CSV (group_id,i,j)")->required();
  estimate->add_option("--nodes", est.nodes, "Node CSV (group_id,node_id,x,y)")->required();
  estimate->add_option("--mode", est.mode, "Instrument set: E (leave-own-out) or X (powers of H)")
      ->check(CLI::IsMember({"E", "X"}));
  estimate->add_option("--steps", est.steps, "Number of network steps S")->check(CLI::PositiveNumber);
  estimate->add_option("--model", est.model, "full or baseline")->check(CLI::IsMember({"full", "baseline"}));
  estimate->add_flag("--second-moments", est.second_moments, "Add second-moment instruments (mode E)");
  estimate->add_flag("--hausman", est.hausman, "Durbin-Wu-Hausman test of TSLS-X against TSLS-E");
  estimate->add_flag("--diagnostics", est.diagnostics, "Report regularity diagnostics");
  estimate->add_option("--out", est.out, "Write machine-readable key=value output");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate one dataset from the endogenous-network design");
  simulate->add_option("--groups", sim.groups, "Number of groups")->check(CLI::PositiveNumber);
  simulate->add_option("--size", sim.size, "Agents per group")->check(CLI::Range(2, 1000000));
  simulate->add_option("--phi", sim.phi, "Error coupling")->check(CLI::IsMember(kPhiNames));
  simulate->add_option("--seed", sim.seed, "Root seed");
  simulate->add_option("--replication", sim.replication, "Replication index within the seed");
  simulate->add_option("--alpha", sim.params.alpha);
  simulate->add_option("--delta", sim.params.delta);
  simulate->add_option("--beta", sim.params.beta);
  simulate->add_option("--gamma", sim.params.gamma);
  simulate->add_option("--out-prefix", sim.prefix, "Writes <prefix>_edges.csv and <prefix>_nodes.csv")->required();

  MonteCarloOptions mco;
  auto* montecarlo = app.add_subcommand("montecarlo", "Run the replication study and print the summary table");
  montecarlo->add_option("--config", mco.config, "JSON run configuration");
  montecarlo->add_option("--groups", mco.groups)->check(CLI::PositiveNumber);
  montecarlo->add_option("--size", mco.size)->check(CLI::Range(2, 1000000));
  montecarlo->add_option("--reps", mco.reps, "Replications per panel")->check(CLI::PositiveNumber);
  montecarlo->add_option("--seed", mco.seed);
  montecarlo->add_option("--workers", mco.workers)->check(CLI::PositiveNumber);
  montecarlo->add_option("--steps", mco.steps)->check(CLI::PositiveNumber);
  montecarlo->add_option("--level", mco.level)->check(CLI::Range(0.0, 1.0));
  montecarlo->add_option("--phi", mco.phis, "Panels to run (repeatable)")->check(CLI::IsMember(kPhiNames));
  montecarlo->add_flag("--hausman", mco.hausman, "Also report the Hausman rejection rate");
  montecarlo->add_option("--out", mco.out, "Write machine-readable key=value report");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*estimate) return cmd_estimate(est, out);
    if (*simulate) return cmd_simulate(sim, out);
    if (*montecarlo) return cmd_montecarlo(mco, *montecarlo, out, err);
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace peerfx
