#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "mixlab/commutator.hpp"
#include "mixlab/config.hpp"
#include "mixlab/experiments.hpp"
#include "mixlab/flows.hpp"
#include "mixlab/kernels.hpp"
#include "mixlab/norms.hpp"
#include "mixlab/report.hpp"

using namespace mixlab;

namespace {

constexpr int kCheckFailed = 1;
constexpr int kConfigError = 2;

Config load_or_empty(const std::string& path) { return path.empty() ? Config{} : Config::load(path); }

int finish(const ExperimentResult& r, const std::string& out) {
  write_outputs(r, out);
  const auto failed = r.report.failed_checks();
  std::cout << r.report.experiment() << ": wrote " << out << "\n";
  if (failed.empty()) {
    std::cout << "all checks passed\n";
    return 0;
  }
  for (const auto& f : failed) std::cout << "FAILED check: " << f << "\n";
  return kCheckFailed;
}

TorusGrid grid_from(const Config& c) {
  return TorusGrid(static_cast<int>(c.get_int("grid.dim", 2)), static_cast<int>(c.get_int("grid.n", 128)),
                   c.get_double("grid.period", 1.0));
}

FlowSpec flow_from(const Config& c) {
  FlowSpec f;
  f.kind = parse_flow_kind(c.get_string("flow.kind", flow_kind_name(f.kind)));
  f.amplitude = c.get_double("flow.amplitude", f.amplitude);
  f.switch_period = c.get_double("flow.switch_period", f.switch_period);
  return f;
}

ScalarField data_from(const Config& c, const TorusGrid& g, std::uint64_t seed) {
  const std::string input = c.get_string("data.input", "");
  if (!input.empty()) return read_mixf(input);
  return random_band_limited(g, static_cast<int>(c.get_int("data.kmax", 4)), seed);
}

Mollifier mollifier_from(const Config& c) {
  const std::string m = c.get_string("mollifier", "cutoff");
  if (m == "cutoff") return make_frequency_cutoff();
  if (m == "gaussian") return make_gaussian();
  throw ConfigError("config: mollifier must be cutoff or gaussian");
}

int simulate(const std::string& cfg_path, const std::string& out, std::uint64_t seed) {
  const Config c = load_or_empty(cfg_path);
  const TorusGrid g = grid_from(c);
  const VelocityField u = make_flow(flow_from(c), g);
  SolverConfig sc;
  sc.dt = c.get_double("dt", 1e-3);
  sc.nu = c.get_double("nu", 0.0);
  sc.record_every = static_cast<int>(c.get_int("record_every", 10));
  const double q = c.get_double("exponents.q", 4.0);
  const double r = c.get_double("exponents.r", 2.0);
  sc.grad_p = c.get_double("exponents.p", 4.0);
  sc.tracked_p = {2.0, q};
  const double T = c.get_double("T", 1.0);
  const long dump_every = c.get_int("dump_every", 0);
  const ScalarField rho0 = data_from(c, g, seed);
  c.reject_unused();

  const auto tr = solve(rho0, u, T, sc);
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out) / "fields");
  std::ofstream os(fs::path(out) / "trajectory.csv");
  os << "# config_digest " << digest_hex("simulate\nseed=" + std::to_string(seed) + "\n" + c.canonical()) << "\n";
  os << "# W^{-1," << fmt_double(r) << "} norm: " << (r == 2.0 ? "exact" : "surrogate") << "\n";
  os << "time,l2,lq,dual,accumulator\n";
  SobolevDualSpec ds;
  ds.r = r;
  ds.mode = r == 2.0 ? DualMode::exact_r2 : DualMode::surrogate;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    os << fmt_double(tr.times[k]) << "," << fmt_double(tr.norms[k][0]) << "," << fmt_double(tr.norms[k][1]) << ","
       << fmt_double(sobolev_dual_norm(tr.states[k], ds)) << "," << fmt_double(tr.accumulator[k]) << "\n";
    if (dump_every > 0 && k % static_cast<std::size_t>(dump_every) == 0)
      write_mixf((fs::path(out) / "fields" / ("rho_" + std::to_string(k) + ".mixf")).string(), tr.states[k]);
  }
  write_mixf((fs::path(out) / "fields" / "rho_final.mixf").string(), tr.states.back());
  for (const auto& n : tr.notes) std::cout << "note: " << n << "\n";
  std::cout << "simulate: " << tr.times.size() << " records, wrote " << out << "\n";
  return 0;
}

int commutator_scan_cmd(const std::string& cfg_path, const std::string& out, std::uint64_t seed) {
  const Config c = load_or_empty(cfg_path);
  const TorusGrid g = grid_from(c);
  const auto u = make_flow(flow_from(c), g).phase(0);
  const ScalarField rho = data_from(c, g, seed);
  const Mollifier phi = mollifier_from(c);
  const double lo = c.get_double("delta.lo", 1e-3);
  const double hi = c.get_double("delta.hi", 1.0);
  const int per = static_cast<int>(c.get_int("per_decade", 16));
  const auto e = ExponentTriple::from_pq(c.get_double("exponents.p", 4.0), c.get_double("exponents.q", 4.0));
  c.reject_unused();
  const auto scan = commutator_scan(u, rho, phi, log_delta_grid(lo, hi, per), e);
  std::filesystem::create_directories(out);
  std::ofstream os(std::filesystem::path(out) / "scan.csv");
  write_scan_csv(os, scan);
  std::cout << "commutator-scan: " << scan.delta_grid.size() << " deltas, wrote " << out << "/scan.csv\n";
  return 0;
}

int norm_cmd(const std::string& kind, const std::string& input, double r, double L) {
  const ScalarField f = read_mixf(input);
  double v = 0.0;
  if (kind == "dual") {
    SobolevDualSpec s;
    s.r = r;
    s.L = L;
    s.mode = r == 2.0 ? DualMode::exact_r2 : DualMode::surrogate;
    v = sobolev_dual_norm(f, s);
    std::cout << "dual(" << (r == 2.0 ? "exact" : "surrogate") << ") ";
  } else if (kind == "besov") {
    std::vector<std::string> warn;
    BesovSpec s;
    s.family = lp_family_for(f.grid());
    v = besov_norm(f, s, &warn);
    for (const auto& w : warn) std::cerr << "warning: " << w << "\n";
    std::cout << "besov ";
  } else {
    v = log_derivative_norm(f, r);
    std::cout << "logd ";
  }
  std::cout << fmt_double(v) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixlab: transport, mixing and commutator experiments"};
  app.require_subcommand(1);

  std::string cfg, out = "out";
  std::uint64_t seed = 1;
  Experiment chosen = Experiment::mixing;
  bool ran_experiment = false;
  for (Experiment e : all_experiments()) {
    auto* sub = app.add_subcommand(experiment_name(e), "run the " + experiment_name(e) + " experiment");
    sub->add_option("--config", cfg, "key=value config file");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "random seed");
    sub->callback([&, e] {
      chosen = e;
      ran_experiment = true;
    });
  }
  auto* sim = app.add_subcommand("simulate", "evolve one trajectory and export norms");
  sim->add_option("--config", cfg);
  sim->add_option("--out", out);
  sim->add_option("--seed", seed);
  auto* scan = app.add_subcommand("commutator-scan", "commutator norm against delta");
  scan->add_option("--config", cfg);
  scan->add_option("--out", out);
  scan->add_option("--seed", seed);
  int part = 2;
  auto* cx = app.add_subcommand("counterexample", "band-wise counterexample (part 1 floor or part 2 divergence)");
  cx->add_option("--config", cfg);
  cx->add_option("--out", out);
  cx->add_option("--part", part)->check(CLI::IsMember({1, 2}));
  std::string kind, input;
  double r = 2.0, L = 0.0;
  auto* nm = app.add_subcommand("norm", "evaluate a norm of a MIXF field");
  nm->add_option("--kind", kind)->required()->check(CLI::IsMember({"dual", "besov", "logd"}));
  nm->add_option("--input", input)->required();
  nm->add_option("--r", r, "integrability exponent");
  nm->add_option("--L", L, "macroscopic scale for the dual norm (0 = period)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (ran_experiment) return finish(run_experiment(chosen, load_or_empty(cfg), seed), out);
    if (*sim) return simulate(cfg, out, seed);
    if (*scan) return commutator_scan_cmd(cfg, out, seed);
    if (*cx)
      return finish(run_experiment(part == 1 ? Experiment::counterexample_part1 : Experiment::counterexample_part2,
                                   load_or_empty(cfg), seed),
                    out);
    if (*nm) return norm_cmd(kind, input, r, L);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
  return 0;
}
