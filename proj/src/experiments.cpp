#include "mixlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mixlab/commutator.hpp"
#include "mixlab/flows.hpp"
#include "mixlab/kernels.hpp"
#include "mixlab/norms.hpp"

namespace mixlab {

namespace {

const std::vector<std::pair<Experiment, std::string>>& names() {
  static const std::vector<std::pair<Experiment, std::string>> n = {
      {Experiment::stability_cascade, "stability_cascade"},
      {Experiment::mixing, "mixing"},
      {Experiment::field_perturbation, "field_perturbation"},
      {Experiment::vanishing_diffusion, "vanishing_diffusion"},
      {Experiment::regularity, "regularity"},
      {Experiment::commutator_integral, "commutator_integral"},
      {Experiment::besov_decay, "besov_decay"},
      {Experiment::counterexample_part1, "counterexample_part1"},
      {Experiment::counterexample_part2, "counterexample_part2"},
  };
  return n;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string key_of(const std::string& prefix, double v) { return prefix + "=" + fmt_double(v); }

TorusGrid read_grid(const Config& c, const std::string& key, long n, double period) {
  const long gn = c.get_int(key, n);
  const double L = c.get_double("grid.period", period);
  try {
    return TorusGrid(2, static_cast<int>(gn), L);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + key + ": " + e.what());
  }
}

FlowSpec read_flow(const Config& c, const std::string& prefix, const FlowSpec& d) {
  FlowSpec f;
  try {
    f.kind = parse_flow_kind(c.get_string(prefix + ".kind", flow_kind_name(d.kind)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  f.amplitude = c.get_double(prefix + ".amplitude", d.amplitude);
  f.switch_period = c.get_double(prefix + ".switch_period", d.switch_period);
  if (!(f.amplitude >= 0.0) || std::isinf(f.amplitude)) throw ConfigError("config: " + prefix + ".amplitude must be finite and >= 0");
  return f;
}

VelocityField build_flow(const FlowSpec& f, const TorusGrid& g) {
  try {
    return make_flow(f, g);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

Mollifier read_mollifier(const Config& c, const std::string& key, const std::string& d) {
  const std::string name = c.get_string(key, d);
  if (name == "cutoff") return make_frequency_cutoff();
  if (name == "gaussian") return make_gaussian();
  throw ConfigError("config: " + key + " must be cutoff or gaussian, got '" + name + "'");
}

ExponentTriple read_triple(const Config& c, double p, double q) {
  try {
    return ExponentTriple::from_pq(c.get_double("exponents.p", p), c.get_double("exponents.q", q));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

double positive(const Config& c, const std::string& key, double d) {
  const double v = c.get_double(key, d);
  if (!(v > 0.0) || std::isinf(v)) throw ConfigError("config: " + key + " must be a finite positive number");
  return v;
}

long positive_int(const Config& c, const std::string& key, long d) {
  const long v = c.get_int(key, d);
  if (v <= 0) throw ConfigError("config: " + key + " must be a positive integer");
  return v;
}

ScalarField make_data(const std::string& kind, const TorusGrid& g, int kmax, unsigned long long seed) {
  const double k = 2.0 * kPi / g.period;
  if (kind == "random") return random_band_limited(g, kmax, seed);
  if (kind == "sine_x") return ScalarField::from_function(g, [k](std::array<double, 2> x) { return std::sin(k * x[0]); });
  if (kind == "sine_diag")
    return ScalarField::from_function(g, [k](std::array<double, 2> x) { return std::sin(k * (x[0] + x[1])); });
  throw ConfigError("config: unknown data kind '" + kind + "' (random, sine_x, sine_diag)");
}

void check_dt(const VelocityField& u, double dt, const std::string& what) {
  const double lim = admissible_dt(u);
  if (dt > lim) {
    std::ostringstream os;
    os << "config: dt = " << dt << " violates the CFL limit for " << what << "; admissible dt <= " << lim;
    throw ConfigError(os.str());
  }
}

std::vector<double> log_sweep(double top, double decades, long points) {
  if (points < 2) throw ConfigError("config: sweeps need at least 2 points");
  std::vector<double> out;
  for (long i = 0; i < points; ++i)
    out.push_back(top * std::pow(10.0, -decades * static_cast<double>(points - 1 - i) / static_cast<double>(points - 1)));
  return out;
}

double filtered_norm(const ScalarField& f, const Mollifier& phi, double delta, double r) {
  return lp_norm(convolve(f, rescale(phi, delta)), r);
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

// Integral over the part of a scan with delta >= lo.
double tail_integral(const CommutatorScan& scan, double lo, double q) {
  CommutatorScan sub = scan;
  sub.delta_grid.clear();
  sub.norms.clear();
  for (std::size_t i = 0; i < scan.delta_grid.size(); ++i)
    if (scan.delta_grid[i] >= lo * (1.0 - 1e-9)) {
      sub.delta_grid.push_back(scan.delta_grid[i]);
      sub.norms.push_back(scan.norms[i]);
    }
  return besov_commutator_integral(sub, q);
}

// ---------------------------------------------------------------- stability cascade

void run_cascade(const Config& c, std::uint64_t, ExperimentResult& out) {
  const TorusGrid g = read_grid(c, "grid.n", 128, 1.0);
  const FlowSpec base = read_flow(c, "flow", {FlowKind::alternating_sine_shear, 1.0, 0.25});
  const auto amps = c.get_list("cascade.amplitudes", {1.0, 2.0, 4.0});
  const double T = positive(c, "T", 1.0);
  const double dt = positive(c, "dt", 5e-4);
  const long mode = positive_int(c, "data.mode", 24);
  const double delta0 = positive(c, "delta0", 0.015);
  const auto kappas = c.get_list("kappas", {1e-3, 3e-3, 1e-2, 3e-2});
  const ExponentTriple e = read_triple(c, 4.0, 4.0);
  const long fmode = positive_int(c, "forcing.mode", 40);
  const double famp = c.get_double("forcing.amplitude", 1.0);
  c.reject_unused();

  if (kappas.empty() || amps.empty()) throw ConfigError("config: kappas and cascade.amplitudes must be non-empty");
  for (double k : kappas)
    if (!(k > 0.0 && k < 1.0)) throw ConfigError("config: kappas must lie in (0, 1)");
  if (mode >= g.n / 3 || fmode >= g.n / 3) throw ConfigError("config: data.mode and forcing.mode must lie in the dealiased band");
  const Mollifier phi = make_frequency_cutoff();
  const double k = 2.0 * kPi / g.period;
  const auto rho0 = ScalarField::from_function(g, [&](std::array<double, 2> x) { return std::cos(k * static_cast<double>(mode) * x[0]); });
  const auto force = ScalarField::from_function(g, [&](std::array<double, 2> x) { return famp * std::cos(k * static_cast<double>(fmode) * x[1]); });
  const double r0 = lp_norm(rho0, e.r);
  if (filtered_norm(rho0, phi, delta0, e.r) > 1e-12 * r0)
    throw std::invalid_argument("stability_cascade: rho0 has content below the delta0 cutoff (need delta0 * |k| >= 2)");
  const double forcing_low = T * filtered_norm(force, phi, delta0, e.r);

  std::vector<VelocityField> flows;
  for (double a : amps) {
    FlowSpec f = base;
    f.amplitude = a;
    flows.push_back(build_flow(f, g));
    check_dt(flows.back(), dt, "amplitude " + fmt_double(a));
  }
  const auto ladder = log_delta_grid(delta0, 0.5 * g.period);
  const double ratio = mixing_ratio(rho0, e);

  SolverConfig sc;
  sc.dt = dt;
  sc.record_every = std::numeric_limits<int>::max();
  sc.grad_p = e.p;

  struct Point {
    double x, y;
  };
  auto thresholds = [&](const ScalarField& rhoT, double acc, const std::string& tag, std::vector<Point>& pts) {
    std::vector<double> lev(ladder.size());
    for (std::size_t i = 0; i < ladder.size(); ++i) lev[i] = filtered_norm(rhoT, phi, ladder[i], e.r);
    for (double kappa : kappas) {
      double best = 0.0;
      for (std::size_t i = 0; i < ladder.size(); ++i)
        if (lev[i] >= kappa * r0) best = ladder[i];
      const std::string key = tag + "." + key_of("kappa", kappa);
      if (best == 0.0) {
        out.report.add(key + ".threshold_delta", "not_reached");
        continue;
      }
      const Point p{ratio * acc / kappa, std::log(best / delta0)};
      out.report.add(key + ".threshold_delta", best);
      out.report.add(key + ".log_delta_ratio", p.y);
      out.report.add(key + ".x", p.x);
      pts.push_back(p);
    }
  };

  out.report.add("delta0", delta0);
  out.report.add("mixing_ratio", ratio);
  std::vector<Point> pts;
  ScalarField first;
  std::vector<Point> unforced_first;
  for (std::size_t j = 0; j < amps.size(); ++j) {
    auto tr = solve(rho0, flows[j], T, sc);
    const std::string tag = key_of("A", amps[j]);
    out.report.add(tag + ".accumulator", tr.accumulator.back());
    const std::size_t before = pts.size();
    thresholds(tr.states.back(), tr.accumulator.back(), tag, pts);
    if (j == 0) unforced_first.assign(pts.begin() + static_cast<long>(before), pts.end());
    if (j == 0) {
      first = tr.states.back();
      out.fields.emplace_back("rhoT_" + tag, first);
    }
  }
  out.fields.emplace_back("rho0", rho0);

  auto still = solve(rho0, VelocityField::zero(g), T, sc).states.back();
  double leak = 0.0;
  for (double d : ladder) leak = std::max(leak, filtered_norm(still, phi, d, e.r));
  out.report.add("zero_flow.max_filtered", leak);
  out.report.add_check("zero_flow_no_transfer", leak <= 1e-12 * r0);

  out.report.add("points", static_cast<double>(pts.size()));
  double cfit = 0.0;
  for (const auto& p : pts) cfit = std::max(cfit, (p.y - std::log(4.0)) / p.x);
  out.report.add("C_fit", cfit);
  if (pts.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& p : pts) {
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
    auto fit = fit_affine(xs, ys, "cascade_log_delta_vs_x");
    fit.direction = "log(delta/delta0) <= log 4 + C x";
    out.report.add("fit.slope", fit.slope);
    out.report.add("fit.r2", fit.r2);
    out.report.add_check("fit_slope_positive", fit.slope > 0.0);
    out.fits.push_back(fit);
  } else {
    out.report.add_check("fit_slope_positive", false);
  }

  // A forcing with no content below the delta0 cutoff leaves the bound's forcing term at zero.
  SolverConfig fc = sc;
  fc.forcing = [&](double) { return force; };
  auto forced = solve(rho0, flows[0], T, fc);
  std::vector<Point> fpts;
  thresholds(forced.states.back(), forced.accumulator.back(), "forced." + key_of("A", amps[0]), fpts);
  double shift = 0.0;
  for (double d : ladder)
    shift = std::max(shift, std::abs(filtered_norm(forced.states.back(), phi, d, e.r) - filtered_norm(first, phi, d, e.r)));
  out.report.add("forcing.max_level_shift", shift / r0);
  bool same = fpts.size() == unforced_first.size();
  for (std::size_t i = 0; same && i < fpts.size(); ++i) same = std::abs(fpts[i].y - unforced_first[i].y) <= 1e-12;
  out.report.add_check("forcing_leaves_thresholds_unchanged", same);
  out.report.add("forcing.low_content", forcing_low);
  out.report.add_check("forcing_invisible_below_cutoff", forcing_low <= 1e-12 * std::max(1.0, std::abs(famp)));
}

// ---------------------------------------------------------------- mixing

double dual_norm(const ScalarField& f, double r) {
  SobolevDualSpec s;
  s.r = r;
  s.mode = r == 2.0 ? DualMode::exact_r2 : DualMode::surrogate;
  return sobolev_dual_norm(f, s);
}

void run_mixing(const Config& c, std::uint64_t seed, ExperimentResult& out) {
  const TorusGrid fine = read_grid(c, "grid.n", 256, 1.0);
  const TorusGrid coarse = read_grid(c, "refine.n", 128, 1.0);
  const FlowSpec fs = read_flow(c, "flow", {FlowKind::alternating_sine_shear, 1.0, 0.25});
  const double T = positive(c, "T", 4.0);
  const double dt = positive(c, "dt", 1e-3);
  const long every = positive_int(c, "record_every", 50);
  const ExponentTriple e = read_triple(c, 4.0, 4.0);
  const double delta = positive(c, "delta", 0.05);
  const Mollifier phi = read_mollifier(c, "mollifier", "gaussian");
  const auto kinds = split(c.get_string("data.kinds", "sine_x,sine_diag"));
  const int kmax = static_cast<int>(positive_int(c, "data.kmax", 4));
  const double tol_ref = positive(c, "tol.refinement", 0.2);
  const double tol_data = positive(c, "tol.data_factor", 2.0);
  c.reject_unused();

  if (kinds.empty()) throw ConfigError("config: data.kinds is empty");
  if (!phi.is_positive) throw ConfigError("config: mixing needs a positive mollifier (gaussian)");
  const VelocityField uf = build_flow(fs, fine);
  const VelocityField uc = build_flow(fs, coarse);
  check_dt(uf, dt, "grid.n");
  const std::string norm_kind = e.r == 2.0 ? "exact_r2" : "surrogate";
  out.report.add("norm_kind", norm_kind);

  // Hypotheses first.
  std::vector<ScalarField> data_f, data_c;
  for (std::size_t d = 0; d < kinds.size(); ++d) {
    data_f.push_back(make_data(kinds[d], fine, kmax, seed + d));
    data_c.push_back(kinds[d] == "random" ? band_limit(resample(data_f.back(), coarse.n), 2.0 / 3.0)
                                          : make_data(kinds[d], coarse, kmax, seed + d));
    const auto& r0 = data_f.back();
    if (std::abs(r0.mean()) > 1e-12 * r0.max_abs()) throw std::invalid_argument("mixing: rho0 '" + kinds[d] + "' is not mean-zero");
    if (filtered_norm(r0, phi, delta, e.r) < 0.5 * lp_norm(r0, e.r)) {
      std::ostringstream os;
      os << "mixing: rho0 '" << kinds[d] << "' is already mixed at scale delta = " << delta
         << "; largest admissible delta is " << mixing_scale(r0, e.r, phi);
      throw std::invalid_argument(os.str());
    }
  }

  SolverConfig sc;
  sc.dt = dt;
  sc.record_every = every;
  sc.grad_p = e.p;

  struct Run {
    std::vector<double> acc, logh;
    FitReport fit;
  };
  auto run = [&](const ScalarField& r0, const VelocityField& u, const std::string& name) {
    auto tr = solve(r0, u, T, sc);
    Run res;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      res.acc.push_back(tr.accumulator[k]);
      res.logh.push_back(std::log(dual_norm(tr.states[k], e.r)));
    }
    res.fit = fit_affine(res.acc, res.logh, name);
    res.fit.direction = "log W(t) >= b - rate * accumulator";
    return std::make_pair(res, tr.states.back());
  };

  std::vector<double> rates, ratios;
  bool refinement_ok = true, floor_ok = true;
  for (std::size_t d = 0; d < kinds.size(); ++d) {
    const std::string tag = kinds[d];
    auto [rf, last] = run(data_f[d], uf, tag + ".n" + std::to_string(fine.n));
    auto [rc, lastc] = run(data_c[d], uc, tag + ".n" + std::to_string(coarse.n));
    (void)lastc;
    const double lf = -rf.fit.slope, lc = -rc.fit.slope;
    const double ratio = mixing_ratio(data_f[d], e);
    ratios.push_back(ratio);
    rates.push_back(lf);
    const double rel = std::abs(lf - lc) / std::abs(lf);
    refinement_ok = refinement_ok && rel <= tol_ref;
    // Lower envelope from the coarse fit, checked on the fine run.
    double deficit = 0.0;
    for (std::size_t k = 0; k < rc.acc.size(); ++k)
      deficit = std::max(deficit, rc.fit.intercept + rc.fit.slope * rc.acc[k] - rc.logh[k]);
    for (std::size_t k = 0; k < rf.acc.size(); ++k)
      floor_ok = floor_ok && rf.logh[k] >= rc.fit.intercept - deficit + rc.fit.slope * rf.acc[k] - 1e-9;
    const double r0 = lp_norm(data_f[d], e.r);
    out.report.add(tag + ".mixing_ratio", ratio);
    out.report.add(tag + ".rate.n" + std::to_string(fine.n), lf);
    out.report.add(tag + ".rate.n" + std::to_string(coarse.n), lc);
    out.report.add(tag + ".rate_rel_change", rel);
    out.report.add(tag + ".r2", rf.fit.r2);
    out.report.add(tag + ".C_fit", lf / ratio);
    out.report.add(tag + ".A_fit", std::exp(rf.fit.intercept - deficit) / (delta * r0));
    out.report.add(tag + ".accumulator_T", rf.acc.back());
    out.report.add(tag + ".log_W_T", rf.logh.back());
    out.fits.push_back(rf.fit);
    out.fits.push_back(rc.fit);
    out.fields.emplace_back(tag + "_rho0", data_f[d]);
    out.fields.emplace_back(tag + "_rhoT", last);
  }
  const double rmax = *std::max_element(rates.begin(), rates.end());
  const double rmin = *std::min_element(rates.begin(), rates.end());
  out.report.add("rate_factor_across_data", rmax / rmin);
  out.report.add_check("rate_refinement", refinement_ok);
  out.report.add_check("floor_holds_on_refined_grid", floor_ok);
  const double mr_spread = *std::max_element(ratios.begin(), ratios.end()) / *std::min_element(ratios.begin(), ratios.end());
  out.report.add("mixing_ratio_spread", mr_spread);
  out.report.add_check("equal_mixing_ratio", mr_spread - 1.0 <= 1e-6);
  out.report.add_check("rate_across_data", rmin > 0.0 && rmax / rmin <= tol_data);

  SolverConfig zc = sc;
  auto z = solve(data_c[0], VelocityField::zero(coarse), std::min(T, 0.2), zc);
  const double w0 = dual_norm(z.states.front(), e.r);
  double drift = 0.0;
  for (const auto& s : z.states) drift = std::max(drift, std::abs(dual_norm(s, e.r) / w0 - 1.0));
  out.report.add("zero_flow.drift", drift);
  out.report.add_check("zero_flow_constant", drift <= 1e-12);
}

// ---------------------------------------------------------------- perturbation sweeps

struct SweepSetup {
  TorusGrid g;
  VelocityField u;
  ScalarField rho0;
  ExponentTriple e = ExponentTriple::from_pq(4.0, 4.0);
  Mollifier phi;
  double delta = 0.1;
  double T = 1.0;
  SolverConfig sc;
  long points = 10;
  double decades = 3.0;
  double top = 0.4;
};

SweepSetup read_sweep(const Config& c, std::uint64_t seed, const std::string& top_key, double top) {
  SweepSetup s;
  s.g = read_grid(c, "grid.n", 256, 1.0);
  const FlowSpec fs = read_flow(c, "flow", {FlowKind::cellular, 0.05, 0.0});
  s.T = positive(c, "T", 1.0);
  s.sc.dt = positive(c, "dt", 1e-3);
  s.sc.record_every = std::numeric_limits<int>::max();
  s.e = read_triple(c, 4.0, 4.0);
  s.sc.grad_p = s.e.p;
  s.delta = positive(c, "delta", 0.1);
  s.phi = read_mollifier(c, "mollifier", "cutoff");
  const int kmax = static_cast<int>(positive_int(c, "data.kmax", 4));
  s.points = positive_int(c, "sweep.points", 10);
  s.decades = positive(c, "sweep.decades", 3.0);
  s.top = positive(c, top_key, top);
  s.u = build_flow(fs, s.g);
  check_dt(s.u, s.sc.dt, "flow");
  s.rho0 = make_data(c.get_string("data.kind", "random"), s.g, kmax, seed);
  return s;
}

void finish_sweep(ExperimentResult& out, const std::string& var, const std::vector<double>& params,
                  const std::vector<double>& xs, const std::vector<double>& ys, double zero_diff, double solver_gap,
                  const std::string& envelope_label) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string key = key_of(var, params[i]);
    out.report.add(key + ".difference", ys[i]);
    out.report.add(key + ".inverse_log", xs[i]);
  }
  out.report.add(var + "=0.difference", zero_diff);
  out.report.add_check(var + "_zero_gives_zero", zero_diff == 0.0);
  out.report.add("kept_points", static_cast<double>(params.size()));
  const double span = params.empty() ? 0.0 : std::log10(params.back() / params.front());
  out.report.add("sweep_decades", span);
  out.report.add_check("sweep_spans_3_decades", span >= 3.0 - 1e-9);
  out.report.add_check("monotone", strictly_increasing(ys));
  out.report.add("solver_error_ratio", solver_gap);
  out.report.add_check("solver_error_negligible", solver_gap <= 1e-3);
  if (xs.size() >= 2) {
    auto fit = fit_affine(xs, ys, envelope_label);
    fit.direction = "difference <= a / log(.) + b + max_excess";
    bool below = true;
    for (std::size_t i = 0; i < xs.size(); ++i) below = below && ys[i] <= fit.envelope(xs[i]) * (1.0 + 1e-12);
    out.report.add("fit.slope", fit.slope);
    out.report.add("fit.intercept", fit.intercept);
    out.report.add("fit.max_excess", fit.max_excess);
    out.report.add("fit.r2", fit.r2);
    out.report.add_check("fit_r2_at_least_0.9", fit.accepted());
    out.report.add_check("below_envelope", below);
    out.fits.push_back(fit);
  } else {
    out.report.add_check("fit_r2_at_least_0.9", false);
  }
}

void run_field_perturbation(const Config& c, std::uint64_t seed, ExperimentResult& out) {
  SweepSetup s = read_sweep(c, seed, "sweep.top", 0.4);
  c.reject_unused();
  const TorusGrid& g = s.g;
  const double k = 2.0 * kPi / g.period;
  const auto wx = ScalarField::from_function(g, [k](std::array<double, 2> x) { return std::sin(k * x[1] + 0.3); });
  VelocityField w = VelocityField::steady({wx, ScalarField::zeros(g)});
  const auto& u0 = s.u.phase(0);
  const double unorm = std::hypot(lp_norm(u0[0], s.e.p), lp_norm(u0[1], s.e.p));
  w = w.scaled(unorm / lp_norm(wx, s.e.p));
  const double gradu = grad_norm(u0, s.e.p);
  const auto eps = log_sweep(s.top, s.decades, s.points);
  for (double ep : eps) check_dt(s.u.plus(w, ep), s.sc.dt, key_of("eps", ep));

  auto rhoT = [&](const VelocityField& v, const SolverConfig& cfg) { return solve(s.rho0, v, s.T, cfg).states.back(); };
  auto diff = [&](const ScalarField& a, const ScalarField& b) { return filtered_norm(a - b, s.phi, s.delta, s.e.r); };
  const ScalarField ref = rhoT(s.u, s.sc);
  std::vector<double> kept, xs, ys;
  for (double ep : eps) {
    const double dist = ep * unorm;  // ||u - u_bar||_p
    if (dist > s.delta * gradu) {
      out.report.add(key_of("eps", ep) + ".skipped", "hypothesis ||u-u_bar|| <= delta ||grad u|| fails");
      continue;
    }
    kept.push_back(ep);
    xs.push_back(1.0 / std::log(s.delta * gradu / dist));
    ys.push_back(diff(rhoT(s.u.plus(w, ep), s.sc), ref));
  }
  const double zero = diff(rhoT(s.u.plus(w, 0.0), s.sc), ref);
  double gap = 0.0;
  if (!kept.empty()) {
    SolverConfig half = s.sc;
    half.dt = 0.5 * s.sc.dt;
    const double dh = diff(rhoT(s.u.plus(w, kept.front()), half), rhoT(s.u, half));
    gap = std::abs(dh - ys.front()) / ys.front();
  }
  out.report.add("delta", s.delta);
  out.report.add("grad_u_norm", gradu);
  out.report.add("u_norm", unorm);
  finish_sweep(out, "eps", kept, xs, ys, zero, gap, "perturbation_inverse_log");
  out.fields.emplace_back("rho0", s.rho0);
  out.fields.emplace_back("rhoT", ref);
}

void run_vanishing_diffusion(const Config& c, std::uint64_t seed, ExperimentResult& out) {
  SweepSetup s = read_sweep(c, seed, "sweep.top", 0.5);
  c.reject_unused();
  auto tr = [&](double nu, double dt) {
    SolverConfig cfg = s.sc;
    cfg.nu = nu;
    cfg.dt = dt;
    return solve(s.rho0, s.u, s.T, cfg);
  };
  const auto base = tr(0.0, s.sc.dt);
  const ScalarField ref = base.states.back();
  const double acc = base.accumulator.back();
  const double ratio = mixing_ratio(s.rho0, s.e);
  const double budget = s.delta * s.delta * ratio * acc;  // nu T must stay below this
  auto diff = [&](const ScalarField& a, const ScalarField& b) { return filtered_norm(a - b, s.phi, s.delta, s.e.r); };
  const auto nuT = log_sweep(s.top * budget, s.decades, s.points);
  std::vector<double> kept, xs, ys;
  for (double v : nuT) {
    const double nu = v / s.T;
    if (v > budget) {
      out.report.add(key_of("nu", nu) + ".skipped", "hypothesis nu T <= delta^2 ratio accumulator fails");
      continue;
    }
    kept.push_back(nu);
    xs.push_back(1.0 / std::log(budget / v));
    ys.push_back(diff(tr(nu, s.sc.dt).states.back(), ref));
  }
  const double zero = diff(tr(0.0, s.sc.dt).states.back(), ref);
  double gap = 0.0;
  if (!kept.empty()) {
    const double h = 0.5 * s.sc.dt;
    const double dh = diff(tr(kept.front(), h).states.back(), tr(0.0, h).states.back());
    gap = std::abs(dh - ys.front()) / ys.front();
  }
  out.report.add("delta", s.delta);
  out.report.add("mixing_ratio", ratio);
  out.report.add("accumulator_T", acc);
  out.report.add("nuT_budget", budget);
  finish_sweep(out, "nu", kept, xs, ys, zero, gap, "diffusion_inverse_log");
  out.fields.emplace_back("rho0", s.rho0);
  out.fields.emplace_back("rhoT", ref);
}

// ---------------------------------------------------------------- regularity

void run_regularity(const Config& c, std::uint64_t seed, ExperimentResult& out) {
  const TorusGrid g = read_grid(c, "grid.n", 256, 1.0);
  const FlowSpec fs = read_flow(c, "flow", {FlowKind::cellular, 0.05, 0.0});
  const FlowSpec cs = read_flow(c, "check_flow", {FlowKind::alternating_sine_shear, 0.2, 0.25});
  const double T = positive(c, "T", 0.6);
  const double dt = positive(c, "dt", 1e-3);
  const long every = positive_int(c, "record_every", 20);
  const ExponentTriple e = read_triple(c, kInf, 2.0);
  const int kmax = static_cast<int>(positive_int(c, "data.kmax", 4));
  const std::string kind = c.get_string("data.kind", "random");
  const double sat_fraction = positive(c, "saturation.fraction", 0.5);
  const double sat_tol = positive(c, "saturation.tol", 1e-6);
  const double tol_scaling = positive(c, "tol.scaling", 0.15);
  c.reject_unused();

  FlowSpec doubled = fs;
  doubled.amplitude *= 2.0;
  const std::vector<std::pair<std::string, VelocityField>> flows = {
      {"zero", VelocityField::zero(g)},
      {"flow", build_flow(fs, g)},
      {"flow_doubled", build_flow(doubled, g)},
      {"check_flow", build_flow(cs, g)},
  };
  for (const auto& f : flows) check_dt(f.second, dt, f.first);
  const ScalarField rho0 = make_data(kind, g, kmax, seed);
  if (out_of_band_fraction(rho0, 2.0 / 3.0) > 1e-8) throw std::invalid_argument("regularity: rho0 must be band-limited");
  const double rq = lp_norm(rho0, e.q);

  SolverConfig sc;
  sc.dt = dt;
  sc.record_every = every;
  sc.grad_p = e.p;

  struct Run {
    std::vector<double> dL, dacc;
    double L0 = 0.0, drift = 0.0, max_slope = 0.0, resolved_t = 0.0;
    std::size_t resolved = 0;
  };
  std::vector<Run> runs;
  for (const auto& f : flows) {
    auto tr = solve(rho0, f.second, T, sc);
    Run r;
    std::size_t K = tr.times.size();
    for (std::size_t k = 0; k < tr.times.size(); ++k)
      if (out_of_band_fraction(tr.states[k], sat_fraction) > sat_tol) {
        K = k;
        break;
      }
    r.resolved = K;
    r.resolved_t = K > 0 ? tr.times[K - 1] : 0.0;
    std::vector<double> L;
    for (std::size_t k = 0; k < K; ++k) L.push_back(log_derivative_norm(tr.states[k], e.r));
    r.L0 = L.front();
    for (std::size_t k = 1; k < K; ++k) {
      r.dL.push_back(L[k] - L[k - 1]);
      r.dacc.push_back(tr.accumulator[k] - tr.accumulator[k - 1]);
      r.max_slope = std::max(r.max_slope, (L[k] - L[k - 1]) / (tr.times[k] - tr.times[k - 1]));
      r.drift = std::max(r.drift, std::abs(L[k] - r.L0));
    }
    runs.push_back(std::move(r));
  }

  // Calibrate on the flowing run that explores the largest resolved accumulator.
  std::size_t cal = 1;
  double best_acc = -1.0;
  for (std::size_t j = 1; j < runs.size(); ++j) {
    double a = 0.0;
    for (double v : runs[j].dacc) a += v;
    if (a > best_acc) {
      best_acc = a;
      cal = j;
    }
  }
  double cfit = 0.0;
  for (std::size_t k = 0; k < runs[cal].dL.size(); ++k)
    if (runs[cal].dacc[k] > 0.0) cfit = std::max(cfit, runs[cal].dL[k] / (rq * runs[cal].dacc[k]));

  bool bound_ok = true, enough = true;
  for (std::size_t j = 0; j < runs.size(); ++j) {
    const auto& r = runs[j];
    double worst = 0.0;
    for (std::size_t k = 0; k < r.dL.size(); ++k) {
      const double allowed = cfit * rq * r.dacc[k];
      bound_ok = bound_ok && r.dL[k] <= allowed * (1.0 + 1e-12) + 1e-14 * r.L0;
      if (allowed > 0.0) worst = std::max(worst, r.dL[k] / allowed);
    }
    enough = enough && r.resolved >= 5;
    const std::string& tag = flows[j].first;
    out.report.add(tag + ".resolved_until", r.resolved_t);
    out.report.add(tag + ".max_slope", r.max_slope);
    out.report.add(tag + ".worst_bound_usage", worst);
  }
  const double scaling = runs[2].max_slope / runs[1].max_slope;
  out.report.add("calibration_run", flows[cal].first);
  out.report.add("C_fit", cfit);
  out.report.add("slope_ratio_doubled", scaling);
  out.report.add("zero.drift", runs[0].drift);
  out.report.add_check("zero_flow_constant", runs[0].drift <= 1e-10 * runs[0].L0);
  out.report.add_check("resolved_records", enough);
  out.report.add_check("slope_bound_all_steps", bound_ok);
  out.report.add_check("slope_linear_in_amplitude", std::abs(scaling - 2.0) <= 2.0 * tol_scaling);
  out.fields.emplace_back("rho0", rho0);
}

// ---------------------------------------------------------------- commutator suite

void run_commutator_integral(const Config& c, std::uint64_t seed, ExperimentResult& out) {
  const TorusGrid g = read_grid(c, "grid.n", 64, 1.0);
  const FlowSpec fs = read_flow(c, "flow", {FlowKind::cellular, 0.2, 0.0});
  const long corpus = positive_int(c, "corpus.size", 3);
  const int kmax = static_cast<int>(positive_int(c, "data.kmax", 6));
  const Mollifier phi = read_mollifier(c, "mollifier", "cutoff");
  const auto two = c.get_list("range.two", {1e-2, 1.0});
  const auto four = c.get_list("range.four", {1e-3, 10.0});
  const double r = c.get_double("exponents.r", 2.0);
  const double tol_plateau = positive(c, "tol.plateau", 1.5);
  const double window_hi = positive(c, "window.hi", 0.1);
  const long cx_n = positive_int(c, "counterexample.n", 1024);
  const long cx_nmax = positive_int(c, "counterexample.n_max", 3);
  const double naive_lo = positive(c, "naive.lo", 1e-4);
  const double naive_mid = positive(c, "naive.mid", 1e-2);
  const double naive_growth = positive(c, "tol.naive_growth", 0.05);
  c.reject_unused();
  if (two.size() != 2 || four.size() != 2) throw ConfigError("config: range.two and range.four take two values");
  if (!(r >= 1.0)) throw ConfigError("config: exponents.r must be >= 1");
  const TorusGrid gcx(2, static_cast<int>(cx_n), 4.0);
  CounterexampleSpec cx;
  cx.n_max = static_cast<int>(cx_nmax);
  cx.validate();
  if (max_admissible_n(cx, gcx) < cx.n_max) throw ConfigError("config: counterexample.n too small for n_max");

  const auto u = build_flow(fs, g).phase(0);
  double worst = 0.0;
  bool zero_ok = true;
  for (long i = 0; i < corpus; ++i) {
    const auto rho = random_band_limited(g, kmax, seed + static_cast<std::uint64_t>(i));
    const double a = lp_norm(integrated_commutator(u, rho, phi, two[0], two[1]), r);
    const double b = lp_norm(integrated_commutator(u, rho, phi, four[0], four[1]), r);
    const double q = std::max(a / b, b / a);
    worst = std::max(worst, q);
    out.report.add("corpus." + std::to_string(i) + ".two_decades", a);
    out.report.add("corpus." + std::to_string(i) + ".four_decades", b);
    zero_ok = zero_ok && integrated_commutator(VelocityField::zero(g).phase(0), rho, phi, two[0], two[1]).max_abs() == 0.0;
  }
  out.report.add("plateau.worst_ratio", worst);
  out.report.add_check("plateau_ratio_within_tol", worst <= tol_plateau);
  out.report.add_check("zero_flow_zero_commutator", zero_ok);

  // Window minimum against window size.
  const auto rho = random_band_limited(g, kmax, seed);
  const auto scan = commutator_scan(u, rho, phi, log_delta_grid(1e-3, 1.0), ExponentTriple(2.0 * r, 2.0 * r, r));
  double prev = INFINITY;
  bool mono = true;
  for (double dec : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    const double lo = window_hi * std::pow(10.0, -dec);
    const double m = min_window_norm(scan, lo, window_hi);
    out.report.add(key_of("window_decades", dec) + ".min_norm", m);
    mono = mono && m <= prev;
    prev = m;
  }
  out.report.add_check("window_min_nonincreasing", mono);

  // Naive integral of norms on the counterexample family grows with the range.
  const auto dens = counterexample_density(cx, gcx);
  const auto us = build_flow({FlowKind::periodized_shear, 1.0, 0.0}, gcx).phase(0);
  const auto cscan = commutator_scan(us, dens.rho, make_frequency_cutoff(), log_delta_grid(naive_lo, 1.0),
                                     ExponentTriple(2.0, 2.0, 1.0));
  const double short_range = tail_integral(cscan, naive_mid, 1.0);
  const double long_range = tail_integral(cscan, naive_lo, 1.0);
  out.report.add("naive.short_range", short_range);
  out.report.add("naive.long_range", long_range);
  out.report.add("naive.growth", long_range / short_range - 1.0);
  out.report.add_check("naive_integral_grows", long_range / short_range - 1.0 >= naive_growth);
  // Same family, same ranges, norm taken after integrating.
  const double in_short = lp_norm(integrated_commutator(us, dens.rho, make_frequency_cutoff(), naive_mid, 1.0), 1.0);
  const double in_long = lp_norm(integrated_commutator(us, dens.rho, make_frequency_cutoff(), naive_lo, 1.0), 1.0);
  out.report.add("integrated.short_range", in_short);
  out.report.add("integrated.long_range", in_long);
  out.report.add("integrated.ratio", std::max(in_long / in_short, in_short / in_long));
  out.fields.emplace_back("counterexample_rho", dens.rho);
}

void run_besov_decay(const Config& c, std::uint64_t seed, ExperimentResult& out) {
  const TorusGrid g = read_grid(c, "grid.n", 64, 1.0);
  const FlowSpec fs = read_flow(c, "flow", {FlowKind::cellular, 0.2, 0.0});
  const long corpus = positive_int(c, "corpus.size", 3);
  const int kmax = static_cast<int>(positive_int(c, "data.kmax", 6));
  const Mollifier phi = read_mollifier(c, "mollifier", "gaussian");
  const double p = c.get_double("exponents.p", 2.0);
  const double r = c.get_double("exponents.r", 1.0);
  const double tol = positive(c, "tol.stability", 0.1);
  c.reject_unused();
  if (!(p >= 1.0) || !(r >= 1.0)) throw ConfigError("config: exponents must be >= 1");
  const double q = std::max(p, 2.0);
  const auto u = build_flow(fs, g).phase(0);
  double worst = 0.0;
  bool tails_shrink = true;
  for (long i = 0; i < corpus; ++i) {
    const auto rho = random_band_limited(g, kmax, seed + static_cast<std::uint64_t>(i));
    const auto scan = commutator_scan(u, rho, phi, log_delta_grid(1e-4, 2.0), ExponentTriple(2.0 * r, 2.0 * r, r));
    const double base = tail_integral(scan, 1e-3, q);
    // Widen the range at the small end; the integrand decays there.
    double prev = 0.0, prev_inc = INFINITY;
    for (double lo : {1e-1, 1e-2, 1e-3, 1e-4}) {
      const double v = tail_integral(scan, lo, q);
      out.report.add("corpus." + std::to_string(i) + "." + key_of("lo", lo), v);
      const double inc = v - prev;
      if (prev > 0.0) tails_shrink = tails_shrink && inc <= prev_inc;
      if (prev > 0.0) prev_inc = inc;
      prev = v;
    }
    const double wide = tail_integral(scan, 1e-4, q);
    worst = std::max(worst, std::abs(wide / base - 1.0));
  }
  out.report.add("q", q);
  out.report.add("stability.worst_rel_change", worst);
  out.report.add_check("integral_stable_under_widening", worst <= tol);
  out.report.add_check("tail_increments_shrink", tails_shrink);
}

// ---------------------------------------------------------------- counterexample

void run_counterexample_part1(const Config& c, std::uint64_t, ExperimentResult& out) {
  const TorusGrid g = read_grid(c, "grid.n", 2048, 4.0);
  const auto xi = c.get_list("xi_bar", {0.9, 1.2});
  const Mollifier phi = read_mollifier(c, "mollifier", "cutoff");
  const double lo = positive(c, "delta.lo", 2.5e-3);
  const double hi = positive(c, "delta.hi", 0.25);
  const long per = positive_int(c, "per_decade", 8);
  const double factor = positive(c, "floor.factor", 0.5);
  c.reject_unused();
  if (xi.size() != 2) throw ConfigError("config: xi_bar takes two values");
  if (!(lo < hi)) throw ConfigError("config: delta.lo must be below delta.hi");
  const auto deltas = log_delta_grid(lo, hi, static_cast<int>(per));
  const long limit = static_cast<long>(std::floor(2.0 / 3.0 * (g.n / 2)));
  for (double d : deltas) {
    const auto m = nearest_mode(g, {xi[0] / d, xi[1] / d});
    if (std::abs(m[0]) >= limit || std::abs(m[1]) >= limit)
      throw ConfigError("config: grid.n too small for delta.lo (mode beyond the dealiased band)");
  }
  Wavevector w;
  w.dim = 2;
  w.k = {xi[0], xi[1]};
  const double khat = std::abs(shear_symbol(phi, w));
  const double chi1 = lp_norm(cutoff_field(g), 1.0);
  const double floor = factor * khat * chi1;
  const auto u = build_flow({FlowKind::periodized_shear, 1.0, 0.0}, g).phase(0);
  double mn = INFINITY;
  for (double d : deltas) {
    const auto m = nearest_mode(g, {xi[0] / d, xi[1] / d});
    const double v = lp_norm(dl_commutator(u, harmonic_density(g, m, true), phi, d), 1.0);
    out.report.add(key_of("delta", d) + ".norm_L1", v);
    mn = std::min(mn, v);
  }
  out.report.add("K_hat_xi_bar", khat);
  out.report.add("chi_L1", chi1);
  out.report.add("floor", floor);
  out.report.add("min_norm", mn);
  out.report.add("delta_decades", std::log10(hi / lo));
  out.report.add_check("positive_floor", mn >= floor);
}

void run_counterexample_part2(const Config& c, std::uint64_t, ExperimentResult& out) {
  const TorusGrid g = read_grid(c, "grid.n", 512, 4.0);
  const long direct_n = positive_int(c, "direct.n", 256);
  CounterexampleSpec s;
  const auto xi = c.get_list("xi_bar", {0.6, 0.8});
  if (xi.size() != 2) throw ConfigError("config: xi_bar takes two values");
  s.xi_bar = {xi[0], xi[1]};
  s.q = c.get_double("q", 1.0);
  s.n_max = static_cast<int>(positive_int(c, "n_max", 4));
  s.c1 = c.get_double("c1", 1.2);
  s.c2 = c.get_double("c2", 1.8);
  const int nodes = static_cast<int>(positive_int(c, "nodes", 16));
  const double growth = positive(c, "tol.growth", 0.2);
  const double tol_direct = positive(c, "tol.direct", 1e-3);
  c.reject_unused();
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const TorusGrid gd(2, static_cast<int>(direct_n), g.period);
  const Mollifier phi = make_frequency_cutoff();
  std::vector<int> bands;
  for (int n = 1; n <= s.n_max; ++n) bands.push_back(n);
  const auto env = counterexample_bands(s, phi, g, bands, nodes);
  double sum = 0.0;
  bool bounds_ok = true, growth_ok = true;
  for (const auto& b : env) {
    const double prev = sum;
    sum += b.value;
    const std::string tag = "band." + std::to_string(b.n);
    out.report.add(tag + ".value", b.value);
    out.report.add(tag + ".error_bound", b.error_bound);
    out.report.add(tag + ".lower_bound", b.lower_bound);
    out.report.add(tag + ".running_sum", sum);
    out.report.add(tag + ".method", b.method);
    if (b.n >= 2) {
      bounds_ok = bounds_ok && b.value - b.error_bound >= b.lower_bound;
      out.report.add(tag + ".growth", sum / prev - 1.0);
      growth_ok = growth_ok && sum / prev - 1.0 >= growth;
    }
  }
  CounterexampleSpec sd = s;
  sd.n_max = 2;
  const auto env2 = counterexample_bands(sd, phi, g, {2}, nodes);
  const auto dir = counterexample_band_direct(sd, phi, gd, 2, nodes);
  const double rel = std::abs(env2[0].value - dir.value) / dir.value;
  out.report.add("direct.band.2.value", dir.value);
  out.report.add("direct.band.2.rel_diff", rel);
  out.report.add("epsilon", counterexample_epsilon(s, phi));
  out.report.add("C", counterexample_constant(phi));
  out.report.add_check("per_band_lower_bound", bounds_ok);
  out.report.add_check("running_sum_growth", growth_ok);
  out.report.add_check("envelope_matches_direct", rel <= tol_direct);
}

}  // namespace

Experiment parse_experiment(const std::string& name) {
  for (const auto& n : names())
    if (n.second == name) return n.first;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::string experiment_name(Experiment e) {
  for (const auto& n : names())
    if (n.first == e) return n.second;
  return "unknown";
}

const std::vector<Experiment>& all_experiments() {
  static const std::vector<Experiment> all = [] {
    std::vector<Experiment> v;
    for (const auto& n : names()) v.push_back(n.first);
    return v;
  }();
  return all;
}

ExperimentResult run_experiment(Experiment e, const Config& cfg, std::uint64_t seed) {
  ExperimentResult out(experiment_name(e));
  out.config_digest = digest_hex("experiment=" + experiment_name(e) + "\nseed=" + std::to_string(seed) + "\n" + cfg.canonical());
  out.report.add("seed", std::to_string(seed));
  switch (e) {
    case Experiment::stability_cascade: run_cascade(cfg, seed, out); break;
    case Experiment::mixing: run_mixing(cfg, seed, out); break;
    case Experiment::field_perturbation: run_field_perturbation(cfg, seed, out); break;
    case Experiment::vanishing_diffusion: run_vanishing_diffusion(cfg, seed, out); break;
    case Experiment::regularity: run_regularity(cfg, seed, out); break;
    case Experiment::commutator_integral: run_commutator_integral(cfg, seed, out); break;
    case Experiment::besov_decay: run_besov_decay(cfg, seed, out); break;
    case Experiment::counterexample_part1: run_counterexample_part1(cfg, seed, out); break;
    case Experiment::counterexample_part2: run_counterexample_part2(cfg, seed, out); break;
  }
  return out;
}

void write_outputs(const ExperimentResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "fields");
  {
    std::ofstream os(fs::path(dir) / "report.csv");
    result.report.write_csv(os, result.config_digest);
  }
  {
    std::ofstream os(fs::path(dir) / "fit.csv");
    write_fit_csv(os, result.fits, result.config_digest);
  }
  for (const auto& f : result.fields) write_mixf((fs::path(dir) / "fields" / (f.first + ".mixf")).string(), f.second);
}

}  // namespace mixlab
