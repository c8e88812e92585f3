#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "mixlab/flows.hpp"
#include "mixlab/kernels.hpp"

namespace mixlab {

FlowKind parse_flow_kind(const std::string& name) {
  if (name == "periodized_shear") return FlowKind::periodized_shear;
  if (name == "alternating_sine_shear") return FlowKind::alternating_sine_shear;
  if (name == "cellular") return FlowKind::cellular;
  throw std::invalid_argument("unknown flow kind: " + name);
}

std::string flow_kind_name(FlowKind k) {
  switch (k) {
    case FlowKind::periodized_shear:
      return "periodized_shear";
    case FlowKind::alternating_sine_shear:
      return "alternating_sine_shear";
    case FlowKind::cellular:
      return "cellular";
  }
  return "unknown";
}

double periodized_shear_profile(double x2, double period) {
  const double a = std::abs(x2);
  const double tau = cutoff_profile(1.0 + (a - 0.375 * period) / (period / 16.0));
  const double sign = x2 < 0.0 ? -1.0 : 1.0;
  return x2 - sign * 0.5 * period * (1.0 - tau);
}

VelocityField make_flow(const FlowSpec& spec, const TorusGrid& g) {
  if (!std::isfinite(spec.amplitude) || spec.amplitude < 0.0)
    throw std::invalid_argument("make_flow: amplitude must be finite and nonnegative");
  if (g.dim != 2) throw std::invalid_argument("make_flow: flows are two-dimensional");
  const double A = spec.amplitude;
  const double k = 2.0 * kPi / g.period;
  const std::size_t n = static_cast<std::size_t>(g.n);
  auto build = [&](auto f) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(i / n, i % n);
    return ScalarField(g, std::move(v));
  };
  const auto zero = ScalarField::zeros(g);
  switch (spec.kind) {
    case FlowKind::periodized_shear: {
      auto u1 = build([&](std::size_t, std::size_t j2) {
        return A * periodized_shear_profile(g.centered(static_cast<int>(j2)), g.period);
      });
      return VelocityField::steady({u1, zero});
    }
    case FlowKind::alternating_sine_shear: {
      if (!(spec.switch_period > 0.0)) throw std::invalid_argument("make_flow: switch_period must be positive");
      auto a = build([&](std::size_t, std::size_t j2) { return A * std::sin(k * g.coordinate(static_cast<int>(j2))); });
      auto b = build([&](std::size_t j1, std::size_t) { return A * std::sin(k * g.coordinate(static_cast<int>(j1))); });
      return VelocityField(g, {{a, zero}, {zero, b}}, spec.switch_period);
    }
    case FlowKind::cellular: {
      auto u1 = build([&](std::size_t j1, std::size_t j2) {
        return -A * k * std::sin(k * g.coordinate(static_cast<int>(j1))) * std::cos(k * g.coordinate(static_cast<int>(j2)));
      });
      auto u2 = build([&](std::size_t j1, std::size_t j2) {
        return A * k * std::cos(k * g.coordinate(static_cast<int>(j1))) * std::sin(k * g.coordinate(static_cast<int>(j2)));
      });
      return VelocityField::steady({u1, u2});
    }
  }
  throw std::invalid_argument("make_flow: unknown kind");
}

double grad_norm(const std::vector<ScalarField>& comps, double p) {
  const TorusGrid& g = comps.front().grid();
  std::vector<double> mag(g.size(), 0.0);
  for (const auto& c : comps)
    for (const auto& d : gradient(c))
      for (std::size_t i = 0; i < mag.size(); ++i) mag[i] += d[i] * d[i];
  for (double& m : mag) m = std::sqrt(m);
  return lp_norm(g, mag.data(), p);
}

double grad_norm_accumulator(const VelocityField& u, double p, double t) {
  if (t < 0.0) throw std::invalid_argument("grad_norm_accumulator: negative time");
  std::map<std::size_t, double> cache;
  auto phase_norm = [&](std::size_t ph) {
    auto it = cache.find(ph);
    if (it == cache.end()) it = cache.emplace(ph, grad_norm(u.phase(ph), p)).first;
    return it->second;
  };
  if (u.is_steady()) return t * phase_norm(0);
  const double sp = u.switch_period();
  double total = 0.0;
  for (long m = 0;; ++m) {
    const double a = static_cast<double>(m) * sp;
    if (a >= t) break;
    const double b = std::min(t, a + sp);
    total += (b - a) * phase_norm(static_cast<std::size_t>(m % static_cast<long>(u.phase_count())));
  }
  return total;
}

}  // namespace mixlab
