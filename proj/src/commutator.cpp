#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mixlab/commutator.hpp"
#include "mixlab/flows.hpp"
#include "mixlab/parallel.hpp"
#include "mixlab/quadrature.hpp"
#include "mixlab/report.hpp"

namespace mixlab {

namespace {

void check_inputs(const Components& u, const ScalarField& rho, double fraction) {
  const TorusGrid& g = rho.grid();
  if (static_cast<int>(u.size()) != g.dim) throw std::invalid_argument("commutator: velocity has wrong component count");
  for (const auto& c : u)
    if (c.grid() != g) throw std::invalid_argument("commutator: velocity and density grids differ");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("commutator: fraction must lie in (0, 1]");
}

// i xi_a on the half layout, zero on Nyquist axes.
std::vector<std::array<cplx, 2>> derivative_table(const TorusGrid& g) {
  std::vector<std::array<cplx, 2>> d(g.spectral_size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto w = wavevector_of(g, i);
    const auto k = mode_of(g, i);
    for (int a = 0; a < g.dim; ++a) {
      const bool nyq = g.n % 2 == 0 && std::abs(k[static_cast<std::size_t>(a)]) == g.n / 2;
      d[i][static_cast<std::size_t>(a)] = nyq ? cplx(0.0) : cplx(0.0, w[a]);
    }
  }
  return d;
}

// Pieces of R that do not depend on the kernel.
struct CommutatorCache {
  TorusGrid g;
  const Components* u = nullptr;
  std::vector<cplx> rho_hat;
  std::vector<std::vector<cplx>> w_hat;  // (u_a rho)^
  std::vector<std::array<cplx, 2>> ddx;
  std::vector<unsigned char> mask;

  CommutatorCache(const Components& uu, const ScalarField& rho, double fraction) : g(rho.grid()), u(&uu) {
    rho_hat = rho.spectrum();
    ddx = derivative_table(g);
    mask.resize(g.spectral_size());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = in_band(g, i, fraction) ? 1 : 0;
    std::vector<double> prod(g.size());
    for (const auto& ua : uu) {
      for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = ua.values()[i] * rho.values()[i];
      std::vector<cplx> h(g.spectral_size());
      forward_transform(g, prod.data(), h.data());
      w_hat.push_back(std::move(h));
    }
  }

  // R^ for the multiplier table T (half layout), truncated to the band.
  std::vector<cplx> spectrum(const std::vector<cplx>& T) const {
    const std::size_t m = g.spectral_size(), N = g.size();
    std::vector<cplx> tmp(m);
    std::vector<double> grad(N), term(N, 0.0);
    for (int a = 0; a < g.dim; ++a) {
      const auto sa = static_cast<std::size_t>(a);
      for (std::size_t i = 0; i < m; ++i) tmp[i] = ddx[i][sa] * T[i] * rho_hat[i];
      inverse_transform(g, tmp.data(), grad.data());
      const auto& ua = (*u)[sa].values();
      for (std::size_t i = 0; i < N; ++i) term[i] += ua[i] * grad[i];
    }
    std::vector<cplx> out(m);
    forward_transform(g, term.data(), out.data());
    for (std::size_t i = 0; i < m; ++i) {
      if (!mask[i]) {
        out[i] = 0.0;
        continue;
      }
      cplx div = 0.0;
      for (int a = 0; a < g.dim; ++a) div += ddx[i][static_cast<std::size_t>(a)] * w_hat[static_cast<std::size_t>(a)][i];
      out[i] -= T[i] * div;
    }
    return out;
  }
};

double rel_l2(const ScalarField& a, const ScalarField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    num += d * d;
    den += b.values()[i] * b.values()[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// Gauss-Legendre sum over one log(delta) panel [a, b].
std::vector<cplx> panel_spectrum(const CommutatorCache& cache, const Mollifier& phi, double a, double b, int n) {
  const GaussRule& rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  std::vector<cplx> acc(cache.g.spectral_size(), 0.0);
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const auto R = cache.spectrum(rescale(phi, std::exp(mid + half * rule.nodes[k])).table(cache.g));
    const double w = half * rule.weights[k];
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * R[i];
  }
  return acc;
}

double spectral_norm2(const TorusGrid& g, const std::vector<cplx>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += mode_weight(g, i) * std::norm(v[i]);
  return s;
}

// Composite Gauss-Legendre in log(delta), panels of width <= 0.5. Each panel doubles its
// node count until its contribution moves by less than 1e-10 of the whole integral.
ScalarField converged_quadrature(const CommutatorCache& cache, const Mollifier& phi, double d1, double d2,
                                 int* nodes) {
  const double a = std::log(d1), b = std::log(d2);
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 0.5)));
  const double width = (b - a) / panels;
  const std::size_t m = cache.g.spectral_size();
  std::vector<std::vector<cplx>> coarse(static_cast<std::size_t>(panels));
  std::vector<cplx> total(m, 0.0);
  for (int p = 0; p < panels; ++p) {
    coarse[static_cast<std::size_t>(p)] = panel_spectrum(cache, phi, a + p * width, a + (p + 1) * width, 8);
    for (std::size_t i = 0; i < m; ++i) total[i] += coarse[static_cast<std::size_t>(p)][i];
  }
  const double scale2 = spectral_norm2(cache.g, total);
  std::fill(total.begin(), total.end(), cplx(0.0));
  int used = 0;
  for (int p = 0; p < panels; ++p) {
    std::vector<cplx> prev = std::move(coarse[static_cast<std::size_t>(p)]);
    int n = 16;
    for (; n <= 512; n *= 2) {
      auto next = panel_spectrum(cache, phi, a + p * width, a + (p + 1) * width, n);
      std::vector<cplx> diff(m);
      for (std::size_t i = 0; i < m; ++i) diff[i] = next[i] - prev[i];
      prev = std::move(next);
      if (spectral_norm2(cache.g, diff) <= 1e-20 * scale2) break;
    }
    used += std::min(n, 512);
    for (std::size_t i = 0; i < m; ++i) total[i] += prev[i];
  }
  if (nodes) *nodes = used;
  return ScalarField::from_spectrum(cache.g, std::move(total));
}

}  // namespace

ScalarField kernel_commutator(const Components& u, const ScalarField& rho, const KernelSpec& k, double fraction) {
  check_inputs(u, rho, fraction);
  CommutatorCache cache(u, rho, fraction);
  return ScalarField::from_spectrum(rho.grid(), cache.spectrum(k.table(rho.grid())));
}

ScalarField dl_commutator(const Components& u, const ScalarField& rho, const Mollifier& phi, double delta,
                          double fraction) {
  return kernel_commutator(u, rho, rescale(phi, delta), fraction);
}

ScalarField integrated_commutator(const Components& u, const ScalarField& rho, const Mollifier& phi, double d1,
                                  double d2, IntegralRoute route, double fraction) {
  if (!(d1 > 0.0 && d1 < d2)) throw std::invalid_argument("integrated_commutator: need 0 < delta1 < delta2");
  if (route == IntegralRoute::kernel) return kernel_commutator(u, rho, log_averaged_kernel(phi, d1, d2), fraction);
  check_inputs(u, rho, fraction);
  return converged_quadrature(CommutatorCache(u, rho, fraction), phi, d1, d2, nullptr);
}

IntegralCrossCheck integrated_commutator_crosscheck(const Components& u, const ScalarField& rho, const Mollifier& phi,
                                                    double d1, double d2, double fraction) {
  if (!(d1 > 0.0 && d1 < d2)) throw std::invalid_argument("integrated_commutator: need 0 < delta1 < delta2");
  check_inputs(u, rho, fraction);
  CommutatorCache cache(u, rho, fraction);
  const TorusGrid& g = rho.grid();
  IntegralCrossCheck out;
  out.kernel_route = ScalarField::from_spectrum(g, cache.spectrum(log_averaged_kernel(phi, d1, d2).table(g)));
  out.quadrature_route = converged_quadrature(cache, phi, d1, d2, &out.nodes);
  out.rel_diff = rel_l2(out.quadrature_route, out.kernel_route);
  return out;
}

double shear_symbol(const Mollifier& phi, const Wavevector& xi) {
  const double s = xi.norm();
  if (s == 0.0) return 0.0;
  return -xi[0] * xi[1] * phi.derivative(s) / s;
}

ScalarField shear_oracle(const ScalarField& rho, const Mollifier& phi, double delta, bool require_support) {
  const TorusGrid& g = rho.grid();
  if (g.dim != 2) throw std::invalid_argument("shear_oracle: two-dimensional grids only");
  if (!(delta > 0.0)) throw std::invalid_argument("shear_oracle: delta must be positive");
  const double limit = 0.375 * g.period;
  const double scale = rho.max_abs();
  const auto n = static_cast<std::size_t>(g.n);
  for (std::size_t i = 0; require_support && i < g.size(); ++i)
    if (std::abs(g.centered(static_cast<int>(i % n))) > limit && std::abs(rho.values()[i]) > 1e-12 * scale)
      throw std::invalid_argument("shear_oracle: density not supported in the linear shear region");
  return apply_multiplier(rho, [&](const Wavevector& xi) {
    Wavevector d = xi;
    d.k = {delta * xi[0], delta * xi[1]};
    return cplx(shear_symbol(phi, d));
  });
}

// ---------------------------------------------------------------- scans

std::vector<double> log_delta_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0 && lo < hi)) throw std::invalid_argument("log_delta_grid: need 0 < lo < hi");
  if (per_decade < 1) throw std::invalid_argument("log_delta_grid: per_decade must be >= 1");
  const double decades = std::log10(hi / lo);
  const int steps = std::max(1, static_cast<int>(std::ceil(decades * per_decade - 1e-9)));
  std::vector<double> d(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) d[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / steps);
  d.back() = hi;
  return d;
}

namespace {

double pointwise_norm(const std::vector<std::vector<double>>& parts, const TorusGrid& g, double p) {
  std::vector<double> mag(g.size(), 0.0);
  for (const auto& v : parts)
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] += v[i] * v[i];
  for (double& m : mag) m = std::sqrt(m);
  return lp_norm(g, mag.data(), p);
}

}  // namespace

CommutatorScan commutator_scan(const Components& u, const ScalarField& rho, const Mollifier& phi,
                               const std::vector<double>& deltas, const ExponentTriple& e, double fraction) {
  check_inputs(u, rho, fraction);
  if (deltas.empty()) throw std::invalid_argument("commutator_scan: empty delta grid");
  for (std::size_t i = 0; i < deltas.size(); ++i)
    if (!(deltas[i] > 0.0) || (i > 0 && !(deltas[i] > deltas[i - 1])))
      throw std::invalid_argument("commutator_scan: delta grid must be positive and strictly increasing");
  const TorusGrid& g = rho.grid();
  CommutatorCache cache(u, rho, fraction);

  std::vector<std::vector<double>> uv, hess;
  for (const auto& c : u) {
    uv.push_back(c.values());
    for (const auto& d : gradient(c))
      for (const auto& dd : gradient(d)) hess.push_back(dd.values());
  }
  const double rho_q = lp_norm(rho, e.q);
  const double u_p = pointwise_norm(uv, g, e.p);
  const double hess_p = pointwise_norm(hess, g, e.p);

  CommutatorScan scan;
  scan.delta_grid = deltas;
  scan.exponents = e;
  scan.norms.resize(deltas.size());
  parallel_for(deltas.size(), [&](std::size_t i) {
    scan.norms[i] = lp_norm(ScalarField::from_spectrum(g, cache.spectrum(rescale(phi, deltas[i]).table(g))), e.r);
  });
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    scan.envelope_small.push_back(deltas[i] * rho_q * hess_p);
    scan.envelope_large.push_back(rho_q * u_p / deltas[i]);
  }
  return scan;
}

void write_scan_csv(std::ostream& os, const CommutatorScan& scan) {
  os << "delta,norm_r,envelope_small,envelope_large\n";
  for (std::size_t i = 0; i < scan.delta_grid.size(); ++i)
    os << fmt_double(scan.delta_grid[i]) << ',' << fmt_double(scan.norms[i]) << ','
       << fmt_double(scan.envelope_small[i]) << ',' << fmt_double(scan.envelope_large[i]) << '\n';
}

double besov_commutator_integral(const CommutatorScan& scan, double q) {
  const auto& d = scan.delta_grid;
  if (d.size() < 2) throw std::invalid_argument("besov_commutator_integral: empty delta range");
  if (!(q >= 1.0)) throw std::invalid_argument("besov_commutator_integral: q must be >= 1");
  const double density = static_cast<double>(d.size() - 1) / std::log10(d.back() / d.front());
  if (density < 16.0 - 1e-9) throw std::invalid_argument("besov_commutator_integral: fewer than 16 points per decade");
  if (std::isinf(q)) return *std::max_element(scan.norms.begin(), scan.norms.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < d.size(); ++i)
    total += 0.5 * std::log(d[i + 1] / d[i]) * (std::pow(scan.norms[i], q) + std::pow(scan.norms[i + 1], q));
  return std::pow(total, 1.0 / q);
}

double besov_commutator_integral(const Components& u, const ScalarField& rho, const Mollifier& phi, double q,
                                 double lo, double hi, double r, int per_decade) {
  if (!(lo > 0.0 && lo < hi)) throw std::invalid_argument("besov_commutator_integral: empty delta range");
  // Only the r-norm enters the integral; the envelope exponents split r evenly.
  const ExponentTriple e(2.0 * r, 2.0 * r, r);
  auto scan = commutator_scan(u, rho, phi, log_delta_grid(lo, hi, per_decade), e);
  return besov_commutator_integral(scan, q);
}

double min_window_norm(const CommutatorScan& scan, double lo, double hi) {
  const auto& d = scan.delta_grid;
  if (d.empty() || !(lo <= hi)) throw std::invalid_argument("min_window_norm: empty window");
  const double tol = 1e-12;
  if (lo < d.front() * (1.0 - tol) || hi > d.back() * (1.0 + tol))
    throw std::invalid_argument("min_window_norm: window outside the scan range");
  double best = kInf;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] >= lo * (1.0 - tol) && d[i] <= hi * (1.0 + tol)) best = std::min(best, scan.norms[i]);
  if (std::isinf(best)) throw std::invalid_argument("min_window_norm: no scan point inside the window");
  return best;
}

// ---------------------------------------------------------------- counterexample

double counterexample_cutoff(double radius, double period) {
  return cutoff_profile(1.0 + (radius - 0.1875 * period) / (0.0625 * period));
}

ScalarField cutoff_field(const TorusGrid& g) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto x = centered_point_of(g, i);
    v[i] = counterexample_cutoff(std::hypot(x[0], g.dim == 2 ? x[1] : 0.0), g.period);
  }
  return ScalarField(g, std::move(v));
}

std::array<long, 2> nearest_mode(const TorusGrid& g, const std::array<double, 2>& xi) {
  const double f = g.period / (2.0 * kPi);
  return {std::lround(xi[0] * f), g.dim == 2 ? std::lround(xi[1] * f) : 0L};
}

ScalarField harmonic_density(const TorusGrid& g, const std::array<long, 2>& mode, bool with_cutoff) {
  const long lim = g.n / 2;
  if (std::abs(mode[0]) >= lim || std::abs(mode[1]) >= lim)
    throw std::invalid_argument("harmonic_density: mode at or above the grid Nyquist index");
  const double w0 = g.wavenumber(1) * static_cast<double>(mode[0]);
  const double w1 = g.wavenumber(1) * static_cast<double>(mode[1]);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto x = centered_point_of(g, i);
    const double c = with_cutoff ? counterexample_cutoff(std::hypot(x[0], x[1]), g.period) : 1.0;
    v[i] = c == 0.0 ? 0.0 : c * std::cos(w0 * x[0] + w1 * x[1]);
  }
  return ScalarField(g, std::move(v));
}

void CounterexampleSpec::validate() const {
  if (std::abs(std::hypot(xi_bar[0], xi_bar[1]) - 1.0) > 1e-9)
    throw std::invalid_argument("counterexample: xi_bar must be a unit vector");
  if (!(q >= 1.0 && q < 2.0)) throw std::invalid_argument("counterexample: q must lie in [1, 2)");
  if (n_max < 1) throw std::invalid_argument("counterexample: n_max must be >= 1");
  if (!(c1 > 0.0 && c1 < c2 && c2 < 2.0 * c1)) throw std::invalid_argument("counterexample: need 0 < c1 < c2 < 2 c1");
}

double CounterexampleSpec::amplitude(int n) const { return std::pow(static_cast<double>(n), -1.0 / q); }

double CounterexampleSpec::delta_n(int n) { return std::ldexp(1.0, -n * n); }

double amplitude_power_sum(const CounterexampleSpec& spec, int N, double power) {
  double s = 0.0;
  for (int n = N; n >= 1; --n) s += std::pow(spec.amplitude(n), power);
  return s;
}

namespace {

std::array<long, 2> mode_for_band(const CounterexampleSpec& spec, const TorusGrid& g, int n) {
  const double inv = 1.0 / CounterexampleSpec::delta_n(n);
  return nearest_mode(g, {inv * spec.xi_bar[0], inv * spec.xi_bar[1]});
}

}  // namespace

int max_admissible_n(const CounterexampleSpec& spec, const TorusGrid& g) {
  int best = 0;
  for (int n = 1; n <= 7; ++n) {
    const auto m = mode_for_band(spec, g, n);
    if (std::abs(m[0]) >= g.n / 2 || std::abs(m[1]) >= g.n / 2) break;
    best = n;
  }
  return best;
}

CounterexampleDensity counterexample_density(const CounterexampleSpec& spec, const TorusGrid& g) {
  spec.validate();
  if (g.dim != 2) throw std::invalid_argument("counterexample: two-dimensional grids only");
  const int admissible = max_admissible_n(spec, g);
  if (spec.n_max > admissible) {
    std::ostringstream os;
    os << "counterexample: mode n=" << admissible + 1 << " exceeds the grid Nyquist index; maximal admissible n_max is "
       << admissible;
    throw std::invalid_argument(os.str());
  }
  CounterexampleDensity out;
  std::vector<double> v(g.size(), 0.0);
  for (int n = 1; n <= spec.n_max; ++n) {
    const auto m = mode_for_band(spec, g, n);
    const double a = spec.amplitude(n);
    const auto h = harmonic_density(g, m, spec.with_cutoff);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += a * h.values()[i];
    out.modes.push_back(m);
    out.wavevectors.push_back({g.wavenumber(1) * static_cast<double>(m[0]), g.wavenumber(1) * static_cast<double>(m[1])});
    out.amplitudes.push_back(a);
  }
  out.rho = ScalarField(g, std::move(v));
  return out;
}

double counterexample_epsilon(const CounterexampleSpec& spec, const Mollifier& phi) {
  spec.validate();
  double eps = kInf;
  const int samples = 4000;
  for (int i = 0; i <= samples; ++i) {
    const double s = spec.c1 + (spec.c2 - spec.c1) * i / samples;
    Wavevector w;
    w.dim = 2;
    w.k = {s * spec.xi_bar[0], s * spec.xi_bar[1]};
    eps = std::min(eps, std::abs(shear_symbol(phi, w)));
  }
  return eps;
}

double counterexample_constant(const Mollifier& phi) {
  // d phi^/d xi_2 = phi'(s) xi_2 / s, extremal along the xi_2 axis.
  double a = 0.0, b = 0.0;
  const int samples = 200000;
  for (int i = 1; i <= samples; ++i) {
    const double s = 20.0 * i / samples;
    const double d = std::abs(phi.derivative(s));
    a = std::max(a, d);
    b = std::max(b, s * s * d);
  }
  return std::max(a, b);
}

double band_lower_bound(const CounterexampleSpec& spec, const Mollifier& phi, int n) {
  const double eps = counterexample_epsilon(spec, phi);
  const double C = counterexample_constant(phi);
  const double tail = C * (spec.c1 + 1.0 / spec.c2) * std::pow(4.0, 1.0 - n);
  return (0.5 * std::pow(spec.amplitude(n), spec.q) * std::pow(eps, spec.q) - std::pow(tail, spec.q)) *
         std::log(spec.c2 / spec.c1);
}

std::vector<cplx> modulated_commutator(const Components& u, const ScalarField& f, const std::array<long, 2>& mode,
                                       const Mollifier& phi, double delta, double fraction) {
  const TorusGrid& g = f.grid();
  check_inputs(u, f, fraction);
  if (g.dim != 2) throw std::invalid_argument("modulated_commutator: two-dimensional grids only");
  const std::size_t n = static_cast<std::size_t>(g.n), N = g.size();
  const int band = static_cast<int>(std::floor(fraction * (g.n / 2) + 1e-12));
  const double k0 = g.wavenumber(1);
  const double om0 = k0 * static_cast<double>(mode[0]), om1 = k0 * static_cast<double>(mode[1]);

  // M_a = i (xi_a + omega_a) phi^(delta |xi + omega|) on the band, zero elsewhere.
  std::vector<std::array<cplx, 2>> M(N);
  for (std::size_t i = 0; i < N; ++i) {
    const int a0 = g.signed_index(static_cast<int>(i / n)), a1 = g.signed_index(static_cast<int>(i % n));
    if (std::abs(a0) > band || std::abs(a1) > band) {
      M[i] = {cplx(0.0), cplx(0.0)};
      continue;
    }
    const double x0 = k0 * a0 + om0, x1 = k0 * a1 + om1;
    const double p = phi.profile(delta * std::hypot(x0, x1));
    M[i] = {cplx(0.0, x0 * p), cplx(0.0, x1 * p)};
  }

  std::vector<cplx> fc(N), fh(N), tmp(N), grad(N), term(N, 0.0), acc(N, 0.0), wh(N);
  for (std::size_t i = 0; i < N; ++i) fc[i] = f.values()[i];
  forward_transform_complex(g, fc.data(), fh.data());
  for (std::size_t a = 0; a < 2; ++a) {
    const auto& ua = u[a].values();
    for (std::size_t i = 0; i < N; ++i) tmp[i] = M[i][a] * fh[i];
    inverse_transform_complex(g, tmp.data(), grad.data());
    for (std::size_t i = 0; i < N; ++i) term[i] += ua[i] * grad[i];
    for (std::size_t i = 0; i < N; ++i) tmp[i] = ua[i] * f.values()[i];
    forward_transform_complex(g, tmp.data(), wh.data());
    for (std::size_t i = 0; i < N; ++i) acc[i] += M[i][a] * wh[i];
  }
  forward_transform_complex(g, term.data(), tmp.data());
  for (std::size_t i = 0; i < N; ++i) {
    const int a0 = g.signed_index(static_cast<int>(i / n)), a1 = g.signed_index(static_cast<int>(i % n));
    tmp[i] = (std::abs(a0) > band || std::abs(a1) > band) ? cplx(0.0) : tmp[i] - acc[i];
  }
  std::vector<cplx> z(N);
  inverse_transform_complex(g, tmp.data(), z.data());
  return z;
}

namespace {

// Mean over theta of |b + A cos(theta)|.
double oscillation_mean(double b, double A) {
  b = std::abs(b);
  if (A <= b) return b;
  return (2.0 / kPi) * (std::sqrt(A * A - b * b) + b * std::asin(b / A));
}

std::vector<double> band_nodes(const CounterexampleSpec& spec, int n, int nodes, std::vector<double>* weights) {
  const GaussRule& rule = gauss_legendre(nodes);
  const double dn = CounterexampleSpec::delta_n(n);
  const double a = std::log(spec.c1 * dn), b = std::log(spec.c2 * dn);
  std::vector<double> d;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    d.push_back(std::exp(0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[k]));
    weights->push_back(0.5 * (b - a) * rule.weights[k]);
  }
  return d;
}

}  // namespace

std::vector<BandContribution> counterexample_bands(const CounterexampleSpec& spec, const Mollifier& phi,
                                                   const TorusGrid& g, const std::vector<int>& bands, int nodes) {
  spec.validate();
  if (g.dim != 2) throw std::invalid_argument("counterexample_bands: two-dimensional grids only");
  const Components u = make_flow({FlowKind::periodized_shear, 1.0, 0.0}, g).phase(0);
  const ScalarField chi = spec.with_cutoff ? cutoff_field(g) : ScalarField::constant(g, 1.0);
  // Re(e^{i omega x} Z) fits on the grid when |k_omega| + band < n / 2.
  const long room = g.n / 2 - static_cast<long>(std::floor(kDealias * (g.n / 2) + 1e-12));
  const std::size_t N = g.size();

  std::vector<std::array<long, 2>> modes;
  std::vector<bool> resolved;
  for (int m = 1; m <= spec.n_max; ++m) {
    modes.push_back(mode_for_band(spec, g, m));
    resolved.push_back(std::abs(modes.back()[0]) < room && std::abs(modes.back()[1]) < room);
  }
  std::vector<std::array<double, 2>> x(N);
  for (std::size_t i = 0; i < N; ++i) x[i] = point_of(g, i);

  std::vector<BandContribution> out;
  for (int n : bands) {
    if (n < 1 || n > spec.n_max) throw std::invalid_argument("counterexample_bands: band outside 1..n_max");
    std::vector<double> w;
    const auto deltas = band_nodes(spec, n, nodes, &w);
    std::vector<double> val(deltas.size()), err(deltas.size());
    parallel_for(deltas.size(), [&](std::size_t k) {
      std::vector<double> b(N, 0.0);
      std::vector<std::vector<cplx>> loose;
      std::vector<double> loose_norm, loose_amp;
      for (std::size_t m = 0; m < modes.size(); ++m) {
        const double a = spec.amplitude(static_cast<int>(m) + 1);
        auto z = modulated_commutator(u, chi, modes[m], phi, deltas[k]);
        if (resolved[m]) {
          const double w0 = g.wavenumber(1) * static_cast<double>(modes[m][0]);
          const double w1 = g.wavenumber(1) * static_cast<double>(modes[m][1]);
          for (std::size_t i = 0; i < N; ++i)
            b[i] += a * std::real(std::polar(1.0, w0 * x[i][0] + w1 * x[i][1]) * z[i]);
        } else {
          double l1 = 0.0;
          for (const auto& c : z) l1 += std::abs(c);
          loose_norm.push_back(a * l1 * g.cell_volume());
          loose_amp.push_back(a);
          loose.push_back(std::move(z));
        }
      }
      double total = 0.0, bound = 0.0;
      if (loose.empty()) {
        for (double v : b) total += std::abs(v);
      } else {
        const auto dom = static_cast<std::size_t>(
            std::max_element(loose_norm.begin(), loose_norm.end()) - loose_norm.begin());
        for (std::size_t i = 0; i < N; ++i) total += oscillation_mean(b[i], loose_amp[dom] * std::abs(loose[dom][i]));
        for (std::size_t j = 0; j < loose.size(); ++j)
          if (j != dom) bound += loose_norm[j];
      }
      val[k] = total * g.cell_volume();
      err[k] = bound;
    });
    BandContribution bc;
    bc.n = n;
    bc.delta_lo = spec.c1 * CounterexampleSpec::delta_n(n);
    bc.delta_hi = spec.c2 * CounterexampleSpec::delta_n(n);
    for (std::size_t k = 0; k < deltas.size(); ++k) {
      bc.value += w[k] * std::pow(val[k], spec.q);
      bc.error_bound += w[k] * (std::pow(val[k] + err[k], spec.q) - std::pow(val[k], spec.q));
    }
    bc.lower_bound = band_lower_bound(spec, phi, n);
    bc.method = "envelope";
    out.push_back(bc);
  }
  return out;
}

BandContribution counterexample_band_direct(const CounterexampleSpec& spec, const Mollifier& phi,
                                            const TorusGrid& g, int n, int nodes) {
  CounterexampleSpec local = spec;
  local.n_max = n;
  const auto dens = counterexample_density(local, g);
  const Components u = make_flow({FlowKind::periodized_shear, 1.0, 0.0}, g).phase(0);
  std::vector<double> w;
  const auto deltas = band_nodes(spec, n, nodes, &w);
  CommutatorCache cache(u, dens.rho, kDealias);
  std::vector<double> val(deltas.size());
  parallel_for(deltas.size(), [&](std::size_t k) {
    val[k] = lp_norm(ScalarField::from_spectrum(g, cache.spectrum(rescale(phi, deltas[k]).table(g))), 1.0);
  });
  BandContribution bc;
  bc.n = n;
  bc.delta_lo = spec.c1 * CounterexampleSpec::delta_n(n);
  bc.delta_hi = spec.c2 * CounterexampleSpec::delta_n(n);
  for (std::size_t k = 0; k < deltas.size(); ++k) bc.value += w[k] * std::pow(val[k], spec.q);
  bc.lower_bound = band_lower_bound(spec, phi, n);
  bc.method = "direct";
  return bc;
}

}  // namespace mixlab
