#include "mixlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "mixlab/quadrature.hpp"
#include "mixlab/report.hpp"

namespace mixlab {

double cutoff_profile(double s) {
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return 0.0;
  const double a = std::exp(-1.0 / (2.0 - s));
  const double b = std::exp(-1.0 / (s - 1.0));
  return a / (a + b);
}

double cutoff_profile_derivative(double s) {
  if (s <= 1.0 || s >= 2.0) return 0.0;
  const double u = 2.0 - s, v = s - 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / v);
  const double ab = a + b;
  return -(a * b) / (ab * ab) * (1.0 / (u * u) + 1.0 / (v * v));
}

Mollifier make_frequency_cutoff() {
  Mollifier m;
  m.name = "frequency_cutoff";
  m.profile = cutoff_profile;
  m.derivative = cutoff_profile_derivative;
  m.is_frequency_cutoff = true;
  m.is_positive = false;
  m.breakpoints = {1.0, 1.5, 2.0};
  return m;
}

Mollifier make_gaussian() {
  Mollifier m;
  m.name = "gaussian";
  m.profile = [](double s) { return std::exp(-0.5 * s * s); };
  m.derivative = [](double s) { return -s * std::exp(-0.5 * s * s); };
  m.is_frequency_cutoff = false;
  m.is_positive = true;
  m.breakpoints = {0.5, 1.0, 2.0, 4.0, 9.0};
  return m;
}

// ------------------------------------------------------------ Littlewood-Paley

double LittlewoodPaleyFamily::chi(double s) const { return cutoff_profile(s) - cutoff_profile(2.0 * s); }

double LittlewoodPaleyFamily::chi_derivative(double s) const {
  return cutoff_profile_derivative(s) - 2.0 * cutoff_profile_derivative(2.0 * s);
}

LittlewoodPaleyFamily make_lp_family(int n_min, int n_max) {
  if (n_min > n_max) throw std::invalid_argument("make_lp_family: empty block range");
  LittlewoodPaleyFamily f;
  f.n_min = n_min;
  f.n_max = n_max;
  return f;
}

LittlewoodPaleyFamily lp_family_for(const TorusGrid& g) {
  const double lo = g.wavenumber(1);
  const double hi = g.nyquist() * std::sqrt(static_cast<double>(g.dim));
  return make_lp_family(static_cast<int>(std::floor(std::log2(lo))), static_cast<int>(std::ceil(std::log2(hi))));
}

// ---------------------------------------------------------------- KernelSpec

namespace {

std::vector<double> scaled_splits(const Mollifier& phi, double s) {
  std::vector<double> out;
  for (double b : phi.breakpoints) out.push_back(b / s);
  return out;
}

}  // namespace

bool KernelSpec::is_radial() const {
  return kind != KernelKind::derived && kind != KernelKind::custom;
}

double KernelSpec::radial(double s) const {
  switch (kind) {
    case KernelKind::mollifier_at_scale:
      return phi.profile(delta * s);
    case KernelKind::log_averaged:
      if (s == 0.0) return std::log(delta2 / delta1);
      return integrate_dlog([&](double d) { return phi.profile(d * s); }, delta1, delta2, scaled_splits(phi, s));
    case KernelKind::log_laplacian:
      return std::log1p(s * s);
    case KernelKind::lp_block:
      return family.block(block, s);
    default:
      throw std::logic_error("KernelSpec::radial: kernel is not radial");
  }
}

double KernelSpec::radial_derivative(double s) const {
  switch (kind) {
    case KernelKind::mollifier_at_scale:
      return delta * phi.derivative(delta * s);
    case KernelKind::log_averaged:
      if (s == 0.0) return 0.0;
      // d/ds of int phi^(d s) dd/d = int phi^'(d s) dd, still done in log(d).
      return integrate_dlog([&](double d) { return d * phi.derivative(d * s); }, delta1, delta2,
                            scaled_splits(phi, s));
    case KernelKind::log_laplacian:
      return 2.0 * s / (1.0 + s * s);
    case KernelKind::lp_block:
      return std::ldexp(family.chi_derivative(std::ldexp(s, -block)), -block);
    default:
      throw std::logic_error("KernelSpec::radial_derivative: kernel is not radial");
  }
}

bool KernelSpec::has_gradient() const { return is_radial(); }

double KernelSpec::symbol(const Wavevector& xi) const {
  if (is_radial()) return radial(xi.norm());
  if (kind == KernelKind::derived) {
    if (xi[i] == 0.0) return 0.0;
    return -xi[i] * parent->symbol_gradient(xi, j);
  }
  return custom_symbol ? custom_symbol(xi) : 0.0;
}

double KernelSpec::symbol_gradient(const Wavevector& xi, int axis) const {
  if (!has_gradient()) throw std::invalid_argument("KernelSpec: no registered symbol derivative for " + label);
  const double s = xi.norm();
  if (s == 0.0) return 0.0;
  return radial_derivative(s) * xi[axis] / s;
}

std::vector<cplx> KernelSpec::table(const TorusGrid& g) const {
  const bool derived_radial = kind == KernelKind::derived && parent->is_radial();
  if (!is_radial() && !derived_radial)
    return sample_symbol(g, [this](const Wavevector& w) { return cplx(symbol(w)); });
  const KernelSpec& base = derived_radial ? *parent : *this;
  std::vector<cplx> t(g.spectral_size());
  std::unordered_map<long long, double> shell;
  const double unit = g.wavenumber(1);
  for (std::size_t idx = 0; idx < t.size(); ++idx) {
    auto k = mode_of(g, idx);
    long long key = static_cast<long long>(k[0]) * k[0] + (g.dim == 2 ? static_cast<long long>(k[1]) * k[1] : 0);
    auto it = shell.find(key);
    if (it == shell.end()) {
      const double s = unit * std::sqrt(static_cast<double>(key));
      it = shell.emplace(key, derived_radial ? base.radial_derivative(s) : base.radial(s)).first;
    }
    if (!derived_radial) {
      t[idx] = it->second;
      continue;
    }
    // -xi_i xi_j K'(s)/s; a Nyquist axis in an off-diagonal entry averages to zero.
    if (key == 0) {
      t[idx] = 0.0;
      continue;
    }
    if (i != j && (std::abs(k[static_cast<std::size_t>(i)]) == g.n / 2 || std::abs(k[static_cast<std::size_t>(j)]) == g.n / 2)) {
      t[idx] = 0.0;
      continue;
    }
    const double s = unit * std::sqrt(static_cast<double>(key));
    const Wavevector w = wavevector_of(g, idx);
    t[idx] = -w[i] * w[j] * it->second / s;
  }
  return t;
}

KernelSpec rescale(const Mollifier& phi, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("rescale: delta must be positive");
  KernelSpec k;
  k.kind = KernelKind::mollifier_at_scale;
  k.label = phi.name + "@" + fmt_double(delta);
  k.phi = phi;
  k.delta = delta;
  return k;
}

KernelSpec log_averaged_kernel(const Mollifier& phi, double delta1, double delta2) {
  if (!(delta1 > 0.0)) throw std::invalid_argument("log_averaged_kernel: delta1 must be positive");
  if (!(delta1 < delta2)) throw std::invalid_argument("log_averaged_kernel: need delta1 < delta2");
  KernelSpec k;
  k.kind = KernelKind::log_averaged;
  k.label = "logavg(" + phi.name + "," + fmt_double(delta1) + "," + fmt_double(delta2) + ")";
  k.phi = phi;
  k.delta1 = delta1;
  k.delta2 = delta2;
  return k;
}

KernelSpec log_laplacian() {
  KernelSpec k;
  k.kind = KernelKind::log_laplacian;
  k.label = "log_laplacian";
  return k;
}

KernelSpec lp_block(const LittlewoodPaleyFamily& family, int n) {
  KernelSpec k;
  k.kind = KernelKind::lp_block;
  k.label = "lp_block(" + std::to_string(n) + ")";
  k.family = family;
  k.block = n;
  return k;
}

KernelSpec custom_kernel(const std::string& label, std::function<double(const Wavevector&)> symbol) {
  KernelSpec k;
  k.kind = KernelKind::custom;
  k.label = label;
  k.custom_symbol = std::move(symbol);
  return k;
}

KernelSpec zero_kernel() {
  return custom_kernel("zero", [](const Wavevector&) { return 0.0; });
}

ScalarField convolve(const ScalarField& f, const KernelSpec& k) { return apply_table(f, k.table(f.grid())); }

bool reproduction_identity_check(const Mollifier& phi, double delta, double delta_prime, const TorusGrid& g) {
  if (!phi.is_frequency_cutoff) throw std::invalid_argument("reproduction_identity_check: needs a frequency cutoff");
  if (!(delta_prime > 0.0) || !(delta >= 2.0 * delta_prime))
    throw std::invalid_argument("reproduction_identity_check: hypothesis delta >= 2 delta' violated");
  for (std::size_t idx = 0; idx < g.spectral_size(); ++idx) {
    const double s = wavevector_of(g, idx).norm();
    const double left = phi.profile(delta_prime * s);
    const double right = phi.profile(delta * s);
    if (left * right != right) return false;
  }
  return true;
}

// ------------------------------------------------------------ CZ estimates

double CzReport::estimate() const { return std::max({sup_xd_K, sup_xd1_gradK, sup_symbol}); }

ScalarField physical_kernel(const KernelSpec& k, const TorusGrid& g) {
  return (1.0 / g.cell_volume()) * ScalarField::from_spectrum(g, k.table(g));
}

CzReport cz_norm_estimate(const KernelSpec& k, const TorusGrid& g) {
  if (k.kind == KernelKind::log_laplacian)
    throw std::invalid_argument("cz_norm_estimate: log_laplacian kernel is not locally integrable; use its derived kernels");
  const auto table = k.table(g);
  const double inv_cell = 1.0 / g.cell_volume();
  CzReport r;
  double edge = 0.0;
  const int edge_index = g.n / 2 - g.n / 16;
  for (std::size_t idx = 0; idx < table.size(); ++idx) {
    r.sup_symbol = std::max(r.sup_symbol, std::abs(table[idx]));
    auto m = mode_of(g, idx);
    if (std::abs(m[0]) >= edge_index || (g.dim == 2 && m[1] >= edge_index)) edge = std::max(edge, std::abs(table[idx]));
  }
  r.edge_ratio = r.sup_symbol > 0.0 ? edge / r.sup_symbol : 0.0;

  std::vector<double> kx(g.size());
  inverse_transform(g, table.data(), kx.data());
  std::vector<std::vector<double>> grads;
  for (int a = 0; a < g.dim; ++a) {
    std::vector<cplx> d(table.size());
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
      auto m = mode_of(g, idx);
      int ka = m[static_cast<std::size_t>(a)];
      d[idx] = std::abs(ka) == g.n / 2 ? cplx(0.0) : table[idx] * cplx(0.0, g.wavenumber(ka));
    }
    std::vector<double> v(g.size());
    inverse_transform(g, d.data(), v.data());
    grads.push_back(std::move(v));
  }
  for (std::size_t i = 1; i < g.size(); ++i) {
    auto x = centered_point_of(g, i);
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double rad = std::sqrt(r2);
    const double kval = std::abs(kx[i]) * inv_cell;
    double g2 = 0.0;
    for (const auto& v : grads) g2 += v[i] * v[i];
    const double gval = std::sqrt(g2) * inv_cell;
    r.sup_xd_K = std::max(r.sup_xd_K, std::pow(rad, g.dim) * kval);
    r.sup_xd1_gradK = std::max(r.sup_xd1_gradK, std::pow(rad, g.dim + 1) * gval);
  }
  return r;
}

std::vector<KernelSpec> cz_derived_kernels(const KernelSpec& k, int dim) {
  if (!k.has_gradient()) throw std::invalid_argument("cz_derived_kernels: no registered symbol derivative for " + k.label);
  if (dim != 1 && dim != 2) throw std::invalid_argument("cz_derived_kernels: dim must be 1 or 2");
  auto parent = std::make_shared<const KernelSpec>(k);
  std::vector<KernelSpec> out;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      KernelSpec d;
      d.kind = KernelKind::derived;
      d.label = k.label + "'[" + std::to_string(a) + "," + std::to_string(b) + "]";
      d.i = a;
      d.j = b;
      d.parent = parent;
      out.push_back(std::move(d));
    }
  return out;
}

void write_symbol_csv(std::ostream& os, const KernelSpec& k, const std::vector<double>& radii) {
  os << "abs_xi,value\n";
  for (double s : radii) {
    Wavevector w;
    w.dim = 2;
    w.k = {s, 0.0};
    os << fmt_double(s) << "," << fmt_double(k.symbol(w)) << "\n";
  }
}

void write_cz_csv_header(std::ostream& os) { os << "kernel,sup_xd_K,sup_xd1_gradK,sup_symbol,estimate\n"; }

void write_cz_csv_row(std::ostream& os, const std::string& label, const CzReport& r) {
  os << label << "," << fmt_double(r.sup_xd_K) << "," << fmt_double(r.sup_xd1_gradK) << ","
     << fmt_double(r.sup_symbol) << "," << fmt_double(r.estimate()) << "\n";
}

}  // namespace mixlab
