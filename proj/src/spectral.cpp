#include "mixlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mixlab {

TorusGrid::TorusGrid(int dim_, int n_, double period_) : dim(dim_), n(n_), period(period_) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("TorusGrid: dim must be 1 or 2");
  if (n < 8 || (n & (n - 1)) != 0)
    throw std::invalid_argument("TorusGrid: points_per_axis must be a power of two >= 8");
  if (!(period > 0.0) || !std::isfinite(period))
    throw std::invalid_argument("TorusGrid: period must be positive and finite");
}

std::size_t TorusGrid::size() const {
  return dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
}

std::size_t TorusGrid::spectral_size() const {
  return dim == 1 ? static_cast<std::size_t>(half()) : static_cast<std::size_t>(n) * half();
}

double TorusGrid::cell_volume() const { return std::pow(spacing(), dim); }
double TorusGrid::volume() const { return std::pow(period, dim); }

double TorusGrid::centered(int j) const {
  double x = coordinate(j);
  return x >= 0.5 * period ? x - period : x;
}

double Wavevector::norm() const { return std::sqrt(norm2()); }

std::array<int, 2> mode_of(const TorusGrid& g, std::size_t idx) {
  if (g.dim == 1) return {static_cast<int>(idx), 0};
  const std::size_t h = static_cast<std::size_t>(g.half());
  return {g.signed_index(static_cast<int>(idx / h)), static_cast<int>(idx % h)};
}

Wavevector wavevector_of(const TorusGrid& g, std::size_t idx) {
  auto m = mode_of(g, idx);
  Wavevector w;
  w.dim = g.dim;
  w.k[0] = g.wavenumber(m[0]);
  w.k[1] = g.dim == 2 ? g.wavenumber(m[1]) : 0.0;
  return w;
}

std::array<double, 2> point_of(const TorusGrid& g, std::size_t idx) {
  if (g.dim == 1) return {g.coordinate(static_cast<int>(idx)), 0.0};
  const std::size_t n = static_cast<std::size_t>(g.n);
  return {g.coordinate(static_cast<int>(idx / n)), g.coordinate(static_cast<int>(idx % n))};
}

std::array<double, 2> centered_point_of(const TorusGrid& g, std::size_t idx) {
  if (g.dim == 1) return {g.centered(static_cast<int>(idx)), 0.0};
  const std::size_t n = static_cast<std::size_t>(g.n);
  return {g.centered(static_cast<int>(idx / n)), g.centered(static_cast<int>(idx % n))};
}

double mode_weight(const TorusGrid& g, std::size_t idx) {
  int last = g.dim == 1 ? static_cast<int>(idx) : static_cast<int>(idx % static_cast<std::size_t>(g.half()));
  return (last == 0 || last == g.n / 2) ? 1.0 : 2.0;
}

bool in_band(const TorusGrid& g, std::size_t idx, double fraction) {
  const int m = static_cast<int>(std::floor(fraction * (g.n / 2) + 1e-12));
  auto k = mode_of(g, idx);
  if (std::abs(k[0]) > m) return false;
  return g.dim == 1 || std::abs(k[1]) <= m;
}

// ---------------------------------------------------------------- ScalarField

struct ScalarField::Cache {
  std::once_flag once;
  std::vector<cplx> coeffs;
};

ScalarField::ScalarField()
    : values_(std::make_shared<const std::vector<double>>()), cache_(std::make_shared<Cache>()) {}

ScalarField::ScalarField(const TorusGrid& g, std::vector<double> values)
    : grid_(g), cache_(std::make_shared<Cache>()) {
  if (values.size() != g.size())
    throw std::invalid_argument("ScalarField: value count does not match grid");
  values_ = std::make_shared<const std::vector<double>>(std::move(values));
}

ScalarField ScalarField::zeros(const TorusGrid& g) { return ScalarField(g, std::vector<double>(g.size(), 0.0)); }

ScalarField ScalarField::constant(const TorusGrid& g, double c) {
  return ScalarField(g, std::vector<double>(g.size(), c));
}

ScalarField ScalarField::from_function(const TorusGrid& g,
                                       const std::function<double(const std::array<double, 2>&)>& f) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(point_of(g, i));
  return ScalarField(g, std::move(v));
}

ScalarField ScalarField::from_spectrum(const TorusGrid& g, std::vector<cplx> coeffs) {
  if (coeffs.size() != g.spectral_size())
    throw std::invalid_argument("ScalarField: coefficient count does not match grid");
  std::vector<double> v(g.size());
  inverse_transform(g, coeffs.data(), v.data());
  return ScalarField(g, std::move(v));
}

ScalarField resample(const ScalarField& f, int n) {
  const TorusGrid& src = f.grid();
  const TorusGrid dst(src.dim, n, src.period);
  const int cut = std::min(src.n, n) / 2;
  const double scale = std::pow(static_cast<double>(n) / src.n, src.dim);
  const auto& c = f.spectrum();
  std::vector<cplx> out(dst.spectral_size(), cplx(0.0));
  auto wrap = [](int k, int m) { return k < 0 ? k + m : k; };
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto k = mode_of(src, i);
    if (std::abs(k[0]) >= cut || std::abs(k[1]) >= cut) continue;
    const std::size_t j = src.dim == 1 ? static_cast<std::size_t>(k[0])
                                       : static_cast<std::size_t>(wrap(k[0], n)) * dst.half() + k[1];
    out[j] = scale * c[i];
  }
  return ScalarField::from_spectrum(dst, std::move(out));
}

const std::vector<cplx>& ScalarField::spectrum() const {
  std::call_once(cache_->once, [this] {
    cache_->coeffs.resize(grid_.spectral_size());
    forward_transform(grid_, values_->data(), cache_->coeffs.data());
  });
  return cache_->coeffs;
}

double ScalarField::mean() const {
  double s = 0.0;
  for (double x : *values_) s += x;
  return s / static_cast<double>(values_->size());
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double x : *values_) m = std::max(m, std::abs(x));
  return m;
}

namespace {

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* what) {
  if (a.grid() != b.grid()) throw std::invalid_argument(std::string(what) + ": incompatible grids");
}

}  // namespace

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b, "operator+");
  std::vector<double> v(a.values());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += b[i];
  return ScalarField(a.grid(), std::move(v));
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b, "operator-");
  std::vector<double> v(a.values());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= b[i];
  return ScalarField(a.grid(), std::move(v));
}

ScalarField operator*(double s, const ScalarField& a) {
  std::vector<double> v(a.values());
  for (double& x : v) x *= s;
  return ScalarField(a.grid(), std::move(v));
}

ScalarField pointwise_product(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b, "pointwise_product");
  std::vector<double> v(a.values());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= b[i];
  return ScalarField(a.grid(), std::move(v));
}

// ------------------------------------------------------------- VelocityField

namespace {

double max_gradient_modulus(const std::vector<ScalarField>& comps) {
  const std::size_t m = comps.front().size();
  std::vector<double> acc(m, 0.0);
  for (const auto& c : comps)
    for (const auto& d : gradient(c))
      for (std::size_t i = 0; i < m; ++i) acc[i] += d[i] * d[i];
  double mx = 0.0;
  for (double a : acc) mx = std::max(mx, a);
  return std::sqrt(mx);
}

}  // namespace

VelocityField::VelocityField(const TorusGrid& g, std::vector<std::vector<ScalarField>> phases,
                             double switch_period)
    : grid_(g), phases_(std::move(phases)), switch_period_(switch_period) {
  if (phases_.empty()) throw std::invalid_argument("VelocityField: no phases");
  if (phases_.size() > 1 && !(switch_period_ > 0.0 && std::isfinite(switch_period_)))
    throw std::invalid_argument("VelocityField: piecewise protocol needs a finite positive switch period");
  for (const auto& ph : phases_) {
    if (static_cast<int>(ph.size()) != g.dim)
      throw std::invalid_argument("VelocityField: component count must equal dim");
    for (const auto& c : ph)
      if (c.grid() != g) throw std::invalid_argument("VelocityField: component on a different grid");
    const double div = divergence(ph).max_abs();
    const double gmax = max_gradient_modulus(ph);
    if (div > 1e-10 * gmax + 1e-300 && div > 0.0) {
      std::ostringstream os;
      os << "VelocityField: divergence " << div << " exceeds 1e-10 x max gradient " << gmax;
      throw std::invalid_argument(os.str());
    }
  }
}

VelocityField VelocityField::steady(std::vector<ScalarField> components) {
  if (components.empty()) throw std::invalid_argument("VelocityField: no components");
  TorusGrid g = components.front().grid();
  return VelocityField(g, {std::move(components)}, kInf);
}

VelocityField VelocityField::zero(const TorusGrid& g) {
  std::vector<ScalarField> c(static_cast<std::size_t>(g.dim), ScalarField::zeros(g));
  return VelocityField(g, {c}, kInf);
}

std::size_t VelocityField::phase_index(double t) const {
  if (phases_.size() == 1) return 0;
  double k = std::floor(t / switch_period_);
  if (k < 0) k = 0;
  return static_cast<std::size_t>(std::fmod(k, static_cast<double>(phases_.size())));
}

double VelocityField::max_speed() const {
  double m = 0.0;
  for (const auto& ph : phases_) {
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      double s = 0.0;
      for (const auto& c : ph) s += c[i] * c[i];
      m = std::max(m, s);
    }
  }
  return std::sqrt(m);
}

VelocityField VelocityField::scaled(double a) const {
  auto ph = phases_;
  for (auto& p : ph)
    for (auto& c : p) c = a * c;
  return VelocityField(grid_, std::move(ph), switch_period_);
}

VelocityField VelocityField::plus(const VelocityField& w, double eps) const {
  if (w.grid() != grid_) throw std::invalid_argument("VelocityField::plus: incompatible grids");
  if (!w.is_steady() && (w.phase_count() != phase_count() || w.switch_period() != switch_period_))
    throw std::invalid_argument("VelocityField::plus: perturbation must be steady or share the protocol");
  auto ph = phases_;
  for (std::size_t i = 0; i < ph.size(); ++i) {
    const auto& wp = w.phase(w.is_steady() ? 0 : i);
    for (std::size_t c = 0; c < ph[i].size(); ++c) ph[i][c] = ph[i][c] + eps * wp[c];
  }
  return VelocityField(grid_, std::move(ph), switch_period_);
}

// ------------------------------------------------------------ ExponentTriple

namespace {
double inv(double x) { return std::isinf(x) ? 0.0 : 1.0 / x; }
}  // namespace

ExponentTriple::ExponentTriple(double p_, double q_, double r_) : p(p_), q(q_), r(r_) {
  if (!(p > 1.0)) throw std::invalid_argument("ExponentTriple: p must lie in (1, inf]");
  if (!(q > 1.0)) throw std::invalid_argument("ExponentTriple: q must lie in (1, inf]");
  if (!(r >= 1.0) || std::isinf(r)) throw std::invalid_argument("ExponentTriple: r must lie in [1, inf)");
  if (std::abs(inv(r) - inv(p) - inv(q)) > 1e-12)
    throw std::invalid_argument("ExponentTriple: 1/r must equal 1/p + 1/q");
}

ExponentTriple ExponentTriple::from_pq(double p, double q) {
  double s = inv(p) + inv(q);
  if (!(s > 0.0)) throw std::invalid_argument("ExponentTriple: p and q cannot both be infinite");
  return ExponentTriple(p, q, 1.0 / s);
}

// ------------------------------------------------------------------ norms

double lp_norm(const TorusGrid& g, const double* v, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: exponent must be >= 1");
  const std::size_t m = g.size();
  double mx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << "lp_norm: non-finite value at index " << i;
      throw std::invalid_argument(os.str());
    }
    mx = std::max(mx, std::abs(v[i]));
  }
  if (std::isinf(p) || mx == 0.0) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += std::pow(std::abs(v[i]) / mx, p);
  return mx * std::pow(s * g.cell_volume(), 1.0 / p);
}

double lp_norm(const ScalarField& f, double p) { return lp_norm(f.grid(), f.values().data(), p); }

// ------------------------------------------------------------- multipliers

std::vector<cplx> sample_symbol(const TorusGrid& g, const SymbolFn& symbol) {
  const std::size_t m = g.spectral_size();
  std::vector<cplx> table(m);
  std::vector<double> mismatch(m, 0.0);
  double smax = 0.0;
  const int ny = g.n / 2;
  for (std::size_t idx = 0; idx < m; ++idx) {
    Wavevector w = wavevector_of(g, idx);
    auto k = mode_of(g, idx);
    cplx s = symbol(w);
    Wavevector neg = w;
    neg.k[0] = -w.k[0];
    neg.k[1] = -w.k[1];
    cplx sn = symbol(neg);
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
      throw std::invalid_argument("apply_multiplier: symbol not finite on the grid");
    mismatch[idx] = std::abs(sn - std::conj(s));
    smax = std::max(smax, std::abs(s));

    bool nyq0 = std::abs(k[0]) == ny;
    bool nyq1 = g.dim == 2 && k[1] == ny;
    if (nyq0 || nyq1) {
      // Self-conjugate axis: average the two sign choices.
      cplx acc = 0.0;
      int count = 0;
      for (int s0 : {1, -1}) {
        if (!nyq0 && s0 < 0) continue;
        for (int s1 : {1, -1}) {
          if (!nyq1 && s1 < 0) continue;
          Wavevector v = w;
          v.k[0] *= s0;
          v.k[1] *= s1;
          acc += symbol(v);
          ++count;
        }
      }
      s = acc / static_cast<double>(count);
    }
    table[idx] = s;
  }
  for (std::size_t idx = 0; idx < m; ++idx) {
    double tol = 1e-12 * std::abs(table[idx]) + 1e-13 * smax;
    if (mismatch[idx] > tol) {
      std::ostringstream os;
      os << "apply_multiplier: symbol breaks conjugate symmetry at spectral index " << idx
         << " (output would be complex)";
      throw std::invalid_argument(os.str());
    }
  }
  return table;
}

ScalarField apply_table(const ScalarField& f, const std::vector<cplx>& table) {
  const auto& c = f.spectrum();
  if (table.size() != c.size()) throw std::invalid_argument("apply_table: table size mismatch");
  std::vector<cplx> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i] * table[i];
  return ScalarField::from_spectrum(f.grid(), std::move(out));
}

ScalarField apply_multiplier(const ScalarField& f, const SymbolFn& symbol) {
  return apply_table(f, sample_symbol(f.grid(), symbol));
}

namespace {

// i xi_axis with the Nyquist entry zeroed (its symmetric average).
std::vector<cplx> derivative_table(const TorusGrid& g, int axis) {
  std::vector<cplx> t(g.spectral_size());
  for (std::size_t idx = 0; idx < t.size(); ++idx) {
    auto k = mode_of(g, idx);
    int ka = k[static_cast<std::size_t>(axis)];
    t[idx] = (std::abs(ka) == g.n / 2) ? cplx(0.0) : cplx(0.0, g.wavenumber(ka));
  }
  return t;
}

}  // namespace

std::vector<ScalarField> gradient(const ScalarField& f) {
  std::vector<ScalarField> out;
  for (int a = 0; a < f.grid().dim; ++a) out.push_back(apply_table(f, derivative_table(f.grid(), a)));
  return out;
}

ScalarField divergence(const std::vector<ScalarField>& comps) {
  if (comps.empty()) throw std::invalid_argument("divergence: no components");
  const TorusGrid& g = comps.front().grid();
  if (static_cast<int>(comps.size()) != g.dim) throw std::invalid_argument("divergence: component count");
  std::vector<cplx> acc(g.spectral_size(), 0.0);
  for (int a = 0; a < g.dim; ++a) {
    if (comps[static_cast<std::size_t>(a)].grid() != g) throw std::invalid_argument("divergence: grids");
    auto t = derivative_table(g, a);
    const auto& c = comps[static_cast<std::size_t>(a)].spectrum();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += t[i] * c[i];
  }
  return ScalarField::from_spectrum(g, std::move(acc));
}

ScalarField divergence(const VelocityField& v, double t) { return divergence(v.at(t)); }

double spectral_l2_norm(const ScalarField& f) {
  const TorusGrid& g = f.grid();
  const auto& c = f.spectrum();
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += mode_weight(g, i) * std::norm(c[i]);
  const double nn = static_cast<double>(g.size());
  return std::sqrt(s * g.volume() / (nn * nn));
}

ScalarField band_limit(const ScalarField& f, double fraction) {
  const TorusGrid& g = f.grid();
  std::vector<cplx> c = f.spectrum();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (!in_band(g, i, fraction)) c[i] = 0.0;
  return ScalarField::from_spectrum(g, std::move(c));
}

double out_of_band_fraction(const ScalarField& f, double fraction) {
  const TorusGrid& g = f.grid();
  const auto& c = f.spectrum();
  double out = 0.0, all = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double e = mode_weight(g, i) * std::norm(c[i]);
    all += e;
    if (!in_band(g, i, fraction)) out += e;
  }
  return all > 0.0 ? std::sqrt(out / all) : 0.0;
}

ScalarField random_band_limited(const TorusGrid& g, int kmax, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<cplx> c(g.spectral_size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto k = mode_of(g, i);
    double re = normal(rng), im = normal(rng);
    bool keep = std::abs(k[0]) <= kmax && (g.dim == 1 || std::abs(k[1]) <= kmax) && i != 0;
    if (keep) c[i] = cplx(re, im) * static_cast<double>(g.size());
  }
  // Self-conjugate entries must be real.
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto k = mode_of(g, i);
    bool self = (g.dim == 1) ? (k[0] == 0 || k[0] == g.n / 2)
                             : ((k[1] == 0 || k[1] == g.n / 2) && (k[0] == 0 || std::abs(k[0]) == g.n / 2));
    if (self) c[i] = c[i].real();
  }
  if (g.dim == 2) {
    // Columns k2 = 0 and n/2 hold both k1 and -k1; keep them Hermitian.
    const std::size_t h = static_cast<std::size_t>(g.half());
    for (int col : {0, g.n / 2})
      for (int a = 1; a < g.n / 2; ++a) {
        std::size_t i = static_cast<std::size_t>(a) * h + static_cast<std::size_t>(col);
        std::size_t j = static_cast<std::size_t>(g.n - a) * h + static_cast<std::size_t>(col);
        c[j] = std::conj(c[i]);
      }
  }
  ScalarField f = ScalarField::from_spectrum(g, std::move(c));
  return (1.0 / lp_norm(f, 2.0)) * f;
}

}  // namespace mixlab
