#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace mixlab {

using cplx = std::complex<double>;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

// Periodic box [0, period)^dim sampled with n points per axis.
// Real arrays are row-major with the last axis fastest. Spectral arrays use the
// r2c half layout: the last axis keeps k = 0..n/2, other axes run 0..n-1 with
// index a standing for a (a <= n/2) or a - n.
struct TorusGrid {
  int dim = 2;
  int n = 64;
  double period = 1.0;

  TorusGrid() = default;
  TorusGrid(int dim, int n, double period);

  std::size_t size() const;
  std::size_t spectral_size() const;
  int half() const { return n / 2 + 1; }
  double spacing() const { return period / n; }
  double cell_volume() const;
  double volume() const;
  double coordinate(int j) const { return period * j / n; }
  // Coordinate folded into [-period/2, period/2).
  double centered(int j) const;
  double wavenumber(int k) const { return 2.0 * kPi * k / period; }
  int signed_index(int a) const { return a <= n / 2 ? a : a - n; }
  double nyquist() const { return wavenumber(n / 2); }

  bool operator==(const TorusGrid& o) const { return dim == o.dim && n == o.n && period == o.period; }
  bool operator!=(const TorusGrid& o) const { return !(*this == o); }
};

struct Wavevector {
  std::array<double, 2> k{0.0, 0.0};
  int dim = 1;
  double operator[](int i) const { return k[static_cast<std::size_t>(i)]; }
  double norm2() const { return k[0] * k[0] + k[1] * k[1]; }
  double norm() const;
};

// Integer mode of a spectral index (second entry unused in 1-D).
std::array<int, 2> mode_of(const TorusGrid& g, std::size_t idx);
Wavevector wavevector_of(const TorusGrid& g, std::size_t idx);
// Physical point of a real-array index, coordinates in [0, period).
std::array<double, 2> point_of(const TorusGrid& g, std::size_t idx);
std::array<double, 2> centered_point_of(const TorusGrid& g, std::size_t idx);
// Number of full-spectrum modes a half-layout entry stands for (1 or 2).
double mode_weight(const TorusGrid& g, std::size_t idx);
// True when every |k_i| <= floor(fraction * n / 2).
bool in_band(const TorusGrid& g, std::size_t idx, double fraction);

// Raw transforms. Forward is unscaled, inverse carries 1/N^dim.
void forward_transform(const TorusGrid& g, const double* in, cplx* out);
void inverse_transform(const TorusGrid& g, const cplx* in, double* out);
// Full complex layout (n or n x n), same scaling convention. Out-of-place only.
void forward_transform_complex(const TorusGrid& g, const cplx* in, cplx* out);
void inverse_transform_complex(const TorusGrid& g, const cplx* in, cplx* out);

// Real periodic field. Values are immutable; spectral coefficients are computed
// once on demand and shared between copies.
class ScalarField {
 public:
  ScalarField();
  ScalarField(const TorusGrid& g, std::vector<double> values);

  static ScalarField zeros(const TorusGrid& g);
  static ScalarField constant(const TorusGrid& g, double c);
  static ScalarField from_function(const TorusGrid& g,
                                   const std::function<double(const std::array<double, 2>&)>& f);
  static ScalarField from_spectrum(const TorusGrid& g, std::vector<cplx> coeffs);

  const TorusGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return *values_; }
  std::size_t size() const { return values_->size(); }
  double operator[](std::size_t i) const { return (*values_)[i]; }
  const std::vector<cplx>& spectrum() const;

  double mean() const;
  double max_abs() const;

 private:
  struct Cache;
  TorusGrid grid_;
  std::shared_ptr<const std::vector<double>> values_;
  std::shared_ptr<Cache> cache_;
};

ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double s, const ScalarField& a);
ScalarField pointwise_product(const ScalarField& a, const ScalarField& b);

// d components per phase; the active phase at time t is floor(t / switch_period)
// modulo the number of phases. Steady fields have a single phase.
class VelocityField {
 public:
  VelocityField() = default;
  VelocityField(const TorusGrid& g, std::vector<std::vector<ScalarField>> phases, double switch_period);
  static VelocityField steady(std::vector<ScalarField> components);
  static VelocityField zero(const TorusGrid& g);

  const TorusGrid& grid() const { return grid_; }
  int dim() const { return grid_.dim; }
  bool is_steady() const { return phases_.size() == 1; }
  double switch_period() const { return switch_period_; }
  std::size_t phase_count() const { return phases_.size(); }
  std::size_t phase_index(double t) const;
  const std::vector<ScalarField>& phase(std::size_t i) const { return phases_[i]; }
  const std::vector<ScalarField>& at(double t) const { return phases_[phase_index(t)]; }
  double max_speed() const;
  VelocityField scaled(double a) const;
  VelocityField plus(const VelocityField& w, double eps) const;

 private:
  TorusGrid grid_;
  std::vector<std::vector<ScalarField>> phases_;
  double switch_period_ = kInf;
};

struct ExponentTriple {
  double p = 2.0;
  double q = 2.0;
  double r = 1.0;
  ExponentTriple(double p, double q, double r);
  static ExponentTriple from_pq(double p, double q);
};

// (sum |f|^p dx)^(1/p); max |f| for p = inf. Rejects non-finite input.
double lp_norm(const ScalarField& f, double p);
double lp_norm(const TorusGrid& g, const double* v, double p);

using SymbolFn = std::function<cplx(const Wavevector&)>;

// Symbol sampled on the half layout. Self-conjugate (Nyquist) axes average the
// two signs so the output stays real. Throws when symbol(-xi) != conj(symbol(xi)).
std::vector<cplx> sample_symbol(const TorusGrid& g, const SymbolFn& symbol);
ScalarField apply_multiplier(const ScalarField& f, const SymbolFn& symbol);
ScalarField apply_table(const ScalarField& f, const std::vector<cplx>& table);

std::vector<ScalarField> gradient(const ScalarField& f);
ScalarField divergence(const std::vector<ScalarField>& components);
ScalarField divergence(const VelocityField& v, double t);

// Trigonometric interpolant of f on an n-point grid of the same period. Modes at or
// above min(n, f.n) / 2 are dropped.
ScalarField resample(const ScalarField& f, int n);

// ||f||_2 from spectral coefficients.
double spectral_l2_norm(const ScalarField& f);
// Zero all modes outside the band |k_i| <= floor(fraction * n / 2).
ScalarField band_limit(const ScalarField& f, double fraction);
// Relative L2 content outside that band.
double out_of_band_fraction(const ScalarField& f, double fraction);

// MIXF dump: "MIXF", u16 version, u16 dim, u32 n, f64 period, f64 values (LE).
void write_mixf(std::ostream& os, const ScalarField& f);
ScalarField read_mixf(std::istream& is);
void write_mixf(const std::string& path, const ScalarField& f);
ScalarField read_mixf(const std::string& path);

// Seeded real field with Gaussian random coefficients on |k_i| <= kmax, zero mean.
ScalarField random_band_limited(const TorusGrid& g, int kmax, unsigned long long seed);

}  // namespace mixlab
