#pragma once

#include <cmath>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mixlab/spectral.hpp"

namespace mixlab {

// Radial Fourier profile phi^(s), s = |xi|, with phi^(0) = 1.
struct Mollifier {
  std::string name;
  std::function<double(double)> profile;
  std::function<double(double)> derivative;
  bool is_frequency_cutoff = false;
  bool is_positive = false;
  // Radii where the profile changes character; quadratures split there.
  std::vector<double> breakpoints;
};

// 1 on [0,1], 0 on [2,inf), g(2-s)/(g(2-s)+g(s-1)) between, g(t) = exp(-1/t).
double cutoff_profile(double s);
double cutoff_profile_derivative(double s);

Mollifier make_frequency_cutoff();
Mollifier make_gaussian();  // exp(-s^2/2)

struct LittlewoodPaleyFamily {
  int n_min = 0;
  int n_max = 0;
  // chi(s) = profile(s) - profile(2s), supported in [1/2, 2].
  double chi(double s) const;
  double chi_derivative(double s) const;
  double block(int n, double s) const { return chi(std::ldexp(s, -n)); }
};

LittlewoodPaleyFamily make_lp_family(int n_min, int n_max);
// Smallest block range whose partition covers every nonzero grid wavenumber.
LittlewoodPaleyFamily lp_family_for(const TorusGrid& g);

enum class KernelKind { mollifier_at_scale, log_averaged, log_laplacian, lp_block, derived, custom };

class KernelSpec {
 public:
  KernelKind kind = KernelKind::custom;
  std::string label;
  Mollifier phi;
  double delta = 1.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  LittlewoodPaleyFamily family;
  int block = 0;
  int i = 0, j = 0;
  std::shared_ptr<const KernelSpec> parent;
  std::function<double(const Wavevector&)> custom_symbol;

  bool is_radial() const;
  // K^ as a function of |xi| for radial kinds.
  double radial(double s) const;
  double radial_derivative(double s) const;
  bool has_gradient() const;

  double symbol(const Wavevector& xi) const;
  // dK^/dxi_axis.
  double symbol_gradient(const Wavevector& xi, int axis) const;

  // Symbol on the grid's half layout (radial kinds evaluated once per shell).
  std::vector<cplx> table(const TorusGrid& g) const;
};

KernelSpec rescale(const Mollifier& phi, double delta);
// Symbol int_{delta1}^{delta2} phi^(delta |xi|) d(delta)/delta by Gauss-Legendre in log(delta).
KernelSpec log_averaged_kernel(const Mollifier& phi, double delta1, double delta2);
KernelSpec log_laplacian();
KernelSpec lp_block(const LittlewoodPaleyFamily& family, int n);
KernelSpec custom_kernel(const std::string& label, std::function<double(const Wavevector&)> symbol);
KernelSpec zero_kernel();

ScalarField convolve(const ScalarField& f, const KernelSpec& k);

// phi_delta = phi_delta' * phi_delta on the grid; requires delta >= 2 delta'.
bool reproduction_identity_check(const Mollifier& phi, double delta, double delta_prime, const TorusGrid& g);

struct CzReport {
  double sup_xd_K = 0.0;
  double sup_xd1_gradK = 0.0;
  double sup_symbol = 0.0;
  // Largest |K^| near the grid edge relative to sup_symbol; small means the
  // physical kernel is resolved and the grid maxima are meaningful.
  double edge_ratio = 0.0;
  bool resolved() const { return edge_ratio <= 1e-6; }
  double estimate() const;
};

// Physical kernel sampled on the grid (periodized).
ScalarField physical_kernel(const KernelSpec& k, const TorusGrid& g);
CzReport cz_norm_estimate(const KernelSpec& k, const TorusGrid& g);
// K'_{ij} with symbol -xi_i dK^/dxi_j, stored at index i * dim + j.
std::vector<KernelSpec> cz_derived_kernels(const KernelSpec& k, int dim);

// (|xi|, value) rows; non-radial kernels are sampled along the first axis.
void write_symbol_csv(std::ostream& os, const KernelSpec& k, const std::vector<double>& radii);
void write_cz_csv_header(std::ostream& os);
void write_cz_csv_row(std::ostream& os, const std::string& label, const CzReport& r);

}  // namespace mixlab
