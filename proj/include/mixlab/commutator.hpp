#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "mixlab/kernels.hpp"

namespace mixlab {

using Components = std::vector<ScalarField>;

inline constexpr double kDealias = 2.0 / 3.0;

// u . (rho * grad K) - div((u rho) * K). Products are formed on the grid and the
// result is truncated to |k_i| <= fraction * n / 2.
ScalarField kernel_commutator(const Components& u, const ScalarField& rho, const KernelSpec& k,
                              double fraction = kDealias);
ScalarField dl_commutator(const Components& u, const ScalarField& rho, const Mollifier& phi, double delta,
                          double fraction = kDealias);

enum class IntegralRoute { kernel, quadrature };

// int_{d1}^{d2} R_delta d(delta)/delta. The kernel route uses the log-averaged
// kernel; the quadrature route sums R_delta over Gauss-Legendre nodes in log(delta).
ScalarField integrated_commutator(const Components& u, const ScalarField& rho, const Mollifier& phi, double d1,
                                  double d2, IntegralRoute route = IntegralRoute::kernel, double fraction = kDealias);

struct IntegralCrossCheck {
  ScalarField kernel_route;
  ScalarField quadrature_route;
  double rel_diff = 0.0;  // relative L^2
  int nodes = 0;
};
IntegralCrossCheck integrated_commutator_crosscheck(const Components& u, const ScalarField& rho, const Mollifier& phi,
                                                    double d1, double d2, double fraction = kDealias);

// K^(xi) = -xi_1 d(phi^)/d(xi_2), from the analytic profile derivative.
double shear_symbol(const Mollifier& phi, const Wavevector& xi);
// rho * K_delta for the linear shear (x2, 0). Rejects rho with mass outside
// |x2| <= 3 period / 8 unless require_support is false (pure symbol evaluation).
ScalarField shear_oracle(const ScalarField& rho, const Mollifier& phi, double delta, bool require_support = true);

struct CommutatorScan {
  std::vector<double> delta_grid;
  std::vector<double> norms;           // ||R_delta||_r
  std::vector<double> envelope_small;  // delta ||rho||_q ||grad^2 u||_p
  std::vector<double> envelope_large;  // ||rho||_q ||u||_p / delta
  ExponentTriple exponents = ExponentTriple::from_pq(2.0, 2.0);
  std::string flow_id;
  std::string data_id;
};

std::vector<double> log_delta_grid(double lo, double hi, int per_decade = 16);
CommutatorScan commutator_scan(const Components& u, const ScalarField& rho, const Mollifier& phi,
                               const std::vector<double>& deltas, const ExponentTriple& e,
                               double fraction = kDealias);
void write_scan_csv(std::ostream& os, const CommutatorScan& scan);

// (int ||R_delta||^q d(delta)/delta)^(1/q), log-trapezoid over the scan.
double besov_commutator_integral(const CommutatorScan& scan, double q);
double besov_commutator_integral(const Components& u, const ScalarField& rho, const Mollifier& phi, double q,
                                 double lo, double hi, double r, int per_decade = 16);
double min_window_norm(const CommutatorScan& scan, double lo, double hi);

// ---- counterexample family

// chi: 1 on |x| <= 3 period / 16, 0 for |x| >= period / 4; |x| is the centered distance.
double counterexample_cutoff(double radius, double period);
ScalarField cutoff_field(const TorusGrid& g);
// Lattice mode closest to xi (may lie beyond the grid's Nyquist index).
std::array<long, 2> nearest_mode(const TorusGrid& g, const std::array<double, 2>& xi);
// Re(e^{i xi . x}) chi(x), xi = 2 pi mode / period; requires the mode below Nyquist.
ScalarField harmonic_density(const TorusGrid& g, const std::array<long, 2>& mode, bool with_cutoff = true);

struct CounterexampleSpec {
  std::array<double, 2> xi_bar{0.6, 0.8};
  double q = 1.0;
  int n_max = 3;
  double c1 = 1.2;
  double c2 = 1.8;
  bool with_cutoff = true;

  void validate() const;
  double amplitude(int n) const;  // n^(-1/q)
  static double delta_n(int n);   // 2^(-n^2)
};

// sum_{n=1}^{N} a_n^power
double amplitude_power_sum(const CounterexampleSpec& spec, int N, double power);

struct CounterexampleDensity {
  ScalarField rho;
  std::vector<std::array<long, 2>> modes;
  std::vector<std::array<double, 2>> wavevectors;
  std::vector<double> amplitudes;
};

int max_admissible_n(const CounterexampleSpec& spec, const TorusGrid& g);
CounterexampleDensity counterexample_density(const CounterexampleSpec& spec, const TorusGrid& g);

// inf over s in [c1, c2] of |K^(s xi_bar)|
double counterexample_epsilon(const CounterexampleSpec& spec, const Mollifier& phi);
// max(sup |d phi^/d xi_2|, sup |xi|^2 |d phi^/d xi_2|)
double counterexample_constant(const Mollifier& phi);
// (a_n^q eps^q / 2 - (C (c1 + 1/c2) 4^(1-n))^q) log(c2/c1)
double band_lower_bound(const CounterexampleSpec& spec, const Mollifier& phi, int n);

struct BandContribution {
  int n = 0;
  double delta_lo = 0.0;
  double delta_hi = 0.0;
  double value = 0.0;        // int_{band} ||R_delta||_1^q d(delta)/delta
  double error_bound = 0.0;  // from modes left out of the envelope average
  double lower_bound = 0.0;
  std::string method;
};

// Envelope Z with R(u, e^{i omega . x} f) = e^{i omega . x} Z on the grid of f, where
// omega = 2 pi mode / period may be far above the grid's Nyquist index.
std::vector<cplx> modulated_commutator(const Components& u, const ScalarField& f, const std::array<long, 2>& mode,
                                       const Mollifier& phi, double delta, double fraction = kDealias);

// Band integrals with every mode demodulated onto the coarse grid g. Modes the grid
// cannot carry enter through the oscillation average of |b + A cos(theta)|.
std::vector<BandContribution> counterexample_bands(const CounterexampleSpec& spec, const Mollifier& phi,
                                                   const TorusGrid& g, const std::vector<int>& bands,
                                                   int nodes = 16);
// Band integral on a grid resolving mode n directly; modes above n are dropped.
BandContribution counterexample_band_direct(const CounterexampleSpec& spec, const Mollifier& phi,
                                            const TorusGrid& g, int n, int nodes = 16);

}  // namespace mixlab
