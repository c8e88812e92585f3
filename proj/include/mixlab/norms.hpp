#pragma once

#include <string>
#include <vector>

#include "mixlab/kernels.hpp"

namespace mixlab {

enum class DualMode { exact_r2, surrogate };

struct SobolevDualSpec {
  double r = 2.0;
  double L = 0.0;  // length scale; 0 means the torus period, kInf is allowed
  DualMode mode = DualMode::exact_r2;
};

// exact_r2: ||(1/L^2 + |xi|^2)^(-1/2) f||_2.
// surrogate: min over delta in (0, L] of L ||f * phi_delta||_r + delta ||f||_r,
// phi the frequency cutoff, 16 log-spaced deltas per decade.
double sobolev_dual_norm(const ScalarField& f, const SobolevDualSpec& spec);

struct BesovSpec {
  double s = 0.0;
  double p = 2.0;
  double q = 2.0;
  LittlewoodPaleyFamily family;
};

// Fraction of the spectral L^2 energy (mean excluded) on modes the family's
// partition does not sum to one on.
double besov_coverage_gap(const ScalarField& f, const LittlewoodPaleyFamily& family);
// (sum_n (2^(ns) ||psi_n * f||_p)^q)^(1/q). A coverage warning is appended to
// warnings (when given) if the family misses part of the spectrum.
double besov_norm(const ScalarField& f, const BesovSpec& spec, std::vector<std::string>* warnings = nullptr);

// ||log(1 + |xi|^2) f||_r
double log_derivative_norm(const ScalarField& f, double r);

// ||rho0||_q / ||rho0||_r
double mixing_ratio(const ScalarField& rho0, const ExponentTriple& e);

// Smallest delta with ||rho0 * phi_delta||_r <= ||rho0||_r / 2, located to a
// relative accuracy of 1e-6. Returns kInf when no delta up to 1e3 periods does it.
double mixing_scale(const ScalarField& rho0, double r, const Mollifier& phi);

}  // namespace mixlab
