#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mixlab/spectral.hpp"

namespace mixlab {

enum class FlowKind { periodized_shear, alternating_sine_shear, cellular };

struct FlowSpec {
  FlowKind kind = FlowKind::alternating_sine_shear;
  double amplitude = 1.0;
  double switch_period = 0.5;  // alternating_sine_shear only
};

FlowKind parse_flow_kind(const std::string& name);
std::string flow_kind_name(FlowKind k);

// s(x2): equals x2 on |x2| <= 3 period / 8, returns smoothly to a periodic odd
// profile by |x2| = 7 period / 16. Argument is the centered coordinate.
double periodized_shear_profile(double x2, double period);

VelocityField make_flow(const FlowSpec& spec, const TorusGrid& g);

// || (sum_ij (d_j u_i)^2)^(1/2) ||_{L^p} for one set of components.
double grad_norm(const std::vector<ScalarField>& components, double p);

// int_0^t ||grad u(s)||_p ds; exact for steady and piecewise-steady fields.
double grad_norm_accumulator(const VelocityField& u, double p, double t);

struct SolverConfig {
  double dt = 1e-3;
  double dealias_fraction = 2.0 / 3.0;
  double nu = 0.0;
  std::function<ScalarField(double)> forcing;  // empty = no forcing
  int record_every = 1;
  std::vector<double> tracked_p{2.0};
  double grad_p = 2.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<ScalarField> states;
  std::vector<std::vector<double>> norms;  // norms[k][m] = ||states[k]||_{tracked_p[m]}
  std::vector<double> accumulator;
  std::vector<double> tracked_p;
  double dt_used = 0.0;
  bool mass_conserved = true;
  std::vector<std::string> notes;
};

// Largest dt passing dt * max|u| / spacing <= 0.5.
double admissible_dt(const VelocityField& u);

// RK4 on d rho/dt = -div(u rho) + nu Lap rho + f, products dealiased by truncation
// to the band |k_i| <= fraction * n / 2. Steps are aligned with protocol switches.
Trajectory solve(const ScalarField& rho0, const VelocityField& u, double T, const SolverConfig& cfg);

}  // namespace mixlab
