#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "mixlab/flows.hpp"

using namespace mixlab;

namespace {

double pairing(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) s += a.values()[i] * b.values()[i];
  return s * a.grid().cell_volume();
}

}  // namespace

TEST_CASE("flow catalogue") {
  TorusGrid g(2, 64, 1.0);
  SUBCASE("zero amplitude alternating shear is the zero field") {
    auto u = make_flow({FlowKind::alternating_sine_shear, 0.0, 0.25}, g);
    CHECK(u.max_speed() == 0.0);
    CHECK(u.phase_count() == 2);
  }
  SUBCASE("alternating shear switches direction") {
    auto u = make_flow({FlowKind::alternating_sine_shear, 1.0, 0.25}, g);
    CHECK(u.at(0.1)[1].max_abs() == 0.0);
    CHECK(u.at(0.3)[0].max_abs() == 0.0);
    CHECK(u.at(0.6)[1].max_abs() == 0.0);
  }
  SUBCASE("periodized shear is linear in the core") {
    const double L = 4.0;
    for (double x : {-1.5, -0.7, 0.0, 0.3, 1.49}) CHECK(periodized_shear_profile(x, L) == x);
    CHECK(std::abs(periodized_shear_profile(1.999999, L)) < 1e-5);
    CHECK(std::abs(periodized_shear_profile(-2.0, L)) < 1e-12);
    // Odd.
    for (double x : {0.2, 1.6, 1.7, 1.8}) CHECK(periodized_shear_profile(-x, L) == -periodized_shear_profile(x, L));
    TorusGrid g4(2, 64, L);
    CHECK_NOTHROW(make_flow({FlowKind::periodized_shear, 1.0, 0.0}, g4));
  }
  SUBCASE("cellular flow") {
    auto u = make_flow({FlowKind::cellular, 0.5, 0.0}, g);
    CHECK(u.max_speed() == doctest::Approx(0.5 * 2.0 * kPi).epsilon(1e-12));
  }
  CHECK_THROWS(make_flow({FlowKind::cellular, -1.0, 0.0}, g));
  CHECK_THROWS(make_flow({FlowKind::cellular, std::nan(""), 0.0}, g));
  CHECK_THROWS(make_flow({FlowKind::alternating_sine_shear, 1.0, 0.0}, g));
  CHECK_THROWS(make_flow({FlowKind::cellular, 1.0, 0.0}, TorusGrid(1, 64, 1.0)));
  CHECK_THROWS(parse_flow_kind("vortex"));
  CHECK(parse_flow_kind("cellular") == FlowKind::cellular);
}

TEST_CASE("gradient accumulator") {
  TorusGrid g(2, 64, 1.0);
  auto u = make_flow({FlowKind::cellular, 0.3, 0.0}, g);
  const double g1 = grad_norm_accumulator(u, 2.0, 1.0);
  CHECK(g1 > 0.0);
  CHECK(grad_norm_accumulator(u, 2.0, 2.5) == doctest::Approx(2.5 * g1).epsilon(1e-14));
  CHECK(grad_norm_accumulator(u.scaled(-3.0), 2.0, 1.0) == doctest::Approx(3.0 * g1).epsilon(1e-12));
  CHECK(grad_norm_accumulator(u, 2.0, 0.0) == 0.0);
  // Cellular flow: |grad u|^2 = 2 A^2 k^4 (sin^2 sin^2 + cos^2 cos^2) -> L^2 norm is A k^2 sqrt(2 * 1/2) over unit area.
  const double k = 2.0 * kPi;
  CHECK(g1 == doctest::Approx(0.3 * k * k).epsilon(1e-10));

  auto a = make_flow({FlowKind::alternating_sine_shear, 1.0, 0.25}, g);
  const double per = grad_norm(a.phase(0), 2.0);
  CHECK(grad_norm(a.phase(1), 2.0) == doctest::Approx(per).epsilon(1e-12));
  CHECK(grad_norm_accumulator(a, 2.0, 0.6) == doctest::Approx(0.6 * per).epsilon(1e-12));
  CHECK_THROWS(grad_norm_accumulator(a, 2.0, -1.0));
}

TEST_CASE("heat equation decay") {
  TorusGrid g(2, 32, 2.0 * kPi);
  auto rho0 = ScalarField::from_function(g, [](std::array<double, 2> x) {
    return std::cos(x[0]) + 0.5 * std::sin(2.0 * x[0] + 3.0 * x[1]);
  });
  SolverConfig cfg;
  cfg.dt = 0.01;
  cfg.nu = 0.1;
  auto tr = solve(rho0, VelocityField::zero(g), 1.0, cfg);
  auto exact = ScalarField::from_function(g, [](std::array<double, 2> x) {
    return std::exp(-0.1) * std::cos(x[0]) + 0.5 * std::exp(-1.3) * std::sin(2.0 * x[0] + 3.0 * x[1]);
  });
  CHECK(tr.times.back() == 1.0);
  CHECK(testutil::max_diff(tr.states.back(), exact) <= 1e-8);
}

TEST_CASE("zero velocity and no diffusion leaves the density unchanged") {
  TorusGrid g(2, 32, 1.0);
  auto rho0 = random_band_limited(g, 5, 7);
  SolverConfig cfg;
  cfg.dt = 0.05;
  auto tr = solve(rho0, VelocityField::zero(g), 1.0, cfg);
  CHECK(testutil::max_diff(tr.states.back(), rho0) <= 1e-14);
}

TEST_CASE("transport conserves L^p norms") {
  TorusGrid g(2, 256, 1.0);
  auto rho0 = random_band_limited(g, 3, 11);
  auto u = make_flow({FlowKind::cellular, 0.05, 0.0}, g);
  SolverConfig cfg;
  cfg.dt = 2e-3;
  cfg.tracked_p = {2.0, 4.0, 16.0};
  cfg.record_every = 25;
  auto tr = solve(rho0, u, 0.5, cfg);
  for (std::size_t k = 1; k < tr.times.size(); ++k)
    for (std::size_t m = 0; m < 3; ++m) {
      const double n0 = tr.norms[0][m];
      CHECK(std::abs(tr.norms[k][m] - n0) <= 1e-5 * n0);
    }
  CHECK(std::abs(tr.norms.back()[0] - tr.norms[0][0]) <= 1e-6 * tr.norms[0][0]);
  CHECK(tr.accumulator.back() == doctest::Approx(grad_norm_accumulator(u, 2.0, 0.5)).epsilon(1e-14));
  CHECK(tr.mass_conserved);
}

TEST_CASE("forward-backward duality pairing") {
  TorusGrid g(2, 128, 1.0);
  auto rho0 = random_band_limited(g, 4, 3);
  auto phiT = random_band_limited(g, 4, 4);
  auto u = make_flow({FlowKind::cellular, 0.1, 0.0}, g);
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.record_every = 50;
  const double T = 0.5;
  auto fw = solve(rho0, u, T, cfg);
  auto bw = solve(phiT, u.scaled(-1.0), T, cfg);
  REQUIRE(fw.times.size() == bw.times.size());
  const std::size_t K = fw.times.size() - 1;
  const double ref = pairing(fw.states[0], bw.states[K]);
  for (std::size_t k = 0; k <= K; ++k) CHECK(std::abs(pairing(fw.states[k], bw.states[K - k]) - ref) <= 1e-6);
}

TEST_CASE("diffusion makes L^p norms nonincreasing") {
  TorusGrid g(2, 64, 1.0);
  auto rho0 = random_band_limited(g, 3, 5);
  auto u = make_flow({FlowKind::cellular, 0.2, 0.0}, g);
  SolverConfig cfg;
  cfg.dt = 2e-3;
  cfg.nu = 1e-3;
  cfg.tracked_p = {2.0, 4.0};
  cfg.record_every = 10;
  auto tr = solve(rho0, u, 1.0, cfg);
  for (std::size_t k = 1; k < tr.times.size(); ++k)
    for (std::size_t m = 0; m < 2; ++m) CHECK(tr.norms[k][m] <= tr.norms[k - 1][m] * (1.0 + 1e-12));
  CHECK(tr.norms.back()[0] < tr.norms.front()[0]);
}

TEST_CASE("switching protocols align steps with the switch period") {
  TorusGrid g(2, 64, 1.0);
  auto u = make_flow({FlowKind::alternating_sine_shear, 1.0, 0.1}, g);
  auto rho0 = random_band_limited(g, 3, 9);
  SolverConfig cfg;
  cfg.dt = 0.003;
  cfg.record_every = 1000;
  auto tr = solve(rho0, u, 0.35, cfg);
  const double per = 0.1 / tr.dt_used;
  CHECK(std::abs(per - std::round(per)) < 1e-9);
  CHECK(tr.dt_used <= cfg.dt);
  CHECK(tr.times.back() == 0.35);
  CHECK(std::abs(tr.norms.back()[0] - tr.norms.front()[0]) <= 1e-6 * tr.norms.front()[0]);
}

TEST_CASE("solver preconditions") {
  TorusGrid g(2, 64, 1.0);
  auto u = make_flow({FlowKind::cellular, 1.0, 0.0}, g);
  auto rho0 = random_band_limited(g, 3, 1);
  SolverConfig cfg;
  cfg.dt = 2.0 * admissible_dt(u);
  CHECK_THROWS_WITH_AS(solve(rho0, u, 0.1, cfg), doctest::Contains("admissible dt"), std::invalid_argument);
  cfg.dt = admissible_dt(u);
  CHECK_NOTHROW(solve(rho0, u, 0.01, cfg));

  auto rough = random_band_limited(g, 31, 2);
  CHECK_THROWS_WITH_AS(solve(rough, u, 0.01, cfg), doctest::Contains("band_limit"), std::invalid_argument);
  CHECK_NOTHROW(solve(band_limit(rough, cfg.dealias_fraction), u, 0.01, cfg));
}

TEST_CASE("forcing with nonzero mean is flagged") {
  TorusGrid g(2, 32, 1.0);
  auto rho0 = ScalarField::zeros(g);
  SolverConfig cfg;
  cfg.dt = 0.01;
  cfg.forcing = [&](double) { return ScalarField::constant(g, 1.0); };
  auto tr = solve(rho0, VelocityField::zero(g), 0.5, cfg);
  CHECK_FALSE(tr.mass_conserved);
  CHECK(tr.states.back().mean() == doctest::Approx(0.5).epsilon(1e-12));

  auto wave = ScalarField::from_function(g, [](std::array<double, 2> x) { return std::cos(2.0 * kPi * x[0]); });
  cfg.forcing = [&](double) { return wave; };
  auto tr2 = solve(rho0, VelocityField::zero(g), 0.5, cfg);
  CHECK(tr2.mass_conserved);
  CHECK(testutil::max_diff(tr2.states.back(), 0.5 * wave) <= 1e-12);
}

TEST_CASE("stiff diffusion stays exact") {
  TorusGrid g(2, 32, 2.0 * kPi);
  auto rho0 = ScalarField::from_function(g, [](std::array<double, 2> x) { return std::cos(10.0 * x[0]); });
  SolverConfig cfg;
  cfg.dt = 0.05;  // nu |k|^2 dt = 5, beyond explicit RK4 stability
  cfg.nu = 1.0;
  auto tr = solve(rho0, VelocityField::zero(g), 0.1, cfg);
  auto exact = ScalarField::from_function(g, [](std::array<double, 2> x) { return std::exp(-10.0) * std::cos(10.0 * x[0]); });
  CHECK(testutil::max_diff(tr.states.back(), exact) <= 1e-14);
}
