#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "mixlab/kernels.hpp"

using namespace mixlab;
using testutil::rel_l2;

namespace {

Wavevector vec2(double a, double b) {
  Wavevector w;
  w.dim = 2;
  w.k = {a, b};
  return w;
}

// Independent oracle: int_{t1}^{t2} profile(t) dt / t by adaptive GSL QAGS.
double qags_dlog(double (*profile)(double), double t1, double t2) {
  gsl_set_error_handler_off();
  gsl_integration_workspace* w = gsl_integration_workspace_alloc(2000);
  struct P {
    double (*f)(double);
  } p{profile};
  gsl_function F;
  F.function = [](double t, void* params) { return static_cast<P*>(params)->f(t) / t; };
  F.params = &p;
  double total = 0.0;
  // Split at the profile's transition points so QAGS sees smooth pieces.
  double pts[] = {t1, 1.0, 1.5, 2.0, t2};
  for (int i = 0; i + 1 < 5; ++i) {
    double a = std::max(t1, std::min(pts[i], t2)), b = std::max(t1, std::min(pts[i + 1], t2));
    if (b <= a) continue;
    double res, err;
    gsl_integration_qags(&F, a, b, 1e-14, 1e-13, 2000, w, &res, &err);
    total += res;
  }
  gsl_integration_workspace_free(w);
  return total;
}

double gaussian_profile(double s) { return std::exp(-0.5 * s * s); }

// Closed form for the Gaussian: (E1(t1^2/2) - E1(t2^2/2)) / 2 with E1(x) = -Ei(-x).
double gaussian_dlog(double t1, double t2) {
  auto e1 = [](double x) { return -std::expint(-x); };
  return 0.5 * (e1(0.5 * t1 * t1) - e1(0.5 * t2 * t2));
}

}  // namespace

TEST_CASE("frequency cutoff profile examples") {
  Mollifier phi = make_frequency_cutoff();
  CHECK(phi.profile(0.7) == 1.0);
  CHECK(phi.profile(2.3) == 0.0);
  CHECK(phi.profile(1.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(phi.profile(0.0) == 1.0);
  CHECK(phi.profile(1.0) == 1.0);
  CHECK(phi.profile(2.0) == 0.0);
  // Derivative against a centered difference.
  for (double s : {1.1, 1.3, 1.5, 1.77, 1.95}) {
    double h = 1e-6;
    double fd = (phi.profile(s + h) - phi.profile(s - h)) / (2 * h);
    CHECK(phi.derivative(s) == doctest::Approx(fd).epsilon(1e-6));
  }
  Mollifier gauss = make_gaussian();
  CHECK(gauss.profile(0.0) == 1.0);
  CHECK(gauss.is_positive);
}

TEST_CASE("rescale examples") {
  Mollifier phi = make_frequency_cutoff();
  auto k1 = rescale(phi, 1.0);
  for (double s : {0.3, 1.2, 1.7, 2.5}) CHECK(k1.symbol(vec2(s, 0.0)) == phi.profile(s));
  CHECK(rescale(phi, 0.5).symbol(vec2(1.9, 0.0)) == 1.0);
  CHECK(rescale(phi, 2.0).symbol(vec2(1.1, 0.0)) == 0.0);
  CHECK_THROWS(rescale(phi, 0.0));
  CHECK_THROWS(rescale(phi, -1.0));
}

TEST_CASE("log-averaged kernel examples") {
  Mollifier phi = make_frequency_cutoff();
  auto k = log_averaged_kernel(phi, 0.3, 0.3 * std::exp(1.0));
  CHECK(k.symbol(vec2(0.0, 0.0)) == doctest::Approx(1.0).epsilon(1e-14));

  auto k2 = log_averaged_kernel(phi, 0.01, 0.5);
  CHECK(k2.symbol(vec2(1.2, 0.9)) == doctest::Approx(std::log(50.0)).epsilon(1e-13));  // 0.5*1.5 <= 1
  CHECK(k2.symbol(vec2(300.0, 0.0)) == 0.0);                                          // 0.01*300 >= 2
  CHECK_THROWS(log_averaged_kernel(phi, 1.0, 1.0));
  CHECK_THROWS(log_averaged_kernel(phi, 2.0, 1.0));
}

TEST_CASE("log-averaged symbol against independent quadratures") {
  Mollifier cut = make_frequency_cutoff();
  Mollifier gauss = make_gaussian();
  for (auto [d1, d2] : {std::pair{1e-3, 1.0}, std::pair{1e-4, 10.0}, std::pair{0.05, 0.2}}) {
    auto kc = log_averaged_kernel(cut, d1, d2);
    auto kg = log_averaged_kernel(gauss, d1, d2);
    for (double s : {0.5, 3.0, 17.0, 140.0, 999.0}) {
      double oc = qags_dlog(cutoff_profile, d1 * s, d2 * s);
      CHECK(std::abs(kc.radial(s) - oc) <= 1e-10 * std::max(1.0, std::abs(oc)));
      double og = gaussian_dlog(d1 * s, d2 * s);
      CHECK(std::abs(kg.radial(s) - og) <= 1e-10 * std::max(1.0, std::abs(og)));
    }
  }
}

TEST_CASE("rescale commutes with log averaging") {
  for (const Mollifier& phi : {make_frequency_cutoff(), make_gaussian()}) {
    const double a = 3.7;
    auto big = log_averaged_kernel(phi, a * 0.002, a * 0.4);
    auto small = log_averaged_kernel(phi, 0.002, 0.4);
    for (double s : {0.1, 1.0, 4.0, 33.0, 250.0}) CHECK(std::abs(big.radial(s) - small.radial(a * s)) <= 1e-10);
  }
}

TEST_CASE("reproduction identity") {
  Mollifier phi = make_frequency_cutoff();
  TorusGrid g(2, 64, 2.0 * kPi);
  CHECK(reproduction_identity_check(phi, 4.0, 1.0, g));
  for (double dp : {0.05, 0.13, 0.5, 1.0}) CHECK(reproduction_identity_check(phi, 2.0 * dp, dp, g));
  CHECK_THROWS(reproduction_identity_check(phi, 1.5, 1.0, g));
  CHECK_THROWS(reproduction_identity_check(make_gaussian(), 4.0, 1.0, g));
}

TEST_CASE("CZ estimate examples") {
  TorusGrid g(2, 128, 16.0);
  auto rg = cz_norm_estimate(rescale(make_gaussian(), 1.0), g);
  CHECK(std::isfinite(rg.sup_xd_K));
  CHECK(std::isfinite(rg.sup_xd1_gradK));
  CHECK(rg.sup_symbol == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rg.sup_xd_K > 0.0);
  CHECK(rg.resolved());
  // A kernel whose symbol is still 1 at the grid edge is flagged.
  CHECK_FALSE(cz_norm_estimate(rescale(make_frequency_cutoff(), 1e-3), g).resolved());

  auto rc = cz_norm_estimate(rescale(make_frequency_cutoff(), 1.0), g);
  CHECK(rc.sup_symbol == 1.0);

  auto rz = cz_norm_estimate(zero_kernel(), g);
  CHECK(rz.sup_xd_K == 0.0);
  CHECK(rz.sup_xd1_gradK == 0.0);
  CHECK(rz.sup_symbol == 0.0);
  CHECK(rz.estimate() == 0.0);

  CHECK_THROWS(cz_norm_estimate(log_laplacian(), g));
}

TEST_CASE("Gaussian kernel is positive in physical space") {
  TorusGrid g(2, 64, 8.0);
  auto k = physical_kernel(rescale(make_gaussian(), 0.6), g);
  CHECK(*std::min_element(k.values().begin(), k.values().end()) >= -1e-10 * k.max_abs());
  // Unit mass.
  double mass = 0.0;
  for (double v : k.values()) mass += v * g.cell_volume();
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("derived kernels") {
  auto ll = cz_derived_kernels(log_laplacian(), 2);
  REQUIRE(ll.size() == 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (auto xi : {vec2(0.3, -1.2), vec2(5.0, 2.0), vec2(-40.0, 7.0)}) {
        double expect = -2.0 * xi[i] * xi[j] / (1.0 + xi.norm2());
        CHECK(ll[static_cast<std::size_t>(2 * i + j)].symbol(xi) == doctest::Approx(expect).epsilon(1e-14));
      }
  for (const auto& base : {log_laplacian(), rescale(make_gaussian(), 0.7),
                           log_averaged_kernel(make_frequency_cutoff(), 0.01, 1.0)})
    for (const auto& d : cz_derived_kernels(base, 2)) CHECK(d.symbol(vec2(0.0, 0.0)) == 0.0);

  CHECK_THROWS(cz_derived_kernels(zero_kernel(), 2));
  CHECK_THROWS(cz_derived_kernels(ll[0], 2));
}

TEST_CASE("derived log-averaged kernel against its closed form") {
  // -xi_i xi_j / |xi|^2 * (phi^(delta2 |xi|) - phi^(delta1 |xi|))
  Mollifier phi = make_frequency_cutoff();
  auto k = log_averaged_kernel(phi, 0.004, 0.9);
  auto d = cz_derived_kernels(k, 2);
  for (auto xi : {vec2(1.0, 1.3), vec2(30.0, -100.0), vec2(-250.0, 90.0), vec2(2.0, 0.1)}) {
    const double s = xi.norm();
    const double bracket = phi.profile(0.9 * s) - phi.profile(0.004 * s);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double expect = -xi[i] * xi[j] / xi.norm2() * bracket;
        CHECK(std::abs(d[static_cast<std::size_t>(2 * i + j)].symbol(xi) - expect) <= 1e-9);
      }
  }
}

TEST_CASE("derived kernel symbol sup is stable across ranges") {
  TorusGrid g(2, 256, 2.0 * kPi);
  Mollifier phi = make_frequency_cutoff();
  auto a = cz_derived_kernels(log_averaged_kernel(phi, 1e-3, 1.0), 2);
  auto b = cz_derived_kernels(log_averaged_kernel(phi, 1e-4, 10.0), 2);
  for (std::size_t m = 0; m < 4; ++m) {
    double sa = 0.0, sb = 0.0;
    for (auto c : a[m].table(g)) sa = std::max(sa, std::abs(c));
    for (auto c : b[m].table(g)) sb = std::max(sb, std::abs(c));
    CHECK(std::abs(sa - sb) <= 0.05 * std::max(sa, sb));
  }
}

TEST_CASE("multiplier equals direct periodic convolution") {
  auto gaussian_image_sum = [](double r2_base, double sigma, int dim) {
    return std::exp(-r2_base / (2 * sigma * sigma)) / std::pow(2 * kPi * sigma * sigma, 0.5 * dim);
  };
  for (int dim : {1, 2}) {
    const int n = dim == 1 ? 128 : 32;
    const double sigma = dim == 1 ? 0.05 : 0.1;
    TorusGrid g(dim, n, 1.0);
    auto f = random_band_limited(g, dim == 1 ? 20 : 6, 21 + static_cast<unsigned>(dim));
    auto spectral = convolve(f, rescale(make_gaussian(), sigma));
    std::vector<double> direct(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto xi = point_of(g, i);
      double s = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) {
        auto xj = point_of(g, j);
        double kv = 0.0;
        for (int m0 = -2; m0 <= 2; ++m0)
          for (int m1 = (dim == 2 ? -2 : 0); m1 <= (dim == 2 ? 2 : 0); ++m1) {
            double d0 = xi[0] - xj[0] + m0, d1 = dim == 2 ? xi[1] - xj[1] + m1 : 0.0;
            kv += gaussian_image_sum(d0 * d0 + d1 * d1, sigma, dim);
          }
        s += f[j] * kv;
      }
      direct[i] = s * g.cell_volume();
    }
    CHECK(rel_l2(spectral, ScalarField(g, direct)) <= 1e-8);
  }
}

TEST_CASE("Littlewood-Paley family") {
  auto fam = make_lp_family(-2, 9);
  CHECK(fam.chi(1.0) == 1.0);
  for (double s : {0.0, 0.1, 0.3, 0.5}) CHECK(fam.chi(s) == 0.0);
  for (double s : {2.0, 2.5, 9.0}) CHECK(fam.chi(s) == 0.0);
  for (double s : {0.55, 0.8, 1.3, 1.9}) CHECK(fam.chi(s) > 0.0);
  CHECK_THROWS(make_lp_family(3, 2));

  for (int dim : {1, 2}) {
    TorusGrid g(dim, 64, 3.3);
    auto f = lp_family_for(g);
    for (std::size_t idx = 1; idx < g.spectral_size(); ++idx) {
      double s = wavevector_of(g, idx).norm();
      double sum = 0.0;
      for (int n = f.n_min; n <= f.n_max; ++n) sum += f.block(n, s);
      CHECK(std::abs(sum - 1.0) <= 1e-10);
    }
    auto rho = random_band_limited(g, 30, 4) + ScalarField::constant(g, 2.0);
    std::vector<double> acc(g.size(), 0.0);
    for (int n = f.n_min; n <= f.n_max; ++n) {
      auto piece = convolve(rho, lp_block(f, n));
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += piece[i];
    }
    CHECK(rel_l2(ScalarField(g, acc), rho - ScalarField::constant(g, rho.mean())) <= 1e-8);
  }
}

TEST_CASE("kernel CSV export") {
  std::ostringstream os;
  write_symbol_csv(os, rescale(make_frequency_cutoff(), 1.0), {0.5, 1.5, 3.0});
  CHECK(os.str() == "abs_xi,value\n0.5,1\n1.5,0.5\n3,0\n");
  std::ostringstream cz;
  write_cz_csv_header(cz);
  write_cz_csv_row(cz, "k", CzReport{1.0, 2.0, 0.5});
  CHECK(cz.str() == "kernel,sup_xd_K,sup_xd1_gradK,sup_symbol,estimate\nk,1,2,0.5,2\n");
}
