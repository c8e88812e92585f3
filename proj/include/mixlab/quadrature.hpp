#pragma once

#include <functional>
#include <vector>

namespace mixlab {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Cached n-point Gauss-Legendre rule.
const GaussRule& gauss_legendre(int n);

double gauss_integrate(const std::function<double(double)>& f, double a, double b, int n);

// Gauss-Legendre starting at n0 nodes, doubled until the relative change is <= tol.
double adaptive_gauss(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                      int n0 = 64, int nmax = 16384);

// Integral of g(delta) d(delta)/delta over [lo, hi], done in log(delta) with the
// interval split at the given interior points.
double integrate_dlog(const std::function<double(double)>& g, double lo, double hi,
                      const std::vector<double>& splits = {}, double tol = 1e-10);

}  // namespace mixlab
