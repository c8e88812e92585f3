#include "mixlab/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace mixlab {

const GaussRule& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussRule>> rules;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = rules.find(n);
  if (it != rules.end()) return *it->second;
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n));
  auto rule = std::make_unique<GaussRule>();
  rule->nodes.resize(static_cast<std::size_t>(n));
  rule->weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    gsl_integration_glfixed_point(-1.0, 1.0, static_cast<std::size_t>(i), &rule->nodes[static_cast<std::size_t>(i)],
                                  &rule->weights[static_cast<std::size_t>(i)], t);
  gsl_integration_glfixed_table_free(t);
  auto& ref = *rule;
  rules[n] = std::move(rule);
  return ref;
}

double gauss_integrate(const std::function<double(double)>& f, double a, double b, int n) {
  const GaussRule& r = gauss_legendre(n);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(c + h * r.nodes[i]);
  return s * h;
}

double adaptive_gauss(const std::function<double(double)>& f, double a, double b, double tol, int n0, int nmax) {
  if (a == b) return 0.0;
  double prev = gauss_integrate(f, a, b, n0);
  for (int n = 2 * n0; n <= nmax; n *= 2) {
    double cur = gauss_integrate(f, a, b, n);
    const double diff = std::abs(cur - prev);
    if (diff <= tol * std::abs(cur) || diff <= 1e-16 * std::abs(b - a)) return cur;
    prev = cur;
  }
  return prev;
}

double integrate_dlog(const std::function<double(double)>& g, double lo, double hi,
                      const std::vector<double>& splits, double tol) {
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("integrate_dlog: need 0 < lo < hi");
  std::vector<double> pts{std::log(lo)};
  std::vector<double> inner;
  for (double s : splits)
    if (s > lo && s < hi) inner.push_back(std::log(s));
  std::sort(inner.begin(), inner.end());
  pts.insert(pts.end(), inner.begin(), inner.end());
  pts.push_back(std::log(hi));
  auto h = [&g](double t) { return g(std::exp(t)); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) total += adaptive_gauss(h, pts[i], pts[i + 1], tol);
  return total;
}

}  // namespace mixlab
