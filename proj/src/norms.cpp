#include "mixlab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mixlab/commutator.hpp"
#include "mixlab/parallel.hpp"

namespace mixlab {

namespace {

double resolve_length(const ScalarField& f, double L) {
  if (L == 0.0) return f.grid().period;
  if (!(L > 0.0) || std::isnan(L)) throw std::invalid_argument("sobolev_dual_norm: L must lie in (0, inf]");
  return L;
}

bool has_mean(const ScalarField& f) { return std::abs(f.mean()) > 1e-12 * std::max(1.0, f.max_abs()); }

double exact_dual(const ScalarField& f, double L) {
  const double inv_l2 = std::isinf(L) ? 0.0 : 1.0 / (L * L);
  auto w = apply_multiplier(f, [inv_l2](const Wavevector& xi) {
    const double d = inv_l2 + xi.norm2();
    return cplx(d > 0.0 ? 1.0 / std::sqrt(d) : 0.0);
  });
  return spectral_l2_norm(w);
}

double surrogate_dual(const ScalarField& f, double r, double L) {
  const double fr = lp_norm(f, r);
  if (fr == 0.0) return 0.0;
  const TorusGrid& g = f.grid();
  const Mollifier phi = make_frequency_cutoff();
  // Beyond this scale only the mean survives the cutoff.
  const double saturate = 2.0 / g.wavenumber(1);
  const double hi = std::min(L, saturate);
  const double lo = std::min(hi, g.spacing()) / 16.0;
  std::vector<double> deltas = hi > lo ? log_delta_grid(lo, hi) : std::vector<double>{hi};
  std::vector<double> vals(deltas.size());
  parallel_for(deltas.size(), [&](std::size_t i) {
    const double low = lp_norm(convolve(f, rescale(phi, deltas[i])), r);
    vals[i] = (std::isinf(L) ? (low <= 1e-14 * fr ? 0.0 : kInf) : L * low) + deltas[i] * fr;
  });
  return *std::min_element(vals.begin(), vals.end());
}

}  // namespace

double sobolev_dual_norm(const ScalarField& f, const SobolevDualSpec& spec) {
  const double L = resolve_length(f, spec.L);
  if (std::isinf(L) && has_mean(f))
    throw std::invalid_argument("sobolev_dual_norm: L = inf needs a mean-zero field");
  if (spec.mode == DualMode::exact_r2) {
    if (spec.r != 2.0) throw std::invalid_argument("sobolev_dual_norm: exact_r2 requires r = 2 (use surrogate)");
    return exact_dual(f, L);
  }
  if (!(spec.r >= 1.0)) throw std::invalid_argument("sobolev_dual_norm: r must be >= 1");
  return surrogate_dual(f, spec.r, L);
}

double besov_coverage_gap(const ScalarField& f, const LittlewoodPaleyFamily& family) {
  const TorusGrid& g = f.grid();
  const auto& c = f.spectrum();
  double total = 0.0, missed = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double s = wavevector_of(g, i).norm();
    if (s == 0.0) continue;
    const double e = mode_weight(g, i) * std::norm(c[i]);
    // Telescoping sum of the blocks.
    const double cover = cutoff_profile(std::ldexp(s, -family.n_max)) - cutoff_profile(std::ldexp(s, 1 - family.n_min));
    total += e;
    if (cover < 1.0 - 1e-12) missed += e;
  }
  return total > 0.0 ? missed / total : 0.0;
}

double besov_norm(const ScalarField& f, const BesovSpec& spec, std::vector<std::string>* warnings) {
  if (!(spec.p >= 1.0) || !(spec.q >= 1.0)) throw std::invalid_argument("besov_norm: p and q must be >= 1");
  if (spec.family.n_min > spec.family.n_max) throw std::invalid_argument("besov_norm: empty block range");
  const double gap = besov_coverage_gap(f, spec.family);
  if (gap > 1e-12 && warnings)
    warnings->push_back("besov_norm: blocks " + std::to_string(spec.family.n_min) + ".." +
                        std::to_string(spec.family.n_max) + " miss " + std::to_string(gap) +
                        " of the spectral energy");
  const int count = spec.family.n_max - spec.family.n_min + 1;
  std::vector<double> terms(static_cast<std::size_t>(count));
  parallel_for(terms.size(), [&](std::size_t k) {
    const int n = spec.family.n_min + static_cast<int>(k);
    terms[k] = std::exp2(n * spec.s) * lp_norm(convolve(f, lp_block(spec.family, n)), spec.p);
  });
  if (std::isinf(spec.q)) return *std::max_element(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += std::pow(t, spec.q);
  return std::pow(sum, 1.0 / spec.q);
}

double log_derivative_norm(const ScalarField& f, double r) { return lp_norm(convolve(f, log_laplacian()), r); }

double mixing_ratio(const ScalarField& rho0, const ExponentTriple& e) {
  const double den = lp_norm(rho0, e.r);
  if (den == 0.0) throw std::invalid_argument("mixing_ratio: zero field");
  return lp_norm(rho0, e.q) / den;
}

double mixing_scale(const ScalarField& rho0, double r, const Mollifier& phi) {
  const double target = 0.5 * lp_norm(rho0, r);
  if (target == 0.0) throw std::invalid_argument("mixing_scale: zero field");
  auto val = [&](double d) { return lp_norm(convolve(rho0, rescale(phi, d)), r); };
  const TorusGrid& g = rho0.grid();
  double lo = g.spacing() / 16.0;
  if (val(lo) <= target) return lo;
  double hi = lo;
  while (val(hi) > target) {
    lo = hi;
    hi *= std::pow(10.0, 1.0 / 16.0);
    if (hi > 1e3 * g.period) return kInf;
  }
  while (hi / lo > 1.0 + 1e-6) {
    const double mid = std::sqrt(lo * hi);
    (val(mid) > target ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace mixlab
