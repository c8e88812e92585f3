#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mixlab/flows.hpp"

namespace mixlab {

double admissible_dt(const VelocityField& u) {
  const double s = u.max_speed();
  return s > 0.0 ? 0.5 * u.grid().spacing() / s : kInf;
}

namespace {

struct Operators {
  std::vector<unsigned char> mask;
  std::vector<std::array<cplx, 2>> ddx;  // i xi_a, zero on Nyquist axes
  std::vector<double> lap;
};

Operators build_operators(const TorusGrid& g, double fraction) {
  Operators op;
  const std::size_t m = g.spectral_size();
  op.mask.resize(m);
  op.ddx.resize(m);
  op.lap.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    op.mask[i] = in_band(g, i, fraction) ? 1 : 0;
    const auto w = wavevector_of(g, i);
    const auto k = mode_of(g, i);
    for (int a = 0; a < g.dim; ++a) {
      const bool nyq = g.n % 2 == 0 && std::abs(k[static_cast<std::size_t>(a)]) == g.n / 2;
      op.ddx[i][static_cast<std::size_t>(a)] = nyq ? cplx(0.0) : cplx(0.0, w[a]);
    }
    op.lap[i] = -w.norm2();
  }
  return op;
}

}  // namespace

Trajectory solve(const ScalarField& rho0, const VelocityField& u, double T, const SolverConfig& cfg) {
  const TorusGrid& g = rho0.grid();
  if (!(u.grid() == g)) throw std::invalid_argument("solve: velocity and density grids differ");
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("solve: T must be finite and nonnegative");
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("solve: dt must be positive");
  if (!(cfg.dealias_fraction > 0.0 && cfg.dealias_fraction <= 1.0))
    throw std::invalid_argument("solve: dealias_fraction must lie in (0, 1]");
  if (!(cfg.nu >= 0.0)) throw std::invalid_argument("solve: nu must be nonnegative");
  if (cfg.record_every < 1) throw std::invalid_argument("solve: record_every must be >= 1");

  const double dt_max = admissible_dt(u);
  if (cfg.dt > dt_max) {
    std::ostringstream os;
    os << "solve: CFL number " << cfg.dt / dt_max * 0.5 << " exceeds 0.5; admissible dt <= " << dt_max;
    throw std::invalid_argument(os.str());
  }
  const double oob = out_of_band_fraction(rho0, cfg.dealias_fraction);
  if (oob > 1e-8) {
    std::ostringstream os;
    os << "solve: rho0 has out-of-band fraction " << oob << " under dealias fraction " << cfg.dealias_fraction
       << "; apply band_limit first";
    throw std::invalid_argument(os.str());
  }

  // Steps never straddle a protocol switch.
  double h;
  long nsteps;
  double tail = 0.0;
  if (u.is_steady() || T == 0.0) {
    nsteps = T == 0.0 ? 0 : static_cast<long>(std::ceil(T / cfg.dt - 1e-9));
    h = nsteps > 0 ? T / static_cast<double>(nsteps) : cfg.dt;
  } else {
    const double sp = u.switch_period();
    const long per = static_cast<long>(std::ceil(sp / cfg.dt - 1e-9));
    h = sp / static_cast<double>(per);
    nsteps = static_cast<long>(std::floor(T / h + 1e-9));
    tail = T - static_cast<double>(nsteps) * h;
    if (tail <= 1e-12 * T) tail = 0.0;
  }

  const Operators op = build_operators(g, cfg.dealias_fraction);
  const std::size_t m = g.spectral_size();
  const std::size_t N = g.size();

  Trajectory tr;
  tr.tracked_p = cfg.tracked_p;
  tr.dt_used = h;

  std::vector<cplx> rho(rho0.spectrum());
  for (std::size_t i = 0; i < m; ++i)
    if (!op.mask[i]) rho[i] = 0.0;

  std::vector<double> phys(N), prod(N);
  std::vector<cplx> prod_hat(m);
  double forcing_mean_max = 0.0;

  auto rhs = [&](const std::vector<cplx>& r, double t, const std::vector<ScalarField>& uc, std::vector<cplx>& out) {
    inverse_transform(g, r.data(), phys.data());
    std::fill(out.begin(), out.end(), cplx(0.0));
    for (int a = 0; a < g.dim; ++a) {
      const auto& ua = uc[static_cast<std::size_t>(a)].values();
      for (std::size_t i = 0; i < N; ++i) prod[i] = ua[i] * phys[i];
      forward_transform(g, prod.data(), prod_hat.data());
      for (std::size_t i = 0; i < m; ++i) out[i] -= op.ddx[i][static_cast<std::size_t>(a)] * prod_hat[i];
    }
    if (cfg.forcing) {
      const ScalarField f = cfg.forcing(t);
      if (!(f.grid() == g)) throw std::invalid_argument("solve: forcing grid differs");
      const auto& fh = f.spectrum();
      forcing_mean_max = std::max(forcing_mean_max, std::abs(fh[0]) / static_cast<double>(N));
      for (std::size_t i = 0; i < m; ++i) out[i] += fh[i];
    }
    for (std::size_t i = 0; i < m; ++i)
      if (!op.mask[i]) out[i] = 0.0;
  };

  auto record = [&](double t) {
    ScalarField s = ScalarField::from_spectrum(g, rho);
    std::vector<double> nv;
    nv.reserve(cfg.tracked_p.size());
    for (double p : cfg.tracked_p) nv.push_back(lp_norm(s, p));
    tr.times.push_back(t);
    tr.states.push_back(std::move(s));
    tr.norms.push_back(std::move(nv));
    tr.accumulator.push_back(grad_norm_accumulator(u, cfg.grad_p, t));
  };

  std::vector<cplx> k1(m), k2(m), k3(m), k4(m), tmp(m);
  // Diffusion is integrated exactly (Lawson RK4 with the heat factor), so nu adds no step limit.
  std::vector<double> e_half(m, 1.0), e_full(m, 1.0);
  double e_dt = -1.0;
  auto factors = [&](double dt) {
    if (cfg.nu == 0.0 || dt == e_dt) return;
    for (std::size_t i = 0; i < m; ++i) {
      e_half[i] = std::exp(0.5 * dt * cfg.nu * op.lap[i]);
      e_full[i] = e_half[i] * e_half[i];
    }
    e_dt = dt;
  };
  auto step = [&](double t, double dt) {
    factors(dt);
    const auto& uc = u.at(t + 0.5 * dt);
    rhs(rho, t, uc, k1);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = e_half[i] * (rho[i] + 0.5 * dt * k1[i]);
    rhs(tmp, t + 0.5 * dt, uc, k2);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = e_half[i] * rho[i] + 0.5 * dt * k2[i];
    rhs(tmp, t + 0.5 * dt, uc, k3);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = e_full[i] * rho[i] + dt * e_half[i] * k3[i];
    rhs(tmp, t + dt, uc, k4);
    for (std::size_t i = 0; i < m; ++i)
      rho[i] = e_full[i] * rho[i] +
               dt / 6.0 * (e_full[i] * k1[i] + 2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i]);
  };

  record(0.0);
  double t = 0.0;
  for (long s = 1; s <= nsteps; ++s) {
    step(t, h);
    t = static_cast<double>(s) * h;
    if (s % cfg.record_every == 0 || (s == nsteps && tail == 0.0)) record(s == nsteps && tail == 0.0 ? T : t);
  }
  if (tail > 0.0) {
    step(t, tail);
    record(T);
  }

  if (cfg.forcing) {
    double fscale = 0.0;
    for (double v : cfg.forcing(0.0).values()) fscale = std::max(fscale, std::abs(v));
    if (forcing_mean_max > 1e-12 * std::max(1.0, fscale)) {
      tr.mass_conserved = false;
      tr.notes.push_back("forcing has nonzero mean; mass is not conserved");
    }
  }
  return tr;
}

}  // namespace mixlab
