#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "mixlab/spectral.hpp"

namespace mixlab {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// FFTW planning is not thread-safe; execution with the new-array interface is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanPair get(int dim, int n, bool complex = false) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(dim, n, complex);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;

    if (complex) {
      const std::size_t sz = dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
      fftw_complex* a = fftw_alloc_complex(sz);
      fftw_complex* b = fftw_alloc_complex(sz);
      const unsigned fl = FFTW_ESTIMATE | FFTW_UNALIGNED;
      PlanPair p;
      if (dim == 1) {
        p.forward = fftw_plan_dft_1d(n, a, b, FFTW_FORWARD, fl);
        p.inverse = fftw_plan_dft_1d(n, a, b, FFTW_BACKWARD, fl);
      } else {
        p.forward = fftw_plan_dft_2d(n, n, a, b, FFTW_FORWARD, fl);
        p.inverse = fftw_plan_dft_2d(n, n, a, b, FFTW_BACKWARD, fl);
      }
      fftw_free(a);
      fftw_free(b);
      plans_[key] = p;
      return p;
    }
    std::size_t real_size = dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
    std::size_t spec_size = dim == 1 ? static_cast<std::size_t>(n / 2 + 1)
                                     : static_cast<std::size_t>(n) * (n / 2 + 1);
    double* r = fftw_alloc_real(real_size);
    fftw_complex* c = fftw_alloc_complex(spec_size);
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p;
    if (dim == 1) {
      p.forward = fftw_plan_dft_r2c_1d(n, r, c, flags);
      p.inverse = fftw_plan_dft_c2r_1d(n, c, r, flags);
    } else {
      p.forward = fftw_plan_dft_r2c_2d(n, n, r, c, flags);
      p.inverse = fftw_plan_dft_c2r_2d(n, n, c, r, flags);
    }
    fftw_free(r);
    fftw_free(c);
    plans_[key] = p;
    return p;
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<int, int, bool>, PlanPair> plans_;
};

}  // namespace

void forward_transform(const TorusGrid& g, const double* in, cplx* out) {
  PlanPair p = PlanCache::instance().get(g.dim, g.n);
  // r2c leaves its input untouched under FFTW_ESTIMATE.
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void inverse_transform(const TorusGrid& g, const cplx* in, double* out) {
  PlanPair p = PlanCache::instance().get(g.dim, g.n);
  std::vector<cplx> work(in, in + g.spectral_size());
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(work.data()), out);
  const double scale = 1.0 / static_cast<double>(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] *= scale;
}

void forward_transform_complex(const TorusGrid& g, const cplx* in, cplx* out) {
  PlanPair p = PlanCache::instance().get(g.dim, g.n, true);
  fftw_execute_dft(p.forward, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void inverse_transform_complex(const TorusGrid& g, const cplx* in, cplx* out) {
  PlanPair p = PlanCache::instance().get(g.dim, g.n, true);
  fftw_execute_dft(p.inverse, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
  const double scale = 1.0 / static_cast<double>(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] *= scale;
}

}  // namespace mixlab
