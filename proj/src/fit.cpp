#include "mixlab/fit.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "mixlab/report.hpp"

namespace mixlab {

namespace {

void check_data(const std::vector<double>& x, const std::vector<double>& y, std::size_t need) {
  if (x.size() != y.size()) throw std::invalid_argument("fit: x and y differ in length");
  if (x.size() < need) throw std::invalid_argument("fit: too few points");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw std::invalid_argument("fit: non-finite data");
}

void finish(FitReport& f, const std::vector<double>& x, const std::vector<double>& y) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  f.max_excess = -INFINITY;
  std::string text;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += e * e;
    ss_tot += (y[i] - mean) * (y[i] - mean);
    f.max_excess = std::max(f.max_excess, e);
    text += fmt_double(x[i]) + "," + fmt_double(y[i]) + ";";
  }
  f.max_excess = std::max(f.max_excess, 0.0);
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  f.residual = std::sqrt(ss_res / static_cast<double>(y.size()));
  f.points = x.size();
  f.inputs = digest_hex(text);
}

}  // namespace

FitReport fit_linear(const std::vector<double>& x, const std::vector<double>& y, const std::string& name) {
  check_data(x, y, 1);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  if (sxx == 0.0) throw std::invalid_argument("fit: all x are zero");
  FitReport f;
  f.name = name;
  f.model = "linear";
  f.slope = sxy / sxx;
  finish(f, x, y);
  return f;
}

FitReport fit_affine(const std::vector<double>& x, const std::vector<double>& y, const std::string& name) {
  check_data(x, y, 2);
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("fit: x has no spread");
  FitReport f;
  f.name = name;
  f.model = "affine";
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  finish(f, x, y);
  return f;
}

void write_fit_csv(std::ostream& os, const std::vector<FitReport>& fits, const std::string& config_digest) {
  os << timestamp_line() << "\n";
  os << "# config_digest " << config_digest << "\n";
  os << "name,model,direction,slope,intercept,r2,residual,max_excess,points,inputs,accepted\n";
  for (const auto& f : fits)
    os << f.name << "," << f.model << "," << f.direction << "," << fmt_double(f.slope) << "," << fmt_double(f.intercept)
       << "," << fmt_double(f.r2) << "," << fmt_double(f.residual) << "," << fmt_double(f.max_excess) << ","
       << f.points << "," << f.inputs << "," << (f.accepted() ? "yes" : "flagged") << "\n";
}

}  // namespace mixlab
