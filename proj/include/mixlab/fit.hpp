#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mixlab {

struct FitReport {
  std::string name;
  std::string model;      // "linear" (through the origin) or "affine"
  std::string direction;  // inequality the fit supports, e.g. "y <= a x + b"
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double residual = 0.0;  // rms
  double max_excess = 0.0;  // max(y - fit); shifts the fit into an upper envelope
  std::size_t points = 0;
  std::string inputs;  // digest of the (x, y) data

  bool accepted() const { return r2 >= 0.9; }
  double envelope(double x) const { return slope * x + intercept + max_excess; }
};

FitReport fit_linear(const std::vector<double>& x, const std::vector<double>& y, const std::string& name);
FitReport fit_affine(const std::vector<double>& x, const std::vector<double>& y, const std::string& name);

void write_fit_csv(std::ostream& os, const std::vector<FitReport>& fits, const std::string& config_digest);

}  // namespace mixlab
