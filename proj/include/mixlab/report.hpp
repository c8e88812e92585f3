#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace mixlab {

// Shortest round-trip decimal form; stable across runs.
std::string fmt_double(double x);

// 64-bit FNV-1a, printed as 16 hex digits.
std::string digest_hex(const std::string& text);

// Long-format report: one (parameter, value) row per entry.
class Report {
 public:
  explicit Report(std::string experiment) : experiment_(std::move(experiment)) {}

  void add(const std::string& parameter, double value);
  void add(const std::string& parameter, const std::string& value);
  void add_check(const std::string& name, bool passed);

  const std::string& experiment() const { return experiment_; }
  const std::vector<std::pair<std::string, std::string>>& rows() const { return rows_; }
  const std::vector<std::pair<std::string, bool>>& checks() const { return checks_; }
  bool all_passed() const;
  // Last numeric value recorded under parameter; throws when absent.
  double number(const std::string& parameter) const;
  bool check(const std::string& name) const;
  std::vector<std::string> failed_checks() const;

  // Line 1 is a timestamp comment, line 2 the config digest, then the CSV table.
  void write_csv(std::ostream& os, const std::string& config_digest) const;

 private:
  std::string experiment_;
  std::vector<std::pair<std::string, std::string>> rows_;
  std::vector<std::pair<std::string, bool>> checks_;
};

std::string timestamp_line();

}  // namespace mixlab
