#include "mixlab/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mixlab {

std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string digest_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

void Report::add(const std::string& parameter, double value) { rows_.emplace_back(parameter, fmt_double(value)); }

void Report::add(const std::string& parameter, const std::string& value) { rows_.emplace_back(parameter, value); }

void Report::add_check(const std::string& name, bool passed) {
  checks_.emplace_back(name, passed);
  rows_.emplace_back("check." + name, passed ? "pass" : "fail");
}

bool Report::all_passed() const {
  for (const auto& c : checks_)
    if (!c.second) return false;
  return true;
}

double Report::number(const std::string& parameter) const {
  for (auto it = rows_.rbegin(); it != rows_.rend(); ++it)
    if (it->first == parameter) return std::stod(it->second);
  throw std::out_of_range("Report: no parameter " + parameter);
}

bool Report::check(const std::string& name) const {
  for (const auto& c : checks_)
    if (c.first == name) return c.second;
  throw std::out_of_range("Report: no check " + name);
}

std::vector<std::string> Report::failed_checks() const {
  std::vector<std::string> out;
  for (const auto& c : checks_)
    if (!c.second) out.push_back(c.first);
  return out;
}

std::string timestamp_line() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[64];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string("# generated ") + buf;
}

void Report::write_csv(std::ostream& os, const std::string& config_digest) const {
  os << timestamp_line() << "\n";
  os << "# config_digest " << config_digest << "\n";
  os << "experiment,parameter,value\n";
  for (const auto& r : rows_) os << experiment_ << "," << r.first << "," << r.second << "\n";
}

}  // namespace mixlab
