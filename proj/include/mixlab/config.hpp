#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixlab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value configuration, one key per line, '#' starts a comment.
// Getters remember which keys were read so leftovers can be rejected.
class Config {
 public:
  Config() = default;
  static Config parse(std::istream& is, const std::string& source = "<config>");
  static Config parse_string(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated numbers.
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;
  std::string require_string(const std::string& key) const;

  // Throws ConfigError naming every key nobody asked for.
  void reject_unused() const;

  // Sorted key=value lines; the digest hashes this text.
  std::string canonical() const;
  std::string digest() const;

 private:
  const std::string* lookup(const std::string& key) const;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace mixlab
