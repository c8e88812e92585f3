#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "mixlab/spectral.hpp"

namespace mixlab {
namespace {

constexpr std::uint16_t kVersion = 1;

template <class T>
void put_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw std::runtime_error("MIXF: truncated stream");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace

void write_mixf(std::ostream& os, const ScalarField& f) {
  const TorusGrid& g = f.grid();
  os.write("MIXF", 4);
  put_le<std::uint16_t>(os, kVersion);
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(g.dim));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.n));
  put_le<double>(os, g.period);
  for (double v : f.values()) put_le<double>(os, v);
  if (!os) throw std::runtime_error("MIXF: write failed");
}

ScalarField read_mixf(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "MIXF", 4) != 0) throw std::runtime_error("MIXF: bad magic");
  auto version = get_le<std::uint16_t>(is);
  if (version != kVersion) throw std::runtime_error("MIXF: unsupported version");
  int dim = get_le<std::uint16_t>(is);
  int n = static_cast<int>(get_le<std::uint32_t>(is));
  double period = get_le<double>(is);
  TorusGrid g(dim, n, period);
  std::vector<double> v(g.size());
  for (double& x : v) x = get_le<double>(is);
  return ScalarField(g, std::move(v));
}

void write_mixf(const std::string& path, const ScalarField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("MIXF: cannot open " + path);
  write_mixf(os, f);
}

ScalarField read_mixf(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("MIXF: cannot open " + path);
  return read_mixf(is);
}

}  // namespace mixlab
