#include "slowfast/path_io.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace slowfast {

namespace {

template <class T>
T to_little(T x) {
  if constexpr (std::endian::native == std::endian::little) {
    return x;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &x, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&x, b, sizeof(T));
    return x;
  }
}

template <class T>
void put(std::ostream& os, T x) {
  x = to_little(x);
  os.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T x;
  if (!is.read(reinterpret_cast<char*>(&x), sizeof(T))) throw DomainError("SFAV1: truncated input");
  return to_little(x);
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  for (double x : v) put(os, x);
}

std::vector<double> get_doubles(std::istream& is, std::uint64_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = get<double>(is);
  return v;
}

}  // namespace

void write_path_csv(const SdePath& path, std::ostream& os, const std::vector<std::string>& names) {
  os << "time";
  for (int j = 0; j < path.state_dim; ++j)
    os << ',' << (j < static_cast<int>(names.size()) ? names[j] : "x" + std::to_string(j));
  os << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < path.size(); ++i) {
    os << path.times[i];
    for (double x : path.state(i)) os << ',' << x;
    os << '\n';
  }
}

void write_path_binary(const SdePath& path, std::ostream& os) {
  os.write("SFAV1", 5);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(path.state_dim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(path.noise_dim));
  put<double>(os, path.step);
  put<std::uint64_t>(os, path.times.size());
  put<std::uint64_t>(os, path.increment_count());
  put<std::int64_t>(os, path.stopped_at ? static_cast<std::int64_t>(*path.stopped_at) : -1);
  put_doubles(os, path.times);
  put_doubles(os, path.states);
  put_doubles(os, path.increments);
}

SdePath read_path_binary(std::istream& is) {
  char magic[5];
  if (!is.read(magic, 5) || std::memcmp(magic, "SFAV1", 5) != 0) throw DomainError("SFAV1: bad magic");
  SdePath p;
  p.state_dim = static_cast<int>(get<std::uint32_t>(is));
  p.noise_dim = static_cast<int>(get<std::uint32_t>(is));
  p.step = get<double>(is);
  const auto n_times = get<std::uint64_t>(is);
  const auto n_inc = get<std::uint64_t>(is);
  const auto stopped = get<std::int64_t>(is);
  p.times = get_doubles(is, n_times);
  p.states = get_doubles(is, n_times * p.state_dim);
  p.increments = get_doubles(is, n_inc * p.noise_dim);
  if (stopped >= 0) {
    p.stopped_at = static_cast<std::size_t>(stopped);
    p.stop_time = p.times.at(*p.stopped_at);
  }
  return p;
}

}  // namespace slowfast
