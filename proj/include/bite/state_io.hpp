#pragma once

// Binary MPS files for --save-state / --load-state.
//
// Layout (native byte order, written and read on the same machine):
//   char[8]  "BITEMPS\0"
//   u32      version (1)
//   u64      n_sites, phys_dim
//   i64      center (-1 if unknown)
//   f64      log_norm
//   per site: u64 left, phys, right, then left*phys*right f64 in (l, p, r) row-major order

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "bite/mps.hpp"

namespace bite {

namespace detail {
inline constexpr char kStateMagic[8] = {'B', 'I', 'T', 'E', 'M', 'P', 'S', '\0'};
inline constexpr std::uint32_t kStateVersion = 1;
// Reject absurd shapes before allocating.
inline constexpr std::uint64_t kMaxStateEntries = std::uint64_t{1} << 32;

template <class T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw InvalidInput("state file is truncated");
  return v;
}
}  // namespace detail

inline void write_state(std::ostream& os, const Mps& m) {
  detail::check_valid(m);
  os.write(detail::kStateMagic, sizeof(detail::kStateMagic));
  detail::write_raw<std::uint32_t>(os, detail::kStateVersion);
  detail::write_raw<std::uint64_t>(os, m.size());
  detail::write_raw<std::uint64_t>(os, m.phys_dim);
  detail::write_raw<std::int64_t>(os, m.center ? static_cast<std::int64_t>(*m.center) : -1);
  detail::write_raw<double>(os, m.log_norm);
  for (const auto& s : m.sites) {
    detail::write_raw<std::uint64_t>(os, s.left());
    detail::write_raw<std::uint64_t>(os, s.phys());
    detail::write_raw<std::uint64_t>(os, s.right());
    os.write(reinterpret_cast<const char*>(s.data().data()),
             static_cast<std::streamsize>(s.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("failed to write state");
}

inline Mps read_state(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, detail::kStateMagic, sizeof(magic)) != 0)
    throw InvalidInput("not an MPS state file");
  if (detail::read_raw<std::uint32_t>(is) != detail::kStateVersion)
    throw InvalidInput("unsupported state file version");
  Mps m;
  const auto n = detail::read_raw<std::uint64_t>(is);
  m.phys_dim = detail::read_raw<std::uint64_t>(is);
  const auto center = detail::read_raw<std::int64_t>(is);
  m.log_norm = detail::read_raw<double>(is);
  if (n == 0 || n > 100000) throw InvalidInput("state file has a bad site count");
  for (std::uint64_t k = 0; k < n; ++k) {
    const auto l = detail::read_raw<std::uint64_t>(is);
    const auto p = detail::read_raw<std::uint64_t>(is);
    const auto r = detail::read_raw<std::uint64_t>(is);
    if (l == 0 || p == 0 || r == 0 || l * p * r > detail::kMaxStateEntries)
      throw InvalidInput("state file has a bad tensor shape");
    SiteTensor t(l, p, r);
    if (!is.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(double))))
      throw InvalidInput("state file is truncated");
    m.sites.push_back(std::move(t));
  }
  if (center >= 0) {
    if (static_cast<std::uint64_t>(center) >= n) throw InvalidInput("state file has a bad center");
    m.center = static_cast<std::size_t>(center);
  }
  detail::check_valid(m);
  return m;
}

inline void save_state(const std::filesystem::path& path, const Mps& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_state(os, m);
}

inline Mps load_state(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open state file " + path.string());
  return read_state(is);
}

}  // namespace bite
