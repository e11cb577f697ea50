#pragma once

// Little-endian scalar I/O shared by the binary file formats.

#include <algorithm>
#include <array>
#include <bit>
#include <istream>
#include <ostream>

namespace trajsearch::detail {

template <typename T>
void put(std::ostream& out, T v) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& v) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  v = std::bit_cast<T>(bytes);
  return true;
}

}  // namespace trajsearch::detail
