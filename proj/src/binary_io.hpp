#pragma once

// Little-endian primitive encoding for the embedding and checkpoint files.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace zesrec::binio {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

/// Returns false on a short read.
template <typename T>
bool get(std::istream& in, T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

inline void put_string(std::ostream& out, const std::string& s) {
  put<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline bool get_string(std::istream& in, std::string& s) {
  std::uint16_t len = 0;
  if (!get(in, len)) return false;
  s.resize(len);
  return len == 0 || static_cast<bool>(in.read(s.data(), len));
}

}  // namespace zesrec::binio
