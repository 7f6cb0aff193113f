#include "ipv4.hpp"

#include <charconv>

namespace odnslab {

std::string Ipv4::to_string() const {
  std::string s;
  s.reserve(15);
  for (int i = 0; i < 4; ++i) {
    if (i) s.push_back('.');
    s += std::to_string(octet(i));
  }
  return s;
}

std::optional<Ipv4> Ipv4::parse(const std::string& text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = p + text.size();
  for (int i = 0; i < 4; ++i) {
    unsigned v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc() || v > 255 || next == p) return std::nullopt;
    value = value << 8 | v;
    p = next;
    if (i < 3) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return Ipv4(value);
}

std::string Ipv4Prefix::to_string() const {
  return network.to_string() + "/" + std::to_string(length);
}

std::optional<Ipv4Prefix> Ipv4Prefix::parse(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos) return std::nullopt;
  auto addr = Ipv4::parse(text.substr(0, slash));
  if (!addr) return std::nullopt;
  int len = 0;
  const char* p = text.data() + slash + 1;
  const char* end = text.data() + text.size();
  auto [next, ec] = std::from_chars(p, end, len);
  if (ec != std::errc() || next != end || len < 0 || len > 32) return std::nullopt;
  return Ipv4Prefix{*addr, len};
}

}  // namespace odnslab
