#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace odnslab {

/// IPv4 address held in host byte order. Wire encoding is big-endian.
struct Ipv4 {
  std::uint32_t value = 0;

  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t v) : value(v) {}
  constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value((std::uint32_t(a) << 24) | (std::uint32_t(b) << 16) |
              (std::uint32_t(c) << 8) | std::uint32_t(d)) {}

  auto operator<=>(const Ipv4&) const = default;

  std::uint8_t octet(int i) const {
    return std::uint8_t(value >> (8 * (3 - i)));
  }

  std::string to_string() const;

  static std::optional<Ipv4> parse(const std::string& text);
};

/// CIDR prefix, e.g. 8.8.8.0/24.
struct Ipv4Prefix {
  Ipv4 network;
  int length = 0;  // 0..32

  bool contains(Ipv4 addr) const {
    if (length == 0) return true;
    const std::uint32_t mask = length >= 32 ? 0xffffffffu
                                            : ~((1u << (32 - length)) - 1u);
    return (addr.value & mask) == (network.value & mask);
  }

  /// Directed broadcast address of the prefix (all host bits set).
  Ipv4 broadcast() const {
    const std::uint32_t host = length >= 32 ? 0u : ((1u << (32 - length)) - 1u);
    return Ipv4(network.value | host);
  }

  auto operator<=>(const Ipv4Prefix&) const = default;

  std::string to_string() const;

  static std::optional<Ipv4Prefix> parse(const std::string& text);
};

/// The /24 containing addr, used as the aggregation unit in analytics.
inline Ipv4 subnet24(Ipv4 addr) { return Ipv4(addr.value & 0xffffff00u); }

}  // namespace odnslab
