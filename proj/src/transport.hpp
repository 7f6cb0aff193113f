#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ipv4.hpp"

namespace odnslab::probe {

struct OutPacket {
  Ipv4 dst;
  std::uint16_t dst_port = 53;
  std::uint16_t src_port = 0;
  std::optional<Ipv4> spoofed_src;  // honored only by the simulator
  std::vector<std::uint8_t> payload;
};

struct InPacket {
  Ipv4 from;
  std::uint16_t from_port = 0;
  std::uint16_t dst_port = 0;  // local port the packet arrived on
  std::vector<std::uint8_t> payload;
  std::uint64_t at_us = 0;
};

/// Packet transport under the probe engine. Two implementations exist: real
/// UDP sockets and the netlab simulator. Timestamps come from the transport
/// clock, which is virtual for the simulator.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::uint64_t now_us() = 0;
  virtual void sleep_until_us(std::uint64_t t) = 0;
  virtual void send(const OutPacket& p) = 0;
  /// Waits at most wait_us for the next inbound packet.
  virtual std::optional<InPacket> recv(std::uint64_t wait_us) = 0;
  virtual bool supports_spoofing() const { return false; }
};

}  // namespace odnslab::probe
