#pragma once

#include <chrono>
#include <map>

#include "transport.hpp"

namespace odnslab::probe {

/// Real-socket transport. One datagram socket is bound per source port in
/// use; replies are collected by polling across them. Spoofed sources are
/// rejected here — spoofing exists only inside the simulator.
class UdpTransport : public Transport {
 public:
  UdpTransport();
  ~UdpTransport() override;

  UdpTransport(const UdpTransport&) = delete;
  UdpTransport& operator=(const UdpTransport&) = delete;

  std::uint64_t now_us() override;
  void sleep_until_us(std::uint64_t t) override;
  void send(const OutPacket& p) override;
  std::optional<InPacket> recv(std::uint64_t wait_us) override;

 private:
  int fd_for_port(std::uint16_t src_port);

  std::map<std::uint16_t, int> sockets_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace odnslab::probe
