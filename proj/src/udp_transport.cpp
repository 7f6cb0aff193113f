#include "udp_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <thread>
#include <vector>

#include "errors.hpp"

namespace odnslab::probe {

UdpTransport::UdpTransport() : t0_(std::chrono::steady_clock::now()) {}

UdpTransport::~UdpTransport() {
  for (auto& [port, fd] : sockets_) ::close(fd);
}

std::uint64_t UdpTransport::now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now() - t0_)
      .count();
}

void UdpTransport::sleep_until_us(std::uint64_t t) {
  std::uint64_t now = now_us();
  if (t > now) std::this_thread::sleep_for(std::chrono::microseconds(t - now));
}

int UdpTransport::fd_for_port(std::uint16_t src_port) {
  auto it = sockets_.find(src_port);
  if (it != sockets_.end()) return it->second;
  int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) fail(Errc::Io, "socket: " + std::string(std::strerror(errno)));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(src_port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    fail(Errc::Io, "bind port " + std::to_string(src_port) + ": " +
                       std::strerror(errno));
  }
  sockets_[src_port] = fd;
  return fd;
}

void UdpTransport::send(const OutPacket& p) {
  if (p.spoofed_src)
    fail(Errc::Validation, "source spoofing is only available on the simulator transport");
  int fd = fd_for_port(p.src_port);
  sockaddr_in dst{};
  dst.sin_family = AF_INET;
  dst.sin_addr.s_addr = htonl(p.dst.value);
  dst.sin_port = htons(p.dst_port);
  ssize_t n = ::sendto(fd, p.payload.data(), p.payload.size(), 0,
                       reinterpret_cast<sockaddr*>(&dst), sizeof(dst));
  if (n < 0) fail(Errc::Io, "sendto: " + std::string(std::strerror(errno)));
}

std::optional<InPacket> UdpTransport::recv(std::uint64_t wait_us) {
  if (sockets_.empty()) return std::nullopt;
  std::vector<pollfd> fds;
  std::vector<std::uint16_t> ports;
  fds.reserve(sockets_.size());
  for (auto& [port, fd] : sockets_) {
    fds.push_back(pollfd{fd, POLLIN, 0});
    ports.push_back(port);
  }
  int rv = ::poll(fds.data(), fds.size(), int(wait_us / 1000));
  if (rv <= 0) return std::nullopt;
  for (std::size_t i = 0; i < fds.size(); ++i) {
    if (!(fds[i].revents & POLLIN)) continue;
    std::uint8_t buf[65536];
    sockaddr_in peer{};
    socklen_t plen = sizeof(peer);
    ssize_t n = ::recvfrom(fds[i].fd, buf, sizeof(buf), 0,
                           reinterpret_cast<sockaddr*>(&peer), &plen);
    if (n <= 0) continue;
    InPacket in;
    in.from = Ipv4(ntohl(peer.sin_addr.s_addr));
    in.from_port = ntohs(peer.sin_port);
    in.dst_port = ports[i];
    in.payload.assign(buf, buf + n);
    in.at_us = now_us();
    return in;
  }
  return std::nullopt;
}

}  // namespace odnslab::probe
