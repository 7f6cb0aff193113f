#include "authd.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "errors.hpp"

namespace odnslab::authd {

bool name_in_zone(const std::string& name, const std::string& apex) {
  if (name.size() < apex.size()) return false;
  if (name.size() == apex.size()) return name == apex;
  return name.compare(name.size() - apex.size(), apex.size(), apex) == 0 &&
         name[name.size() - apex.size() - 1] == '.';
}

void pad_to_size(wire::DnsMessage& msg, std::size_t target_size) {
  const std::string& name = msg.question.name;
  // Fixed per-record cost: name + type/class/ttl/rdlength + one length byte.
  const std::size_t overhead = wire::encoded_name_length(name) + 10 + 1;
  std::size_t size = wire::encode(msg).size();
  while (size + overhead <= target_size) {
    std::size_t text = std::min<std::size_t>(255, target_size - size - overhead);
    msg.answers.push_back(
        wire::ResourceRecord::txt(name, std::string(text, 'x'), 0));
    size += overhead + text;
  }
}

wire::DnsMessage answer(const wire::DnsMessage& query, Ipv4 client_address,
                        const ZoneConfig& zone) {
  wire::DnsMessage resp;
  resp.id = query.id;
  resp.is_response = true;
  resp.recursion_desired = query.recursion_desired;
  resp.question = query.question;
  if (query.edns0) resp.edns0 = wire::Edns0{query.edns0->udp_payload_size, query.edns0->dnssec_ok};

  if (!name_in_zone(query.question.name, zone.zone_apex)) {
    resp.rcode = wire::kRcodeRefused;
    return resp;
  }

  const std::string& qname = query.question.name;
  resp.answers.push_back(
      wire::ResourceRecord::a(qname, zone.control_address, zone.ttl));
  resp.answers.push_back(
      wire::ResourceRecord::a(qname, client_address, zone.ttl));

  bool wants_dnssec = query.edns0 && query.edns0->dnssec_ok;
  if (wants_dnssec && zone.dnssec_payload_size) {
    wire::ResourceRecord sig;
    sig.name = qname;
    sig.rtype = wire::kTypeRrsig;
    sig.ttl = zone.ttl;
    sig.rdata.assign(64, 0x5a);  // opaque signature stand-in
    resp.answers.push_back(std::move(sig));
    pad_to_size(resp, *zone.dnssec_payload_size);
  } else if (query.question.qtype == wire::kTypeAny && zone.any_payload_size) {
    pad_to_size(resp, *zone.any_payload_size);
  }
  return resp;
}

VerifyResult verify_response(const wire::DnsMessage& resp,
                             const ZoneConfig& zone) {
  int control = 0;
  int other = 0;
  Ipv4 resolver;
  for (const auto& rr : resp.answers) {
    auto addr = rr.a_addr();
    if (!addr) continue;
    if (*addr == zone.control_address) {
      ++control;
    } else {
      ++other;
      resolver = *addr;
    }
  }
  if (control == 1 && other == 1) return Authentic{resolver};
  return Manipulated{};
}

UdpServer::~UdpServer() {
  if (fd_ >= 0) ::close(fd_);
}

std::uint16_t UdpServer::bind(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) fail(Errc::Io, "socket: " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    fail(Errc::Io, "bind: " + std::string(std::strerror(errno)));
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

void UdpServer::serve(std::uint64_t max_queries,
                      const std::function<void(std::uint64_t)>& on_serve) {
  std::uint8_t buf[4096];
  while (!stopping_ && (max_queries == 0 || handled_ < max_queries)) {
    pollfd pfd{fd_, POLLIN, 0};
    int rv = ::poll(&pfd, 1, 200);
    if (rv <= 0) continue;
    sockaddr_in peer{};
    socklen_t plen = sizeof(peer);
    ssize_t n = ::recvfrom(fd_, buf, sizeof(buf), 0,
                           reinterpret_cast<sockaddr*>(&peer), &plen);
    if (n <= 0) continue;
    wire::DnsMessage query;
    try {
      query = wire::decode({buf, std::size_t(n)});
    } catch (const Error&) {
      continue;  // garbage in, nothing out
    }
    if (query.is_response) continue;
    Ipv4 client(ntohl(peer.sin_addr.s_addr));
    auto resp = wire::encode(answer(query, client, zone_));
    ::sendto(fd_, resp.data(), resp.size(), 0,
             reinterpret_cast<sockaddr*>(&peer), plen);
    ++handled_;
    if (on_serve) on_serve(handled_);
  }
}

}  // namespace odnslab::authd
