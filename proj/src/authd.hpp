#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "ipv4.hpp"
#include "wire.hpp"

namespace odnslab::authd {

/// Settings for the controlled measurement zone.
struct ZoneConfig {
  std::string zone_apex = "probe.test";
  Ipv4 control_address{203, 0, 113, 100};
  std::uint32_t ttl = 60;
  /// Target encoded response size for DNSSEC-flagged queries; the answer is
  /// padded with TXT filler and carries an RRSIG marker record.
  std::optional<std::size_t> dnssec_payload_size;
  /// Target encoded response size for ANY queries.
  std::optional<std::size_t> any_payload_size;
};

bool name_in_zone(const std::string& name, const std::string& apex);

/// Answer an in-zone query with two A records: the control record first,
/// then the address of the client that reached us. Out-of-zone names get an
/// empty REFUSED response. ANY/DNSSEC queries are padded to the configured
/// payload profile.
wire::DnsMessage answer(const wire::DnsMessage& query, Ipv4 client_address,
                        const ZoneConfig& zone);

struct Authentic {
  Ipv4 resolver_address;
  bool operator==(const Authentic&) const = default;
};
struct Manipulated {
  bool operator==(const Manipulated&) const = default;
};
using VerifyResult = std::variant<Authentic, Manipulated>;

/// A response is authentic iff among its A records exactly one equals the
/// control address and exactly one other exists; that other is A_resolver.
/// Everything else (missing control, duplicated control, extra addresses,
/// errors) is treated as manipulated.
VerifyResult verify_response(const wire::DnsMessage& resp,
                             const ZoneConfig& zone);

inline std::optional<Ipv4> authentic_resolver(const wire::DnsMessage& resp,
                                              const ZoneConfig& zone) {
  auto v = verify_response(resp, zone);
  if (auto* a = std::get_if<Authentic>(&v)) return a->resolver_address;
  return std::nullopt;
}

/// Append TXT filler records until the encoded message size reaches
/// target_size (within the granularity of one minimal record).
void pad_to_size(wire::DnsMessage& msg, std::size_t target_size);

/// Blocking UDP server around answer(). Used by the `authd` subcommand and
/// by loopback integration tests.
class UdpServer {
 public:
  explicit UdpServer(ZoneConfig zone) : zone_(std::move(zone)) {}
  ~UdpServer();

  UdpServer(const UdpServer&) = delete;
  UdpServer& operator=(const UdpServer&) = delete;

  /// Binds the socket; port 0 picks an ephemeral port. Returns the bound port.
  std::uint16_t bind(std::uint16_t port);

  /// Serves until max_queries answers have been sent (0 = until stop()).
  /// on_serve, when set, is called after each handled query.
  void serve(std::uint64_t max_queries,
             const std::function<void(std::uint64_t)>& on_serve = {});

  void stop() { stopping_ = true; }

  std::uint64_t queries_handled() const { return handled_; }

 private:
  ZoneConfig zone_;
  int fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> handled_{0};
};

}  // namespace odnslab::authd
