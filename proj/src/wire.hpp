#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipv4.hpp"

namespace odnslab::wire {

// Record/query type codes from RFC 1035/4034. Anything else is carried as an
// opaque passthrough.
inline constexpr std::uint16_t kTypeA = 1;
inline constexpr std::uint16_t kTypeTxt = 16;
inline constexpr std::uint16_t kTypeOpt = 41;
inline constexpr std::uint16_t kTypeRrsig = 46;
inline constexpr std::uint16_t kTypeAny = 255;
inline constexpr std::uint16_t kClassIn = 1;

inline constexpr std::uint8_t kRcodeNoError = 0;
inline constexpr std::uint8_t kRcodeServfail = 2;
inline constexpr std::uint8_t kRcodeNxdomain = 3;
inline constexpr std::uint8_t kRcodeRefused = 5;

struct Question {
  std::string name;  // dot-separated labels, no trailing dot
  std::uint16_t qtype = kTypeA;
  std::uint16_t qclass = kClassIn;

  bool operator==(const Question&) const = default;
};

/// Resource record. rdata holds the raw RDATA bytes for every type; for A
/// records that is exactly the 4 address bytes.
struct ResourceRecord {
  std::string name;
  std::uint16_t rtype = kTypeA;
  std::uint32_t ttl = 0;
  std::vector<std::uint8_t> rdata;

  bool operator==(const ResourceRecord&) const = default;

  static ResourceRecord a(const std::string& name, Ipv4 addr,
                          std::uint32_t ttl);
  static ResourceRecord txt(const std::string& name, std::string_view text,
                            std::uint32_t ttl);

  /// A-record payload, if this is a well-formed A record.
  std::optional<Ipv4> a_addr() const;
};

struct Edns0 {
  std::uint16_t udp_payload_size = 1232;
  bool dnssec_ok = false;

  bool operator==(const Edns0&) const = default;
};

/// Decoded DNS packet covering the subset the toolkit exchanges: one
/// question, answer records, and an optional EDNS0 marker.
struct DnsMessage {
  std::uint16_t id = 0;
  bool is_response = false;
  bool recursion_desired = true;
  bool recursion_available = false;
  std::uint8_t rcode = kRcodeNoError;
  Question question;
  std::vector<ResourceRecord> answers;
  std::optional<Edns0> edns0;

  bool operator==(const DnsMessage&) const = default;
};

/// Build a plain recursive query.
DnsMessage make_query(std::uint16_t id, const std::string& name,
                      std::uint16_t qtype);

/// Serialize to RFC 1035 wire bytes. Names are emitted uncompressed.
/// Throws Error with NameTooLong/InvalidName/UnsupportedRtype.
std::vector<std::uint8_t> encode(const DnsMessage& msg);

/// Parse wire bytes. Authority records are skipped; additional records are
/// skipped except a single OPT, which populates edns0. Name compression is
/// honored with a loop guard. Throws Error with TruncatedMessage/
/// MalformedLabel/PointerLoop.
DnsMessage decode(std::span<const std::uint8_t> bytes);

/// Wire length of an uncompressed name, including the root byte.
std::size_t encoded_name_length(const std::string& name);

std::string qtype_name(std::uint16_t qtype);
std::optional<std::uint16_t> qtype_from_name(const std::string& name);

}  // namespace odnslab::wire
