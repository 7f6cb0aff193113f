#pragma once

// Randomized inputs shared by the unit and acceptance suites.

#include <random>
#include <string>
#include <vector>

#include "wire.hpp"

namespace testgen {

inline std::string random_label(std::mt19937_64& rng, std::size_t max_len) {
  static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789-";
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, sizeof(alphabet) - 2);
  std::string s;
  std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[pick(rng)]);
  return s;
}

inline std::string random_name(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> labels(1, 4);
  std::string name;
  int n = labels(rng);
  for (int i = 0; i < n; ++i) {
    if (i) name.push_back('.');
    name += random_label(rng, 20);
  }
  return name;
}

inline std::vector<std::uint8_t> random_bytes(std::mt19937_64& rng,
                                              std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<std::uint8_t> v(len(rng));
  for (auto& b : v) b = std::uint8_t(byte(rng));
  return v;
}

/// A well-formed message drawn from the wire subset the toolkit speaks.
inline odnslab::wire::DnsMessage random_message(std::mt19937_64& rng) {
  using namespace odnslab::wire;
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<std::uint32_t> u16(0, 0xffff);
  std::uniform_int_distribution<std::uint32_t> ttl(0, 0x7fffffff);
  std::uniform_int_distribution<int> nanswers(0, 4);
  std::uniform_int_distribution<int> rrkind(0, 3);
  std::uniform_int_distribution<int> rcode(0, 15);

  DnsMessage m;
  m.id = std::uint16_t(u16(rng));
  m.is_response = coin(rng) != 0;
  m.recursion_desired = coin(rng) != 0;
  m.recursion_available = coin(rng) != 0;
  m.rcode = std::uint8_t(rcode(rng));
  m.question.name = random_name(rng);
  const std::uint16_t qtypes[] = {kTypeA, kTypeTxt, kTypeAny};
  m.question.qtype = qtypes[std::uniform_int_distribution<int>(0, 2)(rng)];

  int n = m.is_response ? nanswers(rng) : 0;
  for (int i = 0; i < n; ++i) {
    ResourceRecord rr;
    rr.name = coin(rng) ? m.question.name : random_name(rng);
    rr.ttl = ttl(rng);
    switch (rrkind(rng)) {
      case 0: {
        rr.rtype = kTypeA;
        rr.rdata = random_bytes(rng, 4);
        rr.rdata.resize(4, 0);
        break;
      }
      case 1: {
        rr.rtype = kTypeTxt;
        rr.rdata = random_bytes(rng, 80);
        break;
      }
      case 2: {
        rr.rtype = kTypeRrsig;
        rr.rdata = random_bytes(rng, 64);
        break;
      }
      default: {
        // opaque passthrough of a type outside the modeled subset
        const std::uint16_t other[] = {2, 5, 6, 28, 99};
        rr.rtype = other[std::uniform_int_distribution<int>(0, 4)(rng)];
        rr.rdata = random_bytes(rng, 40);
        break;
      }
    }
    m.answers.push_back(std::move(rr));
  }
  if (coin(rng)) {
    Edns0 e;
    e.udp_payload_size = std::uint16_t(512 + u16(rng) % 3584);
    e.dnssec_ok = coin(rng) != 0;
    m.edns0 = e;
  }
  return m;
}

}  // namespace testgen
