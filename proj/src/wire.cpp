#include "wire.hpp"

#include <charconv>

#include "errors.hpp"

namespace odnslab::wire {

namespace {

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

void put_name(std::vector<std::uint8_t>& out, const std::string& name) {
  if (name.empty()) fail(Errc::InvalidName, "name component invalid: empty name");
  std::size_t total = 1;  // root byte
  std::size_t start = 0;
  while (start <= name.size()) {
    std::size_t dot = name.find('.', start);
    std::size_t end = dot == std::string::npos ? name.size() : dot;
    std::size_t len = end - start;
    if (len == 0)
      fail(Errc::InvalidName, "name component invalid: empty label in '" + name + "'");
    if (len > 63) fail(Errc::NameTooLong, "label exceeds 63 bytes in '" + name + "'");
    total += len + 1;
    if (total > 255) fail(Errc::NameTooLong, "name exceeds 255 bytes: '" + name + "'");
    out.push_back(std::uint8_t(len));
    out.insert(out.end(), name.begin() + start, name.begin() + end);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  out.push_back(0);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> buf) : buf_(buf) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  std::size_t size() const { return buf_.size(); }

  std::uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = std::uint16_t(buf_[pos_] << 8) | buf_[pos_ + 1];
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = (std::uint32_t(buf_[pos_]) << 24) |
                      (std::uint32_t(buf_[pos_ + 1]) << 16) |
                      (std::uint32_t(buf_[pos_ + 2]) << 8) |
                      std::uint32_t(buf_[pos_ + 3]);
    pos_ += 4;
    return v;
  }

  std::vector<std::uint8_t> bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> v(buf_.begin() + pos_, buf_.begin() + pos_ + n);
    pos_ += n;
    return v;
  }

  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

  // Reads a possibly-compressed name starting at the cursor. The pointer
  // chase is bounded: every jump must target a strictly smaller offset, so
  // the chain length is at most the message size.
  std::string name() {
    std::string out;
    std::size_t jumps = 0;
    std::size_t resume = 0;
    bool jumped = false;
    std::size_t guard = pos_;  // each pointer must go strictly backwards
    for (;;) {
      std::uint8_t len = u8();
      if ((len & 0xc0) == 0xc0) {
        std::size_t target = std::size_t(len & 0x3f) << 8 | u8();
        if (!jumped) {
          resume = pos_;
          jumped = true;
        }
        if (target >= guard) fail(Errc::PointerLoop, "compression pointer does not go backwards");
        if (++jumps > buf_.size()) fail(Errc::PointerLoop, "compression pointer chain too long");
        guard = target;
        pos_ = target;
        continue;
      }
      if ((len & 0xc0) != 0) fail(Errc::MalformedLabel, "reserved label type");
      if (len == 0) break;
      if (len > 63) fail(Errc::MalformedLabel, "label exceeds 63 bytes");
      need(len);
      if (!out.empty()) out.push_back('.');
      out.append(reinterpret_cast<const char*>(buf_.data() + pos_), len);
      if (out.size() > 255) fail(Errc::MalformedLabel, "name exceeds 255 bytes");
      pos_ += len;
    }
    if (jumped) pos_ = resume;
    return out;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) fail(Errc::TruncatedMessage, "truncated message");
  }

  std::span<const std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

}  // namespace

ResourceRecord ResourceRecord::a(const std::string& name, Ipv4 addr,
                                 std::uint32_t ttl) {
  ResourceRecord rr;
  rr.name = name;
  rr.rtype = kTypeA;
  rr.ttl = ttl;
  rr.rdata = {addr.octet(0), addr.octet(1), addr.octet(2), addr.octet(3)};
  return rr;
}

ResourceRecord ResourceRecord::txt(const std::string& name,
                                   std::string_view text, std::uint32_t ttl) {
  ResourceRecord rr;
  rr.name = name;
  rr.rtype = kTypeTxt;
  rr.ttl = ttl;
  // TXT RDATA is a sequence of <character-string>s of at most 255 bytes.
  std::size_t off = 0;
  do {
    std::size_t chunk = std::min<std::size_t>(255, text.size() - off);
    rr.rdata.push_back(std::uint8_t(chunk));
    rr.rdata.insert(rr.rdata.end(), text.begin() + off, text.begin() + off + chunk);
    off += chunk;
  } while (off < text.size());
  return rr;
}

std::optional<Ipv4> ResourceRecord::a_addr() const {
  if (rtype != kTypeA || rdata.size() != 4) return std::nullopt;
  return Ipv4(rdata[0], rdata[1], rdata[2], rdata[3]);
}

DnsMessage make_query(std::uint16_t id, const std::string& name,
                      std::uint16_t qtype) {
  DnsMessage m;
  m.id = id;
  m.question.name = name;
  m.question.qtype = qtype;
  return m;
}

std::size_t encoded_name_length(const std::string& name) {
  std::vector<std::uint8_t> tmp;
  put_name(tmp, name);
  return tmp.size();
}

std::vector<std::uint8_t> encode(const DnsMessage& msg) {
  std::vector<std::uint8_t> out;
  out.reserve(64);
  put16(out, msg.id);
  std::uint16_t flags = 0;
  if (msg.is_response) flags |= 0x8000;
  if (msg.recursion_desired) flags |= 0x0100;
  if (msg.recursion_available) flags |= 0x0080;
  flags |= msg.rcode & 0x0f;
  put16(out, flags);
  put16(out, 1);  // qdcount
  put16(out, std::uint16_t(msg.answers.size()));
  put16(out, 0);  // nscount
  put16(out, msg.edns0 ? 1 : 0);

  put_name(out, msg.question.name);
  put16(out, msg.question.qtype);
  put16(out, msg.question.qclass);

  for (const auto& rr : msg.answers) {
    if (rr.rtype == kTypeOpt)
      fail(Errc::UnsupportedRtype, "OPT is not an answer record");
    if (rr.rtype == kTypeA && rr.rdata.size() != 4)
      fail(Errc::UnsupportedRtype, "A record rdata must be 4 bytes");
    put_name(out, rr.name);
    put16(out, rr.rtype);
    put16(out, kClassIn);
    put32(out, rr.ttl);
    if (rr.rdata.size() > 0xffff)
      fail(Errc::UnsupportedRtype, "rdata exceeds 65535 bytes");
    put16(out, std::uint16_t(rr.rdata.size()));
    out.insert(out.end(), rr.rdata.begin(), rr.rdata.end());
  }

  if (msg.edns0) {
    out.push_back(0);  // root name
    put16(out, kTypeOpt);
    put16(out, msg.edns0->udp_payload_size);
    put32(out, msg.edns0->dnssec_ok ? 0x00008000u : 0u);
    put16(out, 0);  // empty rdata
  }
  return out;
}

DnsMessage decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) fail(Errc::TruncatedMessage, "message below 12-byte header");
  Reader r(bytes);
  DnsMessage m;
  m.id = r.u16();
  std::uint16_t flags = r.u16();
  m.is_response = (flags & 0x8000) != 0;
  m.recursion_desired = (flags & 0x0100) != 0;
  m.recursion_available = (flags & 0x0080) != 0;
  m.rcode = std::uint8_t(flags & 0x0f);
  std::uint16_t qdcount = r.u16();
  std::uint16_t ancount = r.u16();
  std::uint16_t nscount = r.u16();
  std::uint16_t arcount = r.u16();

  for (std::uint16_t i = 0; i < qdcount; ++i) {
    Question q;
    q.name = r.name();
    q.qtype = r.u16();
    q.qclass = r.u16();
    if (i == 0) m.question = q;  // extra questions are tolerated and dropped
  }

  auto read_record = [&](bool keep) {
    ResourceRecord rr;
    rr.name = r.name();
    rr.rtype = r.u16();
    std::uint16_t rclass = r.u16();
    std::uint32_t ttl = r.u32();
    std::uint16_t rdlength = r.u16();
    if (rr.rtype == kTypeOpt) {
      r.skip(rdlength);
      Edns0 e;
      e.udp_payload_size = rclass;
      e.dnssec_ok = (ttl & 0x00008000u) != 0;
      if (!m.edns0) m.edns0 = e;
      return;
    }
    if (!keep) {
      r.skip(rdlength);
      return;
    }
    rr.ttl = ttl;
    rr.rdata = r.bytes(rdlength);
    m.answers.push_back(std::move(rr));
  };

  for (std::uint16_t i = 0; i < ancount; ++i) read_record(true);
  for (std::uint16_t i = 0; i < nscount; ++i) read_record(false);
  for (std::uint16_t i = 0; i < arcount; ++i) read_record(false);
  return m;
}

std::string qtype_name(std::uint16_t qtype) {
  switch (qtype) {
    case kTypeA: return "A";
    case kTypeTxt: return "TXT";
    case kTypeAny: return "ANY";
    case kTypeRrsig: return "RRSIG";
    case kTypeOpt: return "OPT";
    default: return std::to_string(qtype);
  }
}

std::optional<std::uint16_t> qtype_from_name(const std::string& name) {
  if (name == "A") return kTypeA;
  if (name == "TXT") return kTypeTxt;
  if (name == "ANY") return kTypeAny;
  if (name == "RRSIG") return kTypeRrsig;
  std::uint16_t v = 0;
  auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), v);
  if (ec == std::errc() && p == name.data() + name.size()) return v;
  return std::nullopt;
}

}  // namespace odnslab::wire
