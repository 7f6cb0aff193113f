#include "classify.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace odnslab::classify {

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::TransparentForwarder: return "transparent_forwarder";
    case Kind::RecursiveForwarder: return "recursive_forwarder";
    case Kind::RecursiveResolver: return "recursive_resolver";
    case Kind::Manipulated: return "manipulated";
    case Kind::Unresponsive: return "unresponsive";
  }
  return "unresponsive";
}

std::optional<Kind> kind_from_name(const std::string& name) {
  if (name == "transparent_forwarder") return Kind::TransparentForwarder;
  if (name == "recursive_forwarder") return Kind::RecursiveForwarder;
  if (name == "recursive_resolver") return Kind::RecursiveResolver;
  if (name == "manipulated") return Kind::Manipulated;
  if (name == "unresponsive") return Kind::Unresponsive;
  return std::nullopt;
}

OdnsLabel classify(const probe::ScanRecord& record) {
  OdnsLabel label;
  if (!record.received_at || !record.response_ip) {
    label.kind = Kind::Unresponsive;
    return label;
  }
  if (!record.control_ok || !record.resolver_ip) {
    label.kind = Kind::Manipulated;
    return label;
  }
  const Ipv4 target = record.target_ip;
  const Ipv4 response = *record.response_ip;
  const Ipv4 resolver = *record.resolver_ip;

  if (response != resolver && target != response) {
    label.kind = Kind::TransparentForwarder;
  } else if (response != resolver && target == response) {
    label.kind = Kind::RecursiveForwarder;
  } else if (response == resolver && target == response) {
    label.kind = Kind::RecursiveResolver;
  } else {
    // response == resolver && target != response: a forwarder in front of a
    // resolver that answers from its zone-facing address. The resolver still
    // responded to the client directly, so the target is a transparent
    // forwarder; the pattern is flagged for downstream consumers.
    label.kind = Kind::TransparentForwarder;
    label.single_address_backend = true;
  }
  return label;
}

std::set<Ipv4> detect_shielded(const std::vector<probe::ScanRecord>& scan_direct,
                               const std::vector<probe::ScanRecord>& scan_via_tf) {
  std::set<Ipv4> responsive_direct;
  for (const auto& rec : scan_direct)
    if (rec.received_at) responsive_direct.insert(rec.target_ip);

  std::set<Ipv4> shielded;
  for (const auto& rec : scan_via_tf) {
    auto label = classify(rec);
    if (label.kind != Kind::TransparentForwarder) continue;
    Ipv4 backend = *rec.response_ip;
    if (!responsive_direct.count(backend)) shielded.insert(backend);
  }
  return shielded;
}

void PrefixTable::insert(Ipv4Prefix prefix, std::string value) {
  const std::uint32_t mask =
      prefix.length == 0 ? 0u
                         : (prefix.length >= 32 ? 0xffffffffu
                                                : ~((1u << (32 - prefix.length)) - 1u));
  by_length_[prefix.length][prefix.network.value & mask] = std::move(value);
}

std::optional<std::string> PrefixTable::lookup(Ipv4 addr) const {
  for (const auto& [length, entries] : by_length_) {
    const std::uint32_t mask =
        length == 0 ? 0u : (length >= 32 ? 0xffffffffu : ~((1u << (32 - length)) - 1u));
    auto it = entries.find(addr.value & mask);
    if (it != entries.end()) return it->second;
  }
  return std::nullopt;
}

std::size_t PrefixTable::size() const {
  std::size_t n = 0;
  for (const auto& [length, entries] : by_length_) n += entries.size();
  return n;
}

PrefixTable PrefixTable::parse_csv(std::istream& in, const std::string& origin) {
  PrefixTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      fail(Errc::Validation, origin + ":" + std::to_string(lineno) +
                                 ": expected 'prefix,value'");
    auto prefix = Ipv4Prefix::parse(line.substr(0, comma));
    if (!prefix)
      fail(Errc::Validation, origin + ":" + std::to_string(lineno) +
                                 ": malformed prefix '" + line.substr(0, comma) + "'");
    table.insert(*prefix, line.substr(comma + 1));
  }
  return table;
}

PrefixTable PrefixTable::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open prefix table: " + path);
  return parse_csv(in, path);
}

void enrich(std::vector<LabeledRecord>& records, const PrefixTable* asn_table,
            const PrefixTable* geo_table) {
  for (auto& lr : records) {
    if (lr.label.kind == Kind::Manipulated || lr.label.kind == Kind::Unresponsive)
      continue;
    if (asn_table) {
      if (auto v = asn_table->lookup(lr.record.target_ip)) {
        std::uint32_t asn = 0;
        auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), asn);
        if (ec == std::errc() && p == v->data() + v->size()) lr.label.asn = asn;
      }
    }
    if (geo_table) {
      if (auto v = geo_table->lookup(lr.record.target_ip)) lr.label.country = *v;
    }
  }
}

Histogram rate_limit_histogram(const std::vector<probe::RateLimitEstimate>& estimates,
                               double bin_width, double top) {
  if (bin_width <= 0) fail(Errc::Validation, "histogram: bin_width must be > 0");
  Histogram h;
  h.bin_width = bin_width;
  h.counts.assign(std::size_t(top / bin_width), 0);
  if (h.counts.empty()) h.counts.push_back(0);
  for (const auto& est : estimates) {
    auto bin = std::size_t(est.max_sustained_rate / bin_width);
    if (bin >= h.counts.size()) bin = h.counts.size() - 1;  // "no further limit"
    h.counts[bin]++;
  }
  return h;
}

RecurrenceDistribution subnet_recurrence(
    const std::vector<std::set<Ipv4>>& weekly_address_sets) {
  RecurrenceDistribution dist;
  dist.epochs = weekly_address_sets.size();
  if (dist.epochs == 0) fail(Errc::Validation, "recurrence: need at least one epoch");
  std::map<Ipv4, std::size_t> seen;
  for (const auto& epoch : weekly_address_sets) {
    std::set<Ipv4> subnets;
    for (Ipv4 addr : epoch) subnets.insert(subnet24(addr));
    for (Ipv4 s : subnets) seen[s]++;
  }
  dist.counts.assign(dist.epochs, 0);
  for (const auto& [subnet, n] : seen) dist.counts[n - 1]++;
  dist.fractions.assign(dist.epochs, 0.0);
  if (!seen.empty())
    for (std::size_t i = 0; i < dist.epochs; ++i)
      dist.fractions[i] = double(dist.counts[i]) / double(seen.size());
  return dist;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

std::map<std::string, double> response_time_delta(
    const std::vector<LabeledRecord>& records) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_country;
  for (const auto& lr : records) {
    if (!lr.label.country || !lr.record.rtt_ms) continue;
    if (lr.label.kind == Kind::TransparentForwarder)
      by_country[*lr.label.country].first.push_back(double(*lr.record.rtt_ms));
    else if (lr.label.kind == Kind::RecursiveForwarder)
      by_country[*lr.label.country].second.push_back(double(*lr.record.rtt_ms));
  }
  std::map<std::string, double> deltas;
  for (const auto& [country, pair] : by_country) {
    if (pair.first.empty() || pair.second.empty()) continue;
    deltas[country] = median(pair.first) - median(pair.second);
  }
  return deltas;
}

}  // namespace odnslab::classify
