#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ipv4.hpp"
#include "probe.hpp"

namespace odnslab::classify {

enum class Kind {
  TransparentForwarder,
  RecursiveForwarder,
  RecursiveResolver,
  Manipulated,
  Unresponsive,
};

std::string kind_name(Kind k);
std::optional<Kind> kind_from_name(const std::string& name);

struct OdnsLabel {
  Kind kind = Kind::Unresponsive;
  /// Set when the responding backend answered with the same address it used
  /// toward the measurement zone (single-address resolver behind the
  /// forwarder); the target still acts as a transparent forwarder.
  bool single_address_backend = false;
  std::optional<Ipv4> shielded_backend;  // only for TransparentForwarder
  std::optional<std::uint32_t> asn;
  std::optional<std::string> country;
};

/// Address-pattern classification over (IP_target, IP_response, A_resolver).
OdnsLabel classify(const probe::ScanRecord& record);

/// Resolvers reached through transparent forwarders that never answered a
/// direct probe themselves.
std::set<Ipv4> detect_shielded(const std::vector<probe::ScanRecord>& scan_direct,
                               const std::vector<probe::ScanRecord>& scan_via_tf);

/// Longest-prefix-match table over IPv4, loaded from `prefix,value` CSV.
class PrefixTable {
 public:
  void insert(Ipv4Prefix prefix, std::string value);
  std::optional<std::string> lookup(Ipv4 addr) const;
  std::size_t size() const;

  static PrefixTable load_csv(const std::string& path);
  static PrefixTable parse_csv(std::istream& in, const std::string& origin);

 private:
  // one exact-match map per prefix length, probed longest-first
  std::map<int, std::map<std::uint32_t, std::string>, std::greater<>> by_length_;
};

struct LabeledRecord {
  probe::ScanRecord record;
  OdnsLabel label;
};

/// Attach ASN/country labels by longest-prefix match on the target address.
void enrich(std::vector<LabeledRecord>& records, const PrefixTable* asn_table,
            const PrefixTable* geo_table);

struct Histogram {
  double bin_width = 100;
  std::vector<std::uint64_t> counts;  // bin k covers [k*w, (k+1)*w)
};

/// Bin rate-limit estimates; everything at or above the top of the last bin
/// collapses into it ("no further request limit").
Histogram rate_limit_histogram(const std::vector<probe::RateLimitEstimate>& estimates,
                               double bin_width = 100, double top = 3000);

struct RecurrenceDistribution {
  std::size_t epochs = 0;
  /// index r-1 = number of /24 subnets seen in exactly r epochs
  std::vector<std::uint64_t> counts;
  std::vector<double> fractions;
};

RecurrenceDistribution subnet_recurrence(
    const std::vector<std::set<Ipv4>>& weekly_address_sets);

/// Per-country median(TF rtt) - median(RF rtt), in milliseconds. Countries
/// lacking either kind are omitted.
std::map<std::string, double> response_time_delta(
    const std::vector<LabeledRecord>& records);

}  // namespace odnslab::classify
