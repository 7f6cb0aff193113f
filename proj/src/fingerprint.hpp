#pragma once

#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "ipv4.hpp"

namespace odnslab::fp {

enum class BannerSource { Http, Https, Ssh, Snmp };

std::string source_name(BannerSource s);
std::optional<BannerSource> source_from_name(const std::string& name);

struct BannerRecord {
  Ipv4 address;
  BannerSource source = BannerSource::Http;
  std::string text;  // may be empty; an empty banner matches nothing
};

enum class DeviceType { RouterCore, RouterCPE, Nvr, Other };

std::string device_type_name(DeviceType t);
std::optional<DeviceType> device_type_from_name(const std::string& name);

struct FingerprintRule {
  std::string pattern;
  std::string vendor;
  DeviceType device_type = DeviceType::Other;
  int priority = 0;
  std::regex compiled;
};

struct Match {
  std::string vendor;
  DeviceType device_type = DeviceType::Other;
  int priority = 0;

  bool operator==(const Match&) const = default;
};

/// Rules from CSV `priority,pattern,vendor,device_type`. Patterns compile as
/// case-insensitive ECMAScript regexes; a pattern that fails to compile is an
/// invalid-rule error at load time.
std::vector<FingerprintRule> load_rules_csv(const std::string& path);
std::vector<FingerprintRule> parse_rules_csv(std::istream& in,
                                             const std::string& origin);

/// First match by priority, then rule order; no match -> absent.
std::optional<Match> fingerprint(const BannerRecord& record,
                                 const std::vector<FingerprintRule>& rules);

struct SummaryRow {
  std::string vendor;
  DeviceType device_type = DeviceType::Other;
  std::uint64_t devices = 0;
};

/// Aggregate matches by (vendor, device type), deduplicated by address with
/// the highest-priority match winning across a device's banners. Sorted by
/// count descending.
std::vector<SummaryRow> fingerprint_summary(
    const std::vector<BannerRecord>& corpus,
    const std::vector<FingerprintRule>& rules);

}  // namespace odnslab::fp
