#include "fingerprint.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>

#include "errors.hpp"

namespace odnslab::fp {

std::string source_name(BannerSource s) {
  switch (s) {
    case BannerSource::Http: return "http";
    case BannerSource::Https: return "https";
    case BannerSource::Ssh: return "ssh";
    case BannerSource::Snmp: return "snmp";
  }
  return "http";
}

std::optional<BannerSource> source_from_name(const std::string& name) {
  if (name == "http") return BannerSource::Http;
  if (name == "https") return BannerSource::Https;
  if (name == "ssh") return BannerSource::Ssh;
  if (name == "snmp") return BannerSource::Snmp;
  return std::nullopt;
}

std::string device_type_name(DeviceType t) {
  switch (t) {
    case DeviceType::RouterCore: return "router_core";
    case DeviceType::RouterCPE: return "router_cpe";
    case DeviceType::Nvr: return "nvr";
    case DeviceType::Other: return "other";
  }
  return "other";
}

std::optional<DeviceType> device_type_from_name(const std::string& name) {
  if (name == "router_core") return DeviceType::RouterCore;
  if (name == "router_cpe") return DeviceType::RouterCPE;
  if (name == "nvr") return DeviceType::Nvr;
  if (name == "other") return DeviceType::Other;
  return std::nullopt;
}

namespace {

// Minimal CSV field splitter with double-quote support, enough for regex
// patterns that contain commas.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

std::vector<FingerprintRule> parse_rules_csv(std::istream& in,
                                             const std::string& origin) {
  std::vector<FingerprintRule> rules;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 4)
      fail(Errc::Validation, origin + ":" + std::to_string(lineno) +
                                 ": expected 'priority,pattern,vendor,device_type'");
    FingerprintRule rule;
    auto [p, ec] = std::from_chars(fields[0].data(),
                                   fields[0].data() + fields[0].size(), rule.priority);
    if (ec != std::errc() || p != fields[0].data() + fields[0].size())
      fail(Errc::Validation, origin + ":" + std::to_string(lineno) + ": bad priority");
    rule.pattern = fields[1];
    rule.vendor = fields[2];
    auto dt = device_type_from_name(fields[3]);
    if (!dt)
      fail(Errc::Validation, origin + ":" + std::to_string(lineno) +
                                 ": unknown device_type '" + fields[3] + "'");
    rule.device_type = *dt;
    try {
      rule.compiled = std::regex(rule.pattern,
                                 std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      fail(Errc::Validation, origin + ":" + std::to_string(lineno) +
                                 ": invalid rule pattern: " + e.what());
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<FingerprintRule> load_rules_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open rules file: " + path);
  return parse_rules_csv(in, path);
}

std::optional<Match> fingerprint(const BannerRecord& record,
                                 const std::vector<FingerprintRule>& rules) {
  if (record.text.empty()) return std::nullopt;
  std::optional<Match> best;
  for (const auto& rule : rules) {
    if (best && rule.priority <= best->priority) continue;  // order breaks ties
    if (std::regex_search(record.text, rule.compiled))
      best = Match{rule.vendor, rule.device_type, rule.priority};
  }
  return best;
}

std::vector<SummaryRow> fingerprint_summary(
    const std::vector<BannerRecord>& corpus,
    const std::vector<FingerprintRule>& rules) {
  std::map<Ipv4, Match> per_device;
  for (const auto& record : corpus) {
    auto m = fingerprint(record, rules);
    if (!m) continue;
    auto it = per_device.find(record.address);
    if (it == per_device.end() || m->priority > it->second.priority)
      per_device[record.address] = *m;
  }
  std::map<std::pair<std::string, DeviceType>, std::uint64_t> counts;
  for (const auto& [addr, match] : per_device)
    counts[{match.vendor, match.device_type}]++;

  std::vector<SummaryRow> rows;
  rows.reserve(counts.size());
  for (const auto& [key, n] : counts)
    rows.push_back(SummaryRow{key.first, key.second, n});
  std::stable_sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    if (a.devices != b.devices) return a.devices > b.devices;
    if (a.vendor != b.vendor) return a.vendor < b.vendor;
    return a.device_type < b.device_type;
  });
  return rows;
}

}  // namespace odnslab::fp
