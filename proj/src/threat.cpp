#include "threat.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "errors.hpp"

namespace odnslab::threat {

double DeviceProfile::pps_at(double packet_bytes) const {
  if (!large_pps) return small_pps;
  const double small_size = 64, large_size = 1518;
  if (packet_bytes <= small_size) return small_pps;
  if (packet_bytes >= large_size) return *large_pps;
  double t = (packet_bytes - small_size) / (large_size - small_size);
  return small_pps + t * (*large_pps - small_pps);
}

void VolumeModelInput::validate() const {
  if (device.small_pps <= 0 || device.uplink_bps <= 0 || device.downlink_bps <= 0)
    fail(Errc::Validation, "device profile values must be positive");
  if (device.large_pps && *device.large_pps > device.small_pps)
    fail(Errc::Validation, "large-packet rate above small-packet rate");
  if (amplification < 1) fail(Errc::Validation, "amplification must be >= 1");
  if (query_bytes < 12) fail(Errc::Validation, "query below minimum DNS size");
  if (mtu <= 0) fail(Errc::Validation, "mtu must be positive");
}

VolumeModelResult effective_rates(const VolumeModelInput& input) {
  input.validate();
  VolumeModelResult r;
  r.response_bytes = input.query_bytes * input.amplification;
  r.response_packets = int(std::ceil(r.response_bytes / input.mtu));
  const double pps = input.device.pps_at(input.query_bytes);

  // Transparent path: one packet per exchange, uplink carries queries only.
  r.tf_qps = std::min(pps, input.device.uplink_bps / (8.0 * input.query_bytes));
  // Recursive path: the CPU sees the request plus each response fragment,
  // and the amplified response occupies the uplink.
  r.rf_qps = std::min(pps / (1.0 + r.response_packets),
                      input.device.uplink_bps / (8.0 * r.response_bytes));

  r.tf_uplink_bps = r.tf_qps * input.query_bytes * 8.0;
  r.rf_ingress_bps = r.rf_qps * input.query_bytes * 8.0;
  r.victim_bps_tf = r.tf_qps * r.response_bytes * 8.0;
  r.victim_bps_rf = r.rf_qps * r.response_bytes * 8.0;
  r.rf_uplink_bps = r.victim_bps_rf;
  r.ratio = r.victim_bps_rf > 0 ? r.victim_bps_tf / r.victim_bps_rf : 0.0;
  return r;
}

std::vector<CurvePoint> ratio_curve(const VolumeModelInput& input,
                                    const std::vector<double>& pps_range) {
  for (std::size_t i = 1; i < pps_range.size(); ++i)
    if (pps_range[i] <= pps_range[i - 1])
      fail(Errc::Validation, "pps_range must be ascending");
  std::vector<CurvePoint> curve;
  curve.reserve(pps_range.size());
  for (double pps : pps_range) {
    VolumeModelInput point = input;
    point.device.small_pps = pps;
    point.device.large_pps.reset();
    auto r = effective_rates(point);
    curve.push_back(CurvePoint{pps, r.victim_bps_tf, r.victim_bps_rf, r.ratio});
  }
  return curve;
}

double aggregate_floor(double count_resolvers, double per_resolver_pps,
                       double query_bytes, double amplification) {
  if (count_resolvers <= 0 || per_resolver_pps <= 0 || query_bytes <= 0 ||
      amplification <= 0)
    fail(Errc::Validation, "aggregate_floor arguments must be positive");
  return per_resolver_pps * query_bytes * amplification * count_resolvers * 8.0;
}

double ForwarderEntry::effective_limit() const {
  double limit = measured_limit_pps.value_or(0.0);
  if (forwarder_limit_pps) limit = std::min(limit, *forwarder_limit_pps);
  return limit;
}

OrchestrationPlan plan_orchestration(const std::vector<ForwarderEntry>& inventory,
                                     std::size_t max_forwarders,
                                     PlanPolicy policy,
                                     double single_vantage_direct_pps) {
  if (max_forwarders < 1) fail(Errc::Validation, "max_forwarders must be >= 1");
  if (single_vantage_direct_pps <= 0)
    fail(Errc::Validation, "direct rate must be positive");
  for (const auto& e : inventory)
    if (e.pop_id.empty())
      fail(Errc::Validation, "inventory entry " + e.address.to_string() +
                                 " lacks a pop_id; resolve PoPs before planning");

  // Best forwarder per group, then the best groups overall.
  std::map<std::string, ForwarderEntry> groups;
  for (const auto& e : inventory) {
    std::string key = policy == PlanPolicy::OnePerPop ? e.pop_id : e.country;
    auto it = groups.find(key);
    if (it == groups.end() || e.effective_limit() > it->second.effective_limit())
      groups[key] = e;
  }
  std::vector<ForwarderEntry> candidates;
  candidates.reserve(groups.size());
  for (const auto& [key, e] : groups) candidates.push_back(e);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const ForwarderEntry& a, const ForwarderEntry& b) {
                     if (a.effective_limit() != b.effective_limit())
                       return a.effective_limit() > b.effective_limit();
                     return a.address < b.address;
                   });

  OrchestrationPlan plan;
  for (const auto& e : candidates) {
    if (plan.assignments.size() >= max_forwarders) break;
    plan.assignments.push_back(e);
    plan.expected_aggregate_pps += e.effective_limit();
  }
  if (plan.assignments.size() < max_forwarders && !inventory.empty()) {
    std::ostringstream os;
    os << "insufficient-distinct-" << (policy == PlanPolicy::OnePerPop ? "pops" : "countries")
       << ": requested " << max_forwarders << ", achievable " << plan.assignments.size();
    plan.warning = os.str();
  }
  plan.equivalent_direct_hosts = std::uint64_t(
      std::llround(plan.expected_aggregate_pps / single_vantage_direct_pps));
  return plan;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(Errc::Validation, "bad number for " + what + ": '" + s + "'");
  }
}

}  // namespace

std::vector<DeviceProfile> parse_profiles_csv(std::istream& in,
                                              const std::string& origin) {
  std::vector<DeviceProfile> profiles;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = split_fields(line);
    if (f.size() != 5)
      fail(Errc::Validation,
           origin + ":" + std::to_string(lineno) +
               ": expected 'name,small_pps,large_pps,uplink_bps,downlink_bps'");
    DeviceProfile p;
    p.name = f[0];
    p.small_pps = parse_double(f[1], "small_pps");
    if (!f[2].empty()) p.large_pps = parse_double(f[2], "large_pps");
    p.uplink_bps = parse_double(f[3], "uplink_bps");
    p.downlink_bps = parse_double(f[4], "downlink_bps");
    profiles.push_back(std::move(p));
  }
  return profiles;
}

std::vector<DeviceProfile> load_profiles_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open profiles file: " + path);
  return parse_profiles_csv(in, path);
}

std::vector<ForwarderEntry> load_inventory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open inventory file: " + path);
  std::vector<ForwarderEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = split_fields(line);
    if (f.size() < 5 || f.size() > 6)
      fail(Errc::Validation,
           path + ":" + std::to_string(lineno) +
               ": expected 'address,backend_service,country,pop_id,"
               "measured_limit_pps[,forwarder_limit_pps]'");
    ForwarderEntry e;
    auto addr = Ipv4::parse(f[0]);
    auto backend = Ipv4::parse(f[1]);
    if (!addr || !backend)
      fail(Errc::Validation, path + ":" + std::to_string(lineno) + ": bad address");
    e.address = *addr;
    e.backend_service = *backend;
    e.country = f[2];
    e.pop_id = f[3];
    if (!f[4].empty()) e.measured_limit_pps = parse_double(f[4], "measured_limit_pps");
    if (f.size() == 6 && !f[5].empty())
      e.forwarder_limit_pps = parse_double(f[5], "forwarder_limit_pps");
    entries.push_back(std::move(e));
  }
  return entries;
}

namespace {

std::string trimmed(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  std::string s(buf);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

std::string mbit(double bps) {
  if (bps >= 1e9) return trimmed(bps / 1e9) + " Gbit/s";
  return trimmed(bps / 1e6) + " Mbit/s";
}

std::string kqps(double qps) {
  if (qps >= 1000) return trimmed(qps / 1000.0) + "k";
  return trimmed(qps);
}

}  // namespace

std::string render_comparison(const std::vector<VolumeModelInput>& inputs) {
  std::ostringstream os;
  for (const auto& input : inputs) {
    auto r = effective_rates(input);
    os << "=== " << input.device.name << " ===\n";
    os << "  uplink " << mbit(input.device.uplink_bps) << ", downlink "
       << mbit(input.device.downlink_bps) << ", slow path "
       << kqps(input.device.pps_at(input.query_bytes)) << " pkts/s\n";
    os << "  query " << trimmed(input.query_bytes) << " B, amplification "
       << trimmed(input.amplification) << "x -> response "
       << trimmed(r.response_bytes) << " B in " << r.response_packets
       << " packets\n";
    os << "  transparent forwarder: " << kqps(r.tf_qps) << " queries/s, "
       << mbit(r.tf_uplink_bps) << " to the resolver, victim sees "
       << mbit(r.victim_bps_tf) << "\n";
    os << "  recursive forwarder:   " << kqps(r.rf_qps) << " queries/s, "
       << mbit(r.rf_ingress_bps) << " inbound, victim sees "
       << mbit(r.victim_bps_rf) << "\n";
    os << "  ratio transparent/recursive: " << trimmed(r.ratio) << "\n";
  }
  return os.str();
}

}  // namespace odnslab::threat
