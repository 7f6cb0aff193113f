#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipv4.hpp"

namespace odnslab::threat {

/// Router performance envelope. Slow-path packet rates may depend on packet
/// size; small_pps/large_pps are the vendor figures for 64- and 1518-byte
/// packets and intermediate sizes interpolate linearly.
struct DeviceProfile {
  std::string name;
  double small_pps = 0;
  std::optional<double> large_pps;
  double uplink_bps = 0;
  double downlink_bps = 0;

  double pps_at(double packet_bytes) const;
};

struct VolumeModelInput {
  DeviceProfile device;
  double query_bytes = 70;
  double amplification = 40;
  double mtu = 1500;

  void validate() const;
};

struct VolumeModelResult {
  double tf_qps = 0;
  double rf_qps = 0;
  double tf_uplink_bps = 0;  // query traffic leaving the forwarder
  double rf_uplink_bps = 0;  // amplified traffic the forwarder must carry
  double rf_ingress_bps = 0;  // query traffic reaching the forwarder
  double victim_bps_tf = 0;
  double victim_bps_rf = 0;
  double ratio = 0;
  double response_bytes = 0;
  int response_packets = 0;
};

/// Effective query rates and victim traffic for a device used as a
/// transparent vs. recursive forwarder. The transparent path carries only
/// queries; the recursive path handles the request plus every response
/// fragment and is additionally bound by its uplink on response bytes.
VolumeModelResult effective_rates(const VolumeModelInput& input);

struct CurvePoint {
  double pps = 0;
  double victim_bps_tf = 0;
  double victim_bps_rf = 0;
  double ratio = 0;
};

/// Sweep slow_path_pps over pps_range with the input's link speeds held
/// fixed.
std::vector<CurvePoint> ratio_curve(const VolumeModelInput& input,
                                    const std::vector<double>& pps_range);

/// Lower bound on aggregate victim traffic in bits per second:
/// per_resolver_pps * query_bytes * amplification * count * 8.
double aggregate_floor(double count_resolvers, double per_resolver_pps,
                       double query_bytes, double amplification);

struct ForwarderEntry {
  Ipv4 address;
  Ipv4 backend_service;
  std::string country;
  std::string pop_id;
  std::optional<double> measured_limit_pps;  // staircase estimate via this forwarder
  std::optional<double> forwarder_limit_pps;

  double effective_limit() const;
};

enum class PlanPolicy { OnePerPop, OnePerCountry };

struct OrchestrationPlan {
  std::vector<ForwarderEntry> assignments;
  double expected_aggregate_pps = 0;
  /// Hosts an attacker would need to reach the same volume by targeting
  /// resolvers directly from single-PoP vantage points.
  std::uint64_t equivalent_direct_hosts = 0;
  std::string warning;  // set when the policy could not be met in full
};

/// Pick at most max_forwarders forwarders, no two sharing a PoP (or country),
/// maximizing the expected aggregate rate.
OrchestrationPlan plan_orchestration(const std::vector<ForwarderEntry>& inventory,
                                     std::size_t max_forwarders,
                                     PlanPolicy policy,
                                     double single_vantage_direct_pps);

std::vector<DeviceProfile> load_profiles_csv(const std::string& path);
std::vector<DeviceProfile> parse_profiles_csv(std::istream& in,
                                              const std::string& origin);

std::vector<ForwarderEntry> load_inventory_csv(const std::string& path);

/// Plain-text comparison table for one device, in the layout of the
/// forwarder performance comparison.
std::string render_comparison(const std::vector<VolumeModelInput>& inputs);

}  // namespace odnslab::threat
