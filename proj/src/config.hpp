#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "authd.hpp"
#include "ipv4.hpp"
#include "json.hpp"
#include "probe.hpp"

namespace odnslab::cfg {

enum class TransportMode { Udp, Sim };

struct ToolkitConfig {
  std::uint64_t seed = 1;
  std::string output_dir = ".";

  authd::ZoneConfig zone;
  std::uint16_t authd_port = 5300;  // unprivileged stand-in for 53

  TransportMode transport_mode = TransportMode::Sim;
  std::string topology_path;               // for the sim transport
  std::optional<Ipv4> sim_client_address;  // default: first client node

  probe::StaircaseConfig staircase;
  std::string qname_template = "t{seq}.probe.test";
  std::uint16_t probe_dst_port = 53;
  std::uint16_t ephemeral_base = 40000;
  std::size_t ephemeral_range = 16000;
  std::uint64_t probe_timeout_ms = 5000;

  std::string asn_table_path;
  std::string geo_table_path;
  std::string rules_path;
  std::string profiles_path;

  std::string any_qname;     // defaults to cached.<zone apex>
  std::string dnssec_qname;  // defaults to signed.<zone apex>

  /// FNV-1a over the canonical JSON form; embedded in every artifact.
  std::string hash() const;
  nlohmann::json to_json() const;
};

/// Defaults only; no file touched.
ToolkitConfig default_config();

/// Load and validate. Empty path falls back to the ODNSLAB_CONFIG
/// environment variable, then to plain defaults. Referenced files must
/// exist at load time; relative paths resolve against the config file's
/// directory.
ToolkitConfig load_config(const std::string& path);

ToolkitConfig config_from_json(const nlohmann::json& j,
                               const std::string& base_dir = "");

/// Apply a dotted-path override such as `transport.topology=x.json` or
/// `seed=7`. Values parse as JSON when possible, else as strings.
void apply_override(nlohmann::json& j, const std::string& key,
                    const std::string& value);

}  // namespace odnslab::cfg
