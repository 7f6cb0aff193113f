#include "config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace odnslab::cfg {

namespace {

Ipv4 addr_or_fail(const std::string& text, const std::string& what) {
  auto a = Ipv4::parse(text);
  if (!a) fail(Errc::Config, "config: bad IPv4 for " + what + ": '" + text + "'");
  return *a;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) return;
  if (!std::filesystem::exists(path))
    fail(Errc::Config, "config: " + what + " does not exist: " + path);
}

}  // namespace

ToolkitConfig default_config() {
  ToolkitConfig c;
  c.zone.zone_apex = "probe.test";
  c.zone.control_address = Ipv4(203, 0, 113, 100);
  c.zone.any_payload_size = 2800;
  c.zone.dnssec_payload_size = 2048;
  c.any_qname = "cached." + c.zone.zone_apex;
  c.dnssec_qname = "signed." + c.zone.zone_apex;
  return c;
}

nlohmann::json ToolkitConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  nlohmann::json jz = nlohmann::json::object();
  jz["apex"] = zone.zone_apex;
  jz["control_address"] = zone.control_address.to_string();
  jz["ttl"] = zone.ttl;
  if (zone.any_payload_size) jz["any_payload_size"] = *zone.any_payload_size;
  if (zone.dnssec_payload_size) jz["dnssec_payload_size"] = *zone.dnssec_payload_size;
  j["zone"] = jz;
  j["authd_port"] = authd_port;
  nlohmann::json jt = nlohmann::json::object();
  jt["mode"] = transport_mode == TransportMode::Udp ? "udp" : "sim";
  if (!topology_path.empty()) jt["topology"] = topology_path;
  if (sim_client_address) jt["client_address"] = sim_client_address->to_string();
  j["transport"] = jt;
  nlohmann::json js = nlohmann::json::object();
  js["schedule"] = staircase.step_schedule;
  js["step_duration_s"] = staircase.step_duration_s;
  js["stop_response_ratio"] = staircase.stop_response_ratio;
  js["quiesce_s"] = staircase.quiesce_s;
  j["staircase"] = js;
  nlohmann::json jp = nlohmann::json::object();
  jp["qname_template"] = qname_template;
  jp["dst_port"] = probe_dst_port;
  jp["ephemeral_base"] = ephemeral_base;
  jp["ephemeral_range"] = ephemeral_range;
  jp["timeout_ms"] = probe_timeout_ms;
  if (!any_qname.empty()) jp["any_qname"] = any_qname;
  if (!dnssec_qname.empty()) jp["dnssec_qname"] = dnssec_qname;
  j["probe"] = jp;
  nlohmann::json jtab = nlohmann::json::object();
  if (!asn_table_path.empty()) jtab["asn"] = asn_table_path;
  if (!geo_table_path.empty()) jtab["geo"] = geo_table_path;
  if (!rules_path.empty()) jtab["rules"] = rules_path;
  if (!profiles_path.empty()) jtab["profiles"] = profiles_path;
  j["tables"] = jtab;
  return j;
}

std::string ToolkitConfig::hash() const {
  const std::string dump = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

ToolkitConfig config_from_json(const nlohmann::json& j,
                               const std::string& base_dir) {
  ToolkitConfig c = default_config();
  try {
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("zone")) {
      const auto& jz = j.at("zone");
      c.zone.zone_apex = jz.value("apex", c.zone.zone_apex);
      if (jz.contains("control_address"))
        c.zone.control_address =
            addr_or_fail(jz.at("control_address").get<std::string>(), "zone.control_address");
      c.zone.ttl = jz.value("ttl", c.zone.ttl);
      if (jz.contains("any_payload_size"))
        c.zone.any_payload_size = jz.at("any_payload_size").get<std::size_t>();
      if (jz.contains("dnssec_payload_size"))
        c.zone.dnssec_payload_size = jz.at("dnssec_payload_size").get<std::size_t>();
    }
    c.authd_port = j.value("authd_port", c.authd_port);
    if (j.contains("transport")) {
      const auto& jt = j.at("transport");
      std::string mode = jt.value("mode", "sim");
      if (mode == "udp")
        c.transport_mode = TransportMode::Udp;
      else if (mode == "sim")
        c.transport_mode = TransportMode::Sim;
      else
        fail(Errc::Config, "config: unknown transport mode '" + mode + "'");
      c.topology_path = jt.value("topology", "");
      if (jt.contains("client_address"))
        c.sim_client_address =
            addr_or_fail(jt.at("client_address").get<std::string>(), "transport.client_address");
    }
    if (j.contains("staircase")) {
      const auto& js = j.at("staircase");
      if (js.contains("schedule"))
        c.staircase.step_schedule = js.at("schedule").get<std::vector<double>>();
      c.staircase.step_duration_s = js.value("step_duration_s", c.staircase.step_duration_s);
      c.staircase.stop_response_ratio =
          js.value("stop_response_ratio", c.staircase.stop_response_ratio);
      c.staircase.quiesce_s = js.value("quiesce_s", c.staircase.quiesce_s);
      if (!c.staircase.step_schedule.empty()) {
        c.staircase.start_rate = c.staircase.step_schedule.front();
        c.staircase.max_rate = c.staircase.step_schedule.back();
      }
      c.staircase.validate();
    }
    if (j.contains("probe")) {
      const auto& jp = j.at("probe");
      c.qname_template = jp.value("qname_template", c.qname_template);
      c.probe_dst_port = jp.value("dst_port", c.probe_dst_port);
      c.ephemeral_base = jp.value("ephemeral_base", c.ephemeral_base);
      c.ephemeral_range = jp.value("ephemeral_range", c.ephemeral_range);
      c.probe_timeout_ms = jp.value("timeout_ms", c.probe_timeout_ms);
      c.any_qname = jp.value("any_qname", c.any_qname);
      c.dnssec_qname = jp.value("dnssec_qname", c.dnssec_qname);
    }
    if (j.contains("tables")) {
      const auto& jt = j.at("tables");
      c.asn_table_path = jt.value("asn", "");
      c.geo_table_path = jt.value("geo", "");
      c.rules_path = jt.value("rules", "");
      c.profiles_path = jt.value("profiles", "");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::Config, std::string("config: ") + e.what());
  }
  if (c.any_qname.empty()) c.any_qname = "cached." + c.zone.zone_apex;
  if (c.dnssec_qname.empty()) c.dnssec_qname = "signed." + c.zone.zone_apex;

  auto rebase = [&](std::string& path) {
    if (path.empty() || base_dir.empty()) return;
    std::filesystem::path p(path);
    if (p.is_relative() && !std::filesystem::exists(p))
      path = (std::filesystem::path(base_dir) / p).string();
  };
  rebase(c.topology_path);
  rebase(c.asn_table_path);
  rebase(c.geo_table_path);
  rebase(c.rules_path);
  rebase(c.profiles_path);

  require_file(c.topology_path, "transport.topology");
  require_file(c.asn_table_path, "tables.asn");
  require_file(c.geo_table_path, "tables.geo");
  require_file(c.rules_path, "tables.rules");
  require_file(c.profiles_path, "tables.profiles");
  return c;
}

ToolkitConfig load_config(const std::string& path) {
  std::string effective = path;
  if (effective.empty()) {
    if (const char* env = std::getenv("ODNSLAB_CONFIG")) effective = env;
  }
  if (effective.empty()) return default_config();
  std::ifstream in(effective);
  if (!in) fail(Errc::Config, "cannot open config file: " + effective);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::Config, "config JSON: " + std::string(e.what()));
  }
  return config_from_json(j, std::filesystem::path(effective).parent_path().string());
}

void apply_override(nlohmann::json& j, const std::string& key,
                    const std::string& value) {
  nlohmann::json* cursor = &j;
  std::size_t start = 0;
  for (;;) {
    std::size_t dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? key.npos : dot - start);
    if (part.empty()) fail(Errc::Usage, "bad override key: '" + key + "'");
    if (dot == std::string::npos) {
      auto parsed = nlohmann::json::parse(value, nullptr, false);
      (*cursor)[part] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
      return;
    }
    cursor = &(*cursor)[part];
    start = dot + 1;
  }
}

}  // namespace odnslab::cfg
