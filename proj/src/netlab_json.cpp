#include <fstream>

#include "errors.hpp"
#include "netlab.hpp"

namespace odnslab::netlab {

namespace {

using nlohmann::json;

Ipv4 addr_field(const json& j, const std::string& key) {
  if (!j.contains(key)) fail(Errc::Validation, "topology: missing '" + key + "'");
  auto a = Ipv4::parse(j.at(key).get<std::string>());
  if (!a) fail(Errc::Validation, "topology: bad IPv4 in '" + key + "'");
  return *a;
}

ResolverProfile profile_from_json(const json& j) {
  ResolverProfile p;
  if (j.contains("egress")) p.egress = addr_field(j, "egress");
  if (j.contains("any_payload_size"))
    p.any_payload_size = j.at("any_payload_size").get<std::size_t>();
  if (j.contains("dnssec_payload_size"))
    p.dnssec_payload_size = j.at("dnssec_payload_size").get<std::size_t>();
  return p;
}

void profile_to_json(json& j, const ResolverProfile& p) {
  if (p.egress) j["egress"] = p.egress->to_string();
  if (p.any_payload_size) j["any_payload_size"] = *p.any_payload_size;
  if (p.dnssec_payload_size) j["dnssec_payload_size"] = *p.dnssec_payload_size;
}

}  // namespace

Topology topology_from_json(const json& j) {
  Topology t;
  t.seed = j.value("seed", std::uint64_t(0));
  t.default_latency_ms = j.value("default_latency_ms", 20.0);
  for (const auto& jn : j.value("nodes", json::array())) {
    NodeSpec n;
    n.address = addr_field(jn, "address");
    std::string role = jn.value("role", "");
    if (role == "client") {
      n.role = ClientSpec{};
    } else if (role == "transparent_forwarder") {
      n.role = TransparentForwarderSpec{addr_field(jn, "upstream")};
    } else if (role == "recursive_forwarder") {
      n.role = RecursiveForwarderSpec{addr_field(jn, "upstream"),
                                      jn.value("cache", false)};
    } else if (role == "recursive_resolver") {
      n.role = RecursiveResolverSpec{profile_from_json(jn)};
    } else if (role == "shielded_resolver") {
      ShieldedResolverSpec s;
      s.profile = profile_from_json(jn);
      for (const auto& p : jn.value("allowed_prefixes", json::array())) {
        auto pref = Ipv4Prefix::parse(p.get<std::string>());
        if (!pref) fail(Errc::Validation, "topology: bad prefix");
        s.allowed_prefixes.push_back(*pref);
      }
      n.role = std::move(s);
    } else if (role == "anycast_frontend") {
      AnycastFrontendSpec a;
      a.service_address = addr_field(jn, "service_address");
      a.pop_id = jn.value("pop_id", "");
      a.profile = profile_from_json(jn);
      n.role = std::move(a);
    } else if (role == "broadcast_gateway") {
      BroadcastGatewaySpec b;
      auto pref = Ipv4Prefix::parse(jn.value("subnet", ""));
      if (!pref) fail(Errc::Validation, "topology: bad subnet");
      b.subnet = *pref;
      for (const auto& r : jn.value("responders", json::array())) {
        auto a = Ipv4::parse(r.get<std::string>());
        if (!a) fail(Errc::Validation, "topology: bad responder address");
        b.responders.push_back(*a);
      }
      n.role = std::move(b);
    } else if (role == "authoritative") {
      AuthoritativeSpec a;
      const auto& jz = jn.at("zone");
      a.zone.zone_apex = jz.value("apex", "probe.test");
      a.zone.control_address = addr_field(jz, "control_address");
      a.zone.ttl = jz.value("ttl", 60u);
      if (jz.contains("any_payload_size"))
        a.zone.any_payload_size = jz.at("any_payload_size").get<std::size_t>();
      if (jz.contains("dnssec_payload_size"))
        a.zone.dnssec_payload_size = jz.at("dnssec_payload_size").get<std::size_t>();
      n.role = std::move(a);
    } else if (role == "manipulator") {
      n.role = ManipulatorSpec{addr_field(jn, "fake_address")};
    } else {
      fail(Errc::Validation, "topology: unknown role '" + role + "'");
    }
    if (jn.contains("rate_limit")) {
      const auto& jr = jn.at("rate_limit");
      RateLimitSpec rl;
      rl.capacity_pps = jr.value("capacity", 0.0);
      rl.bucket_size = jr.value("bucket_size", 1.0);
      std::string keying = jr.value("keying", "per_source");
      if (keying == "per_source") rl.keying = RateLimitSpec::Keying::PerSource;
      else if (keying == "per_name") rl.keying = RateLimitSpec::Keying::PerName;
      else if (keying == "global") rl.keying = RateLimitSpec::Keying::Global;
      else fail(Errc::Validation, "topology: unknown keying '" + keying + "'");
      n.rate_limit = rl;
    }
    n.supports_any = jn.value("supports_any", true);
    n.supports_dnssec = jn.value("supports_dnssec", true);
    n.refuse_unsupported = jn.value("refuse_unsupported", false);
    n.drop_dnssec_queries = jn.value("drop_dnssec_queries", false);
    if (jn.contains("slow_path_pps")) n.slow_path_pps = jn.at("slow_path_pps").get<double>();
    if (jn.contains("uplink_bps")) n.uplink_bps = jn.at("uplink_bps").get<double>();
    if (jn.contains("downlink_bps")) n.downlink_bps = jn.at("downlink_bps").get<double>();
    t.nodes.push_back(std::move(n));
  }
  for (const auto& jl : j.value("links", json::array())) {
    LinkSpec l;
    l.a = addr_field(jl, "a");
    l.b = addr_field(jl, "b");
    l.latency_ms = jl.value("latency_ms", t.default_latency_ms);
    l.loss_rate = jl.value("loss_rate", 0.0);
    t.links.push_back(l);
  }
  if (j.contains("regions")) {
    for (const auto& [addr, region] : j.at("regions").items()) {
      auto a = Ipv4::parse(addr);
      if (!a) fail(Errc::Validation, "topology: bad region address");
      t.regions[*a] = region.get<std::string>();
    }
  }
  return t;
}

json topology_to_json(const Topology& t) {
  json j;
  j["seed"] = t.seed;
  j["default_latency_ms"] = t.default_latency_ms;
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    json jn;
    jn["address"] = n.address.to_string();
    std::visit(
        [&](const auto& role) {
          using T = std::decay_t<decltype(role)>;
          if constexpr (std::is_same_v<T, ClientSpec>) {
            jn["role"] = "client";
          } else if constexpr (std::is_same_v<T, TransparentForwarderSpec>) {
            jn["role"] = "transparent_forwarder";
            jn["upstream"] = role.upstream.to_string();
          } else if constexpr (std::is_same_v<T, RecursiveForwarderSpec>) {
            jn["role"] = "recursive_forwarder";
            jn["upstream"] = role.upstream.to_string();
            jn["cache"] = role.cache;
          } else if constexpr (std::is_same_v<T, RecursiveResolverSpec>) {
            jn["role"] = "recursive_resolver";
            profile_to_json(jn, role.profile);
          } else if constexpr (std::is_same_v<T, ShieldedResolverSpec>) {
            jn["role"] = "shielded_resolver";
            profile_to_json(jn, role.profile);
            json prefixes = json::array();
            for (const auto& p : role.allowed_prefixes) prefixes.push_back(p.to_string());
            jn["allowed_prefixes"] = prefixes;
          } else if constexpr (std::is_same_v<T, AnycastFrontendSpec>) {
            jn["role"] = "anycast_frontend";
            jn["service_address"] = role.service_address.to_string();
            jn["pop_id"] = role.pop_id;
            profile_to_json(jn, role.profile);
          } else if constexpr (std::is_same_v<T, BroadcastGatewaySpec>) {
            jn["role"] = "broadcast_gateway";
            jn["subnet"] = role.subnet.to_string();
            json responders = json::array();
            for (Ipv4 r : role.responders) responders.push_back(r.to_string());
            jn["responders"] = responders;
          } else if constexpr (std::is_same_v<T, AuthoritativeSpec>) {
            jn["role"] = "authoritative";
            json jz;
            jz["apex"] = role.zone.zone_apex;
            jz["control_address"] = role.zone.control_address.to_string();
            jz["ttl"] = role.zone.ttl;
            if (role.zone.any_payload_size) jz["any_payload_size"] = *role.zone.any_payload_size;
            if (role.zone.dnssec_payload_size)
              jz["dnssec_payload_size"] = *role.zone.dnssec_payload_size;
            jn["zone"] = jz;
          } else if constexpr (std::is_same_v<T, ManipulatorSpec>) {
            jn["role"] = "manipulator";
            jn["fake_address"] = role.fake_address.to_string();
          }
        },
        n.role);
    if (n.rate_limit) {
      json jr;
      jr["capacity"] = n.rate_limit->capacity_pps;
      jr["bucket_size"] = n.rate_limit->bucket_size;
      switch (n.rate_limit->keying) {
        case RateLimitSpec::Keying::PerSource: jr["keying"] = "per_source"; break;
        case RateLimitSpec::Keying::PerName: jr["keying"] = "per_name"; break;
        case RateLimitSpec::Keying::Global: jr["keying"] = "global"; break;
      }
      jn["rate_limit"] = jr;
    }
    if (!n.supports_any) jn["supports_any"] = false;
    if (!n.supports_dnssec) jn["supports_dnssec"] = false;
    if (n.refuse_unsupported) jn["refuse_unsupported"] = true;
    if (n.drop_dnssec_queries) jn["drop_dnssec_queries"] = true;
    if (n.slow_path_pps) jn["slow_path_pps"] = *n.slow_path_pps;
    if (n.uplink_bps) jn["uplink_bps"] = *n.uplink_bps;
    if (n.downlink_bps) jn["downlink_bps"] = *n.downlink_bps;
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  json links = json::array();
  for (const auto& l : t.links) {
    links.push_back({{"a", l.a.to_string()},
                     {"b", l.b.to_string()},
                     {"latency_ms", l.latency_ms},
                     {"loss_rate", l.loss_rate}});
  }
  j["links"] = std::move(links);
  json regions = json::object();
  for (const auto& [addr, region] : t.regions) regions[addr.to_string()] = region;
  j["regions"] = std::move(regions);
  return j;
}

Topology load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open topology file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Errc::Validation, "topology JSON: " + std::string(e.what()));
  }
  return topology_from_json(j);
}

std::vector<WorkloadEntry> workload_from_json(const json& j) {
  std::vector<WorkloadEntry> out;
  for (const auto& je : j) {
    WorkloadEntry e;
    e.time_ms = je.value("time_ms", 0.0);
    e.src = addr_field(je, "src");
    if (je.contains("spoofed_src")) e.spoofed_src = addr_field(je, "spoofed_src");
    e.dst = addr_field(je, "dst");
    e.src_port = je.value("src_port", 40000);
    e.dns_id = je.value("dns_id", 1);
    e.qname = je.value("qname", "");
    if (je.contains("qtype")) {
      auto qt = wire::qtype_from_name(je.at("qtype").get<std::string>());
      if (!qt) fail(Errc::Validation, "workload: unknown qtype");
      e.qtype = *qt;
    }
    e.dnssec_ok = je.value("dnssec_ok", false);
    out.push_back(std::move(e));
  }
  return out;
}

json trace_event_to_json(const TraceEvent& ev) {
  json j;
  j["time_ms"] = double(ev.time_us) / 1000.0;
  switch (ev.kind) {
    case EventKind::Send: j["kind"] = "send"; break;
    case EventKind::Deliver: j["kind"] = "deliver"; break;
    case EventKind::Drop: j["kind"] = "drop"; break;
    case EventKind::Respond: j["kind"] = "respond"; break;
  }
  j["at"] = ev.at.to_string();
  j["src"] = ev.packet.src.to_string();
  j["src_port"] = ev.packet.src_port;
  j["dst"] = ev.packet.dst.to_string();
  j["dst_port"] = ev.packet.dst_port;
  j["size"] = ev.packet.payload.size();
  if (ev.packet.spoofed) j["spoofed_src"] = ev.packet.src.to_string();
  if (!ev.reason.empty()) j["reason"] = ev.reason;
  try {
    auto msg = wire::decode(ev.packet.payload);
    j["dns"] = {{"id", msg.id},
                {"qname", msg.question.name},
                {"qtype", wire::qtype_name(msg.question.qtype)},
                {"response", msg.is_response},
                {"answers", msg.answers.size()}};
  } catch (const Error&) {
  }
  return j;
}

GeneratedTopology generate_random_topology(std::uint64_t seed,
                                           const RoleCounts& counts) {
  std::mt19937_64 rng(seed);
  GeneratedTopology out;
  Topology& topo = out.topology;
  GroundTruth& truth = out.truth;
  topo.seed = seed;

  const Ipv4 scanner(198, 18, 0, 10);
  const Ipv4 victim(198, 18, 0, 66);
  const Ipv4 auth_addr(198, 18, 0, 53);
  authd::ZoneConfig zone;
  zone.zone_apex = "probe.test";
  zone.control_address = Ipv4(198, 18, 0, 77);
  zone.any_payload_size = 2800;
  zone.dnssec_payload_size = 2048;
  truth.scanner = scanner;
  truth.victim = victim;
  truth.zone = zone;

  topo.nodes.push_back(NodeSpec{scanner, ClientSpec{}});
  topo.nodes.push_back(NodeSpec{victim, ClientSpec{}});
  topo.nodes.push_back(NodeSpec{auth_addr, AuthoritativeSpec{zone}});

  std::uniform_int_distribution<int> latency(5, 80);
  auto link_to_scanner = [&](Ipv4 a) {
    topo.links.push_back(LinkSpec{scanner, a, double(latency(rng)), 0.0});
  };

  auto next_addr = [](Ipv4 base, int i) {
    return Ipv4(base.value + std::uint32_t(i));
  };

  // Open recursive resolvers answer from the address they query the zone
  // with, so a direct probe observes the recursive-resolver pattern.
  std::vector<Ipv4> resolvers;
  for (int i = 0; i < std::max(1, counts.recursive_resolvers); ++i) {
    Ipv4 addr = next_addr(Ipv4(10, 1, 0, 1), i);
    topo.nodes.push_back(NodeSpec{addr, RecursiveResolverSpec{}});
    resolvers.push_back(addr);
    if (i < counts.recursive_resolvers) {
      truth.targets.push_back(addr);
      truth.expected[addr] = "recursive_resolver";
      link_to_scanner(addr);
    }
  }

  std::vector<Ipv4> tfs;
  std::uniform_int_distribution<std::size_t> pick_resolver(0, resolvers.size() - 1);
  for (int i = 0; i < counts.transparent_forwarders; ++i) {
    Ipv4 addr = next_addr(Ipv4(10, 2, 0, 1), i);
    Ipv4 upstream;
    // Some forwarders chain through an earlier forwarder; pointing only at
    // earlier ones keeps the graph loop-free.
    if (!tfs.empty() && std::uniform_int_distribution<int>(0, 9)(rng) < 3) {
      upstream = tfs[std::uniform_int_distribution<std::size_t>(0, tfs.size() - 1)(rng)];
    } else {
      upstream = resolvers[pick_resolver(rng)];
    }
    topo.nodes.push_back(NodeSpec{addr, TransparentForwarderSpec{upstream}});
    tfs.push_back(addr);
    truth.targets.push_back(addr);
    truth.expected[addr] = "transparent_forwarder";
    link_to_scanner(addr);
  }

  for (int i = 0; i < counts.recursive_forwarders; ++i) {
    Ipv4 addr = next_addr(Ipv4(10, 3, 0, 1), i);
    topo.nodes.push_back(
        NodeSpec{addr, RecursiveForwarderSpec{resolvers[pick_resolver(rng)], false}});
    truth.targets.push_back(addr);
    truth.expected[addr] = "recursive_forwarder";
    link_to_scanner(addr);
  }

  for (int i = 0; i < counts.shielded_resolvers; ++i) {
    // One /24 island per shielded resolver with its own forwarder inside.
    Ipv4 base(std::uint32_t(Ipv4(172, 16, 0, 0).value) + std::uint32_t(i << 8));
    Ipv4Prefix island{base, 24};
    Ipv4 shielded = next_addr(base, 1);
    Ipv4 inside_tf = next_addr(base, 2);
    ShieldedResolverSpec spec;
    spec.allowed_prefixes = {island};
    topo.nodes.push_back(NodeSpec{shielded, std::move(spec)});
    topo.nodes.push_back(NodeSpec{inside_tf, TransparentForwarderSpec{shielded}});
    truth.targets.push_back(shielded);
    truth.expected[shielded] = "unresponsive";
    truth.targets.push_back(inside_tf);
    truth.expected[inside_tf] = "transparent_forwarder";
    truth.shielded.insert(shielded);
    link_to_scanner(shielded);
    link_to_scanner(inside_tf);
  }

  for (int i = 0; i < counts.broadcast_gateways; ++i) {
    Ipv4 base(std::uint32_t(Ipv4(192, 168, 0, 0).value) + std::uint32_t(i << 8));
    Ipv4Prefix subnet{base, 24};
    Ipv4 gateway = next_addr(base, 1);
    BroadcastGatewaySpec spec;
    spec.subnet = subnet;
    int nresp = std::uniform_int_distribution<int>(2, 4)(rng);
    for (int k = 0; k < nresp; ++k) {
      Ipv4 host = next_addr(base, 10 + k);
      topo.nodes.push_back(NodeSpec{host, RecursiveResolverSpec{}});
      spec.responders.push_back(host);
      // responders are ordinary open resolvers, also reachable directly
      truth.targets.push_back(host);
      truth.expected[host] = "recursive_resolver";
      link_to_scanner(host);
    }
    topo.nodes.push_back(NodeSpec{gateway, std::move(spec)});
    Ipv4 target = subnet.broadcast();
    truth.targets.push_back(target);
    truth.expected[target] = "transparent_forwarder";
    link_to_scanner(target);
  }

  for (int i = 0; i < counts.manipulators; ++i) {
    Ipv4 addr = next_addr(Ipv4(10, 66, 0, 1), i);
    topo.nodes.push_back(NodeSpec{addr, ManipulatorSpec{Ipv4(10, 66, 255, 1)}});
    truth.targets.push_back(addr);
    truth.expected[addr] = "manipulated";
    link_to_scanner(addr);
  }

  return out;
}

}  // namespace odnslab::netlab
