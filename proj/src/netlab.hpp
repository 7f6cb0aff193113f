#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "authd.hpp"
#include "ipv4.hpp"
#include "json.hpp"
#include "transport.hpp"
#include "wire.hpp"

namespace odnslab::netlab {

// ---------------------------------------------------------------------------
// Topology description
// ---------------------------------------------------------------------------

struct RateLimitSpec {
  double capacity_pps = 0;
  double bucket_size = 0;
  enum class Keying { PerSource, PerName, Global } keying = Keying::PerSource;
};

/// How a resolver-like node shapes its answers.
struct ResolverProfile {
  /// Address used toward the authoritative server; defaults to the node's
  /// own address. Must be registered as an alias of the node.
  std::optional<Ipv4> egress;
  std::optional<std::size_t> any_payload_size;
  std::optional<std::size_t> dnssec_payload_size;
};

struct ClientSpec {};
struct TransparentForwarderSpec {
  Ipv4 upstream;
};
struct RecursiveForwarderSpec {
  Ipv4 upstream;
  bool cache = false;
};
struct RecursiveResolverSpec {
  ResolverProfile profile;
};
struct ShieldedResolverSpec {
  ResolverProfile profile;
  std::vector<Ipv4Prefix> allowed_prefixes;
};
struct AnycastFrontendSpec {
  Ipv4 service_address;
  std::string pop_id;
  ResolverProfile profile;
};
struct BroadcastGatewaySpec {
  Ipv4Prefix subnet;
  std::vector<Ipv4> responders;
};
struct AuthoritativeSpec {
  authd::ZoneConfig zone;
};
/// On-path interceptor in the style of injecting middleboxes: answers any
/// query itself with a fabricated A record, never contacting the zone.
struct ManipulatorSpec {
  Ipv4 fake_address;
};

using Role =
    std::variant<ClientSpec, TransparentForwarderSpec, RecursiveForwarderSpec,
                 RecursiveResolverSpec, ShieldedResolverSpec,
                 AnycastFrontendSpec, BroadcastGatewaySpec, AuthoritativeSpec,
                 ManipulatorSpec>;

struct NodeSpec {
  Ipv4 address;
  Role role;
  std::optional<RateLimitSpec> rate_limit;
  bool supports_any = true;
  bool supports_dnssec = true;
  /// When ANY support is off: silently drop the query (the common behavior
  /// observed in the wild) or answer REFUSED.
  bool refuse_unsupported = false;
  /// When DNSSEC support is off: drop DO-flagged queries instead of
  /// answering them unsigned.
  bool drop_dnssec_queries = false;
  std::optional<double> slow_path_pps;
  // Carried for bookkeeping; bandwidth is modeled analytically in threat.
  std::optional<double> uplink_bps;
  std::optional<double> downlink_bps;
};

struct LinkSpec {
  Ipv4 a;
  Ipv4 b;
  double latency_ms = 20.0;
  double loss_rate = 0.0;
};

struct Topology {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::map<Ipv4, std::string> regions;
  std::uint64_t seed = 0;
  double default_latency_ms = 20.0;

  /// Throws Error(Validation) on duplicate/missing addresses or bad values.
  void validate() const;
};

Topology topology_from_json(const nlohmann::json& j);
nlohmann::json topology_to_json(const Topology& t);
Topology load_topology_file(const std::string& path);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct Packet {
  Ipv4 src;
  std::uint16_t src_port = 0;
  Ipv4 dst;
  std::uint16_t dst_port = 53;
  std::vector<std::uint8_t> payload;
  bool spoofed = false;  // src was forged by the injector
};

enum class EventKind { Send, Deliver, Drop, Respond };

struct TraceEvent {
  std::uint64_t time_us = 0;
  EventKind kind = EventKind::Send;
  Ipv4 at;  // node where the event happened
  Packet packet;
  std::string reason;  // drop reason
};

struct NodeCounters {
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t responded = 0;
  std::map<std::string, std::uint64_t> drops;
};

struct WorkloadEntry {
  double time_ms = 0;
  Ipv4 src;                       // sending node
  std::optional<Ipv4> spoofed_src;  // forged source address, simulator-only
  Ipv4 dst;
  std::uint16_t src_port = 40000;
  std::uint16_t dns_id = 1;
  std::string qname;
  std::uint16_t qtype = wire::kTypeA;
  bool dnssec_ok = false;
};

std::vector<WorkloadEntry> workload_from_json(const nlohmann::json& j);

class Sim {
 public:
  explicit Sim(Topology topology, bool record_trace = false);

  std::uint64_t now_us() const { return clock_us_; }

  /// Queue a packet originating at node `sender` for transmission at `at_us`.
  void inject(Ipv4 sender, const Packet& packet, std::uint64_t at_us);
  void inject(const WorkloadEntry& entry);

  /// Process at most one pending event with time <= until_us; returns
  /// whether one was processed.
  bool step(std::uint64_t until_us);
  /// Process events with time <= until_us and advance the clock to until_us.
  void run_until(std::uint64_t until_us);
  /// Process everything outstanding.
  void run_all();

  /// Register an inbox capturing packets delivered to `addr`.
  /// Returned queue lives as long as the Sim.
  std::deque<TraceEvent>* attach_inbox(Ipv4 addr);

  const std::vector<TraceEvent>& trace() const { return trace_; }
  const std::map<Ipv4, NodeCounters>& counters() const { return counters_; }
  const Topology& topology() const { return topo_; }

  /// Zone served by the first authoritative node, if any.
  std::optional<authd::ZoneConfig> zone() const;

 private:
  struct Event {
    std::uint64_t time_us;
    std::uint64_t seq;
    EventKind kind;
    std::size_t node;  // acting node index
    Packet packet;
    Ipv4 hop_from;  // address of the node that transmitted this hop
  };
  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      return std::tie(a.time_us, a.seq) > std::tie(b.time_us, b.seq);
    }
  };

  struct Bucket {
    double tokens = 0;
    std::uint64_t last_us = 0;
    bool primed = false;
  };

  struct PendingUpstream {
    Ipv4 client;
    std::uint16_t client_port = 0;
    std::uint16_t queried_port = 53;  // port the client's query addressed
    std::uint16_t client_id = 0;
    wire::Question question;
    std::optional<wire::Edns0> edns0;
    bool client_rd = true;
  };

  struct NodeState {
    NodeSpec spec;
    std::map<std::uint32_t, PendingUpstream> pending;  // port<<16|id
    std::map<std::string, std::vector<wire::ResourceRecord>> cache;
    std::uint16_t next_port = 0;
    std::uint16_t next_id = 1;
    // slow-path accounting: packets processed in the current virtual second
    std::uint64_t sp_second = 0;
    std::uint64_t sp_count = 0;
  };

  void process(const Event& ev);
  void handle_send(const Event& ev);
  void deliver_to(std::size_t node, const Event& ev);
  void handle_query(std::size_t node, const Packet& packet,
                    const wire::DnsMessage& msg, Ipv4 ingress_from,
                    std::uint64_t now);
  void handle_response(std::size_t node, const Packet& packet,
                       const wire::DnsMessage& msg, std::uint64_t now);
  void emit_response(std::size_t node, Ipv4 response_src, const Packet& to,
                     wire::DnsMessage msg, std::uint64_t now);
  void send_from(std::size_t node, const Packet& packet, std::uint64_t at_us,
                 bool is_response_emission = false);
  void drop(std::size_t node, const Packet& packet, const std::string& reason,
            std::uint64_t now);
  void record(EventKind kind, std::size_t node, const Packet& packet,
              std::uint64_t now, const std::string& reason = "");

  bool rate_limit_admits(std::size_t node, const Packet& packet,
                         std::uint64_t now);
  bool slow_path_admits(std::size_t node, std::uint64_t now);
  std::optional<std::size_t> route(Ipv4 sender_addr, Ipv4 dst);
  std::pair<double, double> link_props(Ipv4 a, Ipv4 b) const;
  std::size_t resolver_for(const std::string& qname) const;

  Topology topo_;
  bool record_trace_;
  std::vector<NodeState> nodes_;
  std::map<Ipv4, std::size_t> by_address_;  // primary + aliases
  std::map<Ipv4, std::vector<std::size_t>> anycast_groups_;
  std::map<std::pair<Ipv4, Ipv4>, std::size_t> anycast_choice_;
  std::map<std::pair<Ipv4, Ipv4>, std::pair<double, double>> link_map_;
  std::map<std::pair<std::size_t, std::uint64_t>, Bucket> buckets_;
  std::map<Ipv4, Bucket> service_buckets_;  // Global keying on anycast
  std::map<Ipv4, std::deque<TraceEvent>> inboxes_;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::vector<TraceEvent> trace_;
  std::map<Ipv4, NodeCounters> counters_;
  std::uint64_t clock_us_ = 0;
  std::uint64_t seq_ = 0;
  std::mt19937_64 rng_;
};

struct RunResult {
  std::vector<TraceEvent> trace;
  std::map<Ipv4, NodeCounters> counters;
};

RunResult run(const Topology& topology,
              const std::vector<WorkloadEntry>& workload);

/// Probe-engine transport backed by a simulation; the virtual clock advances
/// while the prober sleeps or waits for replies.
class SimTransport : public probe::Transport {
 public:
  SimTransport(std::shared_ptr<Sim> sim, Ipv4 client_address);

  std::uint64_t now_us() override { return sim_->now_us(); }
  void sleep_until_us(std::uint64_t t) override { sim_->run_until(t); }
  void send(const probe::OutPacket& p) override;
  std::optional<probe::InPacket> recv(std::uint64_t wait_us) override;
  bool supports_spoofing() const override { return true; }

  Sim& sim() { return *sim_; }
  Ipv4 client_address() const { return client_; }

 private:
  std::shared_ptr<Sim> sim_;
  Ipv4 client_;
  std::deque<TraceEvent>* inbox_;
};

// ---------------------------------------------------------------------------
// Random topologies with recorded ground truth
// ---------------------------------------------------------------------------

struct RoleCounts {
  int transparent_forwarders = 0;
  int recursive_forwarders = 0;
  int recursive_resolvers = 0;
  int shielded_resolvers = 0;
  int broadcast_gateways = 0;
  int manipulators = 0;
};

struct GroundTruth {
  Ipv4 scanner;
  Ipv4 victim;
  authd::ZoneConfig zone;
  std::vector<Ipv4> targets;
  /// Expected classifier outcome per probed target, by kind name:
  /// transparent_forwarder, recursive_forwarder, recursive_resolver,
  /// manipulated, unresponsive.
  std::map<Ipv4, std::string> expected;
  std::set<Ipv4> shielded;
};

struct GeneratedTopology {
  Topology topology;
  GroundTruth truth;
};

GeneratedTopology generate_random_topology(std::uint64_t seed,
                                           const RoleCounts& counts);

nlohmann::json trace_event_to_json(const TraceEvent& ev);

}  // namespace odnslab::netlab
