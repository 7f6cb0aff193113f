#include "netlab.hpp"

#include <algorithm>
#include <fstream>

#include "errors.hpp"

namespace odnslab::netlab {

namespace {

std::optional<Ipv4> profile_egress(const Role& role) {
  if (auto* rr = std::get_if<RecursiveResolverSpec>(&role)) return rr->profile.egress;
  if (auto* sh = std::get_if<ShieldedResolverSpec>(&role)) return sh->profile.egress;
  if (auto* ac = std::get_if<AnycastFrontendSpec>(&role)) return ac->profile.egress;
  return std::nullopt;
}

const ResolverProfile* resolver_profile(const Role& role) {
  if (auto* rr = std::get_if<RecursiveResolverSpec>(&role)) return &rr->profile;
  if (auto* sh = std::get_if<ShieldedResolverSpec>(&role)) return &sh->profile;
  if (auto* ac = std::get_if<AnycastFrontendSpec>(&role)) return &ac->profile;
  return nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

void Topology::validate() const {
  std::set<Ipv4> addrs;
  std::set<Ipv4> services;
  auto claim = [&](Ipv4 a, const char* what) {
    if (!addrs.insert(a).second)
      fail(Errc::Validation, std::string(what) + " address not unique: " + a.to_string());
  };
  for (const auto& n : nodes) {
    claim(n.address, "node");
    if (auto egress = profile_egress(n.role); egress && *egress != n.address)
      claim(*egress, "egress alias");
    if (auto* bg = std::get_if<BroadcastGatewaySpec>(&n.role)) {
      claim(bg->subnet.broadcast(), "broadcast");
      if (bg->responders.empty())
        fail(Errc::Validation, "broadcast gateway without responders");
    }
    if (auto* tf = std::get_if<TransparentForwarderSpec>(&n.role)) {
      if (tf->upstream == n.address)
        fail(Errc::Validation, "transparent forwarder upstream is itself");
    }
    if (auto* sh = std::get_if<ShieldedResolverSpec>(&n.role)) {
      if (sh->allowed_prefixes.empty())
        fail(Errc::Validation, "shielded resolver needs allowed_prefixes");
    }
    if (auto* ac = std::get_if<AnycastFrontendSpec>(&n.role)) services.insert(ac->service_address);
    if (n.rate_limit) {
      if (n.rate_limit->capacity_pps <= 0 || n.rate_limit->bucket_size < 1)
        fail(Errc::Validation, "rate limit needs capacity > 0 and bucket >= 1");
    }
  }
  // service addresses must not collide with node addresses, and frontends of
  // one service need distinct PoP ids
  for (Ipv4 svc : services) {
    if (addrs.count(svc))
      fail(Errc::Validation, "anycast service address collides: " + svc.to_string());
    std::set<std::string> pops;
    for (const auto& n : nodes)
      if (auto* ac = std::get_if<AnycastFrontendSpec>(&n.role))
        if (ac->service_address == svc && !pops.insert(ac->pop_id).second)
          fail(Errc::Validation, "duplicate pop_id for " + svc.to_string());
  }
  auto known = [&](Ipv4 a) { return addrs.count(a) || services.count(a); };
  for (const auto& n : nodes) {
    if (auto* tf = std::get_if<TransparentForwarderSpec>(&n.role)) {
      if (!known(tf->upstream))
        fail(Errc::Validation, "unknown upstream " + tf->upstream.to_string());
    }
    if (auto* rf = std::get_if<RecursiveForwarderSpec>(&n.role)) {
      if (!known(rf->upstream))
        fail(Errc::Validation, "unknown upstream " + rf->upstream.to_string());
    }
    if (auto* bg = std::get_if<BroadcastGatewaySpec>(&n.role)) {
      for (Ipv4 r : bg->responders)
        if (!addrs.count(r))
          fail(Errc::Validation, "unknown broadcast responder " + r.to_string());
    }
  }
  for (const auto& l : links) {
    if (l.latency_ms < 0) fail(Errc::Validation, "negative link latency");
    if (l.loss_rate < 0 || l.loss_rate > 1) fail(Errc::Validation, "loss_rate outside [0,1]");
    if (!known(l.a) || !known(l.b))
      fail(Errc::Validation, "link references unknown address");
  }
}

// ---------------------------------------------------------------------------
// Simulation core
// ---------------------------------------------------------------------------

Sim::Sim(Topology topology, bool record_trace)
    : topo_(std::move(topology)), record_trace_(record_trace), rng_(topo_.seed) {
  topo_.validate();
  nodes_.reserve(topo_.nodes.size());
  for (std::size_t i = 0; i < topo_.nodes.size(); ++i) {
    nodes_.push_back(NodeState{topo_.nodes[i], {}, {}, 0, 1, 0, 0});
    const NodeSpec& spec = topo_.nodes[i];
    by_address_[spec.address] = i;
    if (auto egress = profile_egress(spec.role); egress && *egress != spec.address)
      by_address_[*egress] = i;
    if (auto* bg = std::get_if<BroadcastGatewaySpec>(&spec.role))
      by_address_[bg->subnet.broadcast()] = i;
    if (auto* ac = std::get_if<AnycastFrontendSpec>(&spec.role))
      anycast_groups_[ac->service_address].push_back(i);
    counters_[spec.address];  // make every node visible in the counter table
  }
  for (const auto& l : topo_.links) {
    auto key = std::minmax(l.a, l.b);
    link_map_[{key.first, key.second}] = {l.latency_ms, l.loss_rate};
  }
}

std::optional<authd::ZoneConfig> Sim::zone() const {
  for (const auto& n : topo_.nodes)
    if (auto* au = std::get_if<AuthoritativeSpec>(&n.role)) return au->zone;
  return std::nullopt;
}

std::pair<double, double> Sim::link_props(Ipv4 a, Ipv4 b) const {
  auto key = std::minmax(a, b);
  auto it = link_map_.find({key.first, key.second});
  if (it != link_map_.end()) return it->second;
  return {topo_.default_latency_ms, 0.0};
}

std::optional<std::size_t> Sim::route(Ipv4 sender_addr, Ipv4 dst) {
  auto grp = anycast_groups_.find(dst);
  if (grp != anycast_groups_.end()) {
    auto cached = anycast_choice_.find({sender_addr, dst});
    if (cached != anycast_choice_.end()) return cached->second;
    std::string region;
    if (auto r = topo_.regions.find(sender_addr); r != topo_.regions.end())
      region = r->second;
    std::vector<std::size_t> pool;
    for (std::size_t idx : grp->second) {
      auto r = topo_.regions.find(nodes_[idx].spec.address);
      if (r != topo_.regions.end() && r->second == region) pool.push_back(idx);
    }
    if (pool.empty()) pool = grp->second;
    std::size_t best = pool.front();
    double best_lat = link_props(sender_addr, nodes_[best].spec.address).first;
    for (std::size_t idx : pool) {
      double lat = link_props(sender_addr, nodes_[idx].spec.address).first;
      if (lat < best_lat ||
          (lat == best_lat && nodes_[idx].spec.address < nodes_[best].spec.address)) {
        best = idx;
        best_lat = lat;
      }
    }
    anycast_choice_[{sender_addr, dst}] = best;
    return best;
  }
  auto it = by_address_.find(dst);
  if (it == by_address_.end()) return std::nullopt;
  return it->second;
}

void Sim::record(EventKind kind, std::size_t node, const Packet& packet,
                 std::uint64_t now, const std::string& reason) {
  if (!record_trace_) return;
  trace_.push_back(TraceEvent{now, kind, nodes_[node].spec.address, packet, reason});
}

void Sim::drop(std::size_t node, const Packet& packet, const std::string& reason,
               std::uint64_t now) {
  counters_[nodes_[node].spec.address].drops[reason]++;
  record(EventKind::Drop, node, packet, now, reason);
}

std::deque<TraceEvent>* Sim::attach_inbox(Ipv4 addr) {
  return &inboxes_[addr];
}

void Sim::inject(Ipv4 sender, const Packet& packet, std::uint64_t at_us) {
  auto it = by_address_.find(sender);
  if (it == by_address_.end())
    fail(Errc::Validation, "inject from unknown node " + sender.to_string());
  queue_.push(Event{at_us, seq_++, EventKind::Send, it->second, packet, sender});
}

void Sim::inject(const WorkloadEntry& e) {
  wire::DnsMessage q = wire::make_query(e.dns_id, e.qname, e.qtype);
  if (e.dnssec_ok) q.edns0 = wire::Edns0{4096, true};
  Packet p;
  p.src = e.spoofed_src.value_or(e.src);
  p.spoofed = e.spoofed_src.has_value();
  p.src_port = e.src_port;
  p.dst = e.dst;
  p.dst_port = 53;
  p.payload = wire::encode(q);
  inject(e.src, p, std::uint64_t(e.time_ms * 1000.0));
}

void Sim::send_from(std::size_t node, const Packet& packet, std::uint64_t at_us,
                    bool) {
  queue_.push(Event{at_us, seq_++, EventKind::Send, node, packet,
                    nodes_[node].spec.address});
}

bool Sim::step(std::uint64_t until_us) {
  if (queue_.empty() || queue_.top().time_us > until_us) return false;
  Event ev = queue_.top();
  queue_.pop();
  clock_us_ = std::max(clock_us_, ev.time_us);
  process(ev);
  return true;
}

void Sim::run_until(std::uint64_t until_us) {
  while (step(until_us)) {
  }
  clock_us_ = std::max(clock_us_, until_us);
}

void Sim::run_all() {
  while (!queue_.empty()) {
    Event ev = queue_.top();
    queue_.pop();
    clock_us_ = std::max(clock_us_, ev.time_us);
    process(ev);
  }
}

void Sim::process(const Event& ev) {
  if (ev.kind == EventKind::Send)
    handle_send(ev);
  else if (ev.kind == EventKind::Deliver)
    deliver_to(ev.node, ev);
}

void Sim::handle_send(const Event& ev) {
  const Ipv4 sender_addr = nodes_[ev.node].spec.address;
  counters_[sender_addr].sent++;
  record(EventKind::Send, ev.node, ev.packet, ev.time_us);
  auto target = route(sender_addr, ev.packet.dst);
  if (!target) {
    drop(ev.node, ev.packet, "no-route", ev.time_us);
    return;
  }
  auto [latency_ms, loss] = link_props(sender_addr, nodes_[*target].spec.address);
  if (loss > 0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < loss) {
    drop(ev.node, ev.packet, "link-loss", ev.time_us);
    return;
  }
  queue_.push(Event{ev.time_us + std::uint64_t(latency_ms * 1000.0), seq_++,
                    EventKind::Deliver, *target, ev.packet, sender_addr});
}

void Sim::deliver_to(std::size_t node, const Event& ev) {
  NodeState& state = nodes_[node];
  const Packet& packet = ev.packet;
  const std::uint64_t now = ev.time_us;
  counters_[state.spec.address].received++;
  record(EventKind::Deliver, node, packet, now);
  if (auto it = inboxes_.find(packet.dst); it != inboxes_.end())
    it->second.push_back(TraceEvent{now, EventKind::Deliver, state.spec.address, packet, ""});

  if (std::holds_alternative<ClientSpec>(state.spec.role)) return;  // sink

  if (std::holds_alternative<TransparentForwarderSpec>(state.spec.role)) {
    if (!rate_limit_admits(node, packet, now)) {
      drop(node, packet, "rate-limit", now);
      return;
    }
    if (!slow_path_admits(node, now)) {
      drop(node, packet, "slow-path", now);
      return;
    }
    // destination rewrite only; source address and port pass through untouched
    Packet fwd = packet;
    fwd.dst = std::get<TransparentForwarderSpec>(state.spec.role).upstream;
    counters_[state.spec.address].forwarded++;
    send_from(node, fwd, now);
    return;
  }

  if (auto* bg = std::get_if<BroadcastGatewaySpec>(&state.spec.role)) {
    if (packet.dst != bg->subnet.broadcast()) {
      drop(node, packet, "no-dns-service", now);
      return;
    }
    if (!rate_limit_admits(node, packet, now)) {
      drop(node, packet, "rate-limit", now);
      return;
    }
    if (!slow_path_admits(node, now)) {
      drop(node, packet, "slow-path", now);
      return;
    }
    for (Ipv4 responder : bg->responders) {
      Packet fwd = packet;
      fwd.dst = responder;
      counters_[state.spec.address].forwarded++;
      send_from(node, fwd, now);
    }
    return;
  }

  wire::DnsMessage msg;
  try {
    msg = wire::decode(packet.payload);
  } catch (const Error&) {
    drop(node, packet, "malformed", now);
    return;
  }
  if (msg.is_response)
    handle_response(node, packet, msg, now);
  else
    handle_query(node, packet, msg, ev.hop_from, now);
}

void Sim::handle_query(std::size_t node, const Packet& packet,
                       const wire::DnsMessage& msg, Ipv4 ingress_from,
                       std::uint64_t now) {
  NodeState& state = nodes_[node];

  if (auto* sh = std::get_if<ShieldedResolverSpec>(&state.spec.role)) {
    // Border firewall: the claimed source must be inside an allowed prefix.
    // A query relayed by an in-prefix transparent forwarder keeps its outside
    // source address, so the relaying hop is checked as well.
    bool allowed = false;
    for (const auto& p : sh->allowed_prefixes) {
      allowed |= p.contains(packet.src);
      allowed |= p.contains(ingress_from);
    }
    if (!allowed) {
      drop(node, packet, "firewall", now);
      return;
    }
  }
  if (!rate_limit_admits(node, packet, now)) {
    drop(node, packet, "rate-limit", now);
    return;
  }
  if (!slow_path_admits(node, now)) {
    drop(node, packet, "slow-path", now);
    return;
  }

  if (auto* au = std::get_if<AuthoritativeSpec>(&state.spec.role)) {
    emit_response(node, state.spec.address, packet,
                  authd::answer(msg, packet.src, au->zone), now);
    return;
  }

  if (auto* mp = std::get_if<ManipulatorSpec>(&state.spec.role)) {
    wire::DnsMessage resp;
    resp.id = msg.id;
    resp.is_response = true;
    resp.recursion_desired = msg.recursion_desired;
    resp.recursion_available = true;
    resp.question = msg.question;
    resp.answers.push_back(wire::ResourceRecord::a(msg.question.name, mp->fake_address, 299));
    emit_response(node, state.spec.address, packet, resp, now);
    return;
  }

  if (auto* rf = std::get_if<RecursiveForwarderSpec>(&state.spec.role)) {
    std::string cache_key = msg.question.name + "/" + std::to_string(msg.question.qtype);
    if (rf->cache) {
      if (auto hit = state.cache.find(cache_key); hit != state.cache.end()) {
        wire::DnsMessage resp;
        resp.id = msg.id;
        resp.is_response = true;
        resp.recursion_desired = msg.recursion_desired;
        resp.recursion_available = true;
        resp.question = msg.question;
        resp.answers = hit->second;
        emit_response(node, state.spec.address, packet, resp, now);
        return;
      }
    }
    std::uint16_t up_port = std::uint16_t(50000 + state.next_port++ % 8000);
    std::uint16_t up_id = state.next_id++;
    state.pending[std::uint32_t(up_port) << 16 | up_id] = PendingUpstream{
        packet.src, packet.src_port, packet.dst_port, msg.id, msg.question,
        msg.edns0, msg.recursion_desired};
    wire::DnsMessage up = wire::make_query(up_id, msg.question.name, msg.question.qtype);
    up.edns0 = msg.edns0;
    Packet out;
    out.src = state.spec.address;  // source rewrite: the defining RF behavior
    out.src_port = up_port;
    out.dst = rf->upstream;
    out.payload = wire::encode(up);
    send_from(node, out, now);
    return;
  }

  // Recursive resolver, shielded resolver, or anycast frontend.
  const ResolverProfile* profile = resolver_profile(state.spec.role);
  if (!profile) {
    drop(node, packet, "no-dns-service", now);
    return;
  }
  if (msg.question.qtype == wire::kTypeAny && !state.spec.supports_any) {
    if (state.spec.refuse_unsupported) {
      wire::DnsMessage resp;
      resp.id = msg.id;
      resp.is_response = true;
      resp.recursion_desired = msg.recursion_desired;
      resp.recursion_available = true;
      resp.rcode = wire::kRcodeRefused;
      resp.question = msg.question;
      Ipv4 src = state.spec.address;
      if (auto* ac = std::get_if<AnycastFrontendSpec>(&state.spec.role))
        src = ac->service_address;
      emit_response(node, src, packet, resp, now);
    } else {
      drop(node, packet, "any-disabled", now);
    }
    return;
  }
  bool wants_dnssec = msg.edns0 && msg.edns0->dnssec_ok;
  if (wants_dnssec && !state.spec.supports_dnssec && state.spec.drop_dnssec_queries) {
    drop(node, packet, "dnssec-disabled", now);
    return;
  }

  std::size_t auth = resolver_for(msg.question.name);
  if (auth == nodes_.size()) {
    wire::DnsMessage resp;
    resp.id = msg.id;
    resp.is_response = true;
    resp.recursion_desired = msg.recursion_desired;
    resp.recursion_available = true;
    resp.rcode = wire::kRcodeServfail;
    resp.question = msg.question;
    Ipv4 src = state.spec.address;
    if (auto* ac = std::get_if<AnycastFrontendSpec>(&state.spec.role))
      src = ac->service_address;
    emit_response(node, src, packet, resp, now);
    return;
  }

  std::uint16_t up_port = std::uint16_t(53000 + state.next_port++ % 8000);
  std::uint16_t up_id = state.next_id++;
  state.pending[std::uint32_t(up_port) << 16 | up_id] = PendingUpstream{
      packet.src, packet.src_port, packet.dst_port, msg.id, msg.question,
      msg.edns0, msg.recursion_desired};
  Packet out;
  out.src = profile->egress.value_or(state.spec.address);
  out.src_port = up_port;
  out.dst = nodes_[auth].spec.address;
  out.payload = wire::encode(wire::make_query(up_id, msg.question.name, wire::kTypeA));
  send_from(node, out, now);
}

void Sim::handle_response(std::size_t node, const Packet& packet,
                          const wire::DnsMessage& msg, std::uint64_t now) {
  NodeState& state = nodes_[node];
  auto it = state.pending.find(std::uint32_t(packet.dst_port) << 16 | msg.id);
  if (it == state.pending.end()) {
    drop(node, packet, "unexpected-response", now);
    return;
  }
  PendingUpstream pend = it->second;
  state.pending.erase(it);

  Packet reply_to;
  reply_to.src = pend.client;
  reply_to.src_port = pend.client_port;
  reply_to.dst = packet.dst;
  reply_to.dst_port = pend.queried_port;

  if (auto* rf = std::get_if<RecursiveForwarderSpec>(&state.spec.role)) {
    wire::DnsMessage resp = msg;
    resp.id = pend.client_id;
    resp.question = pend.question;
    resp.recursion_desired = pend.client_rd;
    resp.recursion_available = true;
    if (rf->cache) {
      std::string key = pend.question.name + "/" + std::to_string(pend.question.qtype);
      state.cache[key] = resp.answers;
    }
    emit_response(node, state.spec.address, reply_to, resp, now);
    return;
  }

  const ResolverProfile* profile = resolver_profile(state.spec.role);
  wire::DnsMessage resp;
  resp.id = pend.client_id;
  resp.is_response = true;
  resp.recursion_desired = pend.client_rd;
  resp.recursion_available = true;
  resp.rcode = msg.rcode;
  resp.question = pend.question;
  resp.answers = msg.answers;
  resp.edns0 = pend.edns0;

  if (profile) {
    bool wants_dnssec = pend.edns0 && pend.edns0->dnssec_ok;
    if (wants_dnssec && state.spec.supports_dnssec && profile->dnssec_payload_size) {
      wire::ResourceRecord sig;
      sig.name = pend.question.name;
      sig.rtype = wire::kTypeRrsig;
      sig.ttl = 60;
      sig.rdata.assign(64, 0x5a);
      resp.answers.push_back(std::move(sig));
      authd::pad_to_size(resp, *profile->dnssec_payload_size);
    } else if (pend.question.qtype == wire::kTypeAny && state.spec.supports_any &&
               profile->any_payload_size) {
      authd::pad_to_size(resp, *profile->any_payload_size);
    }
  }
  Ipv4 src = state.spec.address;
  if (auto* ac = std::get_if<AnycastFrontendSpec>(&state.spec.role))
    src = ac->service_address;  // anycast answers come from the service address
  emit_response(node, src, reply_to, resp, now);
}

void Sim::emit_response(std::size_t node, Ipv4 response_src, const Packet& to,
                        wire::DnsMessage msg, std::uint64_t now) {
  Packet out;
  out.src = response_src;
  out.src_port = to.dst_port;
  out.dst = to.src;
  out.dst_port = to.src_port;
  out.payload = wire::encode(msg);
  counters_[nodes_[node].spec.address].responded++;
  record(EventKind::Respond, node, out, now);
  send_from(node, out, now);
}

bool Sim::rate_limit_admits(std::size_t node, const Packet& packet,
                            std::uint64_t now) {
  NodeState& state = nodes_[node];
  if (!state.spec.rate_limit) return true;
  const RateLimitSpec& rl = *state.spec.rate_limit;

  Bucket* bucket = nullptr;
  if (rl.keying == RateLimitSpec::Keying::Global) {
    if (auto* ac = std::get_if<AnycastFrontendSpec>(&state.spec.role)) {
      // shared across every frontend of the service (cross-PoP limiting)
      bucket = &service_buckets_[ac->service_address];
    } else {
      bucket = &buckets_[{node, 0}];
    }
  } else if (rl.keying == RateLimitSpec::Keying::PerSource) {
    bucket = &buckets_[{node, std::uint64_t(packet.src.value) + 1}];
  } else {
    std::string qname;
    try {
      qname = wire::decode(packet.payload).question.name;
    } catch (const Error&) {
    }
    bucket = &buckets_[{node, std::hash<std::string>{}(qname) | (1ull << 63)}];
  }

  if (!bucket->primed) {
    bucket->tokens = rl.bucket_size;  // buckets start full
    bucket->last_us = now;
    bucket->primed = true;
  }
  double elapsed_s = double(now - bucket->last_us) / 1e6;
  bucket->tokens = std::min(rl.bucket_size, bucket->tokens + elapsed_s * rl.capacity_pps);
  bucket->last_us = now;
  if (bucket->tokens >= 1.0) {
    bucket->tokens -= 1.0;
    return true;
  }
  return false;
}

bool Sim::slow_path_admits(std::size_t node, std::uint64_t now) {
  NodeState& state = nodes_[node];
  if (!state.spec.slow_path_pps) return true;
  std::uint64_t second = now / 1'000'000;
  if (second != state.sp_second) {
    state.sp_second = second;
    state.sp_count = 0;
  }
  if (double(state.sp_count) < *state.spec.slow_path_pps) {
    ++state.sp_count;
    return true;
  }
  return false;
}

std::size_t Sim::resolver_for(const std::string& qname) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (auto* au = std::get_if<AuthoritativeSpec>(&nodes_[i].spec.role))
      if (authd::name_in_zone(qname, au->zone.zone_apex)) return i;
  return nodes_.size();
}

RunResult run(const Topology& topology, const std::vector<WorkloadEntry>& workload) {
  Sim sim(topology, true);
  for (const auto& e : workload) sim.inject(e);
  sim.run_all();
  return RunResult{sim.trace(), sim.counters()};
}

SimTransport::SimTransport(std::shared_ptr<Sim> sim, Ipv4 client_address)
    : sim_(std::move(sim)), client_(client_address) {
  inbox_ = sim_->attach_inbox(client_);
}

void SimTransport::send(const probe::OutPacket& p) {
  Packet packet;
  packet.src = p.spoofed_src.value_or(client_);
  packet.spoofed = p.spoofed_src.has_value();
  packet.src_port = p.src_port;
  packet.dst = p.dst;
  packet.dst_port = p.dst_port;
  packet.payload = p.payload;
  sim_->inject(client_, packet, sim_->now_us());
}

std::optional<probe::InPacket> SimTransport::recv(std::uint64_t wait_us) {
  const std::uint64_t deadline = sim_->now_us() + wait_us;
  for (;;) {
    if (!inbox_->empty()) {
      TraceEvent ev = inbox_->front();
      inbox_->pop_front();
      probe::InPacket in;
      in.from = ev.packet.src;
      in.from_port = ev.packet.src_port;
      in.dst_port = ev.packet.dst_port;
      in.payload = ev.packet.payload;
      in.at_us = ev.time_us;
      return in;
    }
    if (!sim_->step(deadline)) {
      sim_->run_until(deadline);
      return std::nullopt;
    }
  }
}

}  // namespace odnslab::netlab
