#include "probe.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "errors.hpp"

namespace odnslab::probe {

namespace {

std::string expand_template(const std::string& tmpl, std::size_t seq, Ipv4 target) {
  std::string out = tmpl;
  auto replace = [&](const std::string& token, const std::string& value) {
    for (std::size_t pos = out.find(token); pos != std::string::npos;
         pos = out.find(token, pos)) {
      out.replace(pos, token.size(), value);
      pos += value.size();
    }
  };
  replace("{seq}", std::to_string(seq));
  std::string dashed = target.to_string();
  std::replace(dashed.begin(), dashed.end(), '.', '-');
  replace("{target}", dashed);
  return out;
}

}  // namespace

BatchResult probe_batch(const std::vector<Ipv4>& targets, Transport& transport,
                        const BatchOptions& opts) {
  if (targets.size() > opts.ephemeral_range)
    fail(Errc::Validation,
         "port-space-exhausted: " + std::to_string(targets.size()) +
             " targets exceed the ephemeral range of " +
             std::to_string(opts.ephemeral_range));

  struct Pending {
    std::size_t index;
    std::uint16_t dns_id;
  };
  std::mutex mu;  // the table sees concurrent insert/remove under threaded transports
  std::map<std::uint16_t, Pending> pending;  // src port -> probe

  BatchResult result;
  result.records.resize(targets.size());
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::uint32_t> id_dist(0, 0xffff);

  auto accept_reply = [&](const InPacket& in) {
    std::lock_guard lock(mu);
    auto it = pending.find(in.dst_port);
    if (it == pending.end()) {
      ++result.unmatched_replies;
      return;
    }
    wire::DnsMessage msg;
    try {
      msg = wire::decode(in.payload);
    } catch (const Error&) {
      ++result.unmatched_replies;
      return;
    }
    if (!msg.is_response || msg.id != it->second.dns_id) {
      ++result.unmatched_replies;
      return;
    }
    ScanRecord& rec = result.records[it->second.index];
    rec.received_at = in.at_us / 1000;
    rec.response_ip = in.from;
    rec.rtt_ms = *rec.received_at - rec.sent_at;
    if (auto resolver = authd::authentic_resolver(msg, opts.zone)) {
      rec.control_ok = true;
      rec.resolver_ip = *resolver;
    }
    pending.erase(it);
  };

  for (std::size_t i = 0; i < targets.size(); ++i) {
    std::uint16_t port = std::uint16_t(opts.ephemeral_base + i);
    std::uint16_t dns_id = std::uint16_t(id_dist(rng));

    ScanRecord& rec = result.records[i];
    rec.target_ip = targets[i];
    rec.qname = expand_template(opts.qname_template, i, targets[i]);
    rec.qtype = opts.qtype;
    rec.key = TransactionKey{port, opts.dst_port, dns_id};
    rec.sent_at = transport.now_us() / 1000;

    wire::DnsMessage q = wire::make_query(dns_id, rec.qname, opts.qtype);
    if (opts.dnssec_ok) q.edns0 = wire::Edns0{4096, true};
    OutPacket out;
    out.dst = targets[i];
    out.dst_port = opts.dst_port;
    out.src_port = port;
    out.payload = wire::encode(q);
    {
      std::lock_guard lock(mu);
      pending.emplace(port, Pending{i, dns_id});
    }
    try {
      transport.send(out);
    } catch (const Error&) {
      ++result.send_failures;
      std::lock_guard lock(mu);
      pending.erase(port);
      continue;
    }
    while (auto in = transport.recv(0)) accept_reply(*in);
  }

  const std::uint64_t deadline = transport.now_us() + opts.timeout_ms * 1000;
  for (;;) {
    {
      std::lock_guard lock(mu);
      if (pending.empty()) break;
    }
    std::uint64_t now = transport.now_us();
    if (now >= deadline) break;
    auto in = transport.recv(deadline - now);
    if (!in) break;
    accept_reply(*in);
  }
  return result;
}

void StaircaseConfig::validate() const {
  if (step_schedule.empty()) fail(Errc::Validation, "staircase: empty schedule");
  for (std::size_t i = 1; i < step_schedule.size(); ++i)
    if (step_schedule[i] <= step_schedule[i - 1])
      fail(Errc::Validation, "staircase: rates must be strictly increasing");
  if (step_schedule.front() < start_rate)
    fail(Errc::Validation, "staircase: schedule starts below start_rate");
  if (step_schedule.back() > max_rate)
    fail(Errc::Validation, "staircase: schedule exceeds max_rate");
  if (step_duration_s <= 0 || stop_response_ratio <= 0 || stop_response_ratio > 1)
    fail(Errc::Validation, "staircase: bad duration or stop ratio");
}

RateLimitEstimate staircase_rate_limit(Ipv4 target, const StaircaseConfig& cfg,
                                       Transport& transport,
                                       const StaircaseOptions& opts) {
  cfg.validate();
  RateLimitEstimate estimate;
  estimate.steps.reserve(cfg.step_schedule.size());

  std::map<std::uint16_t, std::size_t> outstanding;  // dns id -> step index
  std::uint16_t next_id = 1;

  auto drain = [&](std::uint64_t wait_us) {
    while (auto in = transport.recv(wait_us)) {
      wait_us = 0;
      if (in->dst_port != opts.src_port) continue;
      wire::DnsMessage msg;
      try {
        msg = wire::decode(in->payload);
      } catch (const Error&) {
        continue;
      }
      auto it = outstanding.find(msg.id);
      if (it == outstanding.end() || !msg.is_response) continue;
      estimate.steps[it->second].received++;
      outstanding.erase(it);
    }
  };

  for (std::size_t step = 0; step < cfg.step_schedule.size(); ++step) {
    const double rate = cfg.step_schedule[step];
    const auto count = std::uint64_t(std::llround(rate * cfg.step_duration_s));
    estimate.steps.push_back(StepStat{rate, 0, 0, 0, 0});

    const std::uint64_t step_start = transport.now_us();
    for (std::uint64_t i = 0; i < count; ++i) {
      transport.sleep_until_us(step_start + std::uint64_t(i * 1e6 / rate));
      std::string qname = opts.qname;
      if (opts.vary_qname)
        qname = "q" + std::to_string(next_id) + "." + qname;
      wire::DnsMessage q = wire::make_query(next_id, qname, opts.qtype);
      OutPacket out;
      out.dst = target;
      out.dst_port = opts.dst_port;
      out.src_port = opts.src_port;
      out.payload = wire::encode(q);
      outstanding[next_id] = step;
      ++next_id;
      transport.send(out);
      estimate.steps[step].sent++;
      drain(0);
    }
    // quiesce between steps; late replies of this step count toward it
    transport.sleep_until_us(step_start +
                             std::uint64_t((cfg.step_duration_s + cfg.quiesce_s) * 1e6));
    drain(0);

    StepStat& st = estimate.steps[step];
    st.ratio = st.sent ? double(st.received) / double(st.sent) : 0.0;
    st.response_rate = double(st.received) / cfg.step_duration_s;
    estimate.max_sustained_rate =
        std::max(estimate.max_sustained_rate, st.response_rate);
    if (st.ratio < cfg.stop_response_ratio) {
      estimate.stopped_early = true;
      estimate.below_minimum = step == 0;
      break;  // nothing is transmitted past a failed step
    }
  }
  return estimate;
}

std::string support_name(Support s) {
  switch (s) {
    case Support::Yes: return "yes";
    case Support::No: return "no";
    case Support::NA: return "n/a";
  }
  return "n/a";
}

AmpResult probe_amplification_support(Ipv4 resolver, Transport& transport,
                                      const AmpOptions& opts) {
  AmpResult result;

  auto one_probe = [&](const std::string& qname, std::uint16_t qtype,
                       bool dnssec, std::uint16_t dns_id)
      -> std::optional<wire::DnsMessage> {
    wire::DnsMessage q = wire::make_query(dns_id, qname, qtype);
    if (dnssec) q.edns0 = wire::Edns0{4096, true};
    OutPacket out;
    out.dst = resolver;
    out.dst_port = opts.dst_port;
    out.src_port = opts.src_port;
    out.payload = wire::encode(q);
    const double query_bytes = double(out.payload.size());
    transport.send(out);
    const std::uint64_t deadline = transport.now_us() + opts.timeout_ms * 1000;
    for (;;) {
      std::uint64_t now = transport.now_us();
      if (now >= deadline) return std::nullopt;
      auto in = transport.recv(deadline - now);
      if (!in) return std::nullopt;
      if (in->dst_port != opts.src_port) continue;
      wire::DnsMessage msg;
      try {
        msg = wire::decode(in->payload);
      } catch (const Error&) {
        continue;
      }
      if (!msg.is_response || msg.id != dns_id) continue;
      result.observed_amplification = std::max(
          result.observed_amplification, double(in->payload.size()) / query_bytes);
      return msg;
    }
  };

  auto any_resp = one_probe(opts.any_qname, wire::kTypeAny, false, 0x4e59);
  if (!any_resp) {
    result.any_support = Support::NA;  // "stops responding"
  } else if (any_resp->rcode == wire::kRcodeNoError && !any_resp->answers.empty()) {
    result.any_support = Support::Yes;
  } else {
    result.any_support = Support::No;
  }

  auto sig_resp = one_probe(opts.dnssec_qname, wire::kTypeA, true, 0x4e5a);
  if (!sig_resp) {
    result.dnssec_support = Support::NA;
  } else {
    bool has_rrsig = false;
    for (const auto& rr : sig_resp->answers) has_rrsig |= rr.rtype == wire::kTypeRrsig;
    result.dnssec_support = has_rrsig ? Support::Yes : Support::No;
  }
  return result;
}

}  // namespace odnslab::probe
