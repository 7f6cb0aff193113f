#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "authd.hpp"
#include "ipv4.hpp"
#include "transport.hpp"

namespace odnslab::probe {

/// Matches asynchronous replies to probes independently of the responder
/// address; that independence is what exposes transparent forwarders.
struct TransactionKey {
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 53;
  std::uint16_t dns_id = 0;

  bool operator==(const TransactionKey&) const = default;
};

struct ScanRecord {
  std::uint64_t sent_at = 0;                 // ms on the transport clock
  std::optional<std::uint64_t> received_at;  // ms, absent on timeout
  Ipv4 target_ip;
  std::optional<Ipv4> response_ip;
  std::optional<Ipv4> resolver_ip;  // A_resolver; present iff control_ok
  bool control_ok = false;
  TransactionKey key;
  std::optional<std::uint64_t> rtt_ms;
  std::string qname;
  std::uint16_t qtype = wire::kTypeA;
};

struct BatchOptions {
  authd::ZoneConfig zone;  // control record used to verify responses
  /// {seq} and {target} expand per probe; the result must be in-zone for the
  /// authoritative server to answer.
  std::string qname_template = "t{seq}.probe.test";
  std::uint16_t qtype = wire::kTypeA;
  bool dnssec_ok = false;
  std::uint16_t dst_port = 53;
  std::uint16_t ephemeral_base = 40000;
  std::size_t ephemeral_range = 16000;
  std::uint64_t timeout_ms = 5000;
  std::uint64_t seed = 1;
};

struct BatchResult {
  std::vector<ScanRecord> records;
  std::uint64_t unmatched_replies = 0;
  std::uint64_t send_failures = 0;
};

/// One probe per target; the unique UDP source port assigned to each target
/// carries the target identity, so replies map back to the probed address
/// even when they originate elsewhere.
BatchResult probe_batch(const std::vector<Ipv4>& targets, Transport& transport,
                        const BatchOptions& opts);

struct StaircaseConfig {
  double start_rate = 50;
  double max_rate = 3000;
  double step_duration_s = 2.0;
  double stop_response_ratio = 0.5;
  std::vector<double> step_schedule = {50,  100,  200,  300,  400,  600,
                                       800, 1000, 1500, 2000, 2500, 3000};
  double quiesce_s = 0.5;  // gap between steps; doubles as the reply drain

  void validate() const;
};

struct StepStat {
  double rate = 0;
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  double ratio = 0;
  double response_rate = 0;  // received / step duration
};

struct RateLimitEstimate {
  /// Maximum sustained response rate observed across attempted steps, in
  /// packets per second. For a limited target this converges on the limiter
  /// capacity; an unlimited target tracks the top step rate.
  double max_sustained_rate = 0;
  bool stopped_early = false;   // some step fell below the stop ratio
  bool below_minimum = false;   // already the first step fell below it
  std::vector<StepStat> steps;
};

struct StaircaseOptions {
  std::string qname = "rate.probe.test";
  std::uint16_t qtype = wire::kTypeA;
  bool vary_qname = false;  // append a per-packet counter label
  std::uint16_t src_port = 39000;
  std::uint16_t dst_port = 53;
};

/// Ramp the probe rate over cfg.step_schedule and stop at the first step
/// whose response ratio falls below the threshold; no packet is transmitted
/// after a failed step.
RateLimitEstimate staircase_rate_limit(Ipv4 target, const StaircaseConfig& cfg,
                                       Transport& transport,
                                       const StaircaseOptions& opts = {});

enum class Support { Yes, No, NA };

std::string support_name(Support s);

struct AmpOptions {
  std::string any_qname = "cached.probe.test";
  std::string dnssec_qname = "signed.probe.test";
  std::uint16_t src_port = 39500;
  std::uint16_t dst_port = 53;
  std::uint64_t timeout_ms = 5000;
};

struct AmpResult {
  Support any_support = Support::NA;
  Support dnssec_support = Support::NA;
  /// Largest response-bytes / query-bytes ratio observed over both probes.
  double observed_amplification = 0;
};

/// One ANY query and one DNSSEC-flagged query per resolver, no repeats.
/// Non-response is data (n/a).
AmpResult probe_amplification_support(Ipv4 resolver, Transport& transport,
                                      const AmpOptions& opts = {});

}  // namespace odnslab::probe
