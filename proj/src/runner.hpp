#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "classify.hpp"
#include "config.hpp"
#include "netlab.hpp"
#include "probe.hpp"
#include "threat.hpp"

namespace odnslab::runner {

/// Targets file: one IPv4 per line, `#` comments and blank lines ignored.
std::vector<Ipv4> load_targets(const std::string& path);

/// Transport per config. Sim mode builds the topology and attaches at the
/// configured (or first) client node; UDP mode requires allow_live.
struct TransportBundle {
  std::unique_ptr<probe::Transport> transport;
  std::shared_ptr<netlab::Sim> sim;  // null for UDP
  authd::ZoneConfig zone;            // topology zone when present
};
TransportBundle make_transport(const cfg::ToolkitConfig& config, bool allow_live);

struct ScanStats {
  std::size_t records = 0;
  std::size_t shielded = 0;
  std::uint64_t unmatched_replies = 0;
};

ScanStats run_scan(const cfg::ToolkitConfig& config, const std::string& targets_path,
                   const std::string& out_path, bool allow_live);

std::size_t run_ratelimit(const cfg::ToolkitConfig& config,
                          const std::string& targets_path,
                          const std::string& out_path, bool allow_live);

std::size_t run_amp_support(const cfg::ToolkitConfig& config,
                            const std::string& targets_path,
                            const std::string& out_path, bool allow_live);

std::size_t run_fingerprint(const cfg::ToolkitConfig& config,
                            const std::string& banners_path,
                            const std::string& out_path);

/// profile_name empty = all profiles in the profiles table.
std::string run_model(const cfg::ToolkitConfig& config, const std::string& profile_name,
                      const std::string& out_path);

void run_model_curve(const cfg::ToolkitConfig& config, const std::string& profile_name,
                     double pps_lo, double pps_hi, std::size_t points,
                     const std::string& out_path);

threat::OrchestrationPlan run_orchestrate(const cfg::ToolkitConfig& config,
                                          const std::string& inventory_path,
                                          std::size_t max_forwarders,
                                          threat::PlanPolicy policy,
                                          double direct_rate_pps,
                                          const std::string& out_path);

struct SimulateStats {
  std::size_t events = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
};

SimulateStats run_simulate(const cfg::ToolkitConfig& config,
                           const std::string& topology_path,
                           const std::string& trace_out,
                           const std::string& counters_out);

void run_analyze_histogram(const cfg::ToolkitConfig& config,
                           const std::string& estimates_jsonl,
                           const std::string& out_path);

void run_analyze_recurrence(const cfg::ToolkitConfig& config,
                            const std::vector<std::string>& epoch_files,
                            const std::string& kind, const std::string& out_path);

void run_analyze_rtt_delta(const cfg::ToolkitConfig& config,
                           const std::string& labeled_jsonl,
                           const std::string& out_path);

void run_analyze_amp_table(const cfg::ToolkitConfig& config,
                           const std::string& amp_jsonl, const std::string& out_path);

/// Blocking; serves max_queries answers (0 = forever). on_bound receives the
/// actual port before serving starts.
void run_authd(const cfg::ToolkitConfig& config, std::uint16_t port,
               std::uint64_t max_queries,
               const std::function<void(std::uint16_t)>& on_bound = {});

// Artifact serialization, shared with tests.
nlohmann::ordered_json scan_record_to_json(const probe::ScanRecord& rec,
                                           const classify::OdnsLabel& label);
nlohmann::ordered_json estimate_to_json(Ipv4 target,
                                        const probe::RateLimitEstimate& est);

}  // namespace odnslab::runner
