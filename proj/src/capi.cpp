#include "odnslab.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "errors.hpp"
#include "runner.hpp"

using namespace odnslab;

struct odnslab_config {
  nlohmann::json raw;  // overrides re-validate lazily on each use
};

namespace {

thread_local std::string g_last_error;

odnslab_status to_status(Errc code) {
  switch (code) {
    case Errc::Usage: return ODNSLAB_E_USAGE;
    case Errc::Config: return ODNSLAB_E_CONFIG;
    case Errc::Io: return ODNSLAB_E_IO;
    default: return ODNSLAB_E_VALIDATION;
  }
}

template <typename Fn>
odnslab_status guarded(Fn&& fn) {
  try {
    fn();
    return ODNSLAB_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ODNSLAB_E_VALIDATION;
  }
}

cfg::ToolkitConfig resolve(odnslab_config* cfg) {
  if (!cfg) return cfg::default_config();
  return cfg::config_from_json(cfg->raw);
}

const char* require(const char* s, const char* what) {
  if (!s) fail(Errc::Usage, std::string(what) + " must not be NULL");
  return s;
}

}  // namespace

extern "C" {

const char* odnslab_version(void) { return "0.1.0"; }

const char* odnslab_last_error(void) { return g_last_error.c_str(); }

odnslab_status odnslab_config_open(const char* path_or_null, odnslab_config** out) {
  return guarded([&] {
    if (!out) fail(Errc::Usage, "out must not be NULL");
    auto cfg = cfg::load_config(path_or_null ? path_or_null : "");
    *out = new odnslab_config{cfg.to_json()};
  });
}

odnslab_status odnslab_config_set(odnslab_config* cfg, const char* key,
                                  const char* value) {
  return guarded([&] {
    if (!cfg) fail(Errc::Usage, "cfg must not be NULL");
    cfg::apply_override(cfg->raw, require(key, "key"), require(value, "value"));
    (void)cfg::config_from_json(cfg->raw);  // surface bad overrides now
  });
}

void odnslab_config_free(odnslab_config* cfg) { delete cfg; }

odnslab_status odnslab_scan(odnslab_config* cfg, const char* targets_path,
                            const char* out_jsonl, int allow_live) {
  return guarded([&] {
    runner::run_scan(resolve(cfg), require(targets_path, "targets_path"),
                     require(out_jsonl, "out_jsonl"), allow_live != 0);
  });
}

odnslab_status odnslab_ratelimit(odnslab_config* cfg, const char* targets_path,
                                 const char* out_jsonl, int allow_live) {
  return guarded([&] {
    runner::run_ratelimit(resolve(cfg), require(targets_path, "targets_path"),
                          require(out_jsonl, "out_jsonl"), allow_live != 0);
  });
}

odnslab_status odnslab_amp_support(odnslab_config* cfg, const char* targets_path,
                                   const char* out_jsonl, int allow_live) {
  return guarded([&] {
    runner::run_amp_support(resolve(cfg), require(targets_path, "targets_path"),
                            require(out_jsonl, "out_jsonl"), allow_live != 0);
  });
}

odnslab_status odnslab_fingerprint(odnslab_config* cfg, const char* banners_jsonl,
                                   const char* out_csv) {
  return guarded([&] {
    runner::run_fingerprint(resolve(cfg), require(banners_jsonl, "banners_jsonl"),
                            require(out_csv, "out_csv"));
  });
}

odnslab_status odnslab_model(odnslab_config* cfg, const char* profile_name,
                             const char* out_csv, char** rendered_out) {
  return guarded([&] {
    std::string rendered = runner::run_model(
        resolve(cfg), profile_name ? profile_name : "", require(out_csv, "out_csv"));
    if (rendered_out) {
      *rendered_out = static_cast<char*>(std::malloc(rendered.size() + 1));
      std::memcpy(*rendered_out, rendered.c_str(), rendered.size() + 1);
    }
  });
}

odnslab_status odnslab_model_curve(odnslab_config* cfg, const char* profile_name,
                                   double pps_lo, double pps_hi, size_t points,
                                   const char* out_csv) {
  return guarded([&] {
    runner::run_model_curve(resolve(cfg), profile_name ? profile_name : "", pps_lo,
                            pps_hi, points, require(out_csv, "out_csv"));
  });
}

odnslab_status odnslab_effective_rates(const char* device_name, double small_pps,
                                       double large_pps_or_zero, double uplink_bps,
                                       double downlink_bps, double query_bytes,
                                       double amplification, double mtu,
                                       odnslab_model_result* out) {
  return guarded([&] {
    if (!out) fail(Errc::Usage, "out must not be NULL");
    threat::VolumeModelInput input;
    input.device.name = device_name ? device_name : "";
    input.device.small_pps = small_pps;
    if (large_pps_or_zero > 0) input.device.large_pps = large_pps_or_zero;
    input.device.uplink_bps = uplink_bps;
    input.device.downlink_bps = downlink_bps;
    input.query_bytes = query_bytes;
    input.amplification = amplification;
    input.mtu = mtu;
    auto r = threat::effective_rates(input);
    *out = odnslab_model_result{r.tf_qps,        r.rf_qps,        r.tf_uplink_bps,
                                r.rf_uplink_bps, r.victim_bps_tf, r.victim_bps_rf,
                                r.ratio};
  });
}

double odnslab_aggregate_floor(double count_resolvers, double per_resolver_pps,
                               double query_bytes, double amplification) {
  try {
    return threat::aggregate_floor(count_resolvers, per_resolver_pps, query_bytes,
                                   amplification);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return -1.0;
  }
}

odnslab_status odnslab_orchestrate(odnslab_config* cfg, const char* inventory_csv,
                                   size_t max_forwarders, const char* policy,
                                   double direct_rate_pps, const char* out_csv,
                                   odnslab_plan_summary* summary_out) {
  return guarded([&] {
    std::string pol = require(policy, "policy");
    threat::PlanPolicy p;
    if (pol == "pop")
      p = threat::PlanPolicy::OnePerPop;
    else if (pol == "country")
      p = threat::PlanPolicy::OnePerCountry;
    else
      fail(Errc::Usage, "policy must be 'pop' or 'country'");
    auto plan = runner::run_orchestrate(resolve(cfg),
                                        require(inventory_csv, "inventory_csv"),
                                        max_forwarders, p, direct_rate_pps,
                                        require(out_csv, "out_csv"));
    if (summary_out) {
      summary_out->selected_forwarders = plan.assignments.size();
      summary_out->expected_aggregate_pps = plan.expected_aggregate_pps;
      summary_out->equivalent_direct_hosts = plan.equivalent_direct_hosts;
      summary_out->policy_satisfied = plan.warning.empty() ? 1 : 0;
    }
  });
}

odnslab_status odnslab_simulate(odnslab_config* cfg, const char* topology_json,
                                const char* trace_jsonl, const char* counters_csv) {
  return guarded([&] {
    runner::run_simulate(resolve(cfg), require(topology_json, "topology_json"),
                         require(trace_jsonl, "trace_jsonl"),
                         require(counters_csv, "counters_csv"));
  });
}

odnslab_status odnslab_analyze_histogram(odnslab_config* cfg,
                                         const char* estimates_jsonl,
                                         const char* out_csv) {
  return guarded([&] {
    runner::run_analyze_histogram(resolve(cfg),
                                  require(estimates_jsonl, "estimates_jsonl"),
                                  require(out_csv, "out_csv"));
  });
}

odnslab_status odnslab_analyze_recurrence(odnslab_config* cfg,
                                          const char* const* epoch_files,
                                          size_t epoch_count, const char* kind,
                                          const char* out_csv) {
  return guarded([&] {
    if (!epoch_files) fail(Errc::Usage, "epoch_files must not be NULL");
    std::vector<std::string> files;
    for (size_t i = 0; i < epoch_count; ++i)
      files.emplace_back(require(epoch_files[i], "epoch file"));
    runner::run_analyze_recurrence(resolve(cfg), files, require(kind, "kind"),
                                   require(out_csv, "out_csv"));
  });
}

odnslab_status odnslab_analyze_rtt_delta(odnslab_config* cfg,
                                         const char* labeled_jsonl,
                                         const char* out_csv) {
  return guarded([&] {
    runner::run_analyze_rtt_delta(resolve(cfg), require(labeled_jsonl, "labeled_jsonl"),
                                  require(out_csv, "out_csv"));
  });
}

odnslab_status odnslab_analyze_amp_table(odnslab_config* cfg, const char* amp_jsonl,
                                         const char* out_csv) {
  return guarded([&] {
    runner::run_analyze_amp_table(resolve(cfg), require(amp_jsonl, "amp_jsonl"),
                                  require(out_csv, "out_csv"));
  });
}

odnslab_status odnslab_authd_run(odnslab_config* cfg, uint16_t port,
                                 uint64_t max_queries,
                                 odnslab_port_callback on_bound, void* user) {
  return guarded([&] {
    runner::run_authd(resolve(cfg), port, max_queries, [&](std::uint16_t bound) {
      if (on_bound) on_bound(bound, user);
    });
  });
}

void odnslab_string_free(char* s) { std::free(s); }

}  // extern "C"
