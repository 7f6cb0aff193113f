// odnslab command-line front end. All functionality lives behind the C API;
// this translation unit only parses arguments and maps status codes to exit
// codes.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "odnslab.h"

namespace {

int report(odnslab_status status) {
  if (status != ODNSLAB_OK)
    std::fprintf(stderr, "odnslab: %s\n", odnslab_last_error());
  return int(status);
}

struct ConfigHandle {
  odnslab_config* cfg = nullptr;
  ~ConfigHandle() { odnslab_config_free(cfg); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"odnslab — measurement toolkit for open DNS infrastructure"};
  app.set_version_flag("--version", odnslab_version());
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path,
                 "toolkit config file (default: $ODNSLAB_CONFIG)");
  app.add_option("--set", overrides,
                 "config override as dotted.key=value (repeatable)");

  // scan
  auto* scan = app.add_subcommand("scan", "probe targets and classify them");
  std::string targets, out, transport_override;
  bool live = false;
  scan->add_option("targets", targets, "targets file, one IPv4 per line")->required();
  scan->add_option("-o,--out", out, "output JSON Lines")->default_val("scan.jsonl");
  scan->add_option("--transport", transport_override, "udp or sim");
  scan->add_flag("--i-understand-live", live,
                 "acknowledge live traffic on the udp transport");

  // ratelimit
  auto* ratelimit = app.add_subcommand("ratelimit", "staircase rate-limit probing");
  std::string rl_targets, rl_out, rl_transport;
  bool rl_live = false;
  ratelimit->add_option("targets", rl_targets)->required();
  ratelimit->add_option("-o,--out", rl_out)->default_val("ratelimit.jsonl");
  ratelimit->add_option("--transport", rl_transport, "udp or sim");
  ratelimit->add_flag("--i-understand-live", rl_live);

  // amp-support
  auto* amp = app.add_subcommand("amp-support", "probe ANY and DNSSEC support");
  std::string amp_targets, amp_out, amp_transport;
  bool amp_live = false;
  amp->add_option("targets", amp_targets)->required();
  amp->add_option("-o,--out", amp_out)->default_val("amp.jsonl");
  amp->add_option("--transport", amp_transport, "udp or sim");
  amp->add_flag("--i-understand-live", amp_live);

  // fingerprint
  auto* fingerprint =
      app.add_subcommand("fingerprint", "classify stored banners by vendor rules");
  std::string banners, fp_out;
  fingerprint->add_option("banners", banners, "banner corpus, JSON Lines")->required();
  fingerprint->add_option("-o,--out", fp_out)->default_val("fingerprint.csv");

  // model
  auto* model = app.add_subcommand("model", "forwarder volume model");
  std::string profile, model_out, curve_out;
  double curve_lo = 1e3, curve_hi = 1e7;
  std::size_t curve_points = 200;
  bool with_curve = false;
  model->add_option("--profile", profile, "device profile name (default: all)");
  model->add_option("-o,--out", model_out)->default_val("model.csv");
  model->add_flag("--curve", with_curve, "also sweep the victim-traffic curve");
  model->add_option("--curve-out", curve_out)->default_val("curve.csv");
  model->add_option("--curve-lo", curve_lo, "sweep start, packets/s");
  model->add_option("--curve-hi", curve_hi, "sweep end, packets/s");
  model->add_option("--curve-points", curve_points);

  // orchestrate
  auto* orchestrate =
      app.add_subcommand("orchestrate", "plan forwarder selection across PoPs");
  std::string inventory, plan_out, policy = "pop";
  std::size_t max_forwarders = 10;
  double direct_rate = 0;
  orchestrate->add_option("inventory", inventory, "forwarder inventory CSV")->required();
  orchestrate->add_option("-o,--out", plan_out)->default_val("plan.csv");
  orchestrate->add_option("--max", max_forwarders, "forwarders to select");
  orchestrate->add_option("--policy", policy, "pop or country");
  orchestrate->add_option("--direct-rate", direct_rate,
                          "single-vantage direct rate, packets/s")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run a topology + workload");
  std::string topology, trace_out, counters_out;
  simulate->add_option("topology", topology, "topology JSON (may embed a workload)")
      ->required();
  simulate->add_option("--trace", trace_out)->default_val("trace.jsonl");
  simulate->add_option("--counters", counters_out)->default_val("counters.csv");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "derive tables from artifacts");
  analyze->require_subcommand(1);
  auto* histogram = analyze->add_subcommand("histogram", "rate-limit histogram");
  std::string hist_in, hist_out;
  histogram->add_option("estimates", hist_in, "ratelimit JSON Lines")->required();
  histogram->add_option("-o,--out", hist_out)->default_val("histogram.csv");
  auto* recurrence = analyze->add_subcommand("recurrence", "/24 recurrence over epochs");
  std::vector<std::string> epochs;
  std::string rec_kind = "transparent_forwarder", rec_out;
  recurrence->add_option("epochs", epochs, "scan JSON Lines files, one per epoch")
      ->required()
      ->expected(-1);
  recurrence->add_option("--kind", rec_kind,
                         "transparent_forwarder|recursive_forwarder|"
                         "recursive_resolver|shielded");
  recurrence->add_option("-o,--out", rec_out)->default_val("recurrence.csv");
  auto* rtt = analyze->add_subcommand("rtt-delta", "median response-time deltas");
  std::string rtt_in, rtt_out;
  rtt->add_option("scan", rtt_in, "labeled scan JSON Lines")->required();
  rtt->add_option("-o,--out", rtt_out)->default_val("rtt_delta.csv");
  auto* amp_table = analyze->add_subcommand("amp-table", "ANY/DNSSEC support table");
  std::string at_in, at_out;
  amp_table->add_option("amp", at_in, "amp-support JSON Lines")->required();
  amp_table->add_option("-o,--out", at_out)->default_val("amp_table.csv");

  // authd
  auto* authd = app.add_subcommand("authd", "run the authoritative responder");
  std::uint16_t port = 0;
  std::uint64_t max_queries = 0;
  authd->add_option("--port", port, "UDP port (default from config, 0 = ephemeral)");
  authd->add_option("--max-queries", max_queries, "exit after N answers (0 = run on)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : int(ODNSLAB_E_USAGE);
  }

  ConfigHandle handle;
  if (auto rc = odnslab_config_open(config_path.empty() ? nullptr : config_path.c_str(),
                                    &handle.cfg);
      rc != ODNSLAB_OK)
    return report(rc);
  for (const auto& kv : overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "odnslab: --set expects key=value, got '%s'\n", kv.c_str());
      return int(ODNSLAB_E_USAGE);
    }
    if (auto rc = odnslab_config_set(handle.cfg, kv.substr(0, eq).c_str(),
                                     kv.substr(eq + 1).c_str());
        rc != ODNSLAB_OK)
      return report(rc);
  }
  auto set_transport = [&](const std::string& mode) -> int {
    if (mode.empty()) return 0;
    return report(odnslab_config_set(handle.cfg, "transport.mode", mode.c_str()));
  };

  if (*scan) {
    if (int rc = set_transport(transport_override)) return rc;
    return report(odnslab_scan(handle.cfg, targets.c_str(), out.c_str(), live));
  }
  if (*ratelimit) {
    if (int rc = set_transport(rl_transport)) return rc;
    return report(
        odnslab_ratelimit(handle.cfg, rl_targets.c_str(), rl_out.c_str(), rl_live));
  }
  if (*amp) {
    if (int rc = set_transport(amp_transport)) return rc;
    return report(
        odnslab_amp_support(handle.cfg, amp_targets.c_str(), amp_out.c_str(), amp_live));
  }
  if (*fingerprint)
    return report(odnslab_fingerprint(handle.cfg, banners.c_str(), fp_out.c_str()));
  if (*model) {
    char* rendered = nullptr;
    auto rc = odnslab_model(handle.cfg, profile.empty() ? nullptr : profile.c_str(),
                            model_out.c_str(), &rendered);
    if (rc != ODNSLAB_OK) return report(rc);
    if (rendered) {
      std::fputs(rendered, stdout);
      odnslab_string_free(rendered);
    }
    if (with_curve) {
      rc = odnslab_model_curve(handle.cfg, profile.empty() ? nullptr : profile.c_str(),
                               curve_lo, curve_hi, curve_points, curve_out.c_str());
      if (rc != ODNSLAB_OK) return report(rc);
    }
    return 0;
  }
  if (*orchestrate) {
    odnslab_plan_summary summary{};
    auto rc = odnslab_orchestrate(handle.cfg, inventory.c_str(), max_forwarders,
                                  policy.c_str(), direct_rate, plan_out.c_str(),
                                  &summary);
    if (rc != ODNSLAB_OK) return report(rc);
    std::printf("selected %zu forwarders, expected aggregate %.0f pps, "
                "equivalent direct hosts %llu%s\n",
                summary.selected_forwarders, summary.expected_aggregate_pps,
                (unsigned long long)summary.equivalent_direct_hosts,
                summary.policy_satisfied ? "" : " (policy not fully satisfiable)");
    return 0;
  }
  if (*simulate)
    return report(odnslab_simulate(handle.cfg, topology.c_str(), trace_out.c_str(),
                                   counters_out.c_str()));
  if (*analyze) {
    if (*histogram)
      return report(
          odnslab_analyze_histogram(handle.cfg, hist_in.c_str(), hist_out.c_str()));
    if (*recurrence) {
      std::vector<const char*> files;
      for (const auto& f : epochs) files.push_back(f.c_str());
      return report(odnslab_analyze_recurrence(handle.cfg, files.data(), files.size(),
                                               rec_kind.c_str(), rec_out.c_str()));
    }
    if (*rtt)
      return report(odnslab_analyze_rtt_delta(handle.cfg, rtt_in.c_str(), rtt_out.c_str()));
    if (*amp_table)
      return report(
          odnslab_analyze_amp_table(handle.cfg, at_in.c_str(), at_out.c_str()));
  }
  if (*authd) {
    return report(odnslab_authd_run(
        handle.cfg, port, max_queries,
        [](uint16_t bound, void*) {
          std::printf("authd listening on udp/%u\n", bound);
          std::fflush(stdout);
        },
        nullptr));
  }
  return int(ODNSLAB_E_USAGE);
}
