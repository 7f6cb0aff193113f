#include "runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "fingerprint.hpp"
#include "udp_transport.hpp"

namespace odnslab::runner {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::Io, "cannot write: " + path);
  return out;
}

void write_meta_line(std::ostream& out, const cfg::ToolkitConfig& config) {
  nlohmann::ordered_json meta;
  meta["meta"] = {{"config_hash", config.hash()}, {"seed", config.seed}};
  out << meta.dump() << "\n";
}

void write_csv_header(std::ostream& out, const cfg::ToolkitConfig& config) {
  out << "# config_hash=" << config.hash() << " seed=" << config.seed << "\n";
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open: " + path);
  std::vector<nlohmann::json> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail(Errc::Validation, path + ":" + std::to_string(lineno) + ": bad JSON");
    if (j.contains("meta")) continue;
    lines.push_back(std::move(j));
  }
  return lines;
}

Ipv4 addr_or_fail(const std::string& text, const std::string& what) {
  auto a = Ipv4::parse(text);
  if (!a) fail(Errc::Validation, "bad IPv4 for " + what + ": '" + text + "'");
  return *a;
}

}  // namespace

std::vector<Ipv4> load_targets(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open targets file: " + path);
  std::vector<Ipv4> targets;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
      line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    targets.push_back(addr_or_fail(line.substr(start),
                                   path + ":" + std::to_string(lineno)));
  }
  return targets;
}

TransportBundle make_transport(const cfg::ToolkitConfig& config, bool allow_live) {
  TransportBundle bundle;
  bundle.zone = config.zone;
  if (config.transport_mode == cfg::TransportMode::Udp) {
    if (!allow_live)
      fail(Errc::Validation,
           "refusing live UDP transport without --i-understand-live");
    bundle.transport = std::make_unique<probe::UdpTransport>();
    return bundle;
  }
  if (config.topology_path.empty())
    fail(Errc::Config, "sim transport needs transport.topology");
  netlab::Topology topo = netlab::load_topology_file(config.topology_path);
  bundle.sim = std::make_shared<netlab::Sim>(topo, false);
  if (auto zone = bundle.sim->zone()) bundle.zone = *zone;
  Ipv4 client;
  if (config.sim_client_address) {
    client = *config.sim_client_address;
  } else {
    bool found = false;
    for (const auto& n : topo.nodes) {
      if (std::holds_alternative<netlab::ClientSpec>(n.role)) {
        client = n.address;
        found = true;
        break;
      }
    }
    if (!found) fail(Errc::Validation, "topology has no client node to attach to");
  }
  bundle.transport = std::make_unique<netlab::SimTransport>(bundle.sim, client);
  return bundle;
}

nlohmann::ordered_json scan_record_to_json(const probe::ScanRecord& rec,
                                           const classify::OdnsLabel& label) {
  nlohmann::ordered_json j;
  j["sent_at"] = rec.sent_at;
  if (rec.received_at) j["received_at"] = *rec.received_at;
  j["target_ip"] = rec.target_ip.to_string();
  if (rec.response_ip) j["response_ip"] = rec.response_ip->to_string();
  if (rec.resolver_ip) j["resolver_ip"] = rec.resolver_ip->to_string();
  j["control_ok"] = rec.control_ok;
  j["key"] = {{"src_port", rec.key.src_port},
              {"dst_port", rec.key.dst_port},
              {"dns_id", rec.key.dns_id}};
  if (rec.rtt_ms) j["rtt_ms"] = *rec.rtt_ms;
  j["qname"] = rec.qname;
  j["qtype"] = wire::qtype_name(rec.qtype);
  j["kind"] = classify::kind_name(label.kind);
  if (label.single_address_backend) j["single_address_backend"] = true;
  if (label.shielded_backend) j["shielded_backend"] = label.shielded_backend->to_string();
  if (label.asn) j["asn"] = *label.asn;
  if (label.country) j["country"] = *label.country;
  return j;
}

ScanStats run_scan(const cfg::ToolkitConfig& config, const std::string& targets_path,
                   const std::string& out_path, bool allow_live) {
  auto targets = load_targets(targets_path);
  auto bundle = make_transport(config, allow_live);

  probe::BatchOptions opts;
  opts.zone = bundle.zone;
  opts.qname_template = config.qname_template;
  opts.dst_port = config.probe_dst_port;
  opts.ephemeral_base = config.ephemeral_base;
  opts.ephemeral_range = config.ephemeral_range;
  opts.timeout_ms = config.probe_timeout_ms;
  opts.seed = config.seed;

  probe::BatchResult batch;
  if (!targets.empty()) batch = probe::probe_batch(targets, *bundle.transport, opts);

  std::vector<classify::LabeledRecord> labeled;
  labeled.reserve(batch.records.size());
  std::vector<probe::ScanRecord> via_tf;
  for (const auto& rec : batch.records) {
    classify::LabeledRecord lr{rec, classify::classify(rec)};
    if (lr.label.kind == classify::Kind::TransparentForwarder) via_tf.push_back(rec);
    labeled.push_back(std::move(lr));
  }
  // The direct scan covers every probed address, so one epoch provides both
  // views needed for shielded detection.
  auto shielded = classify::detect_shielded(batch.records, via_tf);
  for (auto& lr : labeled) {
    if (lr.label.kind == classify::Kind::TransparentForwarder && lr.record.response_ip &&
        shielded.count(*lr.record.response_ip))
      lr.label.shielded_backend = *lr.record.response_ip;
  }

  std::optional<classify::PrefixTable> asn_table, geo_table;
  if (!config.asn_table_path.empty())
    asn_table = classify::PrefixTable::load_csv(config.asn_table_path);
  if (!config.geo_table_path.empty())
    geo_table = classify::PrefixTable::load_csv(config.geo_table_path);
  classify::enrich(labeled, asn_table ? &*asn_table : nullptr,
                   geo_table ? &*geo_table : nullptr);

  auto out = open_out(out_path);
  write_meta_line(out, config);
  for (const auto& lr : labeled) out << scan_record_to_json(lr.record, lr.label).dump() << "\n";

  return ScanStats{labeled.size(), shielded.size(), batch.unmatched_replies};
}

nlohmann::ordered_json estimate_to_json(Ipv4 target,
                                        const probe::RateLimitEstimate& est) {
  nlohmann::ordered_json j;
  j["target_ip"] = target.to_string();
  j["max_sustained_rate"] = est.max_sustained_rate;
  j["stopped_early"] = est.stopped_early;
  j["below_minimum"] = est.below_minimum;
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& st : est.steps) {
    steps.push_back({{"rate", st.rate},
                     {"sent", st.sent},
                     {"received", st.received},
                     {"ratio", st.ratio},
                     {"response_rate", st.response_rate}});
  }
  j["steps"] = std::move(steps);
  return j;
}

std::size_t run_ratelimit(const cfg::ToolkitConfig& config,
                          const std::string& targets_path,
                          const std::string& out_path, bool allow_live) {
  auto targets = load_targets(targets_path);
  auto bundle = make_transport(config, allow_live);
  auto out = open_out(out_path);
  write_meta_line(out, config);
  std::size_t done = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    probe::StaircaseOptions opts;
    opts.qname = "rate." + bundle.zone.zone_apex;
    opts.dst_port = config.probe_dst_port;
    opts.src_port = std::uint16_t(config.ephemeral_base + (i % config.ephemeral_range));
    auto est = probe::staircase_rate_limit(targets[i], config.staircase,
                                           *bundle.transport, opts);
    out << estimate_to_json(targets[i], est).dump() << "\n";
    ++done;
  }
  return done;
}

std::size_t run_amp_support(const cfg::ToolkitConfig& config,
                            const std::string& targets_path,
                            const std::string& out_path, bool allow_live) {
  auto targets = load_targets(targets_path);
  auto bundle = make_transport(config, allow_live);
  auto out = open_out(out_path);
  write_meta_line(out, config);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    probe::AmpOptions opts;
    opts.any_qname = config.any_qname;
    opts.dnssec_qname = config.dnssec_qname;
    opts.dst_port = config.probe_dst_port;
    opts.src_port = std::uint16_t(config.ephemeral_base + (i % config.ephemeral_range));
    opts.timeout_ms = config.probe_timeout_ms;
    auto amp = probe::probe_amplification_support(targets[i], *bundle.transport, opts);
    nlohmann::ordered_json j;
    j["target_ip"] = targets[i].to_string();
    j["any_support"] = probe::support_name(amp.any_support);
    j["dnssec_support"] = probe::support_name(amp.dnssec_support);
    j["observed_amplification"] = amp.observed_amplification;
    out << j.dump() << "\n";
  }
  return targets.size();
}

std::size_t run_fingerprint(const cfg::ToolkitConfig& config,
                            const std::string& banners_path,
                            const std::string& out_path) {
  if (config.rules_path.empty())
    fail(Errc::Config, "fingerprinting needs tables.rules in the config");
  auto rules = fp::load_rules_csv(config.rules_path);
  std::vector<fp::BannerRecord> corpus;
  for (const auto& j : read_jsonl(banners_path)) {
    fp::BannerRecord rec;
    rec.address = addr_or_fail(j.value("address", ""), "banner address");
    auto source = fp::source_from_name(j.value("source", "http"));
    if (!source) fail(Errc::Validation, "unknown banner source");
    rec.source = *source;
    rec.text = j.value("text", "");
    corpus.push_back(std::move(rec));
  }
  auto summary = fp::fingerprint_summary(corpus, rules);
  auto out = open_out(out_path);
  write_csv_header(out, config);
  out << "vendor,device_type,devices\n";
  for (const auto& row : summary)
    out << row.vendor << "," << fp::device_type_name(row.device_type) << ","
        << row.devices << "\n";
  return summary.size();
}

namespace {

std::vector<threat::VolumeModelInput> model_inputs(const cfg::ToolkitConfig& config,
                                                   const std::string& profile_name) {
  if (config.profiles_path.empty())
    fail(Errc::Config, "model needs tables.profiles in the config");
  auto profiles = threat::load_profiles_csv(config.profiles_path);
  std::vector<threat::VolumeModelInput> inputs;
  for (const auto& p : profiles) {
    if (!profile_name.empty() && p.name != profile_name) continue;
    threat::VolumeModelInput input;
    input.device = p;
    inputs.push_back(input);
  }
  if (inputs.empty())
    fail(Errc::Validation, "no profile matches '" + profile_name + "'");
  return inputs;
}

}  // namespace

std::string run_model(const cfg::ToolkitConfig& config, const std::string& profile_name,
                      const std::string& out_path) {
  auto inputs = model_inputs(config, profile_name);
  auto out = open_out(out_path);
  write_csv_header(out, config);
  out << "name,tf_qps,rf_qps,tf_uplink_bps,rf_uplink_bps,victim_bps_tf,"
         "victim_bps_rf,ratio,response_bytes,response_packets\n";
  for (const auto& input : inputs) {
    auto r = threat::effective_rates(input);
    out << input.device.name << "," << r.tf_qps << "," << r.rf_qps << ","
        << r.tf_uplink_bps << "," << r.rf_uplink_bps << "," << r.victim_bps_tf << ","
        << r.victim_bps_rf << "," << r.ratio << "," << r.response_bytes << ","
        << r.response_packets << "\n";
  }
  return threat::render_comparison(inputs);
}

void run_model_curve(const cfg::ToolkitConfig& config, const std::string& profile_name,
                     double pps_lo, double pps_hi, std::size_t points,
                     const std::string& out_path) {
  if (points < 2 || pps_lo <= 0 || pps_hi <= pps_lo)
    fail(Errc::Validation, "curve needs pps_hi > pps_lo > 0 and >= 2 points");
  auto inputs = model_inputs(config, profile_name);
  std::vector<double> range;
  range.reserve(points);
  // log-spaced sweep
  for (std::size_t i = 0; i < points; ++i) {
    double t = double(i) / double(points - 1);
    range.push_back(pps_lo * std::pow(pps_hi / pps_lo, t));
  }
  auto curve = threat::ratio_curve(inputs.front(), range);
  auto out = open_out(out_path);
  write_csv_header(out, config);
  out << "pps,victim_bps_tf,victim_bps_rf,ratio\n";
  for (const auto& pt : curve)
    out << pt.pps << "," << pt.victim_bps_tf << "," << pt.victim_bps_rf << ","
        << pt.ratio << "\n";
}

threat::OrchestrationPlan run_orchestrate(const cfg::ToolkitConfig& config,
                                          const std::string& inventory_path,
                                          std::size_t max_forwarders,
                                          threat::PlanPolicy policy,
                                          double direct_rate_pps,
                                          const std::string& out_path) {
  auto inventory = threat::load_inventory_csv(inventory_path);
  auto plan = threat::plan_orchestration(inventory, max_forwarders, policy,
                                         direct_rate_pps);
  auto out = open_out(out_path);
  write_csv_header(out, config);
  out << "address,backend_service,country,pop_id,limit_pps\n";
  for (const auto& e : plan.assignments)
    out << e.address.to_string() << "," << e.backend_service.to_string() << ","
        << e.country << "," << e.pop_id << "," << e.effective_limit() << "\n";
  out << "# expected_aggregate_pps=" << plan.expected_aggregate_pps
      << " equivalent_direct_hosts=" << plan.equivalent_direct_hosts << "\n";
  if (!plan.warning.empty()) out << "# warning=" << plan.warning << "\n";
  return plan;
}

SimulateStats run_simulate(const cfg::ToolkitConfig& config,
                           const std::string& topology_path,
                           const std::string& trace_out,
                           const std::string& counters_out) {
  std::ifstream in(topology_path);
  if (!in) fail(Errc::Io, "cannot open topology file: " + topology_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::Validation, "topology JSON: " + std::string(e.what()));
  }
  auto topo = netlab::topology_from_json(j);
  std::vector<netlab::WorkloadEntry> workload;
  if (j.contains("workload")) workload = netlab::workload_from_json(j.at("workload"));

  auto result = netlab::run(topo, workload);

  auto trace = open_out(trace_out);
  write_meta_line(trace, config);
  SimulateStats stats;
  stats.events = result.trace.size();
  for (const auto& ev : result.trace)
    trace << netlab::trace_event_to_json(ev).dump() << "\n";

  auto counters = open_out(counters_out);
  write_csv_header(counters, config);
  counters << "node,counter,value\n";
  for (const auto& [addr, c] : result.counters) {
    counters << addr.to_string() << ",sent," << c.sent << "\n";
    counters << addr.to_string() << ",received," << c.received << "\n";
    counters << addr.to_string() << ",forwarded," << c.forwarded << "\n";
    counters << addr.to_string() << ",responded," << c.responded << "\n";
    stats.delivered += c.received;
    for (const auto& [reason, n] : c.drops) {
      counters << addr.to_string() << ",drop." << reason << "," << n << "\n";
      stats.dropped += n;
    }
  }
  return stats;
}

void run_analyze_histogram(const cfg::ToolkitConfig& config,
                           const std::string& estimates_jsonl,
                           const std::string& out_path) {
  std::vector<probe::RateLimitEstimate> estimates;
  for (const auto& j : read_jsonl(estimates_jsonl)) {
    probe::RateLimitEstimate est;
    est.max_sustained_rate = j.value("max_sustained_rate", 0.0);
    est.stopped_early = j.value("stopped_early", false);
    est.below_minimum = j.value("below_minimum", false);
    estimates.push_back(est);
  }
  auto hist = classify::rate_limit_histogram(estimates, 100,
                                             config.staircase.max_rate);
  auto out = open_out(out_path);
  write_csv_header(out, config);
  out << "bin_start,count\n";
  for (std::size_t k = 0; k < hist.counts.size(); ++k)
    out << std::uint64_t(k * hist.bin_width) << "," << hist.counts[k] << "\n";
}

void run_analyze_recurrence(const cfg::ToolkitConfig& config,
                            const std::vector<std::string>& epoch_files,
                            const std::string& kind, const std::string& out_path) {
  auto want = classify::kind_from_name(kind);
  bool want_shielded = kind == "shielded";
  if (!want && !want_shielded)
    fail(Errc::Validation, "unknown kind filter '" + kind + "'");
  std::vector<std::set<Ipv4>> epochs;
  for (const auto& file : epoch_files) {
    std::set<Ipv4> addrs;
    for (const auto& j : read_jsonl(file)) {
      std::string k = j.value("kind", "");
      if (want_shielded) {
        // shielded resolvers are aggregated by their backend address
        if (j.contains("shielded_backend"))
          addrs.insert(addr_or_fail(j["shielded_backend"].get<std::string>(),
                                    "shielded_backend"));
      } else if (k == classify::kind_name(*want)) {
        addrs.insert(addr_or_fail(j.value("target_ip", ""), "target_ip"));
      }
    }
    epochs.push_back(std::move(addrs));
  }
  auto dist = classify::subnet_recurrence(epochs);
  auto out = open_out(out_path);
  write_csv_header(out, config);
  out << "bin_start,count\n";
  for (std::size_t r = 1; r <= dist.epochs; ++r)
    out << r << "," << dist.counts[r - 1] << "\n";
}

void run_analyze_rtt_delta(const cfg::ToolkitConfig& config,
                           const std::string& labeled_jsonl,
                           const std::string& out_path) {
  std::vector<classify::LabeledRecord> records;
  for (const auto& j : read_jsonl(labeled_jsonl)) {
    classify::LabeledRecord lr;
    auto kind = classify::kind_from_name(j.value("kind", ""));
    if (!kind) continue;
    lr.label.kind = *kind;
    if (j.contains("country")) lr.label.country = j["country"].get<std::string>();
    if (j.contains("rtt_ms")) lr.record.rtt_ms = j["rtt_ms"].get<std::uint64_t>();
    lr.record.target_ip = addr_or_fail(j.value("target_ip", ""), "target_ip");
    records.push_back(std::move(lr));
  }
  auto deltas = classify::response_time_delta(records);
  auto out = open_out(out_path);
  write_csv_header(out, config);
  out << "country,delta_ms\n";
  for (const auto& [country, delta] : deltas) out << country << "," << delta << "\n";
}

void run_analyze_amp_table(const cfg::ToolkitConfig& config,
                           const std::string& amp_jsonl, const std::string& out_path) {
  std::map<std::string, std::map<std::string, std::uint64_t>> counts;
  std::uint64_t total = 0;
  for (const auto& j : read_jsonl(amp_jsonl)) {
    counts["DNSSEC"][j.value("dnssec_support", "n/a")]++;
    counts["ANY"][j.value("any_support", "n/a")]++;
    ++total;
  }
  auto out = open_out(out_path);
  write_csv_header(out, config);
  out << "feature,support,count,percent\n";
  for (const auto& feature : {"DNSSEC", "ANY"}) {
    for (const auto& support : {"yes", "no", "n/a"}) {
      std::uint64_t n = counts[feature][support];
      double pct = total ? 100.0 * double(n) / double(total) : 0.0;
      out << feature << "," << support << "," << n << "," << pct << "\n";
    }
  }
}

void run_authd(const cfg::ToolkitConfig& config, std::uint16_t port,
               std::uint64_t max_queries,
               const std::function<void(std::uint16_t)>& on_bound) {
  authd::UdpServer server(config.zone);
  std::uint16_t bound = server.bind(port ? port : config.authd_port);
  if (on_bound) on_bound(bound);
  server.serve(max_queries);
}

}  // namespace odnslab::runner
