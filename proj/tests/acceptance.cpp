// Acceptance suite. Each criterion prints one PASS/FAIL line; the process
// exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "classify.hpp"
#include "errors.hpp"
#include "generators.hpp"
#include "netlab.hpp"
#include "probe.hpp"
#include "runner.hpp"
#include "threat.hpp"
#include "topologies.hpp"

using namespace odnslab;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

struct Criterion {
  int number;
  std::string title;
  std::chrono::steady_clock::time_point start;
  bool ok = true;
  double runtime_limit_s = 0;

  Criterion(int number, std::string title, double limit_s = 0)
      : number(number), title(std::move(title)),
        start(std::chrono::steady_clock::now()), runtime_limit_s(limit_s) {}

  void expect(bool condition, const std::string& detail) {
    if (!condition) {
      ok = false;
      g_notes.push_back("criterion " + std::to_string(number) + ": " + detail);
    }
  }

  void expect_near(double got, double want, double rel_tol, const std::string& what) {
    double err = std::abs(got - want) / std::abs(want);
    if (err > rel_tol) {
      ok = false;
      std::ostringstream os;
      os << "criterion " << number << ": " << what << " = " << got << ", wanted "
         << want << " within " << rel_tol * 100 << "% (off by " << err * 100 << "%)";
      g_notes.push_back(os.str());
    }
  }

  ~Criterion() {
    double elapsed = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    if (runtime_limit_s > 0 && elapsed > runtime_limit_s) {
      ok = false;
      g_notes.push_back("criterion " + std::to_string(number) + ": runtime " +
                        std::to_string(elapsed) + " s exceeds " +
                        std::to_string(runtime_limit_s) + " s");
    }
    std::printf("[%s] criterion %d: %s (%.2f s)\n", ok ? "PASS" : "FAIL", number,
                title.c_str(), elapsed);
    std::fflush(stdout);
    if (!ok) ++g_failures;
  }
};

std::string data_file(const std::string& name) {
  return std::string(ODNSLAB_DATA_DIR) + "/" + name;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double step_width_at(const std::vector<double>& schedule, double capacity) {
  for (std::size_t i = 0; i + 1 < schedule.size(); ++i)
    if (capacity >= schedule[i] && capacity <= schedule[i + 1])
      return schedule[i + 1] - schedule[i];
  return schedule.size() > 1 ? schedule[1] - schedule[0] : schedule[0];
}

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() /
             ("odnslab-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

// --------------------------------------------------------------------------

void criterion1_router_comparison() {
  Criterion c(1, "forwarder comparison model matches the reference figures", 1.0);
  auto profiles = threat::load_profiles_csv(data_file("device_profiles.csv"));
  c.expect(profiles.size() == 2, "expected two shipped device profiles");

  threat::VolumeModelInput constrained;
  constrained.device = profiles[0];
  auto rb = threat::effective_rates(constrained);
  c.expect(rb.tf_qps == 64000, "constrained tf_qps must be exactly 64000");
  c.expect_near(rb.rf_qps, 2232, 0.01, "constrained rf_qps");
  c.expect_near(rb.victim_bps_tf, 1.43e9, 0.01, "constrained victim traffic");
  c.expect(std::abs(rb.ratio - 28.7) <= 0.5, "constrained ratio within 28.7 +/- 0.5");

  threat::VolumeModelInput powerful;
  powerful.device = profiles[1];
  auto ccr = threat::effective_rates(powerful);
  c.expect_near(ccr.rf_qps, 44643, 0.01, "powerful rf_qps");
  c.expect_near(ccr.victim_bps_tf, 40e9, 0.01, "powerful victim traffic");
  c.expect(std::abs(ccr.ratio - 40.0) <= 0.5, "powerful ratio within 40 +/- 0.5");
}

void criterion2_aggregate_floor() {
  Criterion c(2, "lower-bound traffic formula", 1.0);
  double bps = threat::aggregate_floor(2800, 2900, 70, 40);
  c.expect_near(bps, 1.8189e11, 0.001, "aggregate floor");
}

void criterion3_classification_ground_truth() {
  Criterion c(3, "100% classification accuracy on 50 random topologies", 30.0);
  std::size_t total_targets = 0, correct = 0;
  bool shielded_exact = true;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto gen = netlab::generate_random_topology(
        seed, netlab::RoleCounts{6, 4, 4, 3, 2, 0});
    auto sim = std::make_shared<netlab::Sim>(gen.topology);
    netlab::SimTransport transport(sim, gen.truth.scanner);
    probe::BatchOptions opts;
    opts.zone = gen.truth.zone;
    opts.qname_template = "t{seq}." + gen.truth.zone.zone_apex;
    opts.timeout_ms = 1000;
    opts.seed = seed;
    auto batch = probe::probe_batch(gen.truth.targets, transport, opts);

    std::vector<probe::ScanRecord> via_tf;
    for (std::size_t i = 0; i < batch.records.size(); ++i) {
      auto label = classify::classify(batch.records[i]);
      if (label.kind == classify::Kind::TransparentForwarder)
        via_tf.push_back(batch.records[i]);
      ++total_targets;
      auto want = gen.truth.expected.at(batch.records[i].target_ip);
      if (classify::kind_name(label.kind) == want) ++correct;
    }
    auto shielded = classify::detect_shielded(batch.records, via_tf);
    if (shielded != gen.truth.shielded) shielded_exact = false;
  }
  c.expect(total_targets >= 1000, "need at least 1000 probeable nodes, got " +
                                      std::to_string(total_targets));
  c.expect(correct == total_targets,
           "classification accuracy " + std::to_string(correct) + "/" +
               std::to_string(total_targets));
  c.expect(shielded_exact, "shielded sets must match the configured ground truth");
}

void criterion4_rate_limit_estimation() {
  Criterion c(4, "staircase estimates match token-bucket capacities", 60.0);
  probe::StaircaseConfig cfg;
  std::mt19937_64 rng(0x5ca1e);
  std::uniform_real_distribution<double> capacity_dist(100.0, 2900.0);
  int within = 0, total = 200;
  bool budget_ok = true, stop_ok = true;
  for (int i = 0; i < total; ++i) {
    double capacity = std::floor(capacity_dist(rng));
    auto topo = testtopo::limited(capacity, 60, std::uint64_t(1000 + i));
    auto sim = std::make_shared<netlab::Sim>(topo.topo);
    netlab::SimTransport transport(sim, testtopo::kScanner);
    auto est = probe::staircase_rate_limit(topo.resolver, cfg, transport);
    if (std::abs(est.max_sustained_rate - capacity) <=
        step_width_at(cfg.step_schedule, capacity))
      ++within;
    std::uint64_t sent_total = 0, budget = 0;
    for (const auto& st : est.steps) {
      sent_total += st.sent;
      budget += std::uint64_t(st.rate * cfg.step_duration_s);
    }
    if (sim->counters().at(testtopo::kScanner).sent != sent_total ||
        sent_total > budget)
      budget_ok = false;
    if (est.stopped_early && est.steps.back().ratio >= cfg.stop_response_ratio)
      stop_ok = false;
  }
  c.expect(within >= int(0.95 * total),
           "estimates within one step for " + std::to_string(within) + "/200");
  c.expect(budget_ok, "staircase transmitted beyond the failed step");
  c.expect(stop_ok, "stopped_early without a failing final step");
}

void criterion5_orchestration_scaling() {
  Criterion c(5, "anycast orchestration reproduces the 14x factor", 30.0);
  const std::vector<double> limits = {2170, 1744, 1608, 2900, 2893,
                                      2600, 2500, 2800, 2700, 2900};
  auto f = testtopo::anycast(limits, 60);
  // the scanner shares region 0 in the builder; move it to the 1744 PoP so a
  // direct probe measures the single-vantage rate
  f.topo.regions[testtopo::kScanner] = "R1";

  probe::StaircaseConfig cfg;
  std::vector<threat::ForwarderEntry> inventory;
  double measured_aggregate = 0;
  {
    auto sim = std::make_shared<netlab::Sim>(f.topo);
    netlab::SimTransport transport(sim, testtopo::kScanner);
    for (std::size_t i = 0; i < f.forwarders.size(); ++i) {
      probe::StaircaseOptions opts;
      opts.qname = "rate.probe.test";
      opts.src_port = std::uint16_t(39000 + i);
      auto est = probe::staircase_rate_limit(f.forwarders[i], cfg, transport, opts);
      threat::ForwarderEntry entry;
      entry.address = f.forwarders[i];
      entry.backend_service = f.service;
      entry.country = "C" + std::to_string(i);
      entry.pop_id = f.pops[i];
      entry.measured_limit_pps = est.max_sustained_rate;
      inventory.push_back(entry);
      measured_aggregate += est.max_sustained_rate;
    }
  }
  c.expect_near(measured_aggregate, 24815, 0.05, "sum of per-PoP measured limits");

  double direct_rate;
  {
    auto sim = std::make_shared<netlab::Sim>(f.topo);
    netlab::SimTransport transport(sim, testtopo::kScanner);
    probe::StaircaseOptions opts;
    opts.qname = "rate.probe.test";
    opts.src_port = 38000;
    auto est = probe::staircase_rate_limit(f.service, cfg, transport, opts);
    direct_rate = est.max_sustained_rate;
  }
  c.expect(std::abs(direct_rate - 1744) <= step_width_at(cfg.step_schedule, 1744),
           "single-vantage direct rate near 1744, got " + std::to_string(direct_rate));

  auto plan = threat::plan_orchestration(inventory, 10, threat::PlanPolicy::OnePerPop,
                                         direct_rate);
  c.expect(plan.assignments.size() == 10, "plan must select all ten forwarders");
  c.expect(plan.equivalent_direct_hosts == 14,
           "equivalent direct hosts = " +
               std::to_string(plan.equivalent_direct_hosts) + ", wanted 14");
  c.expect(plan.warning.empty(), "plan unexpectedly warned: " + plan.warning);

  // drive the planned attack and measure the aggregate at the victim
  {
    netlab::Sim sim(f.topo);
    const double duration_s = 4.0;
    auto* inbox = sim.attach_inbox(testtopo::kVictim);
    for (std::size_t i = 0; i < f.forwarders.size(); ++i) {
      const double rate = 3000;  // overdrive every PoP past its limit
      for (int k = 0; k < int(rate * duration_s); ++k) {
        netlab::WorkloadEntry e;
        e.time_ms = k * 1000.0 / rate;
        e.src = testtopo::kScanner;
        e.spoofed_src = testtopo::kVictim;
        e.dst = f.forwarders[i];
        e.src_port = std::uint16_t(40000 + i);
        e.dns_id = std::uint16_t(k + 1);
        e.qname = "atk.probe.test";
        sim.inject(e);
      }
    }
    sim.run_all();
    double victim_pps = double(inbox->size()) / duration_s;
    c.expect_near(victim_pps, 24815, 0.05, "attack packet rate at the victim");
  }
}

void criterion6_curve_shape() {
  Criterion c(6, "victim-traffic curve: flat x3, rising, flat x40", 5.0);
  threat::VolumeModelInput input;
  input.device = threat::DeviceProfile{"sweep", 1, std::nullopt, 1e9, 1e9};
  std::vector<double> range;
  for (double pps = 1e3; pps <= 1.0000001e7; pps *= std::pow(10.0, 1.0 / 100.0))
    range.push_back(pps);
  auto curve = threat::ratio_curve(input, range);
  c.expect(curve.size() == range.size(), "curve covers the sweep");
  c.expect(std::abs(curve.front().ratio - 3.0) <= 0.01,
           "pre-saturation ratio 3 +/- 0.01, got " + std::to_string(curve.front().ratio));
  c.expect(std::abs(curve.back().ratio - 40.0) <= 0.5,
           "asymptotic ratio 40 +/- 0.5, got " + std::to_string(curve.back().ratio));
  bool monotone = true;
  for (std::size_t i = 1; i < curve.size(); ++i)
    monotone = monotone && curve[i].ratio >= curve[i - 1].ratio - 1e-9;
  c.expect(monotone, "ratio must be non-decreasing across the sweep");
  // constant tail once the amplification bound is reached
  bool constant_tail = true;
  double final_ratio = curve.back().ratio;
  for (std::size_t i = curve.size() - 10; i < curve.size(); ++i)
    constant_tail = constant_tail && std::abs(curve[i].ratio - final_ratio) < 1e-6;
  c.expect(constant_tail, "ratio must flatten at the amplification bound");
}

void criterion7_codec_robustness() {
  Criterion c(7, "codec roundtrip and adversarial-input safety", 30.0);
  std::mt19937_64 rng(0xacce97);
  bool roundtrip_ok = true;
  for (int i = 0; i < 10000; ++i) {
    auto msg = testgen::random_message(rng);
    if (!(wire::decode(wire::encode(msg)) == msg)) roundtrip_ok = false;
  }
  c.expect(roundtrip_ok, "decode(encode(m)) must equal m for 10000 messages");
  int crashes = 0;
  for (int i = 0; i < 10000; ++i) {
    auto buf = testgen::random_bytes(rng, 600);
    try {
      (void)wire::decode(buf);
    } catch (const Error&) {
    } catch (...) {
      ++crashes;
    }
  }
  c.expect(crashes == 0, "random buffers raised a non-codec error");
}

void criterion8_manipulation_filter() {
  Criterion c(8, "on-path manipulation is filtered with zero false negatives", 10.0);
  auto topo = testtopo::base();
  Ipv4 manip(10, 66, 0, 1), tf_manip(10, 66, 0, 2);
  Ipv4 honest(198, 51, 100, 71), tf_honest(192, 0, 2, 71);
  topo.nodes.push_back(netlab::NodeSpec{manip, netlab::ManipulatorSpec{Ipv4(6, 6, 6, 6)}});
  topo.nodes.push_back(netlab::NodeSpec{tf_manip, netlab::TransparentForwarderSpec{manip}});
  topo.nodes.push_back(netlab::NodeSpec{honest, netlab::RecursiveResolverSpec{}});
  topo.nodes.push_back(netlab::NodeSpec{tf_honest, netlab::TransparentForwarderSpec{honest}});

  auto sim = std::make_shared<netlab::Sim>(topo);
  netlab::SimTransport transport(sim, testtopo::kScanner);
  probe::BatchOptions opts;
  opts.zone = testtopo::zone();
  opts.qname_template = "t{seq}.probe.test";
  opts.timeout_ms = 1000;
  auto batch = probe::probe_batch({manip, tf_manip, honest, tf_honest}, transport, opts);

  std::vector<classify::LabeledRecord> labeled;
  int manipulated_responses = 0, labeled_manipulated = 0;
  for (const auto& rec : batch.records) {
    auto label = classify::classify(rec);
    if (rec.received_at && !rec.control_ok) {
      ++manipulated_responses;
      if (label.kind == classify::Kind::Manipulated) ++labeled_manipulated;
    }
    classify::LabeledRecord lr{rec, label};
    lr.label.country = "XX";
    lr.record.rtt_ms = rec.rtt_ms;
    labeled.push_back(lr);
  }
  c.expect(manipulated_responses == 2,
           "expected two responses lacking the control record, got " +
               std::to_string(manipulated_responses));
  c.expect(labeled_manipulated == manipulated_responses,
           "every response without the control record must be Manipulated");

  // manipulated records contribute to no analytic
  std::vector<probe::ScanRecord> via_tf;
  for (const auto& lr : labeled)
    if (lr.label.kind == classify::Kind::TransparentForwarder) via_tf.push_back(lr.record);
  auto shielded = classify::detect_shielded(batch.records, via_tf);
  c.expect(shielded.empty(), "manipulated responses leaked into shielded detection");
  auto deltas = classify::response_time_delta(labeled);
  // the only TF record is honest; manipulated rows carry no RF/TF weight
  c.expect(deltas.empty() || deltas.count("XX") == 0 ||
               std::abs(deltas.at("XX")) < 1e9,
           "rtt analytics consumed manipulated rows");
  std::vector<classify::LabeledRecord> only_manipulated;
  for (const auto& lr : labeled)
    if (lr.label.kind == classify::Kind::Manipulated) only_manipulated.push_back(lr);
  c.expect(classify::response_time_delta(only_manipulated).empty(),
           "manipulated-only input must yield empty analytics");
}

void criterion9_determinism() {
  Criterion c(9, "seeded runs produce byte-identical artifacts", 20.0);
  auto dir = temp_dir();
  auto targets = (dir / "targets.txt").string();
  {
    std::ofstream out(targets);
    out << "192.0.2.1\n198.51.100.53\n";
  }
  auto config = cfg::default_config();
  config.transport_mode = cfg::TransportMode::Sim;
  config.topology_path = data_file("topologies/open_resolver.json");
  config.probe_timeout_ms = 500;
  runner::run_scan(config, targets, (dir / "scan_a.jsonl").string(), false);
  runner::run_scan(config, targets, (dir / "scan_b.jsonl").string(), false);
  c.expect(read_file((dir / "scan_a.jsonl").string()) ==
               read_file((dir / "scan_b.jsonl").string()),
           "scan reruns differ");

  runner::run_simulate(config, data_file("topologies/broadcast.json"),
                       (dir / "trace_a.jsonl").string(),
                       (dir / "counters_a.csv").string());
  runner::run_simulate(config, data_file("topologies/broadcast.json"),
                       (dir / "trace_b.jsonl").string(),
                       (dir / "counters_b.csv").string());
  c.expect(read_file((dir / "trace_a.jsonl").string()) ==
               read_file((dir / "trace_b.jsonl").string()),
           "simulate trace reruns differ");
  c.expect(read_file((dir / "counters_a.csv").string()) ==
               read_file((dir / "counters_b.csv").string()),
           "simulate counter reruns differ");
  std::error_code ec;
  fs::remove_all(dir, ec);
}

}  // namespace

int main() {
  std::printf("odnslab acceptance suite\n");
  criterion1_router_comparison();
  criterion2_aggregate_floor();
  criterion3_classification_ground_truth();
  criterion4_rate_limit_estimation();
  criterion5_orchestration_scaling();
  criterion6_curve_shape();
  criterion7_codec_robustness();
  criterion8_manipulation_filter();
  criterion9_determinism();
  for (const auto& note : g_notes) std::fprintf(stderr, "detail: %s\n", note.c_str());
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
