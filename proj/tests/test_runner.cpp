#include "runner.hpp"

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "errors.hpp"
#include "topologies.hpp"

using namespace odnslab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("odnslab-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<nlohmann::json> read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

cfg::ToolkitConfig sim_config(const std::string& topology_path) {
  auto config = cfg::default_config();
  config.transport_mode = cfg::TransportMode::Sim;
  config.topology_path = topology_path;
  config.probe_timeout_ms = 500;
  return config;
}

std::string data_file(const std::string& name) {
  return std::string(ODNSLAB_DATA_DIR) + "/" + name;
}

}  // namespace

TEST_SUITE_BEGIN("runner");

TEST_CASE("targets files accept comments and reject junk") {
  TempDir tmp;
  write_file(tmp.file("targets.txt"),
             "# heading comment\n"
             "192.0.2.1   # trailing comment\n"
             "\n"
             "  198.51.100.53\n");
  auto targets = runner::load_targets(tmp.file("targets.txt"));
  REQUIRE(targets.size() == 2);
  CHECK(targets[0] == Ipv4(192, 0, 2, 1));
  CHECK(targets[1] == Ipv4(198, 51, 100, 53));

  write_file(tmp.file("bad.txt"), "not-an-address\n");
  CHECK_THROWS_AS(runner::load_targets(tmp.file("bad.txt")), Error);
  CHECK_THROWS_AS(runner::load_targets(tmp.file("missing.txt")), Error);
}

TEST_CASE("config loads, validates referenced files, applies overrides") {
  TempDir tmp;
  CHECK(cfg::load_config("").seed == 1);  // defaults when nothing is given

  write_file(tmp.file("config.json"),
             R"({"seed": 9, "transport": {"mode": "sim", "topology": ")" +
                 data_file("topologies/open_resolver.json") + R"("}})");
  auto config = cfg::load_config(tmp.file("config.json"));
  CHECK(config.seed == 9);
  CHECK(config.transport_mode == cfg::TransportMode::Sim);

  write_file(tmp.file("broken.json"),
             R"({"transport": {"topology": "does-not-exist.json"}})");
  CHECK_THROWS_AS(cfg::load_config(tmp.file("broken.json")), Error);

  auto j = cfg::default_config().to_json();
  cfg::apply_override(j, "seed", "123");
  cfg::apply_override(j, "probe.qname_template", "x{seq}.probe.test");
  auto overridden = cfg::config_from_json(j);
  CHECK(overridden.seed == 123);
  CHECK(overridden.qname_template == "x{seq}.probe.test");

  // hash covers every knob that affects artifacts
  CHECK(cfg::default_config().hash() != overridden.hash());
  CHECK(cfg::default_config().hash() == cfg::default_config().hash());
}

TEST_CASE("scan pipeline labels the open_resolver topology") {
  TempDir tmp;
  write_file(tmp.file("targets.txt"), "192.0.2.1\n198.51.100.53\n");
  auto config = sim_config(data_file("topologies/open_resolver.json"));
  auto stats = runner::run_scan(config, tmp.file("targets.txt"),
                                tmp.file("scan.jsonl"), false);
  CHECK(stats.records == 2);
  auto lines = read_jsonl_file(tmp.file("scan.jsonl"));
  REQUIRE(lines.size() == 3);  // meta + 2 records
  CHECK(lines[0].contains("meta"));
  CHECK(lines[0]["meta"]["seed"] == config.seed);
  CHECK(lines[1]["target_ip"] == "192.0.2.1");
  CHECK(lines[1]["kind"] == "transparent_forwarder");
  CHECK(lines[1]["response_ip"] == "198.51.100.53");
  CHECK(lines[1]["resolver_ip"] == "198.51.100.99");
  CHECK(lines[1]["control_ok"] == true);
  CHECK(lines[1]["key"].contains("src_port"));
  // the backend answers directly and shows the forwarder pattern when probed
  CHECK(lines[2]["target_ip"] == "198.51.100.53");
  CHECK(lines[2]["kind"] == "recursive_forwarder");
}

TEST_CASE("scan of an empty targets file writes only the header") {
  TempDir tmp;
  write_file(tmp.file("targets.txt"), "# nothing\n");
  auto config = sim_config(data_file("topologies/open_resolver.json"));
  auto stats = runner::run_scan(config, tmp.file("targets.txt"),
                                tmp.file("scan.jsonl"), false);
  CHECK(stats.records == 0);
  auto lines = read_jsonl_file(tmp.file("scan.jsonl"));
  CHECK(lines.size() == 1);
}

TEST_CASE("live transport is refused without the acknowledgment flag") {
  TempDir tmp;
  write_file(tmp.file("targets.txt"), "127.0.0.1\n");
  auto config = cfg::default_config();
  config.transport_mode = cfg::TransportMode::Udp;
  CHECK_THROWS_AS(
      runner::run_scan(config, tmp.file("targets.txt"), tmp.file("o.jsonl"), false),
      Error);
}

TEST_CASE("scan detects shielded backends within one epoch") {
  TempDir tmp;
  auto f = testtopo::shielded_scenario();
  write_file(tmp.file("topo.json"), netlab::topology_to_json(f.topo).dump());
  write_file(tmp.file("targets.txt"),
             f.shielded.to_string() + "\n" + f.tf.to_string() + "\n");
  auto config = sim_config(tmp.file("topo.json"));
  auto stats = runner::run_scan(config, tmp.file("targets.txt"),
                                tmp.file("scan.jsonl"), false);
  CHECK(stats.shielded == 1);
  auto lines = read_jsonl_file(tmp.file("scan.jsonl"));
  CHECK(lines[1]["kind"] == "unresponsive");
  CHECK(lines[2]["kind"] == "transparent_forwarder");
  CHECK(lines[2]["shielded_backend"] == f.shielded.to_string());
  CHECK(lines[2]["single_address_backend"] == true);
}

TEST_CASE("scan artifacts are byte-identical across reruns") {
  TempDir tmp;
  write_file(tmp.file("targets.txt"), "192.0.2.1\n198.51.100.53\n");
  auto config = sim_config(data_file("topologies/open_resolver.json"));
  runner::run_scan(config, tmp.file("targets.txt"), tmp.file("a.jsonl"), false);
  runner::run_scan(config, tmp.file("targets.txt"), tmp.file("b.jsonl"), false);
  CHECK(read_file(tmp.file("a.jsonl")) == read_file(tmp.file("b.jsonl")));
}

TEST_CASE("ratelimit + histogram pipeline") {
  TempDir tmp;
  auto f = testtopo::limited(700, 60);
  write_file(tmp.file("topo.json"), netlab::topology_to_json(f.topo).dump());
  write_file(tmp.file("targets.txt"), f.resolver.to_string() + "\n");
  auto config = sim_config(tmp.file("topo.json"));
  auto done = runner::run_ratelimit(config, tmp.file("targets.txt"),
                                    tmp.file("rates.jsonl"), false);
  CHECK(done == 1);
  auto lines = read_jsonl_file(tmp.file("rates.jsonl"));
  REQUIRE(lines.size() == 2);
  double est = lines[1]["max_sustained_rate"].get<double>();
  CHECK(est > 600);
  CHECK(est < 800);
  CHECK(lines[1]["stopped_early"] == true);

  runner::run_analyze_histogram(config, tmp.file("rates.jsonl"), tmp.file("hist.csv"));
  auto csv = read_file(tmp.file("hist.csv"));
  CHECK(csv.find("# config_hash=") == 0);
  CHECK(csv.find("bin_start,count") != std::string::npos);
  CHECK(csv.find("\n700,1\n") != std::string::npos);
}

TEST_CASE("amp-support + support table pipeline") {
  TempDir tmp;
  auto topo = testtopo::base();
  Ipv4 full(198, 51, 100, 31), dropper(198, 51, 100, 32);
  netlab::RecursiveResolverSpec spec;
  spec.profile.any_payload_size = 2800;
  spec.profile.dnssec_payload_size = 2048;
  topo.nodes.push_back(netlab::NodeSpec{full, spec});
  netlab::NodeSpec d{dropper, netlab::RecursiveResolverSpec{}};
  d.supports_any = false;
  d.supports_dnssec = false;
  d.drop_dnssec_queries = true;
  topo.nodes.push_back(d);
  write_file(tmp.file("topo.json"), netlab::topology_to_json(topo).dump());
  write_file(tmp.file("targets.txt"), full.to_string() + "\n" + dropper.to_string() + "\n");

  auto config = sim_config(tmp.file("topo.json"));
  config.probe_timeout_ms = 300;
  runner::run_amp_support(config, tmp.file("targets.txt"), tmp.file("amp.jsonl"), false);
  auto lines = read_jsonl_file(tmp.file("amp.jsonl"));
  REQUIRE(lines.size() == 3);
  CHECK(lines[1]["any_support"] == "yes");
  CHECK(lines[1]["dnssec_support"] == "yes");
  CHECK(lines[1]["observed_amplification"].get<double>() > 10);
  CHECK(lines[2]["any_support"] == "n/a");
  CHECK(lines[2]["dnssec_support"] == "n/a");

  runner::run_analyze_amp_table(config, tmp.file("amp.jsonl"), tmp.file("table.csv"));
  auto csv = read_file(tmp.file("table.csv"));
  CHECK(csv.find("ANY,yes,1,50") != std::string::npos);
  CHECK(csv.find("ANY,n/a,1,50") != std::string::npos);
  CHECK(csv.find("DNSSEC,yes,1,50") != std::string::npos);
}

TEST_CASE("fingerprint pipeline with the shipped rule set") {
  TempDir tmp;
  write_file(tmp.file("banners.jsonl"),
             R"({"address": "10.0.0.1", "source": "http", "text": "CCR1036-8G-2S+"})" "\n"
             R"({"address": "10.0.0.2", "source": "snmp", "text": "RB750Gr3"})" "\n"
             R"({"address": "10.0.0.3", "source": "ssh", "text": ""})" "\n");
  auto config = cfg::default_config();
  config.rules_path = data_file("fingerprint_rules.csv");
  auto rows = runner::run_fingerprint(config, tmp.file("banners.jsonl"),
                                      tmp.file("summary.csv"));
  CHECK(rows == 2);
  auto csv = read_file(tmp.file("summary.csv"));
  CHECK(csv.find("MikroTik,router_core,1") != std::string::npos);
  CHECK(csv.find("MikroTik,router_cpe,1") != std::string::npos);
}

TEST_CASE("model pipeline renders the device comparison") {
  TempDir tmp;
  auto config = cfg::default_config();
  config.profiles_path = data_file("device_profiles.csv");
  auto rendered = runner::run_model(config, "RB750Gr3", tmp.file("model.csv"));
  CHECK(rendered.find("RB750Gr3") != std::string::npos);
  auto csv = read_file(tmp.file("model.csv"));
  CHECK(csv.find("RB750Gr3,64000,2232.14") != std::string::npos);

  CHECK_THROWS_AS(runner::run_model(config, "NoSuchDevice", tmp.file("x.csv")), Error);

  runner::run_model_curve(config, "CCR1036-8G-2S+", 1e3, 1e7, 50, tmp.file("curve.csv"));
  auto curve = read_file(tmp.file("curve.csv"));
  CHECK(curve.find("pps,victim_bps_tf,victim_bps_rf,ratio") != std::string::npos);
}

TEST_CASE("orchestrate pipeline writes the plan and summary") {
  TempDir tmp;
  std::string inventory =
      "# address,backend_service,country,pop_id,measured_limit_pps\n";
  std::vector<double> limits = {2170, 1744, 1608, 2900, 2893, 2600, 2500, 2800, 2700, 2900};
  for (std::size_t i = 0; i < limits.size(); ++i)
    inventory += "10.60.0." + std::to_string(i + 1) + ",8.8.8.8,C" + std::to_string(i) +
                 ",POP-" + std::to_string(i) + "," + std::to_string(limits[i]) + "\n";
  write_file(tmp.file("inventory.csv"), inventory);
  auto config = cfg::default_config();
  auto plan = runner::run_orchestrate(config, tmp.file("inventory.csv"), 10,
                                      threat::PlanPolicy::OnePerPop, 1744,
                                      tmp.file("plan.csv"));
  CHECK(plan.assignments.size() == 10);
  CHECK(plan.equivalent_direct_hosts == 14);
  auto csv = read_file(tmp.file("plan.csv"));
  CHECK(csv.find("equivalent_direct_hosts=14") != std::string::npos);
}

TEST_CASE("simulate pipeline writes trace and counters for broadcast") {
  TempDir tmp;
  auto config = cfg::default_config();
  auto stats = runner::run_simulate(config, data_file("topologies/broadcast.json"),
                                    tmp.file("trace.jsonl"), tmp.file("counters.csv"));
  CHECK(stats.events > 0);
  auto lines = read_jsonl_file(tmp.file("trace.jsonl"));
  CHECK(lines.size() == stats.events + 1);
  // the victim collects one response per responder host
  int victim_deliveries = 0;
  for (const auto& j : lines) {
    if (!j.contains("kind")) continue;
    if (j["kind"] == "deliver" && j["dst"] == "198.18.0.66") ++victim_deliveries;
  }
  CHECK(victim_deliveries == 3);
  auto counters = read_file(tmp.file("counters.csv"));
  CHECK(counters.find("192.168.5.1,forwarded,3") != std::string::npos);

  // reruns are byte-identical
  runner::run_simulate(config, data_file("topologies/broadcast.json"),
                       tmp.file("trace2.jsonl"), tmp.file("counters2.csv"));
  CHECK(read_file(tmp.file("trace.jsonl")) == read_file(tmp.file("trace2.jsonl")));
  CHECK(read_file(tmp.file("counters.csv")) == read_file(tmp.file("counters2.csv")));
}

TEST_CASE("recurrence pipeline aggregates epochs by kind") {
  TempDir tmp;
  // three epochs: subnet 10.0.0.0/24 always present, 10.1.0.0/24 once
  for (int e = 0; e < 3; ++e) {
    std::string lines;
    nlohmann::ordered_json j;
    j["target_ip"] = "10.0.0." + std::to_string(e + 1);
    j["kind"] = "transparent_forwarder";
    lines += j.dump() + "\n";
    if (e == 0) {
      nlohmann::ordered_json once;
      once["target_ip"] = "10.1.0.1";
      once["kind"] = "transparent_forwarder";
      lines += once.dump() + "\n";
    }
    nlohmann::ordered_json other;
    other["target_ip"] = "10.2.0.1";
    other["kind"] = "recursive_forwarder";
    lines += other.dump() + "\n";
    write_file(tmp.file("epoch" + std::to_string(e) + ".jsonl"), lines);
  }
  auto config = cfg::default_config();
  std::vector<std::string> files = {tmp.file("epoch0.jsonl"), tmp.file("epoch1.jsonl"),
                                    tmp.file("epoch2.jsonl")};
  runner::run_analyze_recurrence(config, files, "transparent_forwarder",
                                 tmp.file("rec.csv"));
  auto csv = read_file(tmp.file("rec.csv"));
  CHECK(csv.find("\n1,1\n") != std::string::npos);
  CHECK(csv.find("\n3,1\n") != std::string::npos);

  CHECK_THROWS_AS(runner::run_analyze_recurrence(config, files, "nonsense",
                                                 tmp.file("x.csv")),
                  Error);
}

TEST_CASE("recurrence aggregates shielded resolvers by backend address") {
  TempDir tmp;
  for (int e = 0; e < 2; ++e) {
    nlohmann::ordered_json j;
    j["target_ip"] = "10.0.0.1";  // the forwarder in front
    j["kind"] = "transparent_forwarder";
    j["shielded_backend"] = "172.16.9.53";
    write_file(tmp.file("epoch" + std::to_string(e) + ".jsonl"), j.dump() + "\n");
  }
  auto config = cfg::default_config();
  runner::run_analyze_recurrence(config,
                                 {tmp.file("epoch0.jsonl"), tmp.file("epoch1.jsonl")},
                                 "shielded", tmp.file("rec.csv"));
  auto csv = read_file(tmp.file("rec.csv"));
  CHECK(csv.find("\n1,0\n") != std::string::npos);
  CHECK(csv.find("\n2,1\n") != std::string::npos);  // the backend's /24, both epochs
}

TEST_CASE("rtt-delta pipeline computes per-country medians") {
  TempDir tmp;
  std::string lines;
  auto rec = [&](const std::string& kind, std::uint64_t rtt) {
    nlohmann::ordered_json j;
    j["target_ip"] = "10.0.0.1";
    j["rtt_ms"] = rtt;
    j["kind"] = kind;
    j["country"] = "BR";
    lines += j.dump() + "\n";
  };
  rec("transparent_forwarder", 10);
  rec("transparent_forwarder", 20);
  rec("recursive_forwarder", 50);
  rec("recursive_forwarder", 60);
  write_file(tmp.file("scan.jsonl"), lines);
  auto config = cfg::default_config();
  runner::run_analyze_rtt_delta(config, tmp.file("scan.jsonl"), tmp.file("delta.csv"));
  auto csv = read_file(tmp.file("delta.csv"));
  CHECK(csv.find("BR,-40") != std::string::npos);
}

TEST_SUITE_END();
