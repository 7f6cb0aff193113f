#include "fingerprint.hpp"

#include <sstream>

#include "doctest.h"
#include "errors.hpp"

using namespace odnslab;
using namespace odnslab::fp;

namespace {

std::vector<FingerprintRule> shipped_rules() {
  return load_rules_csv(std::string(ODNSLAB_DATA_DIR) + "/fingerprint_rules.csv");
}

BannerRecord banner(Ipv4 addr, BannerSource source, std::string text) {
  return BannerRecord{addr, source, std::move(text)};
}

}  // namespace

TEST_SUITE_BEGIN("fingerprint");

TEST_CASE("core and CPE model strings map to the expected classes") {
  auto rules = shipped_rules();
  auto core = fingerprint(
      banner(Ipv4(1, 1, 1, 1), BannerSource::Http,
             "<title>RouterOS router configuration page</title> CCR1036-8G-2S+"),
      rules);
  REQUIRE(core.has_value());
  CHECK(core->vendor == "MikroTik");
  CHECK(core->device_type == DeviceType::RouterCore);

  auto cpe = fingerprint(
      banner(Ipv4(1, 1, 1, 2), BannerSource::Snmp, "RouterOS RB750Gr3"), rules);
  REQUIRE(cpe.has_value());
  CHECK(cpe->vendor == "MikroTik");
  CHECK(cpe->device_type == DeviceType::RouterCPE);

  auto nvr = fingerprint(
      banner(Ipv4(1, 1, 1, 3), BannerSource::Http, "DVRDVS-Webs"), rules);
  REQUIRE(nvr.has_value());
  CHECK(nvr->vendor == "HikVision");
  CHECK(nvr->device_type == DeviceType::Nvr);
}

TEST_CASE("empty banners and unknown devices match nothing") {
  auto rules = shipped_rules();
  CHECK(!fingerprint(banner(Ipv4(1, 1, 1, 1), BannerSource::Ssh, ""), rules));
  CHECK(!fingerprint(banner(Ipv4(1, 1, 1, 1), BannerSource::Ssh,
                            "OpenSSH_8.9p1 Ubuntu"), rules));
}

TEST_CASE("priority beats rule order, order breaks priority ties") {
  std::istringstream csv(
      "10,RouterOS,MikroTik,other\n"
      "30,CCR[0-9]{4},MikroTik,router_core\n"
      "10,Router,Generic,router_cpe\n");
  auto rules = parse_rules_csv(csv, "inline");
  auto m = fingerprint(banner(Ipv4(1, 1, 1, 1), BannerSource::Http,
                              "RouterOS CCR1036"), rules);
  REQUIRE(m.has_value());
  CHECK(m->device_type == DeviceType::RouterCore);
  // both priority-10 rules match; the earlier one wins
  auto tie = fingerprint(banner(Ipv4(1, 1, 1, 1), BannerSource::Http, "RouterOS"), rules);
  REQUIRE(tie.has_value());
  CHECK(tie->vendor == "MikroTik");
  CHECK(tie->device_type == DeviceType::Other);
}

TEST_CASE("invalid rule patterns fail at load time") {
  std::istringstream bad("10,[unterminated,Vendor,other\n");
  CHECK_THROWS_AS(parse_rules_csv(bad, "inline"), Error);
  std::istringstream short_line("10,pattern,vendor\n");
  CHECK_THROWS_AS(parse_rules_csv(short_line, "inline"), Error);
  std::istringstream bad_type("10,pattern,vendor,mainframe\n");
  CHECK_THROWS_AS(parse_rules_csv(bad_type, "inline"), Error);
}

TEST_CASE("summary counts a synthetic corpus with known composition") {
  auto rules = shipped_rules();
  std::vector<BannerRecord> corpus = {
      banner(Ipv4(10, 0, 0, 1), BannerSource::Http, "CCR2116-12G-4S+"),
      banner(Ipv4(10, 0, 0, 2), BannerSource::Snmp, "CCR1036-8G-2S+"),
      banner(Ipv4(10, 0, 0, 3), BannerSource::Http, "CCR1009 panel"),
      banner(Ipv4(10, 0, 0, 4), BannerSource::Http, "TP-Link Archer C7"),
  };
  auto summary = fingerprint_summary(corpus, rules);
  REQUIRE(summary.size() == 2);
  CHECK(summary[0].vendor == "MikroTik");
  CHECK(summary[0].device_type == DeviceType::RouterCore);
  CHECK(summary[0].devices == 3);
  CHECK(summary[1].vendor == "TP-Link");
  CHECK(summary[1].devices == 1);

  CHECK(fingerprint_summary({}, rules).empty());
}

TEST_CASE("devices exposing several banners are counted once") {
  auto rules = shipped_rules();
  // same address seen over http and snmp; the model string is the
  // higher-priority hit and should win the dedup
  std::vector<BannerRecord> corpus = {
      banner(Ipv4(10, 0, 0, 9), BannerSource::Http, "MikroTik login"),
      banner(Ipv4(10, 0, 0, 9), BannerSource::Snmp, "RB750Gr3"),
  };
  auto summary = fingerprint_summary(corpus, rules);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].devices == 1);
  CHECK(summary[0].device_type == DeviceType::RouterCPE);
}

TEST_CASE("summary is deterministic") {
  auto rules = shipped_rules();
  std::vector<BannerRecord> corpus;
  for (int i = 0; i < 50; ++i)
    corpus.push_back(banner(Ipv4(10, 0, 1, std::uint8_t(i)), BannerSource::Http,
                            i % 2 ? "RB952Ui" : "FortiGate-100D"));
  auto a = fingerprint_summary(corpus, rules);
  auto b = fingerprint_summary(corpus, rules);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].vendor == b[i].vendor);
    CHECK(a[i].devices == b[i].devices);
  }
}

TEST_SUITE_END();
