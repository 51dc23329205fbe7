#include <algorithm>
#include <map>
#include <set>

#include "coresim/model.hpp"

#include "doctest.h"

using namespace coresim;

TEST_CASE("catalog has the full transaction set in procedure order") {
  const auto& cat = catalog();
  REQUIRE(cat.size() == 17);

  std::map<Category, int> counts;
  for (const auto& m : cat) counts[m.category]++;
  CHECK(counts[Category::NrfRegister] == 6);
  CHECK(counts[Category::FiveGAka] == 3);
  CHECK(counts[Category::HnInternal] == 2);
  CHECK(counts[Category::SessionSetup] == 6);

  std::vector<std::string> ids;
  for (const auto& m : cat) ids.push_back(m.id);
  std::vector<std::string> expected = {
      "amf-register",       "smf-register",      "upf-register",
      "amf-update",         "smf-update",        "upf-update",
      "ue-authentication",  "mutual-authentication", "auth-confirmation",
      "auth-data",          "auth-subscription",
      "smf-discovery",      "upf-discovery",     "context-creation",
      "n1-n2-context",      "session-resource-setup", "context-update"};
  CHECK(ids == expected);
}

TEST_CASE("ue-authentication entry matches the published transaction") {
  const auto& m = catalog_entry("ue-authentication");
  CHECK(m.method == "POST");
  CHECK(m.path == "/nausf-auth/v1/ue-authentications");
  CHECK(m.src == VnfKind::Amf);
  CHECK(m.dst == VnfKind::Ausf);
  CHECK(m.category == Category::FiveGAka);

  const auto& cc = catalog_entry("context-creation");
  CHECK(cc.method == "POST");
  CHECK(cc.path.rfind("/nsmf-pdusession", 0) == 0);
  CHECK(cc.src == VnfKind::Amf);
  CHECK(cc.dst == VnfKind::Smf);
  CHECK(cc.category == Category::SessionSetup);
}

TEST_CASE("categorize returns catalog categories and rejects unknowns") {
  CHECK(categorize(catalog_entry("smf-discovery")) == Category::SessionSetup);
  CHECK(categorize(catalog_entry("auth-data")) == Category::HnInternal);
  CHECK(categorize(catalog_entry("upf-register")) == Category::NrfRegister);

  for (const auto& m : catalog()) {
    CHECK(categorize(m) == m.category);
    CHECK(categorize(m) == m.category);
  }

  CapifMessage bogus = catalog_entry("smf-discovery");
  bogus.src = VnfKind::Udr;
  CHECK_THROWS_WITH_AS(categorize(bogus), doctest::Contains("UnknownMessage"), Error);
}

TEST_CASE("catalog tuples are unique, including at service granularity") {
  std::set<std::tuple<std::string, std::string, VnfKind, VnfKind>> full, by_service;
  for (const auto& m : catalog()) {
    CHECK(m.path[0] == '/');
    CHECK(m.service[0] == '/');
    CHECK(full.insert({m.method, m.path, m.src, m.dst}).second);
    // Sidecars match on (method, leading segment, src, dst); that must be
    // unambiguous too.
    CHECK(by_service.insert({m.method, m.service, m.src, m.dst}).second);
  }
  for (const auto& m : catalog()) {
    CHECK(find_catalog_entry(m.method, m.service, m.src, m.dst) == &m);
  }
}

TEST_CASE("catalog closure: every endpoint is a known VNF kind") {
  for (const auto& m : catalog()) {
    CHECK_NOTHROW(vnf_kind_from_string(to_string(m.src)));
    CHECK_NOTHROW(vnf_kind_from_string(to_string(m.dst)));
  }
}

TEST_CASE("placements follow the four strategies") {
  const ZoneId edge{"nyc", ZoneKind::Lz};
  const ZoneId az{"use1", ZoneKind::Az};

  SUBCASE("monolithic puts all eight VNFs in the AZ") {
    Placement p = make_placement(Strategy::Monolithic, az, az);
    for (VnfKind k : kAllVnfKinds) CHECK(p.zone_of(k) == az);
  }
  SUBCASE("urllc-user moves only the data-session VNFs to the edge") {
    Placement p = make_placement(Strategy::UrllcUser, edge, az);
    CHECK(p.zone_of(VnfKind::Amf) == az);
    CHECK(p.zone_of(VnfKind::Smf) == edge);
    CHECK(p.zone_of(VnfKind::Upf) == edge);
    CHECK(p.zone_of(VnfKind::UeGnb) == edge);
    CHECK(p.zone_of(VnfKind::Nrf) == az);
  }
  SUBCASE("mcs-static adds the AMF to the edge") {
    Placement p = make_placement(Strategy::McsStatic, edge, az);
    CHECK(p.zone_of(VnfKind::Amf) == edge);
    CHECK(p.zone_of(VnfKind::Nrf) == az);
  }
  SUBCASE("mcs-mobile adds the NRF; home network stays put") {
    Placement p = make_placement(Strategy::McsMobile, edge, az);
    CHECK(p.zone_of(VnfKind::Nrf) == edge);
    CHECK(p.zone_of(VnfKind::Ausf) == az);
  }
}

TEST_CASE("placement rejects invalid zone kinds") {
  const ZoneId edge{"nyc", ZoneKind::Lz};
  const ZoneId az{"use1", ZoneKind::Az};
  CHECK_THROWS_AS(make_placement(Strategy::UrllcUser, az, az), ConfigError);
  CHECK_THROWS_AS(make_placement(Strategy::UrllcUser, edge, edge), ConfigError);
  CHECK_THROWS_AS(make_placement(Strategy::Monolithic, edge, az), ConfigError);
}

TEST_CASE("edge sets grow strictly along the strategy ladder") {
  const ZoneId edge{"sea", ZoneKind::Wz};
  const ZoneId az{"usw2", ZoneKind::Az};

  auto edge_set = [&](Strategy s) {
    Placement p = make_placement(s, s == Strategy::Monolithic ? az : edge, az);
    std::set<VnfKind> out;
    for (VnfKind k : kAllVnfKinds) {
      if (p.zone_of(k) == edge) out.insert(k);
    }
    return out;
  };

  auto mono = edge_set(Strategy::Monolithic);
  auto urllc = edge_set(Strategy::UrllcUser);
  auto mcs_static = edge_set(Strategy::McsStatic);
  auto mcs_mobile = edge_set(Strategy::McsMobile);

  CHECK(mono.empty());
  CHECK(std::includes(urllc.begin(), urllc.end(), mono.begin(), mono.end()));
  CHECK(urllc.size() > mono.size());
  CHECK(std::includes(mcs_static.begin(), mcs_static.end(), urllc.begin(), urllc.end()));
  CHECK(mcs_static.size() > urllc.size());
  CHECK(std::includes(mcs_mobile.begin(), mcs_mobile.end(), mcs_static.begin(), mcs_static.end()));
  CHECK(mcs_mobile.size() > mcs_static.size());
}

TEST_CASE("home network VNFs stay in the AZ under every strategy") {
  const ZoneId edge{"ldn", ZoneKind::Wz};
  const ZoneId az{"euw2", ZoneKind::Az};
  for (Strategy s : kAllStrategies) {
    Placement p = make_placement(s, s == Strategy::Monolithic ? az : edge, az);
    CHECK(p.zone_of(VnfKind::Ausf) == az);
    CHECK(p.zone_of(VnfKind::Udm) == az);
    CHECK(p.zone_of(VnfKind::Udr) == az);
  }
}

TEST_CASE("catalog exports as a JSON array of six-field message objects") {
  nlohmann::json j = catalog_to_json();
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 17);
  for (const auto& e : j) {
    CHECK(e.size() == 6);
    for (const char* field : {"id", "method", "path", "src", "dst", "category"}) {
      CHECK(e.contains(field));
    }
  }
  CHECK(j[6]["id"] == "ue-authentication");
  CHECK(j[6]["path"] == "/nausf-auth/v1/ue-authentications");
}

TEST_CASE("zone ids parse and print round trip") {
  ZoneId z = ZoneId::parse("nyc-lz");
  CHECK(z.city == "nyc");
  CHECK(z.kind == ZoneKind::Lz);
  CHECK(z.str() == "nyc-lz");
  CHECK_THROWS_AS(ZoneId::parse("nyc"), ConfigError);
  CHECK_THROWS_AS(ZoneId::parse("nyc-xx"), ConfigError);
}

TEST_CASE("strategy names round trip and unknown names name the valid set") {
  for (Strategy s : kAllStrategies) CHECK(strategy_from_string(to_string(s)) == s);
  CHECK_THROWS_WITH_AS(strategy_from_string("warp-speed"), doctest::Contains("mcs-mobile"),
                       ConfigError);
}
