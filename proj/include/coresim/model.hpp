#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coresim/error.hpp"

#include "json.hpp"

namespace coresim {

enum class VnfKind { Nrf, Amf, Smf, Upf, Ausf, Udm, Udr, UeGnb };

constexpr std::array<VnfKind, 8> kAllVnfKinds = {
    VnfKind::Nrf,  VnfKind::Amf, VnfKind::Smf, VnfKind::Upf,
    VnfKind::Ausf, VnfKind::Udm, VnfKind::Udr, VnfKind::UeGnb,
};

std::string to_string(VnfKind k);
VnfKind vnf_kind_from_string(const std::string& s);

enum class ZoneKind { Az, Lz, Wz };

std::string to_string(ZoneKind k);
ZoneKind zone_kind_from_string(const std::string& s);

// A zone is addressed as "<city>-<kind>", e.g. "nyc-lz" or "use1-az".
struct ZoneId {
  std::string city;
  ZoneKind kind = ZoneKind::Az;

  std::string str() const { return city + "-" + to_string(kind); }
  auto operator<=>(const ZoneId&) const = default;

  static ZoneId parse(const std::string& s);
};

enum class Category { FiveGAka, SessionSetup, NrfRegister, HnInternal };

constexpr std::array<Category, 4> kAllCategories = {
    Category::NrfRegister, Category::FiveGAka, Category::HnInternal, Category::SessionSetup};

std::string to_string(Category c);
Category category_from_string(const std::string& s);

// One catalogued control-plane HTTP transaction template. `path` is the full
// resource template; `service` is its leading segment, which is what sidecars
// see in span operation names and use for catalog matching.
struct CapifMessage {
  std::string id;
  std::string method;
  std::string path;
  VnfKind src;
  VnfKind dst;
  Category category;
  std::string service;

  std::string operation() const { return method + " " + service; }
};

// The complete control-plane catalog, in procedure order: the NRF
// registration block, then 5G-AKA, the home-network stub chain, and PDU
// session setup. Immutable after first construction.
const std::vector<CapifMessage>& catalog();

const CapifMessage& catalog_entry(const std::string& id);

// Looks up a catalog entry by what a sidecar can observe on the wire:
// method, leading service segment, and the two endpoint VNFs.
const CapifMessage* find_catalog_entry(const std::string& method, const std::string& service,
                                       VnfKind src, VnfKind dst);

// Returns the catalog category of `msg`; UnknownMessage if the tuple
// (method, path, src, dst) is not catalogued.
Category categorize(const CapifMessage& msg);

enum class Strategy { Monolithic, UrllcUser, McsStatic, McsMobile };

constexpr std::array<Strategy, 4> kAllStrategies = {
    Strategy::Monolithic, Strategy::UrllcUser, Strategy::McsStatic, Strategy::McsMobile};

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

// Total assignment of every VNF kind to a zone.
struct Placement {
  std::map<VnfKind, ZoneId> zones;

  const ZoneId& zone_of(VnfKind k) const;
  std::vector<VnfKind> edge_vnfs(const ZoneId& edge) const;
};

// Builds the placement for one of the four strategies. The edge zone must be
// an LZ or WZ (or equal to `az` for Monolithic); `az` must be an AZ.
Placement make_placement(Strategy strategy, const ZoneId& edge, const ZoneId& az);

nlohmann::json catalog_to_json();

}  // namespace coresim
