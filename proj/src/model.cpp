#include "coresim/model.hpp"

#include <algorithm>
#include <mutex>
#include <tuple>

namespace coresim {

std::string to_string(VnfKind k) {
  switch (k) {
    case VnfKind::Nrf: return "NRF";
    case VnfKind::Amf: return "AMF";
    case VnfKind::Smf: return "SMF";
    case VnfKind::Upf: return "UPF";
    case VnfKind::Ausf: return "AUSF";
    case VnfKind::Udm: return "UDM";
    case VnfKind::Udr: return "UDR";
    case VnfKind::UeGnb: return "UE_GNB";
  }
  throw Error("InternalError", "bad VnfKind");
}

VnfKind vnf_kind_from_string(const std::string& s) {
  for (VnfKind k : kAllVnfKinds) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("UnknownVnfKind", "no such VNF kind: " + s);
}

std::string to_string(ZoneKind k) {
  switch (k) {
    case ZoneKind::Az: return "az";
    case ZoneKind::Lz: return "lz";
    case ZoneKind::Wz: return "wz";
  }
  throw Error("InternalError", "bad ZoneKind");
}

ZoneKind zone_kind_from_string(const std::string& s) {
  if (s == "az") return ZoneKind::Az;
  if (s == "lz") return ZoneKind::Lz;
  if (s == "wz") return ZoneKind::Wz;
  throw ConfigError("UnknownZoneKind", "no such zone kind: " + s);
}

ZoneId ZoneId::parse(const std::string& s) {
  auto pos = s.rfind('-');
  if (pos == std::string::npos || pos == 0 || pos + 1 >= s.size()) {
    throw ConfigError("BadZoneId", "zone id must look like <city>-<az|lz|wz>: " + s);
  }
  return ZoneId{s.substr(0, pos), zone_kind_from_string(s.substr(pos + 1))};
}

std::string to_string(Category c) {
  switch (c) {
    case Category::FiveGAka: return "5g_aka";
    case Category::SessionSetup: return "session_setup";
    case Category::NrfRegister: return "nrf_register";
    case Category::HnInternal: return "hn_internal";
  }
  throw Error("InternalError", "bad Category");
}

Category category_from_string(const std::string& s) {
  for (Category c : kAllCategories) {
    if (to_string(c) == s) return c;
  }
  throw ConfigError("UnknownCategory", "no such category: " + s);
}

namespace {

std::string service_of(const std::string& path) {
  auto end = path.find('/', 1);
  return end == std::string::npos ? path : path.substr(0, end);
}

CapifMessage make_msg(std::string id, std::string method, std::string path, VnfKind src,
                      VnfKind dst, Category cat) {
  CapifMessage m;
  m.id = std::move(id);
  m.method = std::move(method);
  m.path = std::move(path);
  m.src = src;
  m.dst = dst;
  m.category = cat;
  m.service = service_of(m.path);
  return m;
}

std::vector<CapifMessage> build_catalog() {
  using K = VnfKind;
  using C = Category;
  std::vector<CapifMessage> v;
  // NRF registration block: each serving VNF registers, then receives one
  // status notification from the NRF.
  v.push_back(make_msg("amf-register", "PUT", "/nnrf-nfm/v1/nf-instances/{instanceId}", K::Amf,
                       K::Nrf, C::NrfRegister));
  v.push_back(make_msg("smf-register", "PUT", "/nnrf-nfm/v1/nf-instances/{instanceId}", K::Smf,
                       K::Nrf, C::NrfRegister));
  v.push_back(make_msg("upf-register", "PUT", "/nnrf-nfm/v1/nf-instances/{instanceId}", K::Upf,
                       K::Nrf, C::NrfRegister));
  v.push_back(make_msg("amf-update", "POST", "/nnrf-nfm/v1/notifications", K::Nrf, K::Amf,
                       C::NrfRegister));
  v.push_back(make_msg("smf-update", "POST", "/nnrf-nfm/v1/notifications", K::Nrf, K::Smf,
                       C::NrfRegister));
  v.push_back(make_msg("upf-update", "POST", "/nnrf-nfm/v1/notifications", K::Nrf, K::Upf,
                       C::NrfRegister));
  // 5G-AKA between the serving network and the AUSF plus the UE round trip.
  v.push_back(make_msg("ue-authentication", "POST", "/nausf-auth/v1/ue-authentications", K::Amf,
                       K::Ausf, C::FiveGAka));
  v.push_back(make_msg("mutual-authentication", "POST",
                       "/nran-auth/v1/ue-contexts/{ueId}/authenticate", K::Amf, K::UeGnb,
                       C::FiveGAka));
  v.push_back(make_msg("auth-confirmation", "PUT",
                       "/nausf-auth/v1/ue-authentications/{authCtxId}/5g-aka-confirmation",
                       K::Amf, K::Ausf, C::FiveGAka));
  // Home-network chain behind the AUSF; excluded from latency totals.
  v.push_back(make_msg("auth-data", "POST",
                       "/nudm-ueau/v1/{ueId}/security-information/generate-auth-data", K::Ausf,
                       K::Udm, C::HnInternal));
  v.push_back(make_msg("auth-subscription", "GET",
                       "/nudr-dr/v1/subscription-data/{ueId}/authentication-subscription",
                       K::Udm, K::Udr, C::HnInternal));
  // PDU session setup.
  v.push_back(make_msg("smf-discovery", "GET", "/nnrf-disc/v1/nf-instances?target-nf-type=SMF",
                       K::Amf, K::Nrf, C::SessionSetup));
  v.push_back(make_msg("upf-discovery", "GET", "/nnrf-disc/v1/nf-instances?target-nf-type=UPF",
                       K::Smf, K::Nrf, C::SessionSetup));
  v.push_back(make_msg("context-creation", "POST", "/nsmf-pdusession/v1/sm-contexts", K::Amf,
                       K::Smf, C::SessionSetup));
  v.push_back(make_msg("n1-n2-context", "POST", "/namf-comm/v1/ue-contexts/{ueId}/n1-n2-messages",
                       K::Smf, K::Amf, C::SessionSetup));
  v.push_back(make_msg("session-resource-setup", "POST",
                       "/nran-sess/v1/ue-contexts/{ueId}/session-resource", K::Amf, K::UeGnb,
                       C::SessionSetup));
  v.push_back(make_msg("context-update", "PATCH", "/nsmf-pdusession/v1/sm-contexts/{smContextRef}",
                       K::Amf, K::Smf, C::SessionSetup));
  return v;
}

}  // namespace

const std::vector<CapifMessage>& catalog() {
  static const std::vector<CapifMessage> kCatalog = build_catalog();
  return kCatalog;
}

const CapifMessage& catalog_entry(const std::string& id) {
  for (const auto& m : catalog()) {
    if (m.id == id) return m;
  }
  throw Error("UnknownMessage", "no catalog entry with id " + id);
}

const CapifMessage* find_catalog_entry(const std::string& method, const std::string& service,
                                       VnfKind src, VnfKind dst) {
  for (const auto& m : catalog()) {
    if (m.method == method && m.service == service && m.src == src && m.dst == dst) return &m;
  }
  return nullptr;
}

Category categorize(const CapifMessage& msg) {
  for (const auto& m : catalog()) {
    if (m.method == msg.method && m.path == msg.path && m.src == msg.src && m.dst == msg.dst) {
      return m.category;
    }
  }
  throw Error("UnknownMessage", "message not in catalog: " + msg.method + " " + msg.path + " " +
                                    to_string(msg.src) + "->" + to_string(msg.dst));
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Monolithic: return "monolithic";
    case Strategy::UrllcUser: return "urllc-user";
    case Strategy::McsStatic: return "mcs-static";
    case Strategy::McsMobile: return "mcs-mobile";
  }
  throw Error("InternalError", "bad Strategy");
}

Strategy strategy_from_string(const std::string& s) {
  for (Strategy k : kAllStrategies) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("UnknownStrategy",
                    "no such strategy: " + s +
                        " (valid: monolithic, urllc-user, mcs-static, mcs-mobile)");
}

const ZoneId& Placement::zone_of(VnfKind k) const {
  auto it = zones.find(k);
  if (it == zones.end()) throw Error("InternalError", "placement missing " + to_string(k));
  return it->second;
}

std::vector<VnfKind> Placement::edge_vnfs(const ZoneId& edge) const {
  std::vector<VnfKind> out;
  for (const auto& [k, z] : zones) {
    if (z == edge) out.push_back(k);
  }
  return out;
}

Placement make_placement(Strategy strategy, const ZoneId& edge, const ZoneId& az) {
  if (az.kind != ZoneKind::Az) {
    throw ConfigError("InvalidZoneKind", az.str() + " is not an availability zone");
  }
  if (strategy == Strategy::Monolithic) {
    if (!(edge == az)) {
      throw ConfigError("InvalidZoneKind",
                        "monolithic places every VNF in the AZ; pass edge == az");
    }
  } else if (edge.kind == ZoneKind::Az) {
    throw ConfigError("InvalidZoneKind", edge.str() + " is not an edge zone (LZ or WZ)");
  }

  Placement p;
  for (VnfKind k : kAllVnfKinds) p.zones[k] = az;
  if (strategy == Strategy::Monolithic) return p;

  // URLLC keeps only the data-session VNFs (and the UE driver) at the edge;
  // static MCS adds the AMF; mobile MCS adds the NRF.
  p.zones[VnfKind::Upf] = edge;
  p.zones[VnfKind::Smf] = edge;
  p.zones[VnfKind::UeGnb] = edge;
  if (strategy == Strategy::McsStatic || strategy == Strategy::McsMobile) {
    p.zones[VnfKind::Amf] = edge;
  }
  if (strategy == Strategy::McsMobile) {
    p.zones[VnfKind::Nrf] = edge;
  }
  return p;
}

nlohmann::json catalog_to_json() {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : catalog()) {
    arr.push_back({{"id", m.id},
                   {"method", m.method},
                   {"path", m.path},
                   {"src", to_string(m.src)},
                   {"dst", to_string(m.dst)},
                   {"category", to_string(m.category)}});
  }
  return arr;
}

}  // namespace coresim
