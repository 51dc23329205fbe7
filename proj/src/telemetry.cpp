#include "coresim/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <sstream>

namespace coresim::telemetry {

namespace {

std::string u64_hex(uint64_t v, int width) {
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(width) << v;
  return os.str();
}

uint64_t u64_from_hex(const std::string& s) {
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error("BadId", "not a hex id: " + s);
  }
  return v;
}

}  // namespace

std::string TraceId::hex() const { return u64_hex(hi, 16) + u64_hex(lo, 16); }

TraceId TraceId::from_hex(const std::string& s) {
  if (s.size() != 32) throw Error("BadId", "trace id must be 32 hex chars: " + s);
  return TraceId{u64_from_hex(s.substr(0, 16)), u64_from_hex(s.substr(16))};
}

std::string span_id_hex(SpanId id) { return u64_hex(id, 16); }

SpanId span_id_from_hex(const std::string& s) {
  if (s.size() != 16) throw Error("BadId", "span id must be 16 hex chars: " + s);
  return u64_from_hex(s);
}

std::string to_string(Side s) { return s == Side::Sender ? "sender" : "receiver"; }

Side side_from_string(const std::string& s) {
  if (s == "sender") return Side::Sender;
  if (s == "receiver") return Side::Receiver;
  throw Error("BadSide", "no such span side: " + s);
}

nlohmann::json Span::to_json() const {
  nlohmann::json j;
  j["traceId"] = trace_id.hex();
  j["spanId"] = span_id_hex(span_id);
  j["parentSpanId"] = parent_span_id ? nlohmann::json(span_id_hex(*parent_span_id))
                                     : nlohmann::json(nullptr);
  j["operation"] = operation;
  j["srcVnf"] = to_string(src_vnf);
  j["dstVnf"] = to_string(dst_vnf);
  j["srcZone"] = src_zone.str();
  j["dstZone"] = dst_zone.str();
  j["category"] = to_string(category);
  j["startUs"] = start_us;
  j["durationUs"] = duration_us;
  j["side"] = to_string(side);
  if (error) j["error"] = *error;
  return j;
}

Span Span::from_json(const nlohmann::json& j) {
  Span s;
  try {
    s.trace_id = TraceId::from_hex(j.at("traceId").get<std::string>());
    s.span_id = span_id_from_hex(j.at("spanId").get<std::string>());
    if (!j.at("parentSpanId").is_null()) {
      s.parent_span_id = span_id_from_hex(j.at("parentSpanId").get<std::string>());
    }
    s.operation = j.at("operation").get<std::string>();
    s.src_vnf = vnf_kind_from_string(j.at("srcVnf").get<std::string>());
    s.dst_vnf = vnf_kind_from_string(j.at("dstVnf").get<std::string>());
    s.src_zone = ZoneId::parse(j.at("srcZone").get<std::string>());
    s.dst_zone = ZoneId::parse(j.at("dstZone").get<std::string>());
    s.category = category_from_string(j.at("category").get<std::string>());
    s.start_us = j.at("startUs").get<int64_t>();
    s.duration_us = j.at("durationUs").get<int64_t>();
    s.side = side_from_string(j.at("side").get<std::string>());
    if (j.contains("error")) s.error = j.at("error").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("SchemaViolation", std::string("bad span record: ") + e.what());
  }
  return s;
}

std::string schema_violation(const Span& s) {
  if (s.trace_id.is_zero()) return "traceId must be nonzero";
  if (s.span_id == 0) return "spanId must be nonzero";
  if (s.parent_span_id && *s.parent_span_id == s.span_id) {
    return "parentSpanId must differ from spanId";
  }
  if (s.duration_us < 0) return "durationUs must be >= 0";
  if (s.operation.empty()) return "operation must be non-empty";
  return "";
}

SpanStore::SpanStore(std::string clock) : clock_(std::move(clock)) {}

SpanStore SpanStore::open(const std::string& path, const std::string& clock) {
  SpanStore st(clock);
  st.path_ = path;
  st.out_.open(path, std::ios::out | std::ios::trunc);
  if (!st.out_) throw Error("StoreUnavailable", "cannot open store file " + path);
  nlohmann::json meta = {{"_meta", {{"clock", clock}, {"format", "spans.jsonl/1"}}}};
  st.out_ << meta.dump() << "\n";
  st.out_.flush();
  if (!st.out_) throw Error("StorageFull", "cannot write store header to " + path);
  return st;
}

SpanStore SpanStore::open_existing(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("StoreNotFound", "cannot open store file " + path);
  SpanStore st("virtual");
  st.path_ = path;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("StoreUnavailable", path + ": corrupt line: " + e.what());
    }
    if (first && j.contains("_meta")) {
      st.clock_ = j["_meta"].value("clock", "virtual");
      first = false;
      continue;
    }
    first = false;
    st.append(Span::from_json(j));
  }
  in.close();
  // Reopen for appends without clobbering what we just read.
  st.out_.open(path, std::ios::out | std::ios::app);
  return st;
}

bool SpanStore::append(const Span& s) {
  auto key = std::make_tuple(s.trace_id, s.span_id, s.side);
  if (!seen_.insert(key).second) {
    ++deduplicated_;
    return false;
  }
  spans_.push_back(s);
  ++stored_;
  if (out_.is_open()) {
    out_ << s.to_json().dump() << "\n";
    out_.flush();
    if (!out_) throw Error("StorageFull", "write failed on " + path_);
  }
  return true;
}

void Collector::store_spans(const std::vector<Span>& spans) {
  std::lock_guard<std::mutex> lk(mutex_);
  received_ += spans.size();
  for (const Span& s : spans) store_.append(s);
}

size_t Agent::ingest(const std::vector<Span>& batch) {
  for (const Span& s : batch) {
    const std::string violation = schema_violation(s);
    if (!violation.empty()) {
      {
        std::lock_guard<std::mutex> lk(mutex_);
        rejected_ += batch.size();
      }
      throw Error("SchemaViolation", violation);
    }
  }
  {
    std::lock_guard<std::mutex> lk(mutex_);
    forwarded_ += batch.size();
  }
  forward_(batch);
  return batch.size();
}

std::vector<const Span*> Trace::roots() const {
  std::vector<const Span*> out;
  for (const auto& s : spans) {
    if (!s.parent_span_id) out.push_back(&s);
  }
  return out;
}

std::vector<const Span*> Trace::orphans() const {
  std::set<SpanId> ids;
  for (const auto& s : spans) ids.insert(s.span_id);
  std::vector<const Span*> out;
  for (const auto& s : spans) {
    if (s.parent_span_id && !ids.count(*s.parent_span_id)) out.push_back(&s);
  }
  return out;
}

std::vector<const Span*> Trace::children_of(SpanId id) const {
  std::vector<const Span*> out;
  for (const auto& s : spans) {
    if (s.parent_span_id && *s.parent_span_id == id) out.push_back(&s);
  }
  return out;
}

bool Trace::is_tree() const {
  if (roots().size() != 1 || !orphans().empty()) return false;
  // Acyclic and connected: every span reaches the root by parent links.
  std::map<SpanId, const Span*> by_id;
  for (const auto& s : spans) {
    if (by_id.count(s.span_id)) return false;  // duplicate ids
    by_id[s.span_id] = &s;
  }
  for (const auto& s : spans) {
    std::set<SpanId> walked;
    const Span* cur = &s;
    while (cur->parent_span_id) {
      if (!walked.insert(cur->span_id).second) return false;
      auto it = by_id.find(*cur->parent_span_id);
      if (it == by_id.end()) return false;
      cur = it->second;
    }
  }
  return true;
}

std::vector<Trace> assemble_traces(const std::vector<Span>& spans) {
  std::map<TraceId, Trace> grouped;
  for (const Span& s : spans) {
    Trace& t = grouped[s.trace_id];
    t.trace_id = s.trace_id;
    t.spans.push_back(s);
  }
  std::vector<Trace> out;
  for (auto& [id, t] : grouped) {
    std::sort(t.spans.begin(), t.spans.end(), [](const Span& a, const Span& b) {
      return std::tie(a.start_us, a.span_id) < std::tie(b.start_us, b.span_id);
    });
    out.push_back(std::move(t));
  }
  return out;
}

bool QueryFilter::matches(const Span& s) const {
  if (service && s.service() != *service) return false;
  if (category && s.category != *category) return false;
  if (start_us && s.start_us < *start_us) return false;
  if (end_us && s.start_us > *end_us) return false;
  if (trace_id && s.trace_id != *trace_id) return false;
  return true;
}

std::vector<Trace> query(const std::vector<Span>& spans, const QueryFilter& filter) {
  std::vector<Trace> all = assemble_traces(spans);
  std::vector<Trace> out;
  for (Trace& t : all) {
    if (filter.trace_id && t.trace_id != *filter.trace_id) continue;
    Trace pruned;
    pruned.trace_id = t.trace_id;
    for (const Span& s : t.spans) {
      if (filter.matches(s)) pruned.spans.push_back(s);
    }
    if (!pruned.spans.empty()) out.push_back(std::move(pruned));
  }
  return out;
}

nlohmann::json traces_to_json(const std::vector<Trace>& traces) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Trace& t : traces) {
    nlohmann::json spans = nlohmann::json::array();
    for (const Span& s : t.spans) spans.push_back(s.to_json());
    arr.push_back({{"traceId", t.trace_id.hex()}, {"spans", spans}});
  }
  return nlohmann::json{{"traces", arr}};
}

std::vector<Trace> traces_from_json(const nlohmann::json& j) {
  std::vector<Span> spans;
  try {
    for (const auto& t : j.at("traces")) {
      for (const auto& s : t.at("spans")) spans.push_back(Span::from_json(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("SchemaViolation", std::string("bad trace document: ") + e.what());
  }
  return assemble_traces(spans);
}

void export_traces(const std::vector<Trace>& traces, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoFailure", "cannot open " + path);
  out << traces_to_json(traces).dump(2) << "\n";
  if (!out) throw Error("IoFailure", "write failed on " + path);
}

std::vector<Trace> import_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoFailure", "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("SchemaViolation", path + ": " + e.what());
  }
  return traces_from_json(j);
}

namespace {

void render_span(const Trace& t, const Span& s, int depth, std::ostringstream& os) {
  os << std::string(static_cast<size_t>(depth) * 2, ' ') << s.operation << " ["
     << to_string(s.src_vnf) << "->" << to_string(s.dst_vnf) << ", " << to_string(s.side)
     << "] start=" << s.start_us << "us dur=" << s.duration_us << "us";
  if (s.error) os << " error=" << *s.error;
  os << "\n";
  for (const Span* c : t.children_of(s.span_id)) render_span(t, *c, depth + 1, os);
}

}  // namespace

std::string render_trace(const Trace& t) {
  std::ostringstream os;
  os << "trace " << t.trace_id.hex() << " (" << t.spans.size() << " spans)\n";
  for (const Span* r : t.roots()) render_span(t, *r, 1, os);
  for (const Span* o : t.orphans()) {
    os << "  [orphan] " << o->operation << " parent=" << span_id_hex(*o->parent_span_id) << "\n";
  }
  return os.str();
}

}  // namespace coresim::telemetry
