#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coresim/error.hpp"
#include "coresim/model.hpp"

#include "json.hpp"

namespace coresim::telemetry {

struct TraceId {
  uint64_t hi = 0;
  uint64_t lo = 0;

  bool is_zero() const { return hi == 0 && lo == 0; }
  std::string hex() const;
  static TraceId from_hex(const std::string& s);
  auto operator<=>(const TraceId&) const = default;
};

using SpanId = uint64_t;

std::string span_id_hex(SpanId id);
SpanId span_id_from_hex(const std::string& s);

enum class Side { Sender, Receiver };

std::string to_string(Side s);
Side side_from_string(const std::string& s);

// One sidecar's timing record for one proxied transaction. The wire schema
// is exactly these fields as NDJSON; `error` is omitted when empty.
struct Span {
  TraceId trace_id;
  SpanId span_id = 0;
  std::optional<SpanId> parent_span_id;
  std::string operation;  // "METHOD /service"
  VnfKind src_vnf = VnfKind::Amf;
  VnfKind dst_vnf = VnfKind::Amf;
  ZoneId src_zone;
  ZoneId dst_zone;
  Category category = Category::FiveGAka;
  int64_t start_us = 0;
  int64_t duration_us = 0;
  Side side = Side::Sender;
  std::optional<std::string> error;

  int64_t end_us() const { return start_us + duration_us; }
  // The VNF this record was observed at (its sidecar reported it).
  VnfKind service() const { return side == Side::Sender ? src_vnf : dst_vnf; }

  nlohmann::json to_json() const;
  static Span from_json(const nlohmann::json& j);
};

// Returns an empty string for a valid span, otherwise the violated rule.
std::string schema_violation(const Span& s);

struct PipelineCounters {
  uint64_t emitted = 0;       // spans handed to sidecar emitters
  uint64_t dropped = 0;       // buffer overflow at a sidecar
  uint64_t rejected = 0;      // schema violations at the agent
  uint64_t stored = 0;        // accepted into the store
  uint64_t deduplicated = 0;  // duplicate (traceId, spanId, side) arrivals
};

// Append-only NDJSON span store with an in-memory index rebuilt on open.
// First line is a meta record naming the clock that produced the timestamps.
class SpanStore {
 public:
  // In-memory store (no file backing).
  explicit SpanStore(std::string clock = "virtual");

  static SpanStore open(const std::string& path, const std::string& clock);
  static SpanStore open_existing(const std::string& path);

  // Appends unless (traceId, spanId, side) was already stored; keeps the first.
  // Returns true when the span was newly stored.
  bool append(const Span& s);

  const std::vector<Span>& spans() const { return spans_; }
  const std::string& clock() const { return clock_; }
  const std::string& path() const { return path_; }
  uint64_t stored() const { return stored_; }
  uint64_t deduplicated() const { return deduplicated_; }

 private:
  std::string path_;
  std::string clock_;
  std::vector<Span> spans_;
  std::set<std::tuple<TraceId, SpanId, Side>> seen_;
  std::ofstream out_;
  uint64_t stored_ = 0;
  uint64_t deduplicated_ = 0;
};

// Cluster-level consolidation point: validates nothing further, serializes
// appends into the store.
class Collector {
 public:
  explicit Collector(SpanStore& store) : store_(store) {}

  void store_spans(const std::vector<Span>& spans);

  SpanStore& store() { return store_; }
  uint64_t received() const { return received_; }

 private:
  SpanStore& store_;
  std::mutex mutex_;
  uint64_t received_ = 0;
};

// Node-level consolidation point: validates batches and forwards them
// onward preserving per-source arrival order. A batch with any invalid span
// is rejected whole and counted. The forward function is the next pipeline
// stage: the collector object directly, or an HTTP client toward it.
class Agent {
 public:
  using Forward = std::function<void(const std::vector<Span>&)>;

  explicit Agent(Forward forward) : forward_(std::move(forward)) {}
  explicit Agent(Collector& collector)
      : forward_([&collector](const std::vector<Span>& spans) { collector.store_spans(spans); }) {}

  // Returns the number of accepted spans; throws Error("SchemaViolation")
  // after counting when the batch is invalid.
  size_t ingest(const std::vector<Span>& batch);

  uint64_t rejected() const { return rejected_; }
  uint64_t forwarded() const { return forwarded_; }

 private:
  Forward forward_;
  std::mutex mutex_;
  uint64_t rejected_ = 0;
  uint64_t forwarded_ = 0;
};

// Parent-linked view of one traceId's spans. `roots` lists spans with no
// parent; `orphans` lists spans whose parent id is absent from the set.
struct Trace {
  TraceId trace_id;
  std::vector<Span> spans;  // sorted by (startUs, spanId)

  std::vector<const Span*> roots() const;
  std::vector<const Span*> orphans() const;
  std::vector<const Span*> children_of(SpanId id) const;
  bool is_tree() const;
};

std::vector<Trace> assemble_traces(const std::vector<Span>& spans);

struct QueryFilter {
  std::optional<VnfKind> service;
  std::optional<Category> category;
  std::optional<int64_t> start_us;  // inclusive lower bound on span start
  std::optional<int64_t> end_us;    // inclusive upper bound on span start
  std::optional<TraceId> trace_id;

  bool matches(const Span& s) const;
};

// Assembles full traces, then prunes each to the spans matching every filter
// field; traces left empty are dropped. Matching is done against complete
// traces so structure checks see the whole tree.
std::vector<Trace> query(const std::vector<Span>& spans, const QueryFilter& filter);

nlohmann::json traces_to_json(const std::vector<Trace>& traces);
std::vector<Trace> traces_from_json(const nlohmann::json& j);

void export_traces(const std::vector<Trace>& traces, const std::string& path);
std::vector<Trace> import_traces(const std::string& path);

// Indented tree rendering for the CLI, root first.
std::string render_trace(const Trace& t);

}  // namespace coresim::telemetry
