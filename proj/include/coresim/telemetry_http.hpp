#pragma once

#include <string>

#include "coresim/net.hpp"
#include "coresim/telemetry.hpp"

namespace coresim::telemetry {

// Span batches travel as newline-delimited JSON objects in the request body.
std::string spans_to_ndjson(const std::vector<Span>& spans);
std::vector<Span> spans_from_ndjson(const std::string& body);

// POST /ingest -- node-level ingestion; the whole batch is rejected on any
// schema violation.
class AgentEndpoint : public Endpoint {
 public:
  explicit AgentEndpoint(Agent& agent) : agent_(agent) {}
  Task<HttpResponse> serve(HttpRequest req) override;

 private:
  Agent& agent_;
};

// POST /spans -- cluster-level storage; GET /traces -- query API with
// parameters service, category, start, end, traceId.
class CollectorEndpoint : public Endpoint {
 public:
  CollectorEndpoint(Collector& collector, SpanStore& store)
      : collector_(collector), store_(store) {}
  Task<HttpResponse> serve(HttpRequest req) override;

 private:
  Collector& collector_;
  SpanStore& store_;
};

// Parses the GET /traces query parameters; MalformedFilter on bad values.
QueryFilter parse_query_filter(const std::string& target);

}  // namespace coresim::telemetry
