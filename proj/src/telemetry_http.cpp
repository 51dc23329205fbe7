#include "coresim/telemetry_http.hpp"

#include <sstream>

namespace coresim::telemetry {

std::string spans_to_ndjson(const std::vector<Span>& spans) {
  std::ostringstream os;
  for (const Span& s : spans) os << s.to_json().dump() << "\n";
  return os.str();
}

std::vector<Span> spans_from_ndjson(const std::string& body) {
  std::vector<Span> out;
  std::istringstream is(body);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error("SchemaViolation", "corrupt NDJSON span record");
    out.push_back(Span::from_json(j));
  }
  return out;
}

Task<HttpResponse> AgentEndpoint::serve(HttpRequest req) {
  HttpResponse resp;
  if (req.method != "POST" || url_path(req.target) != "/ingest") {
    resp.status = 404;
    resp.body = nlohmann::json{{"error", "NotFound"}}.dump();
    co_return resp;
  }
  try {
    size_t accepted = agent_.ingest(spans_from_ndjson(req.body));
    resp.status = 200;
    resp.body = nlohmann::json{{"accepted", accepted}}.dump();
  } catch (const Error& e) {
    resp.status = 400;
    resp.body = nlohmann::json{{"error", e.code()}, {"message", e.what()}}.dump();
  }
  co_return resp;
}

namespace {

std::map<std::string, std::string> parse_query_params(const std::string& target) {
  std::map<std::string, std::string> out;
  auto q = target.find('?');
  if (q == std::string::npos) return out;
  std::string qs = target.substr(q + 1);
  size_t pos = 0;
  while (pos <= qs.size()) {
    auto amp = qs.find('&', pos);
    std::string pair = qs.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
    auto eq = pair.find('=');
    if (eq != std::string::npos) out[pair.substr(0, eq)] = pair.substr(eq + 1);
    if (amp == std::string::npos) break;
    pos = amp + 1;
  }
  return out;
}

}  // namespace

QueryFilter parse_query_filter(const std::string& target) {
  auto params = parse_query_params(target);
  QueryFilter f;
  try {
    if (params.count("service")) f.service = vnf_kind_from_string(params["service"]);
    if (params.count("category")) f.category = category_from_string(params["category"]);
    if (params.count("start")) f.start_us = std::stoll(params["start"]);
    if (params.count("end")) f.end_us = std::stoll(params["end"]);
    if (params.count("traceId")) f.trace_id = TraceId::from_hex(params["traceId"]);
  } catch (const std::exception& e) {
    throw Error("MalformedFilter", e.what());
  }
  return f;
}

Task<HttpResponse> CollectorEndpoint::serve(HttpRequest req) {
  HttpResponse resp;
  const std::string path = url_path(req.target);

  if (req.method == "POST" && path == "/spans") {
    try {
      collector_.store_spans(spans_from_ndjson(req.body));
      resp.status = 200;
      resp.body = nlohmann::json{{"status", "STORED"}}.dump();
    } catch (const Error& e) {
      resp.status = e.code() == "SchemaViolation" ? 400 : 503;
      resp.body = nlohmann::json{{"error", e.code()}}.dump();
    }
    co_return resp;
  }

  if (req.method == "GET" && path == "/traces") {
    try {
      auto traces = query(store_.spans(), parse_query_filter(req.target));
      resp.status = 200;
      resp.body = traces_to_json(traces).dump();
    } catch (const Error& e) {
      resp.status = 400;
      resp.body = nlohmann::json{{"error", e.code()}, {"message", e.what()}}.dump();
    }
    co_return resp;
  }

  resp.status = 404;
  resp.body = nlohmann::json{{"error", "NotFound"}}.dump();
  co_return resp;
}

}  // namespace coresim::telemetry
