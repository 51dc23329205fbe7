#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>

namespace coresim {

struct CaseInsensitiveLess {
  bool operator()(const std::string& a, const std::string& b) const {
    return std::lexicographical_compare(
        a.begin(), a.end(), b.begin(), b.end(), [](unsigned char x, unsigned char y) {
          return std::tolower(x) < std::tolower(y);
        });
  }
};

using Headers = std::map<std::string, std::string, CaseInsensitiveLess>;

struct HttpRequest {
  std::string method;
  std::string target;  // origin-form: path plus optional query string
  Headers headers;
  std::string body;

  std::optional<std::string> header(const std::string& name) const {
    auto it = headers.find(name);
    if (it == headers.end()) return std::nullopt;
    return it->second;
  }
};

// status == 0 marks a transport-level failure (no HTTP response was produced);
// the "x-transport-error" header then distinguishes "refused" from "timeout".
struct HttpResponse {
  int status = 0;
  Headers headers;
  std::string body;

  bool transport_ok() const { return status != 0; }

  std::optional<std::string> header(const std::string& name) const {
    auto it = headers.find(name);
    if (it == headers.end()) return std::nullopt;
    return it->second;
  }

  static HttpResponse transport_failure(const std::string& kind) {
    HttpResponse r;
    r.status = 0;
    r.headers["x-transport-error"] = kind;
    return r;
  }
};

struct NetAddr {
  std::string host;
  uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
  bool operator==(const NetAddr& o) const { return host == o.host && port == o.port; }
};

// Strips the query string and returns the path component of an origin-form
// target or absolute URL. Empty result means the input had no path.
std::string url_path(const std::string& target);

}  // namespace coresim
