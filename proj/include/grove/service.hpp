#pragma once

// Preprocessing into a cache and the request handler behind the HTTP API.
// The handler is stateless: split state arrives with each request and is
// replayed against the baseline super graph.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "grove/ensemble.hpp"
#include "grove/layout.hpp"

namespace grove {

inline constexpr std::string_view kApiSchema = "grove-api-1";

/// Loads every profile and builds the ensemble. Any failure names the
/// offending file.
EnsembleGraphFrame preprocess(std::span<const std::filesystem::path> inputs, const BuildOptions& options);

struct ServiceConfig {
  std::uint32_t default_bins = 10;
  SankeyOptions layout;
};

struct Request {
  std::string method = "GET";
  std::string path;  // already percent-decoded
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  std::string body;  // JSON
};

class Service {
 public:
  Service(EnsembleGraphFrame frame, ServiceConfig config = {});

  /// Never throws for client errors: they come back as 400/404 with a
  /// {"error": {"code", "message"}} body.
  Response handle(const Request& request) const;

  const EnsembleGraphFrame& frame() const { return frame_; }
  const ServiceConfig& config() const { return config_; }

 private:
  EnsembleGraphFrame frame_;
  ServiceConfig config_;
};

/// Serves the handler over HTTP until the process is stopped.
void serve_http(const Service& service, const std::string& host, int port);

}  // namespace grove
