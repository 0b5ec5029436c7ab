#pragma once

#include <string>

#include "caldesk/common/http.hpp"
#include "caldesk/orchestrator/orchestrator.hpp"

namespace caldesk::orch {

/// JSON over HTTP:
///   POST   /register             {"user", "pod", "grant"} -> 201 registration (no token)
///   DELETE /register/{user}      204; 404 when not registered
///   POST   /sync/{user}          200 sync report
///   GET    /status               {"registrations": [...]} with last reports, never tokens
///   GET    /health
/// `{user}` is the percent-encoded user IRI.
class OrchestratorServer {
 public:
  explicit OrchestratorServer(Orchestrator& orch);

  int start(const std::string& host = "127.0.0.1", int port = 0) { return http_.start(host, port); }
  void stop() { http_.stop(); }
  std::string base_url() const { return http_.base_url(); }
  net::HttpService& http() { return http_; }

 private:
  Orchestrator& orch_;
  net::HttpService http_;
};

/// JSON text for a report, as served by `/sync` and `/status`.
std::string report_json(const SyncReport& r);

}  // namespace caldesk::orch
