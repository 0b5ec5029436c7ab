#include "caldesk/orchestrator/server.hpp"

#include "httplib.h"
#include "json.hpp"

namespace caldesk::orch {

using nlohmann::json;

namespace {

json to_json(const SyncReport& r) {
  json sources = json::array();
  for (const auto& s : r.per_source) {
    json j{{"label", s.label}, {"outcome", to_string(s.outcome)}};
    if (!s.detail.empty()) j["detail"] = s.detail;
    sources.push_back(std::move(j));
  }
  json conflicts = json::array();
  for (const auto& [a, b] : r.conflicts_flagged) conflicts.push_back({a, b});
  json j{{"user", r.user.iri()},
         {"started", cal::format_iso(r.started)},
         {"finished", cal::format_iso(r.finished)},
         {"status", to_string(r.status)},
         {"per_source", std::move(sources)},
         {"wrote_target", r.wrote_target},
         {"wrote_freebusy", r.wrote_freebusy},
         {"conflicts_flagged", std::move(conflicts)},
         {"notifications_consumed", r.notifications_consumed}};
  if (r.mode) j["mode"] = to_string(*r.mode);
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

json to_json(const UserStatus& s) {
  json j{{"user", s.user.iri()},
         {"pod", s.pod_base_url},
         {"created", cal::format_iso(s.created)},
         {"last_status", to_string(s.last_status)},
         {"last_sync", s.last_sync ? json(cal::format_iso(*s.last_sync)) : json(nullptr)}};
  j["last_report"] = s.last_report ? to_json(*s.last_report) : json(nullptr);
  return j;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
  reply(res, status, json{{"error", kind}, {"message", message}});
}

// httplib already percent-decodes the path, so the capture is normally the raw IRI.
std::optional<AgentId> user_from(const std::string& captured) {
  std::string text = captured;
  if (!text.starts_with("http")) {
    auto decoded = net::percent_decode(text);
    if (!decoded) return std::nullopt;
    text = *decoded;
  }
  try {
    return AgentId::parse(text);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

}  // namespace

std::string report_json(const SyncReport& r) { return to_json(r).dump(2); }

OrchestratorServer::OrchestratorServer(Orchestrator& orch) : orch_(orch) {
  auto& svr = http_.server();
  http_.enable_cors("Content-Type", "Location");

  svr.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, json{{"status", "ok"}});
  });

  svr.Get("/status", [this](const httplib::Request&, httplib::Response& res) {
    json regs = json::array();
    for (const auto& s : orch_.status()) regs.push_back(to_json(s));
    reply(res, 200, json{{"agent", orch_.agent().iri()}, {"registrations", std::move(regs)}});
  });

  svr.Post("/register", [this](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (!body.is_object() || !body.contains("user") || !body.contains("pod") || !body.contains("grant") ||
        !body["user"].is_string() || !body["pod"].is_string() || !body["grant"].is_string())
      return error(res, 400, "BadRequest", "expected {\"user\", \"pod\", \"grant\"} strings");
    auto user = user_from(body["user"].get<std::string>());
    if (!user) return error(res, 400, "BadRequest", "user must be an absolute http IRI");
    try {
      auto reg = orch_.register_user(*user, body["pod"].get<std::string>(), body["grant"].get<std::string>());
      res.set_header("Location", "/register/" + net::percent_encode(reg.user.iri()));
      reply(res, 201,
            json{{"user", reg.user.iri()},
                 {"pod", reg.pod_base_url},
                 {"created", cal::format_iso(reg.created)},
                 {"last_status", to_string(reg.last_status)}});
    } catch (const AlreadyRegistered& e) {
      error(res, 409, "AlreadyRegistered", e.what());
    } catch (const GrantRejected& e) {
      error(res, 403, "GrantRejected", e.what());
    } catch (const PodUnreachable& e) {
      error(res, 502, "PodUnreachable", e.what());
    } catch (const std::invalid_argument& e) {
      error(res, 400, "BadRequest", e.what());
    }
  });

  svr.Delete(R"(/register/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto user = user_from(req.matches[1]);
    if (!user) return error(res, 400, "BadRequest", "bad user IRI");
    try {
      orch_.deregister(*user);
      res.status = 204;
    } catch (const NotRegistered& e) {
      error(res, 404, "NotRegistered", e.what());
    }
  });

  svr.Post(R"(/sync/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto user = user_from(req.matches[1]);
    if (!user) return error(res, 400, "BadRequest", "bad user IRI");
    try {
      reply(res, 200, to_json(orch_.sync_user(*user)));
    } catch (const NotRegistered& e) {
      error(res, 404, "NotRegistered", e.what());
    }
  });
}

}  // namespace caldesk::orch
