#include "caldesk/podstore/server.hpp"

#include "caldesk/common/util.hpp"
#include "httplib.h"

namespace caldesk::pod {

namespace {

constexpr std::string_view kTokensPrefix = "/_admin/tokens/";

Credential credential_of(const httplib::Request& req) {
  if (req.has_header("X-Owner-Secret")) return Credential::owner(req.get_header_value("X-Owner-Secret"));
  std::string auth = req.get_header_value("Authorization");
  if (auth.starts_with("Bearer ")) return Credential::bearer(std::string(util::trim(auth.substr(7))));
  return Credential::anonymous();
}

std::string owner_secret_of(const httplib::Request& req) {
  return req.get_header_value("X-Owner-Secret");
}

void send_error(httplib::Response& res, const StoreError& e) {
  res.status = e.http_status();
  res.set_content(std::string(e.what()) + "\n", "text/plain");
}

void set_etag(httplib::Response& res, const std::string& etag) {
  res.set_header("ETag", "\"" + etag + "\"");
}

bool is_notification_path(std::string_view path) {
  return path.starts_with(kInboxPath) && path.size() > kInboxPath.size();
}

}  // namespace

PodServer::PodServer(Store& store) : store_(store) {
  auto& svr = http_.server();
  http_.enable_cors("Authorization, X-Owner-Secret, If-Match, Content-Type",
                    "ETag, Location, X-Sender, X-Received, X-Processed");

  // Logs every request with the agent it authenticated as (if any).
  svr.set_post_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    std::string agent;
    try {
      agent = store_.authenticate(credential_of(req)).iri();
    } catch (const StoreError&) {
    }
    log({req.method, req.path, agent, res.status});
  });

  svr.Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      if (req.path == "/_health") {
        res.set_content("ok\n", "text/plain");
        return;
      }
      if (req.path == "/_admin/acl") {
        res.set_content(format_acl(store_.acl(owner_secret_of(req))), "text/plain");
        return;
      }
      auto cred = credential_of(req);
      if (req.path == kInboxPath) {
        std::string listing;
        for (const auto& n : store_.list_inbox(cred)) listing += n.id + "\n";
        res.set_content(listing, "text/plain");
        return;
      }
      if (is_notification_path(req.path)) {
        auto n = store_.get_notification(cred, req.path.substr(kInboxPath.size()));
        res.set_header("X-Sender", n.sender.empty() ? "-" : n.sender.iri());
        res.set_header("X-Received", cal::format_iso(n.received));
        res.set_header("X-Processed", n.processed ? "true" : "false");
        res.set_content(n.body, n.content_type);
        return;
      }
      auto r = store_.get_resource(cred, req.path);
      set_etag(res, r.etag);
      res.set_content(r.body, r.content_type);
    } catch (const StoreError& e) {
      send_error(res, e);
    }
  });

  svr.Put(".*", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      if (req.path == "/_admin/acl") {
        std::vector<AclEntry> acl;
        try {
          acl = parse_acl(req.body);
        } catch (const std::invalid_argument& e) {
          throw StoreError(ErrorCode::BadRequest, e.what());
        }
        store_.set_acl(owner_secret_of(req), std::move(acl));
        res.set_content("ok\n", "text/plain");
        return;
      }
      std::optional<std::string> if_match;
      if (req.has_header("If-Match")) if_match = req.get_header_value("If-Match");
      std::string ctype = req.get_header_value("Content-Type");
      auto etag = store_.put_resource(credential_of(req), req.path, req.body, ctype, if_match);
      set_etag(res, etag);
      res.status = 200;
      res.set_content("", "text/plain");
    } catch (const StoreError& e) {
      send_error(res, e);
    }
  });

  svr.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      if (req.path == "/_admin/tokens") {
        AgentId agent;
        try {
          agent = AgentId::parse(util::trim(req.body));
        } catch (const std::invalid_argument& e) {
          throw StoreError(ErrorCode::BadRequest, e.what());
        }
        auto token = store_.issue_token(owner_secret_of(req), agent);
        res.status = 201;
        res.set_content(token.value + "\n", "text/plain");
        return;
      }
      auto cred = credential_of(req);
      if (req.path == kInboxPath) {
        std::string ctype = req.get_header_value("Content-Type");
        auto id = store_.post_inbox(cred, req.body, ctype);
        res.status = 201;
        res.set_header("Location", std::string(kInboxPath) + id);
        res.set_content(id + "\n", "text/plain");
        return;
      }
      constexpr std::string_view kProcessed = "/processed";
      if (is_notification_path(req.path) && req.path.ends_with(kProcessed)) {
        std::string_view id(req.path);
        id.remove_prefix(kInboxPath.size());
        id.remove_suffix(kProcessed.size());
        store_.mark_processed(cred, id);
        res.set_content("ok\n", "text/plain");
        return;
      }
      throw StoreError(ErrorCode::NotFound, "no POST handler for " + req.path);
    } catch (const StoreError& e) {
      send_error(res, e);
    }
  });

  svr.Delete(".*", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      if (req.path.starts_with(kTokensPrefix)) {
        store_.revoke_token(owner_secret_of(req), req.path.substr(kTokensPrefix.size()));
        res.set_content("ok\n", "text/plain");
        return;
      }
      throw StoreError(ErrorCode::NotFound, "no DELETE handler for " + req.path);
    } catch (const StoreError& e) {
      send_error(res, e);
    }
  });
}

void PodServer::log(LoggedRequest r) {
  std::lock_guard lock(log_mu_);
  log_.push_back(std::move(r));
}

std::vector<LoggedRequest> PodServer::request_log() const {
  std::lock_guard lock(log_mu_);
  return log_;
}

void PodServer::clear_log() {
  std::lock_guard lock(log_mu_);
  log_.clear();
}

}  // namespace caldesk::pod
