#include "caldesk/podstore/client.hpp"

#include "caldesk/common/util.hpp"

namespace caldesk::pod {

void raise_for_status(const net::Response& r, std::string_view what) {
  if (r.status >= 200 && r.status < 300) return;
  std::string msg = std::string(what) + ": HTTP " + std::to_string(r.status) + " " +
                    std::string(util::trim(r.body));
  switch (r.status) {
    case 400: throw StoreError(ErrorCode::BadRequest, msg);
    case 401: throw StoreError(ErrorCode::Unauthorized, msg);
    case 403: throw StoreError(ErrorCode::Forbidden, msg);
    case 404: throw StoreError(ErrorCode::NotFound, msg);
    case 412: throw StoreError(ErrorCode::PreconditionFailed, msg);
    default: throw net::Unreachable(msg);
  }
}

PodClient::PodClient(std::string base_url, Credential cred, std::string user_agent)
    : base_url_(std::move(base_url)), cred_(std::move(cred)), user_agent_(std::move(user_agent)) {
  while (base_url_.ends_with('/')) base_url_.pop_back();
}

std::string PodClient::iri(std::string_view path) const { return base_url_ + std::string(path); }

net::Response PodClient::call(const std::string& method, std::string_view path, std::string body,
                              std::string content_type, net::Headers extra) const {
  net::Request req{method, iri(path), std::move(extra), std::move(body), std::move(content_type)};
  req.headers.emplace_back("User-Agent", user_agent_);
  switch (cred_.kind) {
    case Credential::Kind::Anonymous: break;
    case Credential::Kind::Bearer: req.headers.emplace_back("Authorization", "Bearer " + cred_.secret); break;
    case Credential::Kind::Owner: req.headers.emplace_back("X-Owner-Secret", cred_.secret); break;
  }
  return net::send(req);
}

Resource PodClient::get(std::string_view path) const {
  auto r = call("GET", path);
  raise_for_status(r, "GET " + std::string(path));
  return Resource{std::string(path), r.body, r.header("Content-Type").value_or(""),
                  net::unquote_etag(r.header("ETag").value_or(""))};
}

std::optional<Resource> PodClient::get_if_exists(std::string_view path) const {
  try {
    return get(path);
  } catch (const StoreError& e) {
    if (e.code() == ErrorCode::NotFound) return std::nullopt;
    throw;
  }
}

std::string PodClient::put(std::string_view path, const std::string& body,
                           const std::string& content_type,
                           const std::optional<std::string>& if_match) const {
  net::Headers extra;
  if (if_match) extra.emplace_back("If-Match", "\"" + *if_match + "\"");
  auto r = call("PUT", path, body, content_type, std::move(extra));
  raise_for_status(r, "PUT " + std::string(path));
  return net::unquote_etag(r.header("ETag").value_or(""));
}

std::string PodClient::post_inbox(const std::string& body, const std::string& content_type) const {
  auto r = call("POST", kInboxPath, body, content_type);
  raise_for_status(r, "POST /inbox/");
  auto location = r.header("Location").value_or("");
  if (!location.starts_with(kInboxPath)) throw net::Unreachable("POST /inbox/ without Location");
  return location.substr(kInboxPath.size());
}

std::vector<std::string> PodClient::list_inbox() const {
  auto r = call("GET", kInboxPath);
  raise_for_status(r, "GET /inbox/");
  std::vector<std::string> ids;
  for (const auto& line : util::split(r.body, '\n'))
    if (!util::trim(line).empty()) ids.emplace_back(util::trim(line));
  return ids;
}

Notification PodClient::get_notification(std::string_view id) const {
  std::string path = std::string(kInboxPath) + std::string(id);
  auto r = call("GET", path);
  raise_for_status(r, "GET " + path);
  Notification n;
  n.id = std::string(id);
  n.body = r.body;
  n.content_type = r.header("Content-Type").value_or("");
  auto sender = r.header("X-Sender").value_or("-");
  if (sender != "-") n.sender = AgentId::parse(sender);
  n.received = cal::try_parse_iso(r.header("X-Received").value_or("")).value_or(cal::Instant{});
  n.processed = r.header("X-Processed").value_or("") == "true";
  return n;
}

void PodClient::mark_processed(std::string_view id) const {
  std::string path = std::string(kInboxPath) + std::string(id) + "/processed";
  auto r = call("POST", path);
  raise_for_status(r, "POST " + path);
}

std::string PodClient::issue_token(const AgentId& agent) const {
  auto r = call("POST", "/_admin/tokens", agent.iri(), "text/plain");
  raise_for_status(r, "POST /_admin/tokens");
  return std::string(util::trim(r.body));
}

void PodClient::revoke_token(std::string_view value) const {
  std::string path = "/_admin/tokens/" + std::string(value);
  raise_for_status(call("DELETE", path), "DELETE /_admin/tokens");
}

void PodClient::put_acl(const std::vector<AclEntry>& acl) const {
  raise_for_status(call("PUT", "/_admin/acl", format_acl(acl), "text/plain"), "PUT /_admin/acl");
}

std::vector<AclEntry> PodClient::get_acl() const {
  auto r = call("GET", "/_admin/acl");
  raise_for_status(r, "GET /_admin/acl");
  return parse_acl(r.body);
}

bool PodClient::healthy() const {
  try {
    return call("GET", "/_health").status == 200;
  } catch (const net::Unreachable&) {
    return false;
  }
}

}  // namespace caldesk::pod
