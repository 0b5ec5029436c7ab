#pragma once

#include <optional>
#include <string>
#include <vector>

#include "caldesk/common/http.hpp"
#include "caldesk/podstore/store.hpp"

namespace caldesk::pod {

/// HTTP client for a pod. Non-success statuses surface as StoreError with the matching
/// code; transport failures as net::Unreachable.
class PodClient {
 public:
  PodClient(std::string base_url, Credential cred, std::string user_agent = "caldesk");

  const std::string& base_url() const { return base_url_; }
  /// `{base_url}{path}`
  std::string iri(std::string_view path) const;

  Resource get(std::string_view path) const;
  std::optional<Resource> get_if_exists(std::string_view path) const;
  std::string put(std::string_view path, const std::string& body, const std::string& content_type,
                  const std::optional<std::string>& if_match = std::nullopt) const;

  std::string post_inbox(const std::string& body, const std::string& content_type) const;
  std::vector<std::string> list_inbox() const;
  Notification get_notification(std::string_view id) const;
  void mark_processed(std::string_view id) const;

  // Owner-only; the client credential must be Credential::owner.
  std::string issue_token(const AgentId& agent) const;
  void revoke_token(std::string_view value) const;
  void put_acl(const std::vector<AclEntry>& acl) const;
  std::vector<AclEntry> get_acl() const;

  bool healthy() const;

 private:
  net::Response call(const std::string& method, std::string_view path, std::string body = {},
                     std::string content_type = {}, net::Headers extra = {}) const;

  std::string base_url_;
  Credential cred_;
  std::string user_agent_;
};

/// Throws StoreError for any non-2xx status.
void raise_for_status(const net::Response& r, std::string_view what);

}  // namespace caldesk::pod
