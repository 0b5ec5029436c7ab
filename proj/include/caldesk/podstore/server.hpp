#pragma once

#include <mutex>
#include <string>
#include <vector>

#include "caldesk/common/http.hpp"
#include "caldesk/podstore/store.hpp"

namespace caldesk::pod {

struct LoggedRequest {
  std::string method;
  std::string path;
  std::string agent;  // IRI, or empty for anonymous / unauthenticated
  int status = 0;
};

/// HTTP front end for a Store.
///
///   GET/PUT {path}                 resources (Authorization: Bearer, If-Match, Content-Type)
///   POST /inbox/                   201 + Location: /inbox/{id}
///   GET  /inbox/                   one notification id per line
///   GET  /inbox/{id}               body; X-Sender, X-Received, X-Processed headers
///   POST /inbox/{id}/processed     mark processed
///   POST /_admin/tokens            body: agent IRI -> token value   (X-Owner-Secret)
///   DELETE /_admin/tokens/{value}                                   (X-Owner-Secret)
///   GET/PUT /_admin/acl            ACL table text                   (X-Owner-Secret)
///   GET  /_health
///
/// `X-Owner-Secret` on any resource request authenticates as the owner.
class PodServer {
 public:
  explicit PodServer(Store& store);

  int start(const std::string& host = "127.0.0.1", int port = 0) { return http_.start(host, port); }
  void stop() { http_.stop(); }
  std::string base_url() const { return http_.base_url(); }
  net::HttpService& http() { return http_; }

  std::vector<LoggedRequest> request_log() const;
  void clear_log();

 private:
  void log(LoggedRequest r);

  Store& store_;
  net::HttpService http_;
  mutable std::mutex log_mu_;
  std::vector<LoggedRequest> log_;
};

}  // namespace caldesk::pod
