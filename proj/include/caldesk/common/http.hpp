#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <thread>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace httplib {
class Server;
}

namespace caldesk::net {

struct Url {
  std::string scheme;  // "http"
  std::string host;
  int port = 80;
  std::string path;    // starts with '/', may carry a query

  /// `scheme://host:port`
  std::string origin() const;
};

/// Only plain `http://` URLs are accepted.
std::optional<Url> parse_url(std::string_view text);

std::string percent_encode(std::string_view s);
std::optional<std::string> percent_decode(std::string_view s);

/// Connection refused, timed out or otherwise failed below HTTP.
class Unreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

struct Request {
  std::string method = "GET";
  std::string url;
  Headers headers;
  std::string body;
  std::string content_type;
};

struct Response {
  int status = 0;
  std::string body;
  Headers headers;

  /// Case-insensitive lookup of the first matching header.
  std::optional<std::string> header(std::string_view name) const;
};

/// Blocking request over a fresh connection. Throws Unreachable.
Response send(const Request& req, std::chrono::milliseconds timeout = std::chrono::seconds(5));

/// `"abc"` -> `abc`; weak prefixes are stripped too.
std::string unquote_etag(std::string_view etag);

class AddressInUse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Owns an httplib::Server running on a background thread.
class HttpService {
 public:
  HttpService();
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  httplib::Server& server() { return *server_; }

  /// Binds (port 0 picks a free port) and starts serving. Throws AddressInUse when the
  /// address cannot be bound.
  int start(const std::string& host, int port);
  /// Lets browser clients on any origin call this service: answers preflight requests
  /// and exposes the listed response headers.
  void enable_cors(const std::string& allow_headers, const std::string& expose_headers);

  /// Blocks serving on the calling thread until stop() is called from elsewhere.
  int bind(const std::string& host, int port);
  void serve_blocking();
  void stop();

  int port() const { return port_; }
  std::string base_url() const;

 private:
  std::unique_ptr<httplib::Server> server_;
  std::string host_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace caldesk::net
