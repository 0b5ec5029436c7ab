#include "caldesk/common/http.hpp"

#include <cctype>

#include "httplib.h"

namespace caldesk::net {

std::string Url::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

std::optional<Url> parse_url(std::string_view text) {
  constexpr std::string_view kScheme = "http://";
  if (!text.starts_with(kScheme)) return std::nullopt;
  std::string_view rest = text.substr(kScheme.size());
  std::size_t slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  Url url{"http", "", 80, slash == std::string_view::npos ? "/" : std::string(rest.substr(slash))};
  if (authority.empty()) return std::nullopt;
  std::size_t colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    std::string_view port = authority.substr(colon + 1);
    if (port.empty() || port.size() > 5) return std::nullopt;
    int p = 0;
    for (char c : port) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      p = p * 10 + (c - '0');
    }
    if (p <= 0 || p > 65535) return std::nullopt;
    url.port = p;
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) return std::nullopt;
  url.host = std::string(authority);
  return url;
}

std::string percent_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
    }
  }
  return out;
}

std::optional<std::string> percent_decode(std::string_view s) {
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out += s[i];
      continue;
    }
    if (i + 2 >= s.size()) return std::nullopt;
    int hi = hex(s[i + 1]), lo = hex(s[i + 2]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out += static_cast<char>(hi * 16 + lo);
    i += 2;
  }
  return out;
}

std::optional<std::string> Response::header(std::string_view name) const {
  for (const auto& [k, v] : headers) {
    if (k.size() != name.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < k.size() && same; ++i)
      same = std::tolower(static_cast<unsigned char>(k[i])) ==
             std::tolower(static_cast<unsigned char>(name[i]));
    if (same) return v;
  }
  return std::nullopt;
}

Response send(const Request& req, std::chrono::milliseconds timeout) {
  auto url = parse_url(req.url);
  if (!url) throw Unreachable("unsupported URL '" + req.url + "'");
  httplib::Client client(url->host, url->port);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  for (const auto& [k, v] : req.headers) headers.emplace(k, v);
  std::string ctype = req.content_type.empty() ? "text/plain" : req.content_type;

  httplib::Result res{nullptr, httplib::Error::Unknown};
  if (req.method == "GET")
    res = client.Get(url->path, headers);
  else if (req.method == "PUT")
    res = client.Put(url->path, headers, req.body, ctype);
  else if (req.method == "POST")
    res = client.Post(url->path, headers, req.body, ctype);
  else if (req.method == "DELETE")
    res = client.Delete(url->path, headers);
  else if (req.method == "OPTIONS")
    res = client.Options(url->path, headers);
  else
    throw std::invalid_argument("unsupported method " + req.method);

  if (!res) throw Unreachable(req.method + " " + req.url + ": " + httplib::to_string(res.error()));
  Response out{res->status, res->body, {}};
  for (const auto& [k, v] : res->headers) out.headers.emplace_back(k, v);
  return out;
}

std::string unquote_etag(std::string_view etag) {
  if (etag.starts_with("W/")) etag.remove_prefix(2);
  if (etag.size() >= 2 && etag.front() == '"' && etag.back() == '"')
    etag = etag.substr(1, etag.size() - 2);
  return std::string(etag);
}

HttpService::HttpService() : server_(std::make_unique<httplib::Server>()) {
  // httplib defaults to SO_REUSEPORT, which would let a second server share a taken port.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) throw AddressInUse("cannot bind " + host + ":" + std::to_string(port));
  return port_;
}

void HttpService::serve_blocking() { server_->listen_after_bind(); }

int HttpService::start(const std::string& host, int port) {
  bind(host, port);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void HttpService::enable_cors(const std::string& allow_headers, const std::string& expose_headers) {
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Expose-Headers", expose_headers}});
  server_->Options(".*", [allow_headers](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Methods", "GET, PUT, POST, DELETE, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", allow_headers);
    res.set_header("Access-Control-Max-Age", "600");
  });
}

std::string HttpService::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace caldesk::net
