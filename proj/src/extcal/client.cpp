#include "caldesk/extcal/client.hpp"

#include "caldesk/calmodel/ics.hpp"
#include "caldesk/common/util.hpp"

namespace caldesk::ext {

std::optional<Fetched> fetch_ics(const std::string& url, const std::optional<std::string>& cached_etag,
                                 const AgentId& owner, const std::string& origin,
                                 const std::string& user_agent) {
  net::Request req;
  req.method = "GET";
  req.url = url;
  req.headers.emplace_back("User-Agent", user_agent);
  if (cached_etag) req.headers.emplace_back("If-None-Match", "\"" + *cached_etag + "\"");
  auto res = net::send(req);
  if (res.status == 304 && cached_etag) return std::nullopt;
  if (res.status != 200)
    throw net::Unreachable("GET " + url + ": HTTP " + std::to_string(res.status));
  Fetched out{cal::parse_ics(res.body, owner, origin), {}};
  out.etag = net::unquote_etag(res.header("ETag").value_or(""));
  if (out.etag.empty()) out.etag = util::sha256_hex(res.body);
  return out;
}

std::string create_event(const std::string& calendar_url, const cal::Event& event,
                         const std::string& user_agent) {
  net::Request req;
  req.method = "POST";
  req.url = calendar_url + "/events";
  req.headers.emplace_back("User-Agent", user_agent);
  req.body = cal::serialize_vevent(event);
  req.content_type = "text/calendar";
  auto res = net::send(req);
  std::string detail = "POST " + req.url + ": HTTP " + std::to_string(res.status) + " " +
                       std::string(util::trim(res.body));
  switch (res.status) {
    case 200:
    case 201: return std::string(util::trim(res.body));
    case 404: throw NotFound(detail);
    case 409: throw StaleSequence(detail);
    default: throw net::Unreachable(detail);
  }
}

}  // namespace caldesk::ext
