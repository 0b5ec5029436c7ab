#include "caldesk/calmodel/ics.hpp"
#include "caldesk/extcal/service.hpp"
#include "httplib.h"

namespace caldesk::ext {

CalendarServer::CalendarServer(CalendarService& service) : service_(service) {
  auto& svr = http_.server();
  http_.enable_cors("Content-Type, If-None-Match", "ETag");

  svr.Get("/_health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok\n", "text/plain");
  });

  svr.Get(R"(/cal/([^/]+)\.ics)", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      std::optional<std::string> inm;
      if (req.has_header("If-None-Match")) inm = req.get_header_value("If-None-Match");
      auto r = service_.serve_ics(req.matches[1], inm, req.get_header_value("User-Agent"));
      res.set_header("ETag", "\"" + r.etag + "\"");
      if (r.not_modified) {
        res.status = 304;
        return;
      }
      res.set_content(r.body, "text/calendar");
    } catch (const NotFound& e) {
      res.status = 404;
      res.set_content(std::string(e.what()) + "\n", "text/plain");
    }
  });

  svr.Get(R"(/cal/([^/]+)/_log)", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      std::string text;
      for (const auto& e : service_.request_log(req.matches[1])) text += e.line() + "\n";
      res.set_content(text, "text/plain");
    } catch (const NotFound& e) {
      res.status = 404;
      res.set_content(std::string(e.what()) + "\n", "text/plain");
    }
  });

  svr.Post(R"(/cal/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
    std::string id = req.matches[1];
    std::string client = req.get_header_value("User-Agent");
    std::optional<cal::Event> event;
    try {
      event = cal::parse_single_event(req.body);
    } catch (const std::exception& e) {
      service_.log_request(id, "POST", req.path, client);
      res.status = service_.has_calendar(id) ? 400 : 404;
      res.set_content(std::string(e.what()) + "\n", "text/plain");
      return;
    }
    try {
      auto uid = service_.create_event(id, std::move(*event), client);
      res.status = 201;
      res.set_content(uid + "\n", "text/plain");
    } catch (const NotFound& e) {
      res.status = 404;
      res.set_content(std::string(e.what()) + "\n", "text/plain");
    } catch (const StaleSequence& e) {
      res.status = 409;
      res.set_content(std::string(e.what()) + "\n", "text/plain");
    } catch (const cal::InvalidEvent& e) {
      res.status = 400;
      res.set_content(std::string(e.what()) + "\n", "text/plain");
    }
  });

  svr.Put(R"(/cal/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    service_.add_calendar(req.matches[1], req.body);
    res.status = 201;
    res.set_content("ok\n", "text/plain");
  });
}

}  // namespace caldesk::ext
