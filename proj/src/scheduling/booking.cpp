#include "caldesk/scheduling/booking.hpp"

#include <algorithm>

#include "caldesk/calmodel/notification.hpp"
#include "caldesk/common/util.hpp"
#include "caldesk/extcal/client.hpp"

namespace caldesk::sched {

cal::Event MeetingRequest::event() const {
  cal::Event e{uid, slot.interval, summary, cal::EventStatus::Confirmed, {}, {}};
  e.version.stamped = stamped;
  return e;
}

MeetingRequest make_request(const AgentId& organizer, std::vector<AgentId> participants,
                            const Slot& slot, std::string summary, cal::Instant stamped,
                            std::string uid) {
  if (participants.empty()) throw std::invalid_argument("a meeting needs at least one participant");
  MeetingRequest req{organizer, {}, slot, std::move(summary), std::move(uid), stamped};
  req.participants.push_back(organizer);
  for (auto& p : participants)
    if (std::find(req.participants.begin(), req.participants.end(), p) == req.participants.end())
      req.participants.push_back(std::move(p));
  if (req.uid.empty()) req.uid = util::random_hex(16) + "@caldesk";
  cal::validate_event(req.event());
  return req;
}

std::string to_string(Failure f) {
  switch (f) {
    case Failure::None: return "ok";
    case Failure::Forbidden: return "Forbidden";
    case Failure::Unauthorized: return "Unauthorized";
    case Failure::NotFound: return "NotFound";
    case Failure::StaleSequence: return "StaleSequence";
    case Failure::Unreachable: return "Unreachable";
    case Failure::Rejected: return "Rejected";
  }
  return "?";
}

bool all_ok(const std::vector<BookingOutcome>& outcomes) {
  return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.ok(); });
}

std::vector<BookingOutcome> book_via_external(const MeetingRequest& req,
                                              const std::map<AgentId, std::string>& booking_urls,
                                              const std::string& user_agent) {
  for (const auto& p : req.participants)
    if (!booking_urls.count(p)) throw std::invalid_argument("no booking url for " + p.iri());

  const auto event = req.event();
  std::vector<BookingOutcome> out;
  for (const auto& p : req.participants) {
    BookingOutcome o{p, Failure::None, {}};
    try {
      o.detail = ext::create_event(booking_urls.at(p), event, user_agent);
    } catch (const ext::StaleSequence& e) {
      o = {p, Failure::StaleSequence, e.what()};
    } catch (const ext::NotFound& e) {
      o = {p, Failure::NotFound, e.what()};
    } catch (const net::Unreachable& e) {
      o = {p, Failure::Unreachable, e.what()};
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<BookingOutcome> book_via_inbox(const MeetingRequest& req,
                                           const std::map<AgentId, InboxTarget>& inboxes,
                                           const std::string& user_agent) {
  for (const auto& p : req.participants)
    if (!inboxes.count(p)) throw std::invalid_argument("no inbox for " + p.iri());

  const std::string body = cal::format_meeting_request(req.event(), req.organizer);
  std::vector<BookingOutcome> out;
  for (const auto& p : req.participants) {
    const auto& target = inboxes.at(p);
    BookingOutcome o{p, Failure::None, {}};
    try {
      pod::PodClient client(target.pod_url, target.credential, user_agent);
      o.detail = client.post_inbox(body, "text/plain");
    } catch (const pod::StoreError& e) {
      switch (e.code()) {
        case pod::ErrorCode::Forbidden: o.failure = Failure::Forbidden; break;
        case pod::ErrorCode::Unauthorized: o.failure = Failure::Unauthorized; break;
        case pod::ErrorCode::NotFound: o.failure = Failure::NotFound; break;
        default: o.failure = Failure::Rejected; break;
      }
      o.detail = e.what();
    } catch (const net::Unreachable& e) {
      o = {p, Failure::Unreachable, e.what()};
    }
    out.push_back(std::move(o));
  }
  return out;
}

cal::FreeBusy fetch_freebusy(const pod::PodClient& client) {
  return cal::parse_freebusy(client.get(pod::kFreeBusyPath).body);
}

}  // namespace caldesk::sched
