#pragma once

#include <map>
#include <string>
#include <vector>

#include "caldesk/calmodel/freebusy.hpp"
#include "caldesk/podstore/client.hpp"
#include "caldesk/scheduling/availability.hpp"

namespace caldesk::sched {

struct MeetingRequest {
  AgentId organizer;
  std::vector<AgentId> participants;  // always includes the organizer
  Slot slot;
  std::string summary;
  std::string uid;
  cal::Instant stamped;  // DTSTAMP of the booked event

  /// The event every participant receives.
  cal::Event event() const;
};

/// Adds the organizer to the participants (deduplicated, order kept). Generates a fresh
/// uid when `uid` is empty. Throws std::invalid_argument for an empty participant list.
MeetingRequest make_request(const AgentId& organizer, std::vector<AgentId> participants,
                            const Slot& slot, std::string summary, cal::Instant stamped,
                            std::string uid = {});

enum class Failure { None, Forbidden, Unauthorized, NotFound, StaleSequence, Unreachable, Rejected };

std::string to_string(Failure f);

struct BookingOutcome {
  AgentId participant;
  Failure failure = Failure::None;
  /// The created uid or notification id on success, otherwise the error message.
  std::string detail;

  bool ok() const { return failure == Failure::None; }
};

bool all_ok(const std::vector<BookingOutcome>& outcomes);

/// One create_event per participant on its external calendar URL (`{base}/cal/{id}`).
/// Failures are collected per participant; successes are not rolled back. Throws
/// std::invalid_argument when a participant has no URL.
std::vector<BookingOutcome> book_via_external(const MeetingRequest& req,
                                              const std::map<AgentId, std::string>& booking_urls,
                                              const std::string& user_agent = "caldesk");

struct InboxTarget {
  std::string pod_url;
  pod::Credential credential;  // the sender's credential on that pod
};

/// Posts one MeetingRequest notification to each participant's inbox.
std::vector<BookingOutcome> book_via_inbox(const MeetingRequest& req,
                                           const std::map<AgentId, InboxTarget>& inboxes,
                                           const std::string& user_agent = "caldesk");

/// Reads and parses `/calendar/freebusy` from a participant's pod.
cal::FreeBusy fetch_freebusy(const pod::PodClient& client);

}  // namespace caldesk::sched
