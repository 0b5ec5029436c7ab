#include "caldesk/calmodel/notification.hpp"
#include "caldesk/extcal/client.hpp"
#include "caldesk/podstore/server.hpp"
#include "caldesk/scheduling/booking.hpp"
#include "doctest.h"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace caldesk;
using namespace caldesk::sched;
using caldesk::testing::agent;

namespace {

cal::Instant at(const char* hhmm) { return cal::parse_iso(std::string("2023-05-02T") + hhmm + ":00Z"); }
cal::Interval iv(const char* a, const char* b) { return cal::Interval{at(a), at(b)}; }

cal::FreeBusy fb(const char* who, cal::Interval window, std::vector<cal::Interval> busy) {
  return cal::FreeBusy{agent(who), window, std::move(busy)};
}

std::vector<std::string> starts(const std::vector<Slot>& slots) {
  std::vector<std::string> out;
  for (const auto& s : slots) out.push_back(cal::format_iso(s.interval.start()).substr(11, 5));
  return out;
}

}  // namespace

TEST_CASE("joint availability examples") {
  auto day = iv("00:00", "23:59");
  SUBCASE("fully free") {
    auto slots = joint_availability({fb("a", day, {}), fb("b", day, {})}, iv("09:00", "12:00"), 3600, 3600);
    CHECK(starts(slots) == std::vector<std::string>{"09:00", "10:00", "11:00"});
    for (const auto& s : slots) CHECK(s.interval.duration() == 3600);
  }
  SUBCASE("two participants with busy time") {
    auto a = fb("a", day, {iv("10:00", "11:00")});
    auto b = fb("b", day, {iv("09:00", "09:30"), iv("13:00", "15:00")});
    auto slots = joint_availability({a, b}, iv("09:00", "17:00"), 3600, 1800);
    CHECK(starts(slots) == std::vector<std::string>{"11:00", "11:30", "12:00", "15:00", "15:30", "16:00"});
  }
  SUBCASE("duration longer than window") {
    CHECK(joint_availability({fb("a", day, {})}, iv("09:00", "10:00"), 7200, 3600).empty());
  }
  SUBCASE("grid anchored at window start") {
    auto slots = joint_availability({}, iv("09:10", "11:10"), 3600, 3600);
    CHECK(starts(slots) == std::vector<std::string>{"09:10", "10:10"});
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS(joint_availability({fb("a", iv("10:00", "12:00"), {})}, iv("09:00", "11:00"), 3600, 3600),
                    WindowMismatch);
    CHECK_THROWS_AS(joint_availability({}, day, 1800, 3600), std::invalid_argument);
    CHECK_THROWS_AS(joint_availability({}, day, 3600, 0), std::invalid_argument);
    CHECK_THROWS_AS(joint_availability({}, day, 3630, 60), std::invalid_argument);
    CHECK_THROWS_AS(joint_availability({}, day, 3600, 90), std::invalid_argument);
  }
}

TEST_CASE("joint availability matches the minute bitmap oracle") {
  testing::Gen g(20230502);
  for (int round = 0; round < 300; ++round) {
    int window_minutes = g.uniform(30, g.coin(0.2) ? 14 * 1440 : 2 * 1440);
    cal::Instant ws = testing::kBaseTime + g.uniform(0, 600) * 60LL;
    cal::Interval window{ws, ws + window_minutes * 60LL};
    int granularity = g.pick(std::vector<int>{1, 5, 15, 30, 60});
    int duration = granularity * g.uniform(1, 8);

    std::vector<cal::FreeBusy> fbs;
    std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> raw;
    int participants = g.uniform(0, 8);
    for (int p = 0; p < participants; ++p) {
      auto c = g.calendar(agent("p" + std::to_string(p)), 50, 0, ws - 120 * 60, window_minutes + 240);
      cal::Interval fw{ws - g.uniform(0, 60) * 60LL, window.end() + g.uniform(0, 60) * 60LL};
      fbs.push_back(cal::project_freebusy(c, fw));
      raw.push_back(testing::as_pairs(fbs.back().busy));
    }
    auto got = joint_availability(fbs, window, duration * 60LL, granularity * 60LL);
    auto want = testing::brute_force_slots(raw, window.start().seconds, window.end().seconds,
                                           duration * 60LL, granularity * 60LL);
    std::vector<std::int64_t> got_starts;
    for (const auto& s : got) got_starts.push_back(s.interval.start().seconds);
    REQUIRE(got_starts == want);

    // Every slot misses every busy interval; another participant never adds slots.
    bool clear = true;
    for (const auto& s : got)
      for (const auto& f : fbs)
        for (const auto& b : f.busy) clear = clear && !b.overlaps(s.interval);
    CHECK(clear);
    auto extra = g.calendar(agent("extra"), 20, 0, ws, window_minutes);
    auto more = fbs;
    more.push_back(cal::project_freebusy(extra, window));
    auto fewer = joint_availability(more, window, duration * 60LL, granularity * 60LL);
    CHECK(std::all_of(fewer.begin(), fewer.end(),
                      [&](const Slot& s) { return std::find(got.begin(), got.end(), s) != got.end(); }));
  }
}

TEST_CASE("detect clashes") {
  cal::Calendar c(agent("a"));
  CHECK(detect_clashes(c).empty());
  auto add = [&](const char* uid, cal::Interval i, cal::EventStatus st = cal::EventStatus::Confirmed) {
    c.upsert(cal::Event{uid, i, "", st, {}, {}});
  };
  add("x", iv("10:00", "11:00"));
  add("y", iv("11:00", "12:00"));
  CHECK(detect_clashes(c).empty());
  add("b", iv("10:30", "11:30"));
  add("t", iv("10:00", "12:00"), cal::EventStatus::Tentative);
  add("k", iv("10:00", "12:00"), cal::EventStatus::Conflict);
  using P = std::vector<std::pair<std::string, std::string>>;
  CHECK(detect_clashes(c) == P{{"b", "x"}, {"b", "y"}});
  CHECK(detect_clashes(c, true) == P{{"b", "k"}, {"b", "x"}, {"b", "y"}, {"k", "x"}, {"k", "y"}});
}

TEST_CASE("detect clashes matches pairwise brute force") {
  testing::Gen g(7);
  for (int round = 0; round < 300; ++round) {
    auto c = g.calendar(agent("a"), 60, 0, testing::kBaseTime, g.uniform(60, 3 * 1440));
    REQUIRE(detect_clashes(c) == testing::brute_force_clashes(c));
  }
}

TEST_CASE("meeting requests") {
  auto slot = Slot{iv("10:00", "11:00")};
  CHECK_THROWS_AS(make_request(agent("org"), {}, slot, "x", at("08:00")), std::invalid_argument);
  auto req = make_request(agent("org"), {agent("p"), agent("org"), agent("p")}, slot, "Sync", at("08:00"));
  CHECK(req.participants == std::vector<AgentId>{agent("org"), agent("p")});
  CHECK(req.uid.size() > 10);
  CHECK(make_request(agent("org"), {agent("p")}, slot, "Sync", at("08:00")).uid != req.uid);

  auto body = cal::format_meeting_request(req.event(), req.organizer);
  CHECK(cal::notification_type(body) == "MeetingRequest");
  CHECK(cal::parse_meeting_request(body) == req.event());
  CHECK_THROWS_AS(cal::parse_meeting_request(cal::format_conflict({{"a", "b"}}, "http://pod/x")), cal::MalformedDoc);
  auto conflict = cal::format_conflict({{"b", "c"}, {"a", "b"}}, "http://pod/calendar/combined");
  CHECK(cal::notification_type(conflict) == "Conflict");
  CHECK(cal::parse_conflict(conflict) == std::vector<cal::UidPair>{{"a", "b"}, {"b", "c"}});
}

TEST_CASE("booking via external calendars") {
  cal::ManualClock clock(at("08:00"));
  ext::CalendarService svc(clock.clock());
  ext::CalendarServer server(svc);
  server.start();
  svc.add_calendar("org", "org");
  svc.add_calendar("p", "p");

  auto req = make_request(agent("org"), {agent("p")}, Slot{iv("10:00", "11:00")}, "Sync", at("08:00"), "m1");
  std::map<AgentId, std::string> urls{{agent("org"), server.calendar_url("org")},
                                      {agent("p"), server.calendar_url("p")}};
  auto out = book_via_external(req, urls);
  CHECK(all_ok(out));
  CHECK(svc.events("org").find("m1"));
  CHECK(svc.events("p").find("m1"));

  auto before = svc.serve_ics("p").body;
  auto again = book_via_external(req, urls);
  REQUIRE(again.size() == 2);
  for (const auto& o : again) CHECK(o.failure == Failure::StaleSequence);
  CHECK(svc.serve_ics("p").body == before);

  urls[agent("p")] = "http://127.0.0.1:1/cal/p";
  auto req2 = make_request(agent("org"), {agent("p")}, Slot{iv("12:00", "13:00")}, "Other", at("08:00"), "m2");
  auto partial = book_via_external(req2, urls);
  CHECK(partial[0].ok());
  CHECK(partial[1].failure == Failure::Unreachable);
  CHECK_FALSE(all_ok(partial));
  CHECK(svc.events("org").find("m2"));

  urls.erase(agent("p"));
  CHECK_THROWS_AS(book_via_external(req2, urls), std::invalid_argument);
  server.stop();
}

TEST_CASE("booking via inboxes") {
  cal::ManualClock clock(at("08:00"));
  auto make_pod = [&](const char* who) {
    return std::make_unique<pod::Store>(pod::PodOptions{agent(who), "s-" + std::string(who), {}, clock.clock()});
  };
  auto pod_a = make_pod("org");
  auto pod_b = make_pod("p");
  auto pod_c = make_pod("q");
  pod::PodServer sa(*pod_a), sb(*pod_b), sc(*pod_c);
  sa.start(), sb.start(), sc.start();

  // org may append to p's inbox but not to q's.
  auto append_for_org = pod::default_acl();
  append_for_org.push_back({"/inbox/", agent("org"), {pod::Mode::Append}});
  pod_b->set_acl("s-p", append_for_org);
  auto org_token_b = pod_b->issue_token("s-p", agent("org")).value;
  auto org_token_c = pod_c->issue_token("s-q", agent("org")).value;

  auto req = make_request(agent("org"), {agent("p"), agent("q")}, Slot{iv("10:00", "11:00")}, "Sync",
                          at("08:00"), "m1");
  std::map<AgentId, InboxTarget> inboxes{
      {agent("org"), {sa.base_url(), pod::Credential::owner("s-org")}},
      {agent("p"), {sb.base_url(), pod::Credential::bearer(org_token_b)}},
      {agent("q"), {sc.base_url(), pod::Credential::bearer(org_token_c)}}};
  auto out = book_via_inbox(req, inboxes);
  REQUIRE(out.size() == 3);
  CHECK(out[0].ok());
  CHECK(out[1].ok());
  CHECK(out[2].failure == Failure::Forbidden);

  auto notes = pod_b->list_inbox(pod::Credential::owner("s-p"));
  REQUIRE(notes.size() == 1);
  CHECK(notes[0].sender == agent("org"));
  CHECK(cal::parse_meeting_request(notes[0].body) == req.event());
  CHECK(pod_c->list_inbox(pod::Credential::owner("s-q")).empty());
  CHECK_THROWS_AS(book_via_inbox(make_request(agent("org"), {agent("z")}, req.slot, "x", at("08:00")), inboxes),
                  std::invalid_argument);
}

TEST_CASE("free/busy fetch needs only a read grant on the projection") {
  cal::ManualClock clock(at("08:00"));
  pod::Store store(pod::PodOptions{agent("p"), "sp", {}, clock.clock()});
  pod::PodServer server(store);
  server.start();
  cal::Calendar c(agent("p"));
  c.upsert(cal::Event{"private", iv("10:00", "11:00"), "Secret dentist", cal::EventStatus::Confirmed, {}, {}});
  auto owner = pod::Credential::owner("sp");
  store.put_resource(owner, pod::kFreeBusyPath,
                     cal::format_freebusy(cal::project_freebusy(c, iv("00:00", "23:00")),
                                          server.base_url() + std::string(pod::kFreeBusyPath)),
                     "text/plain");
  auto acl = pod::default_acl();
  acl.push_back({std::string(pod::kFreeBusyPath), agent("org"), {pod::Mode::Read}});
  store.set_acl("sp", acl);
  pod::PodClient client(server.base_url(), pod::Credential::bearer(store.issue_token("sp", agent("org")).value));
  auto got = fetch_freebusy(client);
  CHECK(got.owner == agent("p"));
  CHECK(got.busy == std::vector<cal::Interval>{iv("10:00", "11:00")});
  CHECK_THROWS_AS(client.get(pod::kCombinedPath), pod::StoreError);
}
