#include <filesystem>
#include <future>
#include <ranges>

#include "caldesk/calmodel/freebusy.hpp"
#include "caldesk/calmodel/ics.hpp"
#include "caldesk/extcal/client.hpp"
#include "caldesk/calmodel/linked.hpp"
#include "caldesk/calmodel/merge.hpp"
#include "caldesk/calmodel/notification.hpp"
#include "caldesk/common/util.hpp"
#include "caldesk/scenario/world.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "support/generators.hpp"

using namespace caldesk;
using namespace caldesk::orch;
using scenario::World;

namespace {

const cal::Instant kStart = cal::parse_iso("2023-05-01T08:00:00Z");

cal::Instant at(const char* hhmm) { return cal::parse_iso(std::string("2023-05-02T") + hhmm + ":00Z"); }

cal::Event booking(std::string uid, const char* from, const char* to, std::string summary = "Meeting") {
  cal::Event e{std::move(uid), cal::Interval{at(from), at(to)}, std::move(summary), cal::EventStatus::Confirmed, {}, {}};
  e.version.stamped = kStart;
  return e;
}

SyncConfig hybrid(std::vector<Source> sources) {
  SyncConfig cfg;
  cfg.sources = std::move(sources);
  cfg.freebusy_path = std::string(pod::kFreeBusyPath);
  return cfg;
}

/// A fully registered user.
World::User& setup(World& w, const std::string& name, const SyncConfig& cfg) {
  auto& u = w.add_user(name);
  w.grant_orchestrator(name);
  w.write_config(name, cfg);
  w.register_user(name);
  return u;
}

std::optional<pod::Resource> read(World& w, const std::string& name, std::string_view path) {
  return w.user(name).store->get_resource(pod::Credential::owner(w.user(name).secret), path);
}

cal::Calendar combined(World& w, const std::string& name) {
  return cal::from_linked(cal::LinkedCalendarDoc::parse(read(w, name, pod::kCombinedPath)->body));
}

std::vector<pod::Notification> inbox(World& w, const std::string& name) {
  return w.user(name).store->list_inbox(pod::Credential::owner(w.user(name).secret));
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("caldesk-orch-" + util::random_hex(4));
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("config validation") {
  const std::string base = "http://pod.example/settings/orchestrator";
  SUBCASE("minimal hybrid config") {
    auto cfg = hybrid({{"http://ext.example/cal/a.ics", "work"}});
    cfg.freebusy_path.reset();
    auto parsed = validate_config(format_config(cfg, base));
    CHECK(parsed == cfg);
    CHECK(parsed.target_path == "/calendar/combined");
    CHECK(parsed.interval_seconds == 300);
  }
  SUBCASE("full round trip keeps source order") {
    SyncConfig cfg;
    cfg.mode = SyncMode::SolidFirstHybrid;
    for (int i = 0; i < 12; ++i) cfg.sources.push_back({"http://ext.example/cal/" + std::to_string(i) + ".ics", "s" + std::to_string(i)});
    cfg.inbox_route = InboxRoute::SeparateRemoteCalendar;
    cfg.push_url = "http://ext.example/cal/push";
    cfg.window_filter = cal::Interval{at("00:00"), at("23:00")};
    cfg.interval_seconds = 60;
    cfg.freebusy_path = "/calendar/fb";
    CHECK(validate_config(format_config(cfg, base)) == cfg);
  }
  SUBCASE("hybrid without sources") {
    CHECK_THROWS_AS(validate_config(format_config(SyncConfig{}, base)), ConfigInvalid);
  }
  SUBCASE("remote route without push url") {
    SyncConfig cfg;
    cfg.mode = SyncMode::SolidFirstHybrid;
    cfg.inbox_route = InboxRoute::SeparateRemoteCalendar;
    CHECK_THROWS_AS(validate_config(format_config(cfg, base)), ConfigInvalid);
  }
  SUBCASE("every problem is listed") {
    std::string doc = "<" + base + "> <" + cal::vocab("mode") + "> \"SolidFirstHybrid\" .\n"
                      "<" + base + "> <" + cal::vocab("interval") + "> \"-5\" .\n"
                      "<" + base + "> <" + cal::vocab("target") + "> \"/inbox/x\" .\n"
                      "<" + base + "> <" + cal::vocab("windowStart") + "> \"2023-05-02T00:00:00Z\" .\n"
                      "<" + base + "#source-0> <" + cal::vocab("source") + "> \"ftp://x\" .\n";
    try {
      validate_config(doc);
      FAIL("expected ConfigInvalid");
    } catch (const ConfigInvalid& e) {
      // inboxRoute, interval, target, window, url, label, index
      CHECK(e.problems().size() == 7);
    }
  }
  SUBCASE("garbage and unknown values") {
    CHECK_THROWS_AS(validate_config("not a statement"), ConfigInvalid);
    CHECK_THROWS_AS(validate_config(""), ConfigInvalid);
    std::string doc = "<" + base + "> <" + cal::vocab("mode") + "> \"Sometimes\" .\n";
    CHECK_THROWS_AS(validate_config(doc), ConfigInvalid);
  }
}

TEST_CASE("registry file") {
  auto file = temp_path("registrations.txt");
  Registration r{testing::agent("alice"), "http://127.0.0.1:1234", "tok", kStart, std::nullopt, LastStatus::Never};
  {
    Registry reg(file);
    reg.add(r);
    CHECK_THROWS_AS(reg.add(r), AlreadyRegistered);
    reg.set_status(r.user, LastStatus::PermissionDenied, kStart + 10);
  }
  CHECK(*util::read_file(file) == "http://alice.example/profile#me http://127.0.0.1:1234 tok 2023-05-01T08:00:00Z PermissionDenied\n");
  {
    Registry reg(file);
    REQUIRE(reg.find(r.user));
    CHECK(reg.find(r.user)->last_status == LastStatus::PermissionDenied);
    reg.remove(r.user);
    CHECK_THROWS_AS(reg.remove(r.user), NotRegistered);
  }
  CHECK(*util::read_file(file) == "");
  util::write_file_atomic(file, "http://alice.example/profile#me nonsense\n");
  try {
    Registry reg(file);
    FAIL("expected CorruptState");
  } catch (const pod::CorruptState& e) {
    CHECK(e.file() == file);
  }
  std::filesystem::remove_all(file.parent_path());
}

TEST_CASE("registration") {
  World w(kStart);
  auto& alice = w.add_user("alice");
  w.grant_orchestrator("alice");

  auto reg = w.register_user("alice");
  CHECK(reg.last_status == LastStatus::Never);
  CHECK(reg.pod_base_url == alice.pod_url());
  CHECK(reg.token.size() == 64);
  CHECK_THROWS_AS(w.register_user("alice"), AlreadyRegistered);

  w.add_user("bob");
  auto& o = w.orchestrator();
  CHECK_THROWS_AS(o.register_user(w.user("bob").id, w.user("bob").pod_url(), "wrong"), GrantRejected);
  CHECK_THROWS_AS(o.register_user(w.user("bob").id, "http://127.0.0.1:1", "x"), PodUnreachable);
  // A token issued to the orchestrator beforehand works as a grant too.
  auto pre = w.token("bob", World::orchestrator_agent());
  CHECK(o.register_user(w.user("bob").id, w.user("bob").pod_url(), pre).token == pre);

  // Registration does not write to the pod; issuing the token is the only other call.
  for (const auto& name : {"alice", "bob"})
    for (const auto& entry : w.user(name).server->request_log())
      CHECK((entry.method == "GET" || entry.path == "/_admin/tokens"));

  CHECK_THROWS_AS(o.deregister(testing::agent("nobody")), NotRegistered);
  o.deregister(w.user("bob").id);
  auto reports = o.tick();
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].user == alice.id);
  CHECK_THROWS_AS(o.sync_user(w.user("bob").id), NotRegistered);
}

TEST_CASE("missing config and missing access") {
  World w(kStart);
  w.add_user("alice");
  w.register_user("alice");  // no ACL for the orchestrator at all
  auto r = w.orchestrator().sync_user(w.user("alice").id);
  CHECK(r.status == LastStatus::ConfigMissing);
  CHECK(w.orchestrator().registration(w.user("alice").id)->last_status == LastStatus::ConfigMissing);

  w.grant_orchestrator("alice");
  CHECK(w.orchestrator().sync_user(w.user("alice").id).status == LastStatus::ConfigMissing);  // 404 now

  w.user("alice").owner().put(pod::kConfigPath, "<x> <y> \"z\" .\n", "text/plain");
  auto bad = w.orchestrator().sync_user(w.user("alice").id);
  CHECK(bad.status == LastStatus::ConfigInvalid);
  CHECK(bad.detail.find("missing mode") != std::string::npos);
}

TEST_CASE("hybrid sync merges sources and is idempotent") {
  World w(kStart);
  auto work = w.external_calendar("alice-work");
  auto home = w.external_calendar("alice-home");
  w.external().create_event("alice-work", booking("w1", "09:00", "10:00", "Standup"));
  w.external().create_event("alice-home", booking("h1", "18:00", "19:00", "Dinner"));
  auto& alice = setup(w, "alice", hybrid({{ext::ics_url(work), "work"}, {ext::ics_url(home), "home"}}));

  auto r1 = w.orchestrator().sync_user(alice.id);
  CHECK(r1.status == LastStatus::Ok);
  CHECK(r1.wrote_target);
  CHECK(r1.wrote_freebusy);
  REQUIRE(r1.per_source.size() == 2);
  CHECK(r1.per_source[0].outcome == SourceOutcome::Fetched);
  auto cal = combined(w, "alice");
  CHECK(cal.owner() == alice.id);
  REQUIRE(cal.size() == 2);
  CHECK(cal.find("w1")->origin == "work");
  CHECK(cal.find("h1")->origin == "home");
  CHECK(cal.find("w1")->interval == cal::Interval{at("09:00"), at("10:00")});
  auto fb = cal::parse_freebusy(read(w, "alice", pod::kFreeBusyPath)->body);
  CHECK(fb.busy.size() == 2);

  auto before = read(w, "alice", pod::kCombinedPath);
  auto r2 = w.orchestrator().sync_user(alice.id);
  CHECK(r2.status == LastStatus::Ok);
  CHECK_FALSE(r2.wrote_target);
  CHECK_FALSE(r2.wrote_freebusy);
  CHECK(r2.per_source[0].outcome == SourceOutcome::Cached);
  CHECK(read(w, "alice", pod::kCombinedPath)->body == before->body);
  CHECK(read(w, "alice", pod::kCombinedPath)->etag == before->etag);

  // An upstream change shows up on the next sync.
  auto moved = booking("w1", "11:00", "12:00", "Standup");
  moved.version.sequence = 1;
  w.external().create_event("alice-work", moved);
  CHECK(w.orchestrator().sync_user(alice.id).wrote_target);
  CHECK(combined(w, "alice").find("w1")->interval.start() == at("11:00"));
}

TEST_CASE("overlapping bookings are flagged and notified once") {
  World w(kStart);
  auto url = w.external_calendar("carol");
  w.external().create_event("carol", booking("from-alice", "10:00", "11:00"));
  w.external().create_event("carol", booking("from-bob", "10:30", "11:30"));
  w.external().create_event("carol", booking("later", "11:30", "12:00"));
  auto& carol = setup(w, "carol", hybrid({{ext::ics_url(url), "work"}}));

  auto r = w.orchestrator().sync_user(carol.id);
  CHECK(r.status == LastStatus::Ok);
  CHECK(r.conflicts_flagged == std::vector<cal::UidPair>{{"from-alice", "from-bob"}});
  auto cal = combined(w, "carol");
  CHECK(cal.find("from-alice")->status == cal::EventStatus::Conflict);
  CHECK(cal.find("from-bob")->status == cal::EventStatus::Conflict);
  CHECK(cal.find("later")->status == cal::EventStatus::Confirmed);
  auto notes = inbox(w, "carol");
  REQUIRE(notes.size() == 1);
  CHECK(notes[0].sender == World::orchestrator_agent());
  CHECK(cal::parse_conflict(notes[0].body) == r.conflicts_flagged);

  auto again = w.orchestrator().sync_user(carol.id);
  CHECK(again.conflicts_flagged.empty());
  CHECK_FALSE(again.wrote_target);
  CHECK(inbox(w, "carol").size() == 1);

  // Moving one meeting away clears both flags.
  auto moved = booking("from-bob", "14:00", "15:00");
  moved.version.sequence = 1;
  w.external().create_event("carol", moved);
  w.orchestrator().sync_user(carol.id);
  cal = combined(w, "carol");
  CHECK(cal.find("from-alice")->status == cal::EventStatus::Confirmed);
  CHECK(cal.find("from-bob")->status == cal::EventStatus::Confirmed);
}

TEST_CASE("revocation freezes the pod") {
  World w(kStart);
  auto url = w.external_calendar("alice");
  w.external().create_event("alice", booking("a", "09:00", "10:00"));
  auto& alice = setup(w, "alice", hybrid({{ext::ics_url(url), "work"}}));
  CHECK(w.orchestrator().sync_user(alice.id).status == LastStatus::Ok);
  auto etag = read(w, "alice", pod::kCombinedPath)->etag;

  SUBCASE("ACL entry removed") { w.revoke_orchestrator("alice"); }
  SUBCASE("token revoked") {
    auto token = w.orchestrator().registration(alice.id)->token;
    alice.store->revoke_token(alice.secret, token);
  }
  for (int i = 0; i < 5; ++i) {
    auto b = booking("n" + std::to_string(i), "12:00", "13:00");
    w.external().create_event("alice", b);
    auto r = w.orchestrator().sync_user(alice.id);
    CHECK(r.status == LastStatus::PermissionDenied);
    CHECK_FALSE(r.wrote_target);
    CHECK(read(w, "alice", pod::kCombinedPath)->etag == etag);
  }
  CHECK(w.orchestrator().registration(alice.id)->last_status == LastStatus::PermissionDenied);
}

TEST_CASE("unreachable sources") {
  World w(kStart);
  auto url = w.external_calendar("alice");
  w.external().create_event("alice", booking("a", "09:00", "10:00"));
  auto& alice = setup(w, "alice", hybrid({{ext::ics_url(url), "work"}, {"http://127.0.0.1:1/cal/x.ics", "dead"}}));

  // Nothing cached for the dead source yet: the pod is left alone.
  auto r = w.orchestrator().sync_user(alice.id);
  CHECK(r.status == LastStatus::SourceUnreachable);
  CHECK(r.per_source[1].outcome == SourceOutcome::Unreachable);
  CHECK_FALSE(r.wrote_target);

  // A dropped source with a cached copy keeps contributing it.
  w.write_config("alice", hybrid({{ext::ics_url(url), "work"}}));
  CHECK(w.orchestrator().sync_user(alice.id).status == LastStatus::Ok);
  auto port = w.external_server().http().port();
  w.external_server().stop();
  auto cached = w.orchestrator().sync_user(alice.id);
  CHECK(cached.status == LastStatus::SourceUnreachable);
  CHECK_FALSE(cached.wrote_target);
  CHECK(combined(w, "alice").find("a"));
  (void)port;
}

TEST_CASE("window filter and free/busy projection") {
  World w(kStart);
  auto url = w.external_calendar("alice");
  w.external().create_event("alice", booking("in", "09:00", "10:00", "Secret interview"));
  w.external().create_event("alice", booking("edge", "07:30", "08:30"));
  auto out = booking("out", "09:00", "10:00");
  out.interval = cal::Interval{at("09:00") + 86400 * 3, at("10:00") + 86400 * 3};
  w.external().create_event("alice", out);
  auto cfg = hybrid({{ext::ics_url(url), "work"}});
  cfg.window_filter = cal::Interval{at("08:00"), at("20:00")};
  auto& alice = setup(w, "alice", cfg);
  w.orchestrator().sync_user(alice.id);

  auto cal = combined(w, "alice");
  CHECK(cal.size() == 2);
  CHECK_FALSE(cal.find("out"));
  auto fb_text = read(w, "alice", pod::kFreeBusyPath)->body;
  auto fb = cal::parse_freebusy(fb_text);
  CHECK(fb.window == *cfg.window_filter);
  CHECK(fb.busy == std::vector<cal::Interval>{{at("08:00"), at("08:30")}, {at("09:00"), at("10:00")}});
  CHECK(fb_text.find("Secret") == std::string::npos);
}

TEST_CASE("solid-only mode consumes meeting requests") {
  World w(kStart);
  SyncConfig cfg;
  cfg.mode = SyncMode::SolidOnly;
  auto& dave = setup(w, "dave", cfg);
  w.add_user("erin");
  w.share("dave", "erin");

  pod::PodClient erin_to_dave(dave.pod_url(), pod::Credential::bearer(w.token("dave", w.user("erin").id)));
  auto meeting = booking("m1", "15:00", "16:00", "Review");
  erin_to_dave.post_inbox(cal::format_meeting_request(meeting, w.user("erin").id), "text/plain");
  erin_to_dave.post_inbox("<urn:x> <" + cal::vocab("notificationType") + "> \"Chatter\" .\n", "text/plain");

  auto r = w.orchestrator().sync_user(dave.id);
  CHECK(r.status == LastStatus::Ok);
  CHECK(r.notifications_consumed == 1);
  CHECK(r.wrote_target);
  auto cal = combined(w, "dave");
  REQUIRE(cal.find("m1"));
  CHECK(cal.find("m1")->interval == meeting.interval);
  CHECK(cal.find("m1")->summary == "Review");
  CHECK(cal.find("m1")->origin == "inbox");
  auto notes = inbox(w, "dave");
  REQUIRE(notes.size() == 2);
  CHECK(notes[0].processed);
  CHECK_FALSE(notes[1].processed);  // not a meeting request

  auto before = read(w, "dave", pod::kCombinedPath);
  auto r2 = w.orchestrator().sync_user(dave.id);
  CHECK(r2.notifications_consumed == 0);
  CHECK_FALSE(r2.wrote_target);
  CHECK(read(w, "dave", pod::kCombinedPath)->body == before->body);
}

TEST_CASE("solid-first hybrid converges the same way on every route") {
  std::map<InboxRoute, std::string> targets;
  std::map<InboxRoute, std::string> freebusy;
  for (auto route : {InboxRoute::SeparateResource, InboxRoute::IcsInPod, InboxRoute::SeparateRemoteCalendar}) {
    CAPTURE(to_string(route));
    World w(kStart);
    auto src = w.external_calendar("frank-work");
    w.external().create_event("frank-work", booking("ext-1", "09:00", "10:00", "Standup"));
    auto push = w.external_calendar("frank-push");
    SyncConfig cfg;
    cfg.mode = SyncMode::SolidFirstHybrid;
    cfg.sources = {{ext::ics_url(src), "work"}};
    cfg.inbox_route = route;
    if (route == InboxRoute::SeparateRemoteCalendar) cfg.push_url = push;
    cfg.freebusy_path = std::string(pod::kFreeBusyPath);
    auto& frank = setup(w, "frank", cfg);
    w.add_user("gina");
    w.share("frank", "gina");
    pod::PodClient gina(frank.pod_url(), pod::Credential::bearer(w.token("frank", w.user("gina").id)));
    gina.post_inbox(cal::format_meeting_request(booking("inb-1", "13:00", "14:00", "Lunch"), w.user("gina").id),
                    "text/plain");
    gina.post_inbox(cal::format_meeting_request(booking("inb-2", "09:30", "10:30", "Clash"), w.user("gina").id),
                    "text/plain");

    auto r = w.orchestrator().sync_user(frank.id);
    CHECK(r.status == LastStatus::Ok);
    CHECK(r.notifications_consumed == 2);
    CHECK(r.conflicts_flagged == std::vector<cal::UidPair>{{"ext-1", "inb-2"}});
    for (const auto& n : inbox(w, "frank"))
      if (cal::notification_type(n.body) == cal::kMeetingRequest) CHECK(n.processed);

    switch (route) {
      case InboxRoute::SeparateResource:
        CHECK(cal::from_linked(cal::LinkedCalendarDoc::parse(read(w, "frank", kInboxCalendarPath)->body)).size() == 2);
        break;
      case InboxRoute::IcsInPod:
        CHECK(cal::parse_ics(read(w, "frank", kInboxIcsPath)->body).size() == 2);
        break;
      case InboxRoute::SeparateRemoteCalendar:
        CHECK(w.external().events("frank-push").size() == 2);
        break;
    }

    auto again = w.orchestrator().sync_user(frank.id);
    CHECK(again.status == LastStatus::Ok);
    CHECK_FALSE(again.wrote_target);
    CHECK(again.conflicts_flagged.empty());

    auto text = read(w, "frank", pod::kCombinedPath)->body;
    // Documents name the pod they live in; compare with the base stripped.
    std::string base = frank.pod_url();
    for (auto pos = text.find(base); pos != std::string::npos; pos = text.find(base, pos))
      text.replace(pos, base.size(), "POD");
    targets[route] = text;
    freebusy[route] = cal::format_freebusy(cal::parse_freebusy(read(w, "frank", pod::kFreeBusyPath)->body), "POD");
  }
  CHECK(targets[InboxRoute::SeparateResource] == targets[InboxRoute::IcsInPod]);
  CHECK(targets[InboxRoute::SeparateResource] == targets[InboxRoute::SeparateRemoteCalendar]);
  CHECK(freebusy[InboxRoute::SeparateResource] == freebusy[InboxRoute::SeparateRemoteCalendar]);
  CHECK(targets[InboxRoute::IcsInPod].find("inbox") != std::string::npos);
}

TEST_CASE("least privilege: GET-only sources, scoped pod writes") {
  World w(kStart);
  auto url = w.external_calendar("alice");
  w.external().create_event("alice", booking("a", "09:00", "10:00"));
  w.external().create_event("alice", booking("b", "09:30", "10:30"));
  auto& alice = setup(w, "alice", hybrid({{ext::ics_url(url), "work"}}));
  for (int i = 0; i < 5; ++i) {
    w.orchestrator().sync_user(alice.id);
    w.external().create_event("alice", booking("x" + std::to_string(i), "12:00", "13:00"));
  }
  for (const auto& e : w.external().request_log("alice"))
    if (e.client == "caldesk-orchestrator") CHECK(e.method == "GET");
  for (const auto& e : alice.server->request_log()) {
    if (e.agent != World::orchestrator_agent().iri() || e.method == "GET") continue;
    bool allowed = e.path == pod::kCombinedPath || e.path == pod::kFreeBusyPath ||
                   (e.method == "POST" && e.path.starts_with(pod::kInboxPath));
    CHECK_MESSAGE(allowed, e.method << " " << e.path);
  }
}

TEST_CASE("local storage never holds calendar content") {
  auto file = temp_path("orch.txt");
  {
    World w(kStart, file);
    auto url = w.external_calendar("alice");
    w.external().create_event("alice", booking("a", "09:00", "10:00", "SENTINEL-7f3a private"));
    auto& alice = setup(w, "alice", hybrid({{ext::ics_url(url), "work"}}));
    w.orchestrator().sync_user(alice.id);
    auto text = *util::read_file(file);
    CHECK(text.find("SENTINEL") == std::string::npos);
    CHECK(text.find(alice.id.iri() + " " + alice.pod_url() + " ") == 0);
    CHECK(text.ends_with(" Ok\n"));
  }
  std::filesystem::remove_all(file.parent_path());
}

TEST_CASE("ticks: schedule, isolation and no overlap") {
  World w(kStart);
  CHECK(w.orchestrator().tick().empty());

  std::vector<std::string> names = {"u1", "u2", "u3"};
  for (const auto& n : names) {
    auto url = w.external_calendar(n);
    w.external().create_event(n, booking(n + "-e", "09:00", "10:00"));
    auto cfg = hybrid({{ext::ics_url(url), "work"}});
    if (n == "u2") cfg.sources.push_back({"http://127.0.0.1:1/cal/gone.ics", "gone"});
    cfg.interval_seconds = 600;
    setup(w, n, cfg);
  }
  auto reports = w.orchestrator().tick();
  REQUIRE(reports.size() == 3);
  CHECK(reports[0].status == LastStatus::Ok);
  CHECK(reports[1].status == LastStatus::SourceUnreachable);
  CHECK(reports[2].status == LastStatus::Ok);

  // Nobody is due again before the interval has elapsed.
  w.clock().advance(599);
  CHECK(w.orchestrator().tick().empty());
  w.clock().advance(1);
  CHECK(w.orchestrator().tick().size() == 3);

  int ticks = 0;
  w.orchestrator().run_loop([&] {
    w.clock().advance(600);
    return ++ticks <= 3;
  });
  // Three loop ticks; the fourth call only moved the clock and stopped.
  CHECK(w.orchestrator().status()[0].last_sync == w.now() - 600);
}

TEST_CASE("a user still syncing is skipped by the tick") {
  World w(kStart);
  // A source that blocks until released.
  net::HttpService slow;
  std::promise<void> release;
  auto released = release.get_future().share();
  std::promise<void> entered;
  std::atomic<bool> first{true};
  slow.server().Get("/slow.ics", [&](const httplib::Request&, httplib::Response& res) {
    if (first.exchange(false)) {
      entered.set_value();
      released.wait();
    }
    res.set_content("BEGIN:VCALENDAR\r\nEND:VCALENDAR\r\n", "text/calendar");
  });
  slow.start("127.0.0.1", 0);

  auto& a = setup(w, "a", hybrid({{slow.base_url() + "/slow.ics", "slow"}}));
  auto url = w.external_calendar("b");
  setup(w, "b", hybrid({{ext::ics_url(url), "work"}}));

  auto running = std::async(std::launch::async, [&] { return w.orchestrator().sync_user(a.id); });
  entered.get_future().wait();
  auto reports = w.orchestrator().tick();
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].user == w.user("b").id);
  release.set_value();
  CHECK(running.get().status == LastStatus::Ok);
  slow.stop();
}

TEST_CASE("convergence against a brute-force recomputation") {
  testing::Gen g(99);
  for (int round = 0; round < 8; ++round) {
    World w(kStart);
    std::vector<std::string> cals = {"s0", "s1", "s2"};
    std::vector<Source> sources;
    for (const auto& c : cals) sources.push_back({ext::ics_url(w.external_calendar(c)), c});
    SyncConfig cfg;
    cfg.mode = SyncMode::SolidFirstHybrid;
    cfg.sources = sources;
    cfg.inbox_route = InboxRoute::SeparateResource;
    auto& u = setup(w, "u", cfg);
    w.add_user("peer");
    w.share("u", "peer");
    pod::PodClient peer(u.pod_url(), pod::Credential::bearer(w.token("u", w.user("peer").id)));

    std::vector<cal::Event> posted;
    for (int step = 0; step < 12; ++step) {
      int action = g.uniform(0, 2);
      auto e = g.event(g.uid(6));
      e.status = cal::EventStatus::Confirmed;
      e.origin.clear();
      e.version.source_rank = 0;
      if (action == 0) {
        try {
          w.external().create_event(g.pick(cals), e);
        } catch (const ext::StaleSequence&) {
        }
      } else if (action == 1) {
        peer.post_inbox(cal::format_meeting_request(e, w.user("peer").id), "text/plain");
        posted.push_back(e);
      } else {
        w.orchestrator().sync_user(u.id);
      }
    }
    w.orchestrator().sync_user(u.id);
    w.orchestrator().sync_user(u.id);

    // Expected: merge of every source (rank = index) and every posted request (rank = #sources).
    cal::Calendar want(u.id);
    for (std::size_t i = 0; i < cals.size(); ++i) {
      auto upstream = w.external().events(cals[i]);
      for (auto e : upstream.events() | std::views::values) {
        e.origin = cals[i];
        e.version.source_rank = static_cast<std::uint32_t>(i);
        cal::Calendar one(u.id);
        one.upsert(e);
        want = cal::merge(want, one).calendar;
      }
    }
    for (auto e : posted) {
      e.origin = "inbox";
      e.version.source_rank = static_cast<std::uint32_t>(cals.size());
      cal::Calendar one(u.id);
      one.upsert(e);
      want = cal::merge(want, one).calendar;
    }
    auto got = combined(w, "u");
    REQUIRE(got.size() == want.size());
    for (const auto& [uid, e] : want.events()) {
      const auto* g2 = got.find(uid);
      REQUIRE(g2);
      CHECK(g2->interval == e.interval);
      CHECK(g2->summary == e.summary);
      CHECK(g2->version.sequence == e.version.sequence);
      CHECK(g2->origin == e.origin);
    }
  }
}

TEST_CASE("http api") {
  World w(kStart);
  auto& alice = w.add_user("alice");
  w.grant_orchestrator("alice");
  auto base = w.orchestrator_server().base_url();
  auto enc = net::percent_encode(alice.id.iri());
  using nlohmann::json;
  auto post = [&](const std::string& path, const std::string& body) {
    return net::send({"POST", base + path, {}, body, "application/json"});
  };

  CHECK(net::send({"GET", base + "/health", {}, {}, {}}).status == 200);
  CHECK(post("/register", "{").status == 400);
  CHECK(post("/register", json{{"user", alice.id.iri()}, {"pod", alice.pod_url()}, {"grant", "nope"}}.dump()).status == 403);
  auto reg = post("/register", json{{"user", alice.id.iri()}, {"pod", alice.pod_url()}, {"grant", alice.secret}}.dump());
  CHECK(reg.status == 201);
  CHECK(json::parse(reg.body)["last_status"] == "Never");
  CHECK(post("/register", json{{"user", alice.id.iri()}, {"pod", alice.pod_url()}, {"grant", alice.secret}}.dump()).status == 409);

  auto sync = post("/sync/" + enc, "");
  CHECK(sync.status == 200);
  CHECK(json::parse(sync.body)["status"] == "ConfigMissing");

  auto status = net::send({"GET", base + "/status", {}, {}, {}});
  CHECK(status.status == 200);
  auto j = json::parse(status.body);
  REQUIRE(j["registrations"].size() == 1);
  CHECK(j["registrations"][0]["user"] == alice.id.iri());
  CHECK(j["registrations"][0]["last_status"] == "ConfigMissing");
  CHECK(j["registrations"][0]["last_report"]["status"] == "ConfigMissing");
  auto token = w.orchestrator().registration(alice.id)->token;
  CHECK(status.body.find(token) == std::string::npos);

  CHECK(net::send({"DELETE", base + "/register/" + enc, {}, {}, {}}).status == 204);
  CHECK(net::send({"DELETE", base + "/register/" + enc, {}, {}, {}}).status == 404);
  CHECK(post("/sync/" + enc, "").status == 404);
  CHECK(net::send({"OPTIONS", base + "/register", {}, {}, {}}).header("Access-Control-Allow-Origin") == "*");
}
