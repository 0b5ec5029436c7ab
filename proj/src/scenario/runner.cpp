#include "caldesk/scenario/runner.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>

#include "caldesk/calmodel/linked.hpp"
#include "caldesk/calmodel/notification.hpp"
#include "caldesk/common/util.hpp"
#include "caldesk/extcal/client.hpp"
#include "caldesk/scenario/world.hpp"
#include "caldesk/scheduling/booking.hpp"

namespace caldesk::scenario {

namespace {

const std::string kUnreachableUrl = "http://127.0.0.1:1/cal/unreachable.ics";

std::vector<std::string> tokenize(std::string_view line, int line_no) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == ' ' || line[i] == '\t') {
      ++i;
      continue;
    }
    if (line[i] == '#') break;
    std::string tok;
    if (line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < line.size()) {
        char c = line[i++];
        if (c == '\\' && i < line.size()) {
          tok.push_back(line[i++]);
        } else if (c == '"') {
          closed = true;
          break;
        } else {
          tok.push_back(c);
        }
      }
      if (!closed) throw ScenarioParseError(line_no, "unterminated quote");
    } else {
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') tok.push_back(line[i++]);
    }
    out.push_back(std::move(tok));
  }
  return out;
}

std::vector<std::string> list_of(const std::string& s) {
  std::vector<std::string> out;
  for (auto& p : util::split(s, ',')) {
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

std::string join(const std::vector<std::string>& v, const std::string& sep = ",") {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
  return out;
}

std::string span(const cal::Interval& iv) { return cal::format_iso(iv.start()) + "/" + cal::format_iso(iv.end()); }

bool valid_duration(const std::string& s) {
  try {
    return cal::parse_duration(s) > 0;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

std::string or_none(const std::vector<std::string>& v) { return v.empty() ? "none" : join(v); }

std::string quoted(const std::string& s) {
  if (!s.empty() && s.find_first_of(" \t\"#") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

// Arity per user action: exact count, or -1 for "at least one".
const std::map<std::string, int>& user_actions() {
  static const std::map<std::string, int> m = {
      {"external-calendar", 1}, {"grant-orchestrator", 0}, {"revoke-orchestrator", 0}, {"share-with", -1},
      {"configure", -1},        {"register", 0},           {"deregister", 0},          {"sync", 0},
      {"book", 7},              {"find", 6},               {"calendar", 0},            {"event", 1},
      {"inbox", 0},             {"freebusy", 0},           {"remember", 1},            {"unchanged", 1},
      {"external-log", 1}};
  return m;
}

}  // namespace

Scenario parse_scenario(std::string_view text, std::string name) {
  Scenario sc{std::move(name), {}};
  std::set<std::string> declared;
  int line_no = 0;
  for (const auto& raw : util::split(text, '\n')) {
    ++line_no;
    auto tokens = tokenize(util::trim(raw), line_no);
    if (tokens.empty()) continue;
    Step step;
    step.line = line_no;
    auto arrow = std::find(tokens.begin(), tokens.end(), "=>");
    std::vector<std::string> head(tokens.begin(), arrow);
    if (arrow != tokens.end()) {
      step.expect.assign(arrow + 1, tokens.end());
      if (step.expect.empty() || step.expect.size() % 2 != 0)
        throw ScenarioParseError(line_no, "expectation must be KEY VALUE pairs");
    }
    if (head.size() < 2) throw ScenarioParseError(line_no, "expected ACTOR ACTION");
    step.actor = head[0];
    step.action = head[1];
    step.args.assign(head.begin() + 2, head.end());
    const auto n = step.args.size();
    auto need_declared = [&](const std::string& who) {
      if (!declared.count(who)) throw ScenarioParseError(line_no, "undeclared actor '" + who + "'");
    };

    if (step.actor == "world") {
      if (step.action == "user") {
        if (n == 0) throw ScenarioParseError(line_no, "world user needs names");
        for (const auto& u : step.args) {
          if (u == "world" || u == "orch") throw ScenarioParseError(line_no, "reserved name '" + u + "'");
          if (!declared.insert(u).second) throw ScenarioParseError(line_no, "actor '" + u + "' declared twice");
        }
      } else if (step.action == "start") {
        if (n != 1 || !cal::try_parse_iso(step.args[0])) throw ScenarioParseError(line_no, "world start ISO-INSTANT");
      } else if (step.action == "advance") {
        if (n != 1 || !valid_duration(step.args[0])) throw ScenarioParseError(line_no, "world advance DURATION");
      } else {
        throw ScenarioParseError(line_no, "unknown world action '" + step.action + "'");
      }
    } else if (step.actor == "orch") {
      if (step.action != "tick" || n != 0) throw ScenarioParseError(line_no, "orch supports only 'tick'");
    } else {
      need_declared(step.actor);
      auto it = user_actions().find(step.action);
      if (it == user_actions().end()) throw ScenarioParseError(line_no, "unknown action '" + step.action + "'");
      if ((it->second >= 0 && n != static_cast<std::size_t>(it->second)) || (it->second < 0 && n == 0))
        throw ScenarioParseError(line_no, "wrong number of arguments for '" + step.action + "'");
      if (step.action == "share-with")
        for (const auto& u : step.args) need_declared(u);
      if (step.action == "book") {
        if (step.args[0] != "external" && step.args[0] != "inbox")
          throw ScenarioParseError(line_no, "book external|inbox UID START END SUMMARY with P,...");
        if (step.args[5] != "with") throw ScenarioParseError(line_no, "expected 'with' before participants");
        for (const auto& u : list_of(step.args[6])) need_declared(u);
        if (!cal::try_parse_iso(step.args[2]) || !cal::try_parse_iso(step.args[3]))
          throw ScenarioParseError(line_no, "bad booking interval");
      }
      if (step.action == "find") {
        if (step.args[0] != "with") throw ScenarioParseError(line_no, "find with P,... START END DURATION GRANULARITY");
        for (const auto& u : list_of(step.args[1])) need_declared(u);
        if (!cal::try_parse_iso(step.args[2]) || !cal::try_parse_iso(step.args[3]) ||
            !valid_duration(step.args[4]) || !valid_duration(step.args[5]))
          throw ScenarioParseError(line_no, "bad find window or durations");
      }
    }
    sc.steps.push_back(std::move(step));
  }
  if (sc.steps.empty()) {
    // A trailing newline does not start another line.
    if (text.ends_with('\n')) --line_no;
    throw ScenarioParseError(std::max(line_no, 1), "scenario has no steps");
  }
  return sc;
}

namespace {

/// Executes steps against one World and renders observations.
class Runner {
 public:
  Runner() : world_(cal::parse_iso("2023-05-01T00:00:00Z")) {}

  std::string execute(const Step& s) {
    if (s.actor == "world") return world_step(s);
    if (s.actor == "orch") return tick();
    return user_step(s);
  }

 private:
  std::string world_step(const Step& s) {
    if (s.action == "user") {
      for (const auto& u : s.args) world_.add_user(u);
      return "users " + join(s.args);
    }
    if (s.action == "start") world_.clock().set(cal::parse_iso(s.args[0]));
    if (s.action == "advance") world_.clock().advance(cal::parse_duration(s.args[0]));
    return "now " + cal::format_iso(world_.now());
  }

  std::string name_of(const AgentId& id) const {
    for (const auto& n : world_names_)
      if (World::agent_for(n) == id) return n;
    return id.iri();
  }

  std::string tick() {
    std::vector<std::string> synced;
    for (const auto& r : world_.orchestrator().tick()) synced.push_back(name_of(r.user) + ":" + orch::to_string(r.status));
    return "synced " + or_none(synced);
  }

  std::string user_step(const Step& s) {
    const std::string& me = s.actor;
    auto& u = world_.user(me);
    world_names_.insert(me);
    const auto& a = s.action;
    if (a == "external-calendar") {
      world_.external_calendar(s.args[0]);
      if (!booking_calendar_.count(me)) booking_calendar_[me] = s.args[0];
      return "calendar " + s.args[0];
    }
    if (a == "grant-orchestrator") {
      world_.grant_orchestrator(me);
      return "granted yes";
    }
    if (a == "revoke-orchestrator") {
      world_.revoke_orchestrator(me);
      return "revoked yes";
    }
    if (a == "share-with") {
      for (const auto& other : s.args) world_.share(me, other);
      return "shared " + join(s.args);
    }
    if (a == "configure") return configure(me, s.args);
    if (a == "register") {
      world_.register_user(me);
      return "status " + orch::to_string(world_.orchestrator().registration(u.id)->last_status);
    }
    if (a == "deregister") {
      world_.orchestrator().deregister(u.id);
      return "deregistered yes";
    }
    if (a == "sync") {
      auto r = world_.orchestrator().sync_user(u.id);
      return "status " + orch::to_string(r.status) + " wrote " + (r.wrote_target ? "yes" : "no") + " conflicts " +
             std::to_string(r.conflicts_flagged.size()) + " consumed " + std::to_string(r.notifications_consumed);
    }
    if (a == "book") return book(me, s.args);
    if (a == "find") return find(me, s.args);
    if (a == "calendar") {
      auto cal = combined(me);
      if (!cal) return "events missing";
      std::vector<std::string> items;
      for (const auto& [uid, e] : cal->events()) items.push_back(uid + ":" + std::string(cal::to_string(e.status)));
      return "events " + or_none(items);
    }
    if (a == "event") {
      auto cal = combined(me);
      const cal::Event* e = cal ? cal->find(s.args[0]) : nullptr;
      if (!e) return "interval missing status missing";
      return "interval " + span(e->interval) + " status " + std::string(cal::to_string(e->status)) + " origin " +
             (e->origin.empty() ? "-" : e->origin);
    }
    if (a == "inbox") {
      std::size_t meeting = 0, conflict = 0, processed = 0;
      auto notes = u.store->list_inbox(pod::Credential::owner(u.secret));
      for (const auto& n : notes) {
        std::optional<std::string> type;
        try {
          type = cal::notification_type(n.body);
        } catch (const std::exception&) {
        }
        meeting += type == cal::kMeetingRequest;
        conflict += type == cal::kConflict;
        processed += n.processed;
      }
      return "total " + std::to_string(notes.size()) + " meeting " + std::to_string(meeting) + " conflict " +
             std::to_string(conflict) + " processed " + std::to_string(processed);
    }
    if (a == "freebusy") {
      auto res = read(me, pod::kFreeBusyPath);
      if (!res) return "busy missing";
      std::vector<std::string> items;
      for (const auto& iv : cal::parse_freebusy(res->body).busy) items.push_back(span(iv));
      return "busy " + or_none(items);
    }
    if (a == "remember") {
      auto res = read(me, s.args[0]);
      remembered_[me + " " + s.args[0]] = res ? res->body : std::string();
      return "saved " + std::string(res ? "yes" : "missing");
    }
    if (a == "unchanged") {
      auto it = remembered_.find(me + " " + s.args[0]);
      if (it == remembered_.end()) throw std::invalid_argument("nothing remembered for " + s.args[0]);
      auto res = read(me, s.args[0]);
      return std::string("unchanged ") + (res && res->body == it->second ? "yes" : "no");
    }
    if (a == "external-log") {
      std::size_t total = 0, non_get = 0;
      for (const auto& e : world_.external().request_log(s.args[0])) {
        if (e.client != "caldesk-orchestrator") continue;
        ++total;
        non_get += e.method != "GET";
      }
      return "orchestrator-requests " + std::to_string(total) + " non-get " + std::to_string(non_get);
    }
    throw std::logic_error("unhandled action " + a);
  }

  std::string configure(const std::string& me, const std::vector<std::string>& args) {
    orch::SyncConfig cfg;
    auto mode = orch::parse_mode(args[0]);
    if (!mode) throw std::invalid_argument("unknown mode " + args[0]);
    cfg.mode = *mode;
    cfg.freebusy_path = std::string(pod::kFreeBusyPath);
    for (std::size_t i = 1; i < args.size(); ++i) {
      auto eq = args[i].find('=');
      if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got " + args[i]);
      std::string key = args[i].substr(0, eq), value = args[i].substr(eq + 1);
      if (key == "sources") {
        for (const auto& item : list_of(value)) {
          auto colon = item.find(':');
          if (colon == std::string::npos) throw std::invalid_argument("sources are LABEL:CALENDAR");
          std::string calname = item.substr(colon + 1);
          std::string url = calname == "unreachable" ? kUnreachableUrl
                                                     : ext::ics_url(world_.external_server().calendar_url(calname));
          cfg.sources.push_back({url, item.substr(0, colon)});
        }
      } else if (key == "freebusy") {
        if (value == "off") cfg.freebusy_path.reset();
        else cfg.freebusy_path = value;
      } else if (key == "route") {
        cfg.inbox_route = orch::parse_route(value);
        if (!cfg.inbox_route) throw std::invalid_argument("unknown route " + value);
      } else if (key == "push") {
        cfg.push_url = world_.external_calendar(value);
      } else if (key == "window") {
        auto slash = value.find('/');
        cfg.window_filter = cal::Interval{cal::parse_iso(value.substr(0, slash)), cal::parse_iso(value.substr(slash + 1))};
      } else if (key == "interval") {
        cfg.interval_seconds = std::stoll(value);
      } else if (key == "target") {
        cfg.target_path = value;
      } else {
        throw std::invalid_argument("unknown config key " + key);
      }
    }
    world_.write_config(me, cfg);
    return "mode " + orch::to_string(cfg.mode);
  }

  std::vector<AgentId> participants(const std::string& list) {
    std::vector<AgentId> out;
    for (const auto& n : list_of(list)) {
      world_names_.insert(n);
      out.push_back(world_.user(n).id);
    }
    return out;
  }

  std::string book(const std::string& me, const std::vector<std::string>& args) {
    auto& u = world_.user(me);
    sched::Slot slot{cal::Interval{cal::parse_iso(args[2]), cal::parse_iso(args[3])}};
    auto req = sched::make_request(u.id, participants(args[6]), slot, args[4], world_.now(), args[1]);
    std::vector<sched::BookingOutcome> outcomes;
    if (args[0] == "external") {
      std::map<AgentId, std::string> urls;
      for (const auto& p : req.participants) {
        auto name = name_of(p);
        auto it = booking_calendar_.find(name);
        if (it == booking_calendar_.end()) throw std::invalid_argument(name + " has no external calendar");
        urls[p] = world_.external_server().calendar_url(it->second);
      }
      outcomes = sched::book_via_external(req, urls);
    } else {
      std::map<AgentId, sched::InboxTarget> inboxes;
      for (const auto& p : req.participants) {
        auto& target = world_.user(name_of(p));
        auto cred = p == u.id ? pod::Credential::owner(u.secret) : pod::Credential::bearer(world_.token(target.name, u.id));
        inboxes[p] = {target.pod_url(), cred};
      }
      outcomes = sched::book_via_inbox(req, inboxes);
    }
    std::vector<std::string> ok, failed;
    for (const auto& o : outcomes) {
      if (o.ok()) ok.push_back(name_of(o.participant));
      else failed.push_back(name_of(o.participant) + ":" + sched::to_string(o.failure));
    }
    return "booked " + or_none(ok) + " failed " + or_none(failed);
  }

  std::string find(const std::string& me, const std::vector<std::string>& args) {
    auto& u = world_.user(me);
    // Only the listed participants; list yourself to include your own projection.
    std::vector<AgentId> who;
    for (const auto& p : participants(args[1]))
      if (std::find(who.begin(), who.end(), p) == who.end()) who.push_back(p);
    std::vector<cal::FreeBusy> fbs;
    for (const auto& p : who) {
      auto& target = world_.user(name_of(p));
      auto cred = p == u.id ? pod::Credential::owner(u.secret) : pod::Credential::bearer(world_.token(target.name, u.id));
      fbs.push_back(sched::fetch_freebusy(pod::PodClient(target.pod_url(), cred)));
    }
    cal::Interval window{cal::parse_iso(args[2]), cal::parse_iso(args[3])};
    auto slots = sched::joint_availability(fbs, window, cal::parse_duration(args[4]), cal::parse_duration(args[5]));
    std::vector<std::string> starts;
    for (const auto& s : slots) starts.push_back(cal::format_iso(s.interval.start()));
    return "slots " + or_none(starts);
  }

  std::optional<pod::Resource> read(const std::string& me, std::string_view path) {
    auto& u = world_.user(me);
    try {
      return u.store->get_resource(pod::Credential::owner(u.secret), path);
    } catch (const pod::StoreError& e) {
      if (e.code() == pod::ErrorCode::NotFound) return std::nullopt;
      throw;
    }
  }

  std::optional<cal::Calendar> combined(const std::string& me) {
    auto res = read(me, pod::kCombinedPath);
    if (!res) return std::nullopt;
    return cal::from_linked(cal::LinkedCalendarDoc::parse(res->body));
  }

  World world_;
  std::set<std::string> world_names_;
  std::map<std::string, std::string> booking_calendar_;
  std::map<std::string, std::string> remembered_;
};

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const orch::AlreadyRegistered*>(&e)) return "AlreadyRegistered";
  if (dynamic_cast<const orch::NotRegistered*>(&e)) return "NotRegistered";
  if (dynamic_cast<const orch::GrantRejected*>(&e)) return "GrantRejected";
  if (dynamic_cast<const orch::PodUnreachable*>(&e)) return "PodUnreachable";
  if (dynamic_cast<const sched::WindowMismatch*>(&e)) return "WindowMismatch";
  if (auto* se = dynamic_cast<const pod::StoreError*>(&e)) {
    switch (se->code()) {
      case pod::ErrorCode::Forbidden: return "Forbidden";
      case pod::ErrorCode::Unauthorized: return "Unauthorized";
      case pod::ErrorCode::NotFound: return "NotFound";
      default: return "StoreError";
    }
  }
  if (dynamic_cast<const net::Unreachable*>(&e)) return "Unreachable";
  return "Error";
}

std::string render(const Step& s) {
  std::string out = s.actor + " " + s.action;
  for (const auto& a : s.args) out += " " + quoted(a);
  return out;
}

/// Empty when every expected key is observed with the expected value.
std::string mismatch(const std::vector<std::string>& expect, const std::string& observed) {
  auto obs = util::split(observed, ' ');
  std::map<std::string, std::string> pairs;
  for (std::size_t i = 0; i + 1 < obs.size(); i += 2) pairs[obs[i]] = obs[i + 1];
  std::vector<std::string> wrong;
  for (std::size_t i = 0; i + 1 < expect.size(); i += 2) {
    auto it = pairs.find(expect[i]);
    if (it == pairs.end() || it->second != expect[i + 1])
      wrong.push_back(expect[i] + " " + expect[i + 1]);
  }
  return wrong.empty() ? std::string() : "expected " + join(wrong, ", ");
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, std::ostream& out) {
  RunResult result;
  Runner runner;
  out << "scenario " << scenario.name << "\n";
  std::size_t passed = 0;
  for (const auto& step : scenario.steps) {
    StepResult r;
    r.line = step.line;
    try {
      r.observed = runner.execute(step);
    } catch (const std::exception& e) {
      r.observed = "error " + error_kind(e);
      r.message = e.what();
    }
    bool errored = r.observed.starts_with("error ");
    if (!step.expect.empty()) {
      auto diff = mismatch(step.expect, r.observed);
      r.verdict = diff.empty() ? Verdict::Pass : Verdict::Fail;
      if (!diff.empty()) r.message = diff + (r.message.empty() ? "" : " (" + r.message + ")");
    } else {
      r.verdict = errored ? Verdict::Fail : Verdict::Done;
    }
    const char* tag = r.verdict == Verdict::Pass ? "[PASS]" : r.verdict == Verdict::Fail ? "[FAIL]" : "[done]";
    out << tag << " " << step.line << ": " << render(step) << " -> " << r.observed << "\n";
    if (r.verdict == Verdict::Fail) out << "       " << r.message << "\n";
    result.steps.push_back(r);
    if (r.verdict == Verdict::Fail) {
      result.passed = false;
      break;
    }
    ++passed;
  }
  out << "result " << (result.passed ? "PASS" : "FAIL") << " " << passed << "/" << scenario.steps.size() << " steps\n";
  return result;
}

}  // namespace caldesk::scenario
