#include <signal.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "caldesk/common/util.hpp"
#include "caldesk/extcal/service.hpp"
#include "caldesk/orchestrator/orchestrator.hpp"
#include "caldesk/orchestrator/server.hpp"
#include "caldesk/podstore/client.hpp"
#include "caldesk/podstore/server.hpp"
#include "caldesk/scenario/runner.hpp"
#include "caldesk/scheduling/availability.hpp"
#include "caldesk/scheduling/booking.hpp"
#include "json.hpp"

using namespace caldesk;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;
constexpr int kPermission = 3;
constexpr int kNetwork = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Blocks SIGINT/SIGTERM before any server thread exists so that only sigwait sees them.
sigset_t block_stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

/// Waits up to `seconds` for a stop signal. Returns true if one arrived.
bool wait_for_stop(const sigset_t& set, std::optional<double> seconds) {
  if (!seconds) {
    int sig = 0;
    sigwait(&set, &sig);
    return true;
  }
  timespec ts{};
  ts.tv_sec = static_cast<time_t>(*seconds);
  ts.tv_nsec = static_cast<long>((*seconds - static_cast<double>(ts.tv_sec)) * 1e9);
  return sigtimedwait(&set, nullptr, &ts) > 0;
}

void announce(const std::string& what, const std::string& url) {
  std::cout << what << " listening " << url << std::endl;
}

AgentId parse_agent(const std::string& text) {
  try {
    return AgentId::parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError("bad agent IRI '" + text + "': " + e.what());
  }
}

cal::Instant parse_instant(const std::string& text) {
  auto t = cal::try_parse_iso(text);
  if (!t) throw UsageError("bad instant '" + text + "' (expected YYYY-MM-DDTHH:MM:SSZ)");
  return *t;
}

std::int64_t parse_dur(const std::string& text) {
  try {
    return cal::parse_duration(text);
  } catch (const std::invalid_argument&) {
    throw UsageError("bad duration '" + text + "' (expected {n}m or {n}h)");
  }
}

/// `token:VALUE`, `owner:SECRET` or `anonymous`.
pod::Credential parse_credential(const std::string& text) {
  if (text == "anonymous") return pod::Credential::anonymous();
  if (text.starts_with("token:")) return pod::Credential::bearer(text.substr(6));
  if (text.starts_with("owner:")) return pod::Credential::owner(text.substr(6));
  throw UsageError("bad credential '" + text + "' (token:VALUE, owner:SECRET or anonymous)");
}

template <class T>
std::vector<T> per_participant(const std::vector<T>& values, std::size_t n, const std::string& what) {
  if (values.size() == n) return values;
  if (values.size() == 1) return std::vector<T>(n, values.front());
  throw UsageError("give one " + what + " or one per participant");
}

int exit_code_for(sched::Failure f) {
  switch (f) {
    case sched::Failure::None: return kOk;
    case sched::Failure::Forbidden:
    case sched::Failure::Unauthorized: return kPermission;
    case sched::Failure::Unreachable: return kNetwork;
    default: return kFailed;
  }
}

int exit_code_for_status(int http_status) {
  if (http_status == 400) return kUsage;
  if (http_status == 401 || http_status == 403) return kPermission;
  if (http_status == 502 || http_status == 503 || http_status == 504) return kNetwork;
  return kFailed;
}

std::string trim_slash(std::string url) {
  while (url.ends_with('/')) url.pop_back();
  return url;
}

json call_orchestrator(const std::string& method, const std::string& url, const std::string& body,
                       int& status) {
  net::Request req{method, url, {}, body, body.empty() ? "" : "application/json"};
  auto res = net::send(req, std::chrono::seconds(60));
  status = res.status;
  return json::parse(res.body, nullptr, false);
}

// ---- subcommand bodies -------------------------------------------------------------

struct ServeFlags {
  std::string host = "127.0.0.1";
  int port = 0;
};

struct PodServeFlags : ServeFlags {
  std::string owner;
  std::string secret;
  std::string data;
};

int pod_serve(const PodServeFlags& f) {
  auto signals = block_stop_signals();
  pod::PodOptions opts;
  opts.owner = parse_agent(f.owner);
  opts.owner_secret = f.secret;
  if (!f.data.empty()) opts.data_dir = f.data;
  pod::Store store(std::move(opts));
  pod::PodServer server(store);
  server.start(f.host, f.port);
  announce("pod", server.base_url());
  wait_for_stop(signals, std::nullopt);
  server.stop();
  return kOk;
}

struct ExtServeFlags : ServeFlags {
  std::vector<std::string> calendars;
};

int extcal_serve(const ExtServeFlags& f) {
  auto signals = block_stop_signals();
  ext::CalendarService service;
  for (const auto& c : f.calendars) {
    auto eq = c.find('=');
    std::string id = c.substr(0, eq);
    service.add_calendar(id, eq == std::string::npos ? id : c.substr(eq + 1));
  }
  ext::CalendarServer server(service);
  server.start(f.host, f.port);
  announce("extcal", server.base_url());
  wait_for_stop(signals, std::nullopt);
  server.stop();
  return kOk;
}

struct OrchServeFlags : ServeFlags {
  std::string agent = "http://localhost/orchestrator#me";
  std::string storage;
  double tick_every = 10;
  std::int64_t default_interval = orch::kDefaultIntervalSeconds;
};

int orch_serve(const OrchServeFlags& f) {
  if (f.tick_every <= 0) throw UsageError("--tick-every must be positive");
  auto signals = block_stop_signals();
  orch::OrchestratorOptions opts;
  opts.agent = parse_agent(f.agent);
  if (!f.storage.empty()) opts.storage = f.storage;
  opts.default_interval = f.default_interval;
  orch::Orchestrator orchestrator(std::move(opts));
  orch::OrchestratorServer server(orchestrator);
  server.start(f.host, f.port);
  announce("orchestrator", server.base_url());
  orchestrator.run_loop([&] { return !wait_for_stop(signals, f.tick_every); });
  server.stop();
  return kOk;
}

struct RegisterFlags {
  std::string orch;
  std::string user;
  std::string pod;
  std::string grant;
};

int orch_register(const RegisterFlags& f) {
  parse_agent(f.user);
  json body{{"user", f.user}, {"pod", f.pod}, {"grant", f.grant}};
  int status = 0;
  auto reply = call_orchestrator("POST", trim_slash(f.orch) + "/register", body.dump(), status);
  if (status == 201) {
    std::cout << "registered " << reply.value("user", f.user) << " status "
              << reply.value("last_status", "?") << "\n";
    return kOk;
  }
  std::cerr << "register failed: HTTP " << status;
  if (reply.is_object()) std::cerr << " " << reply.value("error", "") << ": " << reply.value("message", "");
  std::cerr << "\n";
  return exit_code_for_status(status);
}

struct SyncFlags {
  std::string orch;
  std::string user;
  bool json_out = false;
};

int orch_sync(const SyncFlags& f) {
  parse_agent(f.user);
  int status = 0;
  auto url = trim_slash(f.orch) + "/sync/" + net::percent_encode(f.user);
  auto report = call_orchestrator("POST", url, "", status);
  if (status != 200 || !report.is_object()) {
    std::cerr << "sync failed: HTTP " << status;
    if (report.is_object()) std::cerr << " " << report.value("error", "") << ": " << report.value("message", "");
    std::cerr << "\n";
    return status == 404 ? kFailed : exit_code_for_status(status);
  }
  if (f.json_out) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::cout << "status " << report.value("status", "?") << "\n";
    for (const auto& s : report["per_source"])
      std::cout << "source " << s.value("label", "") << " " << s.value("outcome", "") << "\n";
    std::cout << "wrote_target " << (report.value("wrote_target", false) ? "yes" : "no") << "\n";
    std::cout << "wrote_freebusy " << (report.value("wrote_freebusy", false) ? "yes" : "no") << "\n";
    for (const auto& p : report["conflicts_flagged"])
      std::cout << "conflict " << p[0].get<std::string>() << " " << p[1].get<std::string>() << "\n";
    std::cout << "consumed " << report.value("notifications_consumed", 0) << "\n";
    if (report.contains("detail")) std::cout << "detail " << report["detail"].get<std::string>() << "\n";
  }
  auto st = report.value("status", "");
  if (st == "Ok") return kOk;
  if (st == "PermissionDenied") return kPermission;
  if (st == "SourceUnreachable" || st == "PodUnreachable") return kNetwork;
  return kFailed;
}

struct FindFlags {
  std::vector<std::string> pods;
  std::vector<std::string> credentials;
  std::string start;
  std::string end;
  std::string duration;
  std::string granularity;
};

int schedule_find(const FindFlags& f) {
  auto creds = per_participant(f.credentials.empty() ? std::vector<std::string>{"anonymous"} : f.credentials,
                               f.pods.size(), "--credential");
  auto start = parse_instant(f.start);
  auto end = parse_instant(f.end);
  if (!(start < end)) throw UsageError("--start must be before --end");
  auto duration = parse_dur(f.duration);
  auto granularity = parse_dur(f.granularity);

  std::vector<cal::FreeBusy> fbs;
  for (std::size_t i = 0; i < f.pods.size(); ++i)
    fbs.push_back(sched::fetch_freebusy(pod::PodClient(f.pods[i], parse_credential(creds[i]))));
  std::vector<sched::Slot> slots;
  try {
    slots = sched::joint_availability(fbs, cal::Interval(start, end), duration, granularity);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  for (const auto& s : slots)
    std::cout << cal::format_iso(s.interval.start()) << " " << cal::format_iso(s.interval.end()) << "\n";
  return kOk;
}

struct BookFlags {
  std::string via;
  std::string organizer;
  std::vector<std::string> participants;
  std::vector<std::string> targets;
  std::vector<std::string> credentials;
  std::string start;
  std::string end;
  std::string summary;
  std::string uid;
};

int schedule_book(const BookFlags& f) {
  auto organizer = parse_agent(f.organizer);
  std::vector<AgentId> people;
  for (const auto& p : f.participants) people.push_back(parse_agent(p));
  auto start = parse_instant(f.start);
  auto end = parse_instant(f.end);
  if (!(start < end)) throw UsageError("--start must be before --end");

  auto req = sched::make_request(organizer, people, sched::Slot{cal::Interval(start, end)}, f.summary,
                                 cal::system_clock()(), f.uid);
  // Targets line up with --participant; the organizer may add one more in front.
  std::vector<AgentId> everyone = req.participants;
  std::vector<std::string> targets = f.targets;
  if (targets.size() != everyone.size()) {
    if (targets.size() == people.size() && everyone.size() == people.size() + 1)
      everyone.erase(everyone.begin());
    else
      throw UsageError("give one --target per participant (optionally the organizer first)");
  }
  req.participants = everyone;

  std::vector<sched::BookingOutcome> outcomes;
  if (f.via == "external") {
    std::map<AgentId, std::string> urls;
    for (std::size_t i = 0; i < everyone.size(); ++i) urls[everyone[i]] = targets[i];
    outcomes = sched::book_via_external(req, urls);
  } else {
    auto creds = per_participant(f.credentials.empty() ? std::vector<std::string>{"anonymous"} : f.credentials,
                                 everyone.size(), "--credential");
    std::map<AgentId, sched::InboxTarget> inboxes;
    for (std::size_t i = 0; i < everyone.size(); ++i)
      inboxes[everyone[i]] = sched::InboxTarget{targets[i], parse_credential(creds[i])};
    outcomes = sched::book_via_inbox(req, inboxes);
  }

  int code = kOk;
  std::cout << "uid " << req.uid << "\n";
  for (const auto& o : outcomes) {
    if (o.ok()) {
      std::cout << o.participant.iri() << " ok\n";
      continue;
    }
    std::cout << o.participant.iri() << " " << sched::to_string(o.failure) << "\n";
    std::cerr << o.participant.iri() << ": " << o.detail << "\n";
    int c = exit_code_for(o.failure);
    // Permission problems outrank network ones, which outrank everything else.
    if (code == kOk || c == kPermission || (c == kNetwork && code == kFailed)) code = c;
  }
  return code;
}

int scenario_run(const std::vector<std::string>& files) {
  bool all_passed = true;
  for (const auto& file : files) {
    auto text = util::read_file(file);
    if (!text) throw UsageError("cannot read " + file);
    std::string name = std::filesystem::path(file).stem().string();
    scenario::Scenario sc;
    try {
      sc = scenario::parse_scenario(*text, name);
    } catch (const scenario::ScenarioParseError& e) {
      std::cerr << file << ":" << e.line() << ": " << e.what() << "\n";
      return kUsage;
    }
    all_passed = scenario::run_scenario(sc, std::cout).passed && all_passed;
  }
  return all_passed ? kOk : kFailed;
}

struct InspectFlags {
  std::string pod;
  std::string secret;
  std::string path;
  bool acl = false;
  bool inbox = false;
};

int inspect(const InspectFlags& f) {
  pod::PodClient client(f.pod, pod::Credential::owner(f.secret));
  if (f.acl) {
    std::cout << pod::format_acl(client.get_acl());
    return kOk;
  }
  if (f.inbox) {
    for (const auto& id : client.list_inbox()) {
      auto n = client.get_notification(id);
      std::cout << id << " " << (n.sender.empty() ? "-" : n.sender.iri()) << " "
                << cal::format_iso(n.received) << " " << (n.processed ? "processed" : "pending") << " "
                << cal::notification_type(n.body).value_or("-") << "\n";
    }
    return kOk;
  }
  if (f.path.empty()) throw UsageError("inspect needs a PATH, --acl or --inbox");
  std::cout << client.get(f.path).body;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"caldesk: calendar sync and meeting scheduling over personal data stores"};
  app.require_subcommand(1);
  std::function<int()> action;

  auto add_serve_flags = [](CLI::App* cmd, ServeFlags& f) {
    cmd->add_option("--host", f.host, "Address to bind")->capture_default_str();
    cmd->add_option("--port", f.port, "Port to bind, 0 picks a free one")->capture_default_str();
  };

  // pod
  auto* pod_cmd = app.add_subcommand("pod", "Simulated personal data store");
  pod_cmd->require_subcommand(1);
  PodServeFlags pod_flags;
  auto* pod_serve_cmd = pod_cmd->add_subcommand("serve", "Serve one pod over HTTP");
  add_serve_flags(pod_serve_cmd, pod_flags);
  pod_serve_cmd->add_option("--owner", pod_flags.owner, "Owner WebID")->required();
  pod_serve_cmd->add_option("--secret", pod_flags.secret, "Owner secret")->required()->envname("CALDESK_OWNER_SECRET");
  pod_serve_cmd->add_option("--data", pod_flags.data, "Persist state in this directory");
  pod_serve_cmd->callback([&] { action = [&] { return pod_serve(pod_flags); }; });

  // extcal
  auto* ext_cmd = app.add_subcommand("extcal", "Mock centralized calendar service");
  ext_cmd->require_subcommand(1);
  ExtServeFlags ext_flags;
  auto* ext_serve_cmd = ext_cmd->add_subcommand("serve", "Serve external calendars over HTTP");
  add_serve_flags(ext_serve_cmd, ext_flags);
  ext_serve_cmd->add_option("--calendar", ext_flags.calendars, "Calendar to create, ID or ID=LABEL");
  ext_serve_cmd->callback([&] { action = [&] { return extcal_serve(ext_flags); }; });

  // orch
  auto* orch_cmd = app.add_subcommand("orch", "Sync orchestrator");
  orch_cmd->require_subcommand(1);
  OrchServeFlags orch_flags;
  auto* orch_serve_cmd = orch_cmd->add_subcommand("serve", "Run the orchestrator and its HTTP API");
  add_serve_flags(orch_serve_cmd, orch_flags);
  orch_serve_cmd->add_option("--agent", orch_flags.agent, "Identity tokens are issued to")->capture_default_str();
  orch_serve_cmd->add_option("--storage", orch_flags.storage, "Registration file");
  orch_serve_cmd->add_option("--tick-every", orch_flags.tick_every, "Seconds between ticks")->capture_default_str();
  orch_serve_cmd->add_option("--default-interval", orch_flags.default_interval,
                             "Sync interval in seconds before a config is read")->capture_default_str();
  orch_serve_cmd->callback([&] { action = [&] { return orch_serve(orch_flags); }; });

  RegisterFlags reg_flags;
  auto* reg_cmd = orch_cmd->add_subcommand("register", "Register a user with a running orchestrator");
  reg_cmd->add_option("--orch", reg_flags.orch, "Orchestrator base URL")->required();
  reg_cmd->add_option("--user", reg_flags.user, "User WebID")->required();
  reg_cmd->add_option("--pod", reg_flags.pod, "User pod base URL")->required();
  reg_cmd->add_option("--grant", reg_flags.grant, "Pod owner secret or a token issued to the orchestrator")
      ->required();
  reg_cmd->callback([&] { action = [&] { return orch_register(reg_flags); }; });

  SyncFlags sync_flags;
  auto* sync_cmd = orch_cmd->add_subcommand("sync", "Sync one registered user now");
  sync_cmd->add_option("--orch", sync_flags.orch, "Orchestrator base URL")->required();
  sync_cmd->add_option("--user", sync_flags.user, "User WebID")->required();
  sync_cmd->add_flag("--json", sync_flags.json_out, "Print the full report as JSON");
  sync_cmd->callback([&] { action = [&] { return orch_sync(sync_flags); }; });

  // schedule
  auto* sched_cmd = app.add_subcommand("schedule", "Joint availability and booking");
  sched_cmd->require_subcommand(1);
  FindFlags find_flags;
  auto* find_cmd = sched_cmd->add_subcommand("find", "Print free slots common to all participants");
  find_cmd->add_option("--pod", find_flags.pods, "Participant pod base URL")->required();
  find_cmd->add_option("--credential", find_flags.credentials,
                       "token:VALUE, owner:SECRET or anonymous; one, or one per --pod");
  find_cmd->add_option("--start", find_flags.start, "Window start")->required();
  find_cmd->add_option("--end", find_flags.end, "Window end")->required();
  find_cmd->add_option("--duration", find_flags.duration, "Meeting length, e.g. 60m")->required();
  find_cmd->add_option("--granularity", find_flags.granularity, "Slot grid step, e.g. 30m")->required();
  find_cmd->callback([&] { action = [&] { return schedule_find(find_flags); }; });

  BookFlags book_flags;
  auto* book_cmd = sched_cmd->add_subcommand("book", "Send a meeting to every participant");
  book_cmd->add_option("--via", book_flags.via, "external or inbox")
      ->required()
      ->check(CLI::IsMember({"external", "inbox"}));
  book_cmd->add_option("--organizer", book_flags.organizer, "Organizer WebID")->required();
  book_cmd->add_option("--participant", book_flags.participants, "Participant WebID")->required();
  book_cmd->add_option("--target", book_flags.targets,
                       "External calendar URL or pod base URL, in participant order")
      ->required();
  book_cmd->add_option("--credential", book_flags.credentials, "Inbox credential; one, or one per target");
  book_cmd->add_option("--start", book_flags.start, "Meeting start")->required();
  book_cmd->add_option("--end", book_flags.end, "Meeting end")->required();
  book_cmd->add_option("--summary", book_flags.summary, "Meeting title")->required();
  book_cmd->add_option("--uid", book_flags.uid, "Event uid; generated when absent");
  book_cmd->callback([&] { action = [&] { return schedule_book(book_flags); }; });

  // scenario
  auto* scn_cmd = app.add_subcommand("scenario", "Scripted multi-party scenarios");
  scn_cmd->require_subcommand(1);
  std::vector<std::string> scn_files;
  auto* run_cmd = scn_cmd->add_subcommand("run", "Run scenario files against in-process servers");
  run_cmd->add_option("file", scn_files, "Scenario file")->required()->check(CLI::ExistingFile);
  run_cmd->callback([&] { action = [&] { return scenario_run(scn_files); }; });

  // inspect
  InspectFlags ins_flags;
  auto* ins_cmd = app.add_subcommand("inspect", "Dump a pod resource as its owner");
  ins_cmd->add_option("--pod", ins_flags.pod, "Pod base URL")->required();
  ins_cmd->add_option("--secret", ins_flags.secret, "Owner secret")->required()->envname("CALDESK_OWNER_SECRET");
  ins_cmd->add_option("path", ins_flags.path, "Resource path, e.g. /calendar/combined");
  ins_cmd->add_flag("--acl", ins_flags.acl, "Print the ACL table instead");
  ins_cmd->add_flag("--inbox", ins_flags.inbox, "List inbox notifications instead");
  ins_cmd->callback([&] { action = [&] { return inspect(ins_flags); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const pod::CorruptState& e) {
    std::cerr << "error: corrupt state in " << e.file().string() << ": " << e.what() << "\n";
    return kFailed;
  } catch (const net::AddressInUse& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  } catch (const pod::StoreError& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case pod::ErrorCode::Unauthorized:
      case pod::ErrorCode::Forbidden: return kPermission;
      case pod::ErrorCode::BadRequest: return kUsage;
      default: return kFailed;
    }
  } catch (const net::Unreachable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNetwork;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
}
