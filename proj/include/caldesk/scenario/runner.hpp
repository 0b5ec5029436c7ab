#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace caldesk::scenario {

class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct Step {
  int line = 0;
  std::string actor;
  std::string action;
  std::vector<std::string> args;
  /// `key value` pairs after `=>`; empty when the step only acts.
  std::vector<std::string> expect;
};

struct Scenario {
  std::string name;
  std::vector<Step> steps;
};

/// Line format: `ACTOR ACTION [ARG...] [=> KEY VALUE [KEY VALUE...]]`, `#` starts a
/// comment, double quotes group words. Users must be declared (`world user NAME...`)
/// before they act or are named. Throws ScenarioParseError with the offending line.
///
/// Actions and what they observe:
///
///   world user NAME...                 users NAME,...
///   world start ISO | advance DUR      now ISO
///   orch tick                          synced NAME:Status,...|none
///   U external-calendar CAL            calendar CAL (the first one is U's booking calendar)
///   U grant-orchestrator               granted yes
///   U revoke-orchestrator              revoked yes
///   U share-with NAME...               shared NAME,...
///   U configure MODE [KEY=VALUE...]    mode MODE
///       sources=LABEL:CAL,...  (CAL `unreachable` is a dead URL), freebusy=PATH|off,
///       route=ROUTE, push=CAL, window=ISO/ISO, interval=SECONDS, target=PATH
///   U register                         status LastStatus
///   U deregister                       deregistered yes
///   U sync                             status S wrote yes|no conflicts N consumed N
///   U book external|inbox UID START END SUMMARY with NAME,...
///                                      booked NAME,...|none failed NAME:Kind,...|none
///   U find with NAME,... START END DURATION GRANULARITY
///                                      slots ISO,...|none
///   U calendar                         events UID:Status,...|none|missing
///   U event UID                        interval START/END status S origin O
///   U inbox                            total N meeting N conflict N processed N
///   U freebusy                         busy START/END,...|none
///   U remember PATH                    saved yes|missing
///   U unchanged PATH                   unchanged yes|no (compared with the remembered etag)
///   U external-log CAL                 orchestrator-requests N non-get N
///
/// A step that throws observes `error Kind`.
Scenario parse_scenario(std::string_view text, std::string name);

enum class Verdict { Pass, Fail, Done };

struct StepResult {
  int line = 0;
  Verdict verdict = Verdict::Done;
  std::string observed;
  std::string message;
};

struct RunResult {
  std::vector<StepResult> steps;
  bool passed = true;
};

/// Runs every step against fresh in-process servers on a manual clock, printing one
/// line per step and a summary. Stops at the first failed step.
RunResult run_scenario(const Scenario& scenario, std::ostream& out);

}  // namespace caldesk::scenario
