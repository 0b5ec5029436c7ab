#include <filesystem>
#include <sstream>

#include "caldesk/common/util.hpp"
#include "caldesk/scenario/runner.hpp"
#include "doctest.h"

using namespace caldesk;
using namespace caldesk::scenario;

namespace {

const std::filesystem::path kScenarios = CALDESK_SOURCE_DIR "/scenarios";
const std::filesystem::path kGolden = CALDESK_SOURCE_DIR "/tests/golden";

int parse_error_line(std::string_view text) {
  try {
    parse_scenario(text, "t");
  } catch (const ScenarioParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("scenario parse errors carry the line number") {
  CHECK(parse_error_line("") == 1);
  CHECK(parse_error_line("# only a comment\n\n") == 2);
  CHECK(parse_error_line("world user a\nb sync\n") == 2);
  CHECK(parse_error_line("world user a\na fly\n") == 2);
  CHECK(parse_error_line("world user a\na sync => status\n") == 2);
  CHECK(parse_error_line("world user a\na book external u 2023-05-02T10:00:00Z x y with a\n") == 2);
  CHECK(parse_error_line("world user a\n\na find with b 2023-05-02T10:00:00Z 2023-05-02T11:00:00Z 60m 30m\n") == 3);
  CHECK(parse_error_line("world user a\na configure \"SolidOnly\n") == 2);
  CHECK(parse_error_line("world advance soon\n") == 1);
  CHECK(parse_error_line("world user a a\n") == 1);

  auto sc = parse_scenario("world user a  # trailing\na book inbox u1 2023-05-02T10:00:00Z 2023-05-02T11:00:00Z \"Two words\" with a => booked a\n", "t");
  REQUIRE(sc.steps.size() == 2);
  CHECK(sc.steps[1].args[4] == "Two words");
  CHECK(sc.steps[1].expect == std::vector<std::string>{"booked", "a"});
}

TEST_CASE("failed expectations stop the run") {
  auto sc = parse_scenario("world user a\na calendar => events something\na calendar\n", "t");
  std::ostringstream out;
  auto r = run_scenario(sc, out);
  CHECK_FALSE(r.passed);
  CHECK(r.steps.size() == 2);
  CHECK(r.steps[1].verdict == Verdict::Fail);
  CHECK(out.str().find("[FAIL] 2: a calendar -> events missing") != std::string::npos);
  CHECK(out.str().ends_with("result FAIL 1/3 steps\n"));
}

TEST_CASE("errors are observable and expectable") {
  auto sc = parse_scenario("world user a\na register => status Never\na register => error AlreadyRegistered\na sync\n", "t");
  std::ostringstream out;
  auto r = run_scenario(sc, out);
  CHECK(r.passed);
  CHECK(r.steps[3].observed == "status ConfigMissing wrote no conflicts 0 consumed 0");
}

TEST_CASE("shipped scenarios pass and match their golden output") {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".scn") continue;
    ++count;
    auto name = entry.path().stem().string();
    CAPTURE(name);
    auto sc = parse_scenario(*util::read_file(entry.path()), name);
    std::ostringstream first, second;
    CHECK(run_scenario(sc, first).passed);
    run_scenario(sc, second);
    CHECK(first.str() == second.str());
    auto golden = util::read_file(kGolden / (name + ".out"));
    REQUIRE_MESSAGE(golden, "missing golden file for " << name);
    CHECK(first.str() == *golden);
  }
  CHECK(count >= 5);
}
