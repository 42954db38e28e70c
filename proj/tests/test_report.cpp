#include <catch_amalgamated.hpp>

#include <sstream>

#include "mechlab/cli.hpp"

using namespace mechlab;

namespace {

ScenarioConfig small(std::string mech) {
  ScenarioConfig s;
  s.mechanism = std::move(mech);
  s.profile_budget = 20;
  return s;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }
std::string second_line(const std::string& s) {
  const auto a = s.find('\n') + 1;
  return s.substr(a, s.find('\n', a) - a);
}

}  // namespace

TEST_CASE("report documents round-trip through JSON", "[report]") {
  std::vector<ReportDocument> docs;
  docs.push_back(cmd_audit(small("lottery"), {}, true).report);
  auto attack = small("proportional_myerson");
  attack.target = "sybil";
  docs.push_back(cmd_attack(attack, {}, true).report);
  attack.profile = {5, 1};
  attack.mechanism = "lottery";
  attack.target = "multi_sybil";
  docs.push_back(cmd_attack(attack, {}, true).report);
  docs.push_back(cmd_theorem(small("lottery"), {}, true).report);
  docs.push_back(cmd_independence(small("spa"), {}, true).report);
  auto timed = cmd_audit(small("spa"), {}, false).report;
  REQUIRE_FALSE(timed.timings.empty());
  docs.push_back(timed);

  for (const auto& d : docs) {
    INFO(d.command);
    const std::string text = serialize(d);
    const ReportDocument back = parse_report(text);
    CHECK(back == d);
    CHECK(serialize(back) == text);
  }
}

TEST_CASE("deterministic reports omit timings", "[report]") {
  const auto d = cmd_audit(small("spa"), {}, true).report;
  CHECK(d.timings.empty());
  const Json j = Json::parse(serialize(d));
  CHECK_FALSE(j.contains("timings"));
  CHECK(j.at("scope_note") == kScopeNote);
  CHECK(j.at("version") == kToolVersion);
}

TEST_CASE("scenario parsing", "[report]") {
  const auto s = parse_scenario(R"({"mechanism": "lottery", "seed": 9, "grid": {"lo": 0, "hi": 4, "step": 1}})");
  CHECK(s.mechanism == "lottery");
  CHECK(s.seed == 9);
  CHECK(s.grid.hi == 4);
  CHECK(s.profile_budget == 500);

  ScenarioConfig base;
  base.profile_budget = 3;
  CHECK(parse_scenario("{}", base).profile_budget == 3);

  const ScenarioConfig full = small("spa_reserve");
  CHECK(parse_scenario(Json(full).dump()) == full);
}

TEST_CASE("scenario errors name the line or the field", "[report]") {
  try {
    parse_scenario("{\n  \"mechanism\": \"spa\",\n  \"seed\": ,\n}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("line 3"));
  }
  try {
    parse_scenario(R"({"mechanism": "spa", "sede": 3})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("sede"));
  }
  try {
    parse_scenario(R"({"seed": "three"})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("seed"));
  }
  CHECK_THROWS_AS(parse_scenario("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ConfigError);
}

TEST_CASE("grid parsing", "[report]") {
  CHECK(parse_grid("0:10:0.5") == SearchGrid{0, 10, 0.5, {}});
  CHECK_THROWS_AS(parse_grid("0:10"), ConfigError);
  CHECK_THROWS_AS(parse_grid("0:ten:1"), ConfigError);
  CHECK_THROWS_AS(parse_grid("0:10:-1"), ConfigError);
}

TEST_CASE("CSV layouts", "[report]") {
  std::ostringstream trace;
  write_trace_csv(trace, lemma1_trace(make_lottery(), 7, 3, 4));
  CHECK(first_line(trace.str()) == "# mechlab-csv v1 trace lemma=lemma1 mechanism=lottery verdict=violated");
  CHECK(second_line(trace.str()) == "x,computed,reference,slack");
  CHECK_THAT(trace.str(), Catch::Matchers::ContainsSubstring("\n2,0.5,1,-0.5\n"));

  std::ostringstream axioms;
  const auto lot = make_lottery();
  write_axioms_csv(axioms, {{"lottery", check_sybil_proofness(lot, {BidProfile::from_bids({5, 1})}, {})}});
  CHECK(second_line(axioms.str()) == "mechanism,axiom,verdict,violations,profiles_tested,worst_magnitude");
  CHECK_THAT(axioms.str(), Catch::Matchers::ContainsSubstring("lottery,sybil_proofness,fail,"));

  const auto scan = exploit_scan(lot, ProfileSampler{2, 3, {}, 1}, 3, {}, {});
  std::ostringstream gains;
  write_gains_csv(gains, "lottery", scan.records);
  CHECK(second_line(gains.str()) == "profile_index,n_agents,agent,kind,bid,gain");
  std::size_t lines = 0;
  for (char ch : gains.str()) lines += ch == '\n';
  CHECK(lines == scan.records.size() + 2);

  IndependenceConfig cfg;
  cfg.profile_budget = 10;
  const auto m = independence_matrix(cfg);
  std::ostringstream matrix;
  write_matrix_csv(matrix, m);
  CHECK_THAT(second_line(matrix.str()), Catch::Matchers::StartsWith("mechanism,non_wastefulness,"));
  CHECK_THAT(matrix_table(m), Catch::Matchers::ContainsSubstring("asymmetric_spa"));
}
