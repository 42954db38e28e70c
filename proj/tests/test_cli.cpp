#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "custom_mechanisms.hpp"
#include "mechlab/cli.hpp"

using namespace mechlab;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Run run(const std::string& args) {
  const std::string cmd = std::string(MECHLAB_BIN) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "mechlab_test_cli";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("audit exit codes", "[cli]") {
  CHECK(run("audit --mechanism spa --profile-budget 30").status == kExitPass);
  CHECK(run("audit --mechanism lottery --profile-budget 30").status == kExitFail);
  CHECK(run("audit --mechanism proportional --c 0.5 --profile-budget 30").status == kExitFail);
  CHECK(run("audit --mechanism spa_reserve --r 4 --profile-budget 30").status == kExitFail);
}

TEST_CASE("configuration errors exit with 2", "[cli]") {
  CHECK(run("audit --config /nonexistent/scenario.json").status == kExitError);
  CHECK(run("audit --mechanism no_such_rule").status == kExitError);
  CHECK(run("audit --grid 0:10").status == kExitError);
  CHECK(run("attack --target sideways").status == kExitError);

  const auto bad = scratch("bad.json");
  std::ofstream(bad) << "{\n  \"mechanism\": \"spa\",\n  \"seed\": 4,\n  \"bogus\": true\n}\n";
  const Run r = run("audit --config " + bad.string());
  CHECK(r.status == kExitError);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("bogus"));

  const auto broken = scratch("broken.json");
  std::ofstream(broken) << "{\n  \"mechanism\": \"spa\"\n  \"seed\": 4\n}\n";
  const Run b = run("audit --config " + broken.string());
  CHECK(b.status == kExitError);
  CHECK_THAT(b.out, Catch::Matchers::ContainsSubstring("line 3"));
}

TEST_CASE("config file and flag precedence", "[cli]") {
  const auto cfg = scratch("lottery.json");
  std::ofstream(cfg) << R"({"mechanism": "lottery", "profile_budget": 10, "seed": 5})";
  const auto out = scratch("lottery_report.json");
  CHECK(run("audit --config " + cfg.string() + " --deterministic --out " + out.string()).status == kExitFail);
  const Json j = Json::parse(slurp(out));
  CHECK(j.at("scenario").at("seed") == 5);
  CHECK(j.at("scenario").at("profile_budget") == 10);

  CHECK(run("audit --config " + cfg.string() + " --mechanism spa --seed 8 --deterministic --out " + out.string())
            .status == kExitPass);
  const Json k = Json::parse(slurp(out));
  CHECK(k.at("scenario").at("mechanism") == "spa");
  CHECK(k.at("scenario").at("seed") == 8);
}

TEST_CASE("degenerate grid produces a scope warning", "[cli]") {
  const Run r = run("audit --mechanism spa --grid 0:0:1 --profile-budget 5 --deterministic");
  CHECK(r.status == kExitPass);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("degenerate search scope"));
}

TEST_CASE("attack on an explicit profile", "[cli]") {
  const auto out = scratch("attack.json");
  const Run r = run("attack --mechanism lottery --profile 5,1 --target sybil --deterministic --out " + out.string());
  CHECK(r.status == kExitFail);
  const Json j = Json::parse(slurp(out));
  REQUIRE_FALSE(j.at("deviations").empty());
  CHECK(j.at("deviations")[0].at("gain").get<double>() == Catch::Approx(5.0 / 6.0).margin(1e-9));

  const Run k3 = run("attack --mechanism lottery --profile 5,1 --target multi_sybil --k 3 --deterministic --out " +
                     out.string());
  CHECK(k3.status == kExitFail);
  CHECK(Json::parse(slurp(out)).at("deviations")[0].at("gain").get<double>() ==
        Catch::Approx(1.5).margin(1e-9));

  CHECK(run("attack --mechanism spa --profile 5,3 --target misreport --deterministic").status == kExitPass);
}

TEST_CASE("theorem command", "[cli]") {
  CHECK(run("theorem --mechanism spa --deterministic").status == kExitPass);
  CHECK(run("theorem --mechanism lottery --lemmas lemma2 --deterministic").status == kExitFail);
  const Run r = run("theorem --mechanism spa_reserve --lemmas averaging --deterministic");
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("non-wasteful"));
}

TEST_CASE("CSV output", "[cli]") {
  const auto out = scratch("trace.json");
  CHECK(run("theorem --mechanism lottery --lemmas lemma1 --trace-n 6 --format both --deterministic --out " +
            out.string())
            .status == kExitFail);
  CHECK(std::filesystem::exists(out));
  bool found = false;
  for (const auto& e : std::filesystem::directory_iterator(out.parent_path())) {
    const std::string name = e.path().filename().string();
    if (name.rfind("trace.", 0) == 0 && e.path().extension() == ".csv") {
      found = true;
      CHECK_THAT(slurp(e.path()), Catch::Matchers::StartsWith("# mechlab-csv v1"));
    }
  }
  CHECK(found);
}

TEST_CASE("custom mechanisms join the independence matrix", "[cli]") {
  const Run r = run("independence --extra top_two --profile-budget 30 --deterministic");
  CHECK(r.status == kExitPass);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("top_two"));

  MechanismRegistry reg;
  custom::register_all(reg);
  ScenarioConfig s;
  s.mechanism = "top_two";
  s.profile_budget = 20;
  const auto res = cmd_audit(s, reg, true);
  CHECK(res.report.axiom_reports.size() == 7);
}

TEST_CASE("deterministic independence output is byte-identical", "[cli]") {
  const auto a = scratch("ind_a.json"), b = scratch("ind_b.json"), c = scratch("ind_c.json");
  run("independence --seed 42 --profile-budget 40 --deterministic --out " + a.string());
  run("independence --seed 42 --profile-budget 40 --deterministic --out " + b.string());
  CHECK(slurp(a) == slurp(b));
  CHECK_FALSE(slurp(a).empty());

  // A different job count changes only the echoed setting.
  run("independence --seed 42 --profile-budget 40 --deterministic --jobs 2 --out " + c.string());
  Json ja = Json::parse(slurp(a)), jc = Json::parse(slurp(c));
  CHECK(jc["scenario"]["jobs"] == 2);
  jc["scenario"]["jobs"] = ja["scenario"]["jobs"];
  CHECK(ja.dump() == jc.dump());
}
