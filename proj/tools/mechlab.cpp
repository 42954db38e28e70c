// mechlab: audit, attack and theorem-trace front end.
//
//   mechlab audit        --mechanism spa --n-max 5 --grid 0:10:0.5 --seed 42 --out report.json
//   mechlab attack       --mechanism lottery --target sybil --profile 5,1
//   mechlab theorem      --mechanism spa --lemmas lemma2 --u 7 --v 3 --format both --out spa.json
//   mechlab independence --seed 42 --deterministic --out matrix.json

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "custom_mechanisms.hpp"
#include "mechlab/mechlab.hpp"

namespace {

using namespace mechlab;

struct Flags {
  std::string config;
  std::string mechanism;
  double c = 0, r = 0;
  std::string payment;
  std::string grid;
  int n_min = 0, n_max = 0;
  std::size_t profile_budget = 0;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  double tol_quad = 0;
  std::string out;
  std::string format = "json";
  bool deterministic = false;

  std::string target;
  std::size_t k = 0;
  int refine = 0;
  std::vector<double> profile;

  std::vector<std::string> lemmas;
  double u = 0, v = 0;
  int trace_n = 0;
  std::vector<double> averaging_u;
  std::vector<double> induction_profile;

  std::vector<std::string> extra;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "scenario JSON file; flags override its fields");
  cmd->add_option("--mechanism", f.mechanism, "mechanism name (spa, spa_reserve, lottery, asymmetric_spa, proportional, proportional_myerson, top_two)");
  cmd->add_option("--c", f.c, "proportional per-unit-bid price");
  cmd->add_option("--r", f.r, "reserve price");
  cmd->add_option("--payment", f.payment, "payment mode: default | myerson | explicit");
  cmd->add_option("--grid", f.grid, "bid grid lo:hi:step");
  cmd->add_option("--n-min", f.n_min, "smallest number of agents");
  cmd->add_option("--n-max", f.n_max, "largest number of agents");
  cmd->add_option("--profile-budget", f.profile_budget, "number of sampled profiles");
  cmd->add_option("--seed", f.seed, "sampling seed (fallback: MECHLAB_SEED, then 42)");
  cmd->add_option("--jobs", f.jobs, "worker threads");
  cmd->add_option("--tol-quad", f.tol_quad, "quadrature error budget");
  cmd->add_option("--out", f.out, "JSON report path; CSV files share its stem");
  cmd->add_option("--format", f.format, "json | csv | both")->check(CLI::IsMember({"json", "csv", "both"}));
  cmd->add_flag("--deterministic", f.deterministic, "omit wall-clock timings from the report");
}

ScenarioConfig build_scenario(const CLI::App& cmd, const Flags& f) {
  ScenarioConfig s;
  bool seed_from_config = false;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ConfigError("cannot read config '" + f.config + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    s = parse_scenario(ss.str());
    seed_from_config = Json::parse(ss.str()).contains("seed");
  }
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--mechanism")) s.mechanism = f.mechanism;
  if (given("--c")) s.c = f.c;
  if (given("--r")) s.r = f.r;
  if (given("--payment")) s.payment_mode = f.payment;
  if (given("--grid")) s.grid = parse_grid(f.grid);
  if (given("--n-min")) s.n_min = f.n_min;
  if (given("--n-max")) s.n_max = f.n_max;
  if (given("--n-max") && !given("--n-min") && s.n_min > s.n_max) s.n_min = s.n_max;
  if (given("--profile-budget")) s.profile_budget = f.profile_budget;
  if (given("--seed")) {
    s.seed = f.seed;
  } else if (!seed_from_config) {
    if (const char* env = std::getenv("MECHLAB_SEED")) {
      try {
        s.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw ConfigError(std::string("MECHLAB_SEED is not an unsigned integer: '") + env + "'");
      }
    }
  }
  if (given("--jobs")) s.jobs = f.jobs;
  if (given("--tol-quad")) {
    s.tolerances.tol_quad = f.tol_quad;
    s.quadrature.tol_quad = f.tol_quad;
  }
  if (cmd.get_name() == "attack") {
    if (given("--target")) s.target = f.target;
    if (given("--k")) s.k = f.k;
    if (given("--refine")) s.refine_iters = f.refine;
    if (given("--profile")) s.profile = f.profile;
  }
  if (cmd.get_name() == "theorem") {
    if (given("--lemmas")) s.lemmas = f.lemmas;
    if (given("--u")) s.u = f.u;
    if (given("--v")) s.v = f.v;
    if (given("--trace-n")) s.trace_n = f.trace_n;
    if (given("--averaging-u")) s.averaging_u = f.averaging_u;
    if (given("--induction-profile")) s.induction_profile = f.induction_profile;
  }
  if (cmd.get_name() == "independence" && given("--extra")) s.extra_mechanisms = f.extra;
  try {
    s.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return s;
}

std::string stem_of(const std::string& out) {
  std::filesystem::path p(out);
  if (p.extension() == ".json") p.replace_extension();
  return p.string();
}

void emit(const CommandResult& r, const Flags& f) {
  const bool want_json = f.format != "csv";
  const bool want_csv = f.format != "json";
  if (want_json) {
    const std::string json = serialize(r.report);
    if (f.out.empty()) {
      std::cout << json;
    } else {
      std::ofstream os(f.out, std::ios::binary);
      if (!os) throw ConfigError("cannot write '" + f.out + "'");
      os << json;
    }
  }
  if (want_csv) {
    for (const auto& [suffix, body] : r.csv) {
      if (f.out.empty()) {
        std::cout << body;
      } else {
        const std::string path = stem_of(f.out) + "." + suffix;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw ConfigError("cannot write '" + path + "'");
        os << body;
      }
    }
  }
  for (const auto& w : r.report.warnings) std::cerr << "warning: " << w << "\n";
  std::cerr << r.text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mechlab: sybil-proofness and incentive-compatibility laboratory for single-parameter mechanisms"};
  app.require_subcommand(1);
  Flags f;

  auto* audit = app.add_subcommand("audit", "run all seven axiom checkers on one mechanism");
  add_common(audit, f);

  auto* attack = app.add_subcommand("attack", "search for profitable misreports or sybil attacks");
  add_common(attack, f);
  attack->add_option("--target", f.target, "misreport | sybil | multi_sybil")
      ->check(CLI::IsMember({"misreport", "sybil", "multi_sybil"}));
  attack->add_option("--k", f.k, "number of sybils for multi_sybil");
  attack->add_option("--refine", f.refine, "golden-section refinement iterations");
  attack->add_option("--profile", f.profile, "attack this profile (comma separated bids) instead of scanning")
      ->delimiter(',');

  auto* theorem = app.add_subcommand("theorem", "trace the characterization proof step by step");
  add_common(theorem, f);
  theorem->add_option("--lemmas", f.lemmas, "lemma1,eqn2,lemma2,lemma3,averaging,induction")->delimiter(',');
  theorem->add_option("--u", f.u, "high value u");
  theorem->add_option("--v", f.v, "low value v");
  theorem->add_option("--trace-n", f.trace_n, "largest n for the replicated-bid traces");
  theorem->add_option("--averaging-u", f.averaging_u, "values of u for the averaging identity")->delimiter(',');
  theorem->add_option("--induction-profile", f.induction_profile, "bids for the induction-step attack")
      ->delimiter(',');

  auto* indep = app.add_subcommand("independence", "mechanism x axiom verdict matrix");
  add_common(indep, f);
  indep->add_option("--extra", f.extra, "additional registered mechanisms (rows without pattern assertion)")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitError;
  }

  try {
    MechanismRegistry reg;
    custom::register_all(reg);
    CLI::App* cmd = app.get_subcommands().front();
    const ScenarioConfig s = build_scenario(*cmd, f);
    CommandResult r;
    if (cmd == audit) r = cmd_audit(s, reg, f.deterministic);
    else if (cmd == attack) r = cmd_attack(s, reg, f.deterministic);
    else if (cmd == theorem) r = cmd_theorem(s, reg, f.deterministic);
    else r = cmd_independence(s, reg, f.deterministic);
    emit(r, f);
    return r.exit_status;
  } catch (const std::exception& e) {
    std::cerr << "mechlab: error: " << e.what() << "\n";
    return kExitError;
  }
}
