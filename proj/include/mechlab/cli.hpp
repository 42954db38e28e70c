#pragma once

// Command implementations behind the `mechlab` executable. Each command takes
// a ScenarioConfig and returns a ReportDocument plus an exit status:
//   0  every assertion passed
//   1  an axiom or pattern assertion failed
//   2  configuration or tool error

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mechlab/attack.hpp"
#include "mechlab/axioms.hpp"
#include "mechlab/mechanisms.hpp"
#include "mechlab/report.hpp"
#include "mechlab/theorem.hpp"

namespace mechlab {

enum ExitStatus : int { kExitPass = 0, kExitFail = 1, kExitError = 2 };

/// Configuration or usage problem; maps to exit status 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Mechanism registry
// ---------------------------------------------------------------------------

using MechanismFactory = std::function<Mechanism(const ScenarioConfig&)>;

/// Name -> factory table. Built-ins are registered on construction; custom
/// rules are added with add() before a command runs.
class MechanismRegistry {
 public:
  MechanismRegistry() {
    add_builtin("spa", [](const ScenarioConfig& s) {
      require_myerson(s, "spa");
      return make_spa(s.tolerances.eps_tie);
    });
    add_builtin("spa_reserve", [](const ScenarioConfig& s) {
      require_myerson(s, "spa_reserve");
      return make_spa_reserve({s.r}, s.tolerances.eps_tie);
    });
    add_builtin("lottery", [](const ScenarioConfig& s) {
      require_myerson(s, "lottery");
      return make_lottery();
    });
    add_builtin("asymmetric_spa", [](const ScenarioConfig& s) {
      require_myerson(s, "asymmetric_spa");
      return make_asymmetric_spa(s.tolerances.eps_tie);
    });
    add_builtin("proportional", [](const ScenarioConfig& s) {
      if (s.payment_mode == "myerson") return make_proportional_myerson();
      return make_proportional({s.c});
    });
    add_builtin("proportional_myerson", [](const ScenarioConfig& s) {
      if (s.payment_mode == "explicit") throw ConfigError("proportional_myerson uses Myerson payments");
      return make_proportional_myerson();
    });
  }

  void add(const std::string& name, MechanismFactory f) {
    if (factories_.count(name)) throw ConfigError("mechanism '" + name + "' already registered");
    factories_[name] = {std::move(f), false};
  }

  bool contains(const std::string& name) const { return factories_.count(name) > 0; }
  bool is_builtin(const std::string& name) const {
    auto it = factories_.find(name);
    return it != factories_.end() && it->second.builtin;
  }

  Mechanism make(const std::string& name, const ScenarioConfig& s) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) {
      std::string known;
      for (const auto& [n, _] : factories_) known += (known.empty() ? "" : ", ") + n;
      throw ConfigError("unknown mechanism '" + name + "' (known: " + known + ")");
    }
    return it->second.factory(s);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [n, _] : factories_) out.push_back(n);
    return out;
  }

  std::vector<std::string> builtin_names() const {
    return {"spa", "spa_reserve", "lottery", "asymmetric_spa", "proportional", "proportional_myerson"};
  }

 private:
  struct Entry {
    MechanismFactory factory;
    bool builtin = false;
  };

  static void require_myerson(const ScenarioConfig& s, const char* name) {
    if (s.payment_mode == "explicit") {
      throw ConfigError(std::string(name) + " has no explicit payment rule; use Myerson payments");
    }
  }

  void add_builtin(const std::string& name, MechanismFactory f) { factories_[name] = {std::move(f), true}; }

  std::map<std::string, Entry> factories_;
};

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CommandResult {
  ReportDocument report;
  int exit_status = kExitPass;
  // CSV attachments: file suffix -> contents.
  std::vector<std::pair<std::string, std::string>> csv;
  std::string text;  // human-readable summary
};

namespace detail {

class SectionTimer {
 public:
  explicit SectionTimer(std::vector<std::pair<std::string, double>>& sink, std::string name)
      : sink_(sink), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~SectionTimer() {
    const auto d = std::chrono::steady_clock::now() - start_;
    sink_.emplace_back(name_, std::chrono::duration<double>(d).count());
  }

 private:
  std::vector<std::pair<std::string, double>>& sink_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

inline CheckOptions check_options(const ScenarioConfig& s) {
  CheckOptions o;
  o.tol = s.tolerances;
  o.quad = s.quadrature;
  o.quad.tol_quad = s.tolerances.tol_quad;
  o.jobs = s.jobs;
  o.seed = s.seed;
  return o;
}

inline AttackOptions attack_options(const ScenarioConfig& s) {
  AttackOptions o;
  o.tol = s.tolerances;
  o.quad = s.quadrature;
  o.quad.tol_quad = s.tolerances.tol_quad;
  o.refine_iters = s.refine_iters;
  return o;
}

inline TheoremOptions theorem_options(const ScenarioConfig& s) {
  TheoremOptions o;
  o.tol = s.tolerances;
  o.quad = s.quadrature;
  o.quad.tol_quad = s.tolerances.tol_quad;
  return o;
}

inline ProfileSampler sampler(const ScenarioConfig& s) { return {s.n_min, s.n_max, s.grid, s.seed}; }

inline std::vector<std::string> scope_warnings(const ScenarioConfig& s) {
  std::vector<std::string> w;
  if (s.grid.degenerate()) {
    w.push_back("degenerate search scope: grid " + s.grid.describe() +
                " has fewer than two uniform points, so deviations are only probed at 0 and the rival bids");
  }
  return w;
}

}  // namespace detail

inline CommandResult cmd_audit(const ScenarioConfig& s, const MechanismRegistry& reg = {},
                               bool deterministic = false) {
  s.validate();
  CommandResult out;
  ReportDocument& doc = out.report;
  doc.command = "audit";
  doc.scenario = s;
  doc.warnings = detail::scope_warnings(s);
  const Mechanism mech = reg.make(s.mechanism, s);
  std::vector<std::pair<std::string, double>> timings;
  const auto profiles = detail::sampler(s).sample(s.profile_budget);
  const CheckOptions opts = detail::check_options(s);
  bool all = true;
  std::ostringstream text;
  text << "audit " << mech.name() << " over " << profiles.size() << " profiles\n";
  for (Axiom a : kAllAxioms) {
    detail::SectionTimer t(timings, to_string(a));
    AxiomReport r = check_axiom(a, mech, profiles, s.grid, opts);
    all = all && r.passed();
    text << "  " << to_string(a) << ": " << to_string(r.verdict);
    if (!r.passed()) text << " (" << r.violations << " violations, worst " << r.witnesses.front().magnitude << ")";
    text << "\n";
    doc.axiom_reports.push_back({mech.name(), std::move(r)});
  }
  doc.status = all ? "pass" : "fail";
  if (!deterministic) doc.timings = std::move(timings);
  std::ostringstream csv;
  write_axioms_csv(csv, doc.axiom_reports);
  out.csv.emplace_back("axioms.csv", csv.str());
  out.text = text.str();
  out.exit_status = all ? kExitPass : kExitFail;
  return out;
}

inline CommandResult cmd_attack(const ScenarioConfig& s, const MechanismRegistry& reg = {},
                                bool deterministic = false) {
  s.validate();
  CommandResult out;
  ReportDocument& doc = out.report;
  doc.command = "attack";
  doc.scenario = s;
  doc.warnings = detail::scope_warnings(s);
  const Mechanism mech = reg.make(s.mechanism, s);
  const AttackOptions opts = detail::attack_options(s);
  std::vector<std::pair<std::string, double>> timings;

  ScanTargets targets;
  targets.misreport = s.target == "misreport";
  targets.sybil = !targets.misreport;
  targets.sybils = s.target == "multi_sybil" ? s.k : 1;
  const double stack = s.tolerances.tol_num +
                       (targets.misreport ? 2.0 : 4.0 * static_cast<double>(targets.sybils)) * opts.quad.tol_quad;

  std::vector<Deviation> devs;
  std::vector<ScanRecord> records;
  {
    detail::SectionTimer t(timings, "search");
    if (!s.profile.empty()) {
      const BidProfile p = BidProfile::from_bids(s.profile);
      for (std::size_t k = 0; k < p.size(); ++k) {
        Deviation d = targets.misreport ? best_misreport(mech, p, p[k].agent, s.grid, s.refine_iters, opts)
                      : targets.sybils == 1
                          ? best_sybil_response(mech, p, p[k].agent, s.grid, s.refine_iters, opts)
                          : multi_sybil_response(mech, p, p[k].agent, targets.sybils, s.grid, opts);
        records.push_back({0, p.size(), d.deviator, d.kind, d.bid(), d.gain});
        devs.push_back(std::move(d));
      }
      std::stable_sort(devs.begin(), devs.end(), better_deviation);
    } else {
      ScanResult r = exploit_scan(mech, detail::sampler(s), s.profile_budget, s.grid, opts, targets, s.jobs);
      if (r.worst) devs.push_back(*r.worst);
      const GainSummary& g = targets.misreport ? r.misreport : r.sybil;
      doc.scan_summaries.push_back({mech.name(), targets.misreport ? "misreport" : "sybil", g});
      records = std::move(r.records);
    }
  }
  if (devs.size() > 8) devs.resize(8);
  doc.deviations = devs;
  const bool profitable = !devs.empty() && devs.front().gain > stack;
  doc.status = profitable ? "fail" : "pass";
  if (!deterministic) doc.timings = std::move(timings);

  std::ostringstream text;
  text.precision(12);
  text << "attack " << mech.name() << " target=" << s.target;
  if (!devs.empty()) {
    const Deviation& w = devs.front();
    text << ": worst gain " << w.gain << " by agent " << w.deviator.value << " at " << describe(w.profile)
         << " bid " << w.bid();
  }
  text << (profitable ? " (profitable)" : " (no profitable deviation)") << "\n";
  out.text = text.str();
  std::ostringstream csv;
  write_gains_csv(csv, mech.name(), records);
  out.csv.emplace_back("gains.csv", csv.str());
  out.exit_status = profitable ? kExitFail : kExitPass;
  return out;
}

inline CommandResult cmd_theorem(const ScenarioConfig& s, const MechanismRegistry& reg = {},
                                 bool deterministic = false) {
  s.validate();
  CommandResult out;
  ReportDocument& doc = out.report;
  doc.command = "theorem";
  doc.scenario = s;
  doc.warnings = detail::scope_warnings(s);
  const TheoremOptions opts = detail::theorem_options(s);
  std::vector<std::pair<std::string, double>> timings;

  std::vector<std::string> names;
  if (s.mechanism == "all") {
    names = {"spa", "spa_reserve", "lottery", "asymmetric_spa", "proportional_myerson"};
  } else {
    names = {s.mechanism};
  }
  std::ostringstream text;
  bool all = true;
  for (const auto& name : names) {
    const Mechanism mech = reg.make(name, s);
    for (const auto& lname : s.lemmas) {
      const Lemma l = lemma_from_string(lname);
      detail::SectionTimer t(timings, name + "." + lname);
      std::vector<LemmaTrace> traces;
      try {
        switch (l) {
          case Lemma::lemma1: traces.push_back(lemma1_trace(mech, s.u, s.v, s.trace_n, opts)); break;
          case Lemma::eqn2: traces.push_back(eqn2_chain_check(mech, s.u, s.v, s.trace_n, opts)); break;
          case Lemma::lemma2: traces.push_back(lemma2_trace(mech, s.u, s.v, opts)); break;
          case Lemma::lemma3: traces.push_back(lemma3_monotone(mech, s.u, s.grid, opts)); break;
          case Lemma::averaging:
            for (double u : s.averaging_u) traces.push_back(averaging_identity(mech, u, opts));
            break;
          case Lemma::induction:
            traces.push_back(induction_trace(mech, BidProfile::from_bids(s.induction_profile), opts));
            break;
        }
      } catch (const PreconditionError& e) {
        doc.warnings.push_back(name + "." + lname + " skipped: " + e.what());
        continue;
      }
      for (auto& tr : traces) {
        all = all && tr.consistent();
        text << "  " << name << " " << lname << ": " << to_string(tr.verdict) << " (worst slack "
             << tr.worst_slack << ")\n";
        std::ostringstream csv;
        write_trace_csv(csv, tr);
        std::string suffix = name + "." + lname;
        if (l == Lemma::averaging) suffix += ".u" + detail::csv_number(tr.u);
        out.csv.emplace_back(suffix + ".csv", csv.str());
        doc.lemma_traces.push_back(std::move(tr));
      }
    }
  }
  doc.status = all ? "pass" : "fail";
  if (!deterministic) doc.timings = std::move(timings);
  out.text = "theorem trace\n" + text.str();
  out.exit_status = all ? kExitPass : kExitFail;
  return out;
}

inline CommandResult cmd_independence(const ScenarioConfig& s, const MechanismRegistry& reg = {},
                                      bool deterministic = false) {
  s.validate();
  CommandResult out;
  ReportDocument& doc = out.report;
  doc.command = "independence";
  doc.scenario = s;
  doc.warnings = detail::scope_warnings(s);
  std::vector<std::pair<std::string, double>> timings;

  IndependenceConfig cfg;
  cfg.grid = s.grid;
  cfg.n_min = s.n_min;
  cfg.n_max = s.n_max;
  cfg.profile_budget = s.profile_budget;
  cfg.c = s.c;
  cfg.r = s.r;
  cfg.check = detail::check_options(s);
  std::vector<Mechanism> extra;
  for (const auto& name : s.extra_mechanisms) extra.push_back(reg.make(name, s));
  {
    detail::SectionTimer t(timings, "matrix");
    doc.independence = independence_matrix(cfg, extra);
  }
  doc.status = doc.independence->matches ? "pass" : "fail";
  if (!deterministic) doc.timings = std::move(timings);
  out.text = matrix_table(*doc.independence);
  std::ostringstream csv;
  write_matrix_csv(csv, *doc.independence);
  out.csv.emplace_back("matrix.csv", csv.str());
  out.exit_status = doc.independence->matches ? kExitPass : kExitFail;
  return out;
}

// ---------------------------------------------------------------------------
// Config loading
// ---------------------------------------------------------------------------

/// Parses a scenario JSON document, reporting the line of syntax errors and
/// the offending field of type errors.
inline ScenarioConfig parse_scenario(const std::string& text, ScenarioConfig base = {}) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ConfigError("config line " + std::to_string(line) + ": " + e.what());
  }
  try {
    from_json(j, base);
  } catch (const Error& e) {
    throw ConfigError(std::string("config ") + e.what());
  }
  return base;
}

inline ScenarioConfig load_scenario(const std::string& path, ScenarioConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), std::move(base));
}

/// lo:hi:step
inline SearchGrid parse_grid(const std::string& spec) {
  SearchGrid g;
  std::stringstream ss(spec);
  std::string a, b, c;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c) ) {
    throw ConfigError("--grid expects lo:hi:step, got '" + spec + "'");
  }
  try {
    std::size_t pa = 0, pb = 0, pc = 0;
    g.lo = std::stod(a, &pa);
    g.hi = std::stod(b, &pb);
    g.step = std::stod(c, &pc);
    if (pa != a.size() || pb != b.size() || pc != c.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigError("--grid expects numbers lo:hi:step, got '" + spec + "'");
  }
  try {
    g.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("--grid: ") + e.what());
  }
  return g;
}

}  // namespace mechlab
