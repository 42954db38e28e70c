#pragma once

// Scenario configuration and report documents, with JSON and CSV encodings.
//
// JSON uses insertion-ordered objects so that identical inputs serialize to
// identical bytes. CSV files start with a versioned comment line:
//
//     # mechlab-csv v1 <table> [key=value ...]

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mechlab/attack.hpp"
#include "mechlab/axioms.hpp"
#include "mechlab/core.hpp"
#include "mechlab/mechanisms.hpp"
#include "mechlab/sampling.hpp"
#include "mechlab/theorem.hpp"

namespace mechlab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kCsvVersion = "v1";

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

struct ScenarioConfig {
  std::string mechanism = "spa";
  double c = 0.5;
  double r = 4.0;
  std::string payment_mode = "default";  // default | myerson | explicit
  SearchGrid grid;
  int n_min = 2;
  int n_max = 5;
  std::size_t profile_budget = 500;
  std::uint64_t seed = 42;
  ToleranceConfig tolerances;
  QuadratureConfig quadrature;
  unsigned jobs = 1;

  // attack
  std::string target = "sybil";  // misreport | sybil | multi_sybil
  std::size_t k = 3;
  int refine_iters = 40;
  std::vector<double> profile;  // explicit profile instead of a scan

  // theorem
  std::vector<std::string> lemmas = {"lemma1", "eqn2", "lemma2", "lemma3", "averaging", "induction"};
  double u = 7.0;
  double v = 3.0;
  int trace_n = 50;
  std::vector<double> averaging_u = {1.0, 2.0, 5.0};
  std::vector<double> induction_profile = {2.0, 7.0, 5.0};

  // independence
  std::vector<std::string> extra_mechanisms;

  void validate() const {
    grid.validate();
    tolerances.validate();
    quadrature.validate();
    if (n_min < 1 || n_max < n_min) throw PreconditionError("need 1 <= n_min <= n_max");
    if (profile_budget < 1) throw PreconditionError("profile_budget must be >= 1");
    if (!(c > 0)) throw PreconditionError("c must be > 0");
    if (!(r >= 0)) throw PreconditionError("r must be >= 0");
    if (payment_mode != "default" && payment_mode != "myerson" && payment_mode != "explicit") {
      throw PreconditionError("payment_mode must be default, myerson or explicit");
    }
    if (target != "misreport" && target != "sybil" && target != "multi_sybil") {
      throw PreconditionError("target must be misreport, sybil or multi_sybil");
    }
    if (k < 1) throw PreconditionError("k must be >= 1");
    if (refine_iters < 0) throw PreconditionError("refine_iters must be >= 0");
    if (trace_n < 2) throw PreconditionError("trace_n must be >= 2");
    for (const auto& l : lemmas) lemma_from_string(l);
  }

  bool operator==(const ScenarioConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Report document
// ---------------------------------------------------------------------------

struct NamedAxiomReport {
  std::string mechanism;
  AxiomReport report;
  bool operator==(const NamedAxiomReport&) const = default;
};

struct NamedSummary {
  std::string mechanism;
  std::string kind;  // misreport | sybil
  GainSummary summary;
  bool operator==(const NamedSummary&) const = default;
};

struct ReportDocument {
  std::string tool = "mechlab";
  std::string version = kToolVersion;
  std::string command;
  ScenarioConfig scenario;
  std::string status = "pass";  // pass | fail
  std::vector<NamedAxiomReport> axiom_reports;
  std::vector<Deviation> deviations;
  std::vector<NamedSummary> scan_summaries;
  std::vector<LemmaTrace> lemma_traces;
  std::optional<IndependenceMatrix> independence;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, double>> timings;  // seconds; empty with --deterministic

  bool operator==(const ReportDocument&) const = default;
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline void to_json(Json& j, const AgentId& a) { j = a.value; }
inline void from_json(const Json& j, AgentId& a) { a = AgentId{j.get<std::uint64_t>()}; }

inline void to_json(Json& j, const BidProfile& p) {
  j = Json::array();
  for (const auto& e : p) j.push_back(Json{{"agent", e.agent.value}, {"bid", e.bid}});
}
inline void from_json(const Json& j, BidProfile& p) {
  std::vector<BidEntry> e;
  for (const auto& x : j) e.push_back({AgentId{x.at("agent").get<std::uint64_t>()}, x.at("bid").get<double>()});
  p = BidProfile(std::move(e));
}

inline void to_json(Json& j, const SearchGrid& g) {
  j = Json{{"lo", g.lo}, {"hi", g.hi}, {"step", g.step}, {"augment_with", g.augment_with}};
}
inline void from_json(const Json& j, SearchGrid& g) {
  g.lo = j.value("lo", g.lo);
  g.hi = j.value("hi", g.hi);
  g.step = j.value("step", g.step);
  g.augment_with = j.value("augment_with", g.augment_with);
}

inline void to_json(Json& j, const ToleranceConfig& t) {
  j = Json{{"tol_alloc", t.tol_alloc}, {"tol_num", t.tol_num}, {"tol_quad", t.tol_quad}, {"eps_tie", t.eps_tie}};
}
inline void from_json(const Json& j, ToleranceConfig& t) {
  t.tol_alloc = j.value("tol_alloc", t.tol_alloc);
  t.tol_num = j.value("tol_num", t.tol_num);
  t.tol_quad = j.value("tol_quad", t.tol_quad);
  t.eps_tie = j.value("eps_tie", t.eps_tie);
}

inline void to_json(Json& j, const QuadratureConfig& q) {
  j = Json{{"max_subdivisions", q.max_subdivisions}, {"tol_quad", q.tol_quad}, {"initial_panels", q.initial_panels}};
}
inline void from_json(const Json& j, QuadratureConfig& q) {
  q.max_subdivisions = j.value("max_subdivisions", q.max_subdivisions);
  q.tol_quad = j.value("tol_quad", q.tol_quad);
  q.initial_panels = j.value("initial_panels", q.initial_panels);
}

inline void to_json(Json& j, const ScenarioConfig& s) {
  j = Json{{"mechanism", s.mechanism},
           {"c", s.c},
           {"r", s.r},
           {"payment_mode", s.payment_mode},
           {"grid", s.grid},
           {"n_min", s.n_min},
           {"n_max", s.n_max},
           {"profile_budget", s.profile_budget},
           {"seed", s.seed},
           {"tolerances", s.tolerances},
           {"quadrature", s.quadrature},
           {"jobs", s.jobs},
           {"target", s.target},
           {"k", s.k},
           {"refine_iters", s.refine_iters},
           {"profile", s.profile},
           {"lemmas", s.lemmas},
           {"u", s.u},
           {"v", s.v},
           {"trace_n", s.trace_n},
           {"averaging_u", s.averaging_u},
           {"induction_profile", s.induction_profile},
           {"extra_mechanisms", s.extra_mechanisms}};
}

/// Reads every field present in `j`; absent fields keep their current value.
/// Unknown fields are rejected.
inline void from_json(const Json& j, ScenarioConfig& s) {
  if (!j.is_object()) throw Error("scenario must be a JSON object");
  static const std::vector<std::string> known = {
      "mechanism", "c",      "r",      "payment_mode", "grid",  "n_min",       "n_max",
      "profile_budget", "seed", "tolerances", "quadrature", "jobs", "target", "k",
      "refine_iters", "profile", "lemmas", "u", "v", "trace_n", "averaging_u",
      "induction_profile", "extra_mechanisms"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw Error("unknown field '" + it.key() + "'");
    }
  }
  auto field = [&](const char* name, auto& dst) {
    if (!j.contains(name)) return;
    try {
      j.at(name).get_to(dst);
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("field '") + name + "': " + e.what());
    }
  };
  field("mechanism", s.mechanism);
  field("c", s.c);
  field("r", s.r);
  field("payment_mode", s.payment_mode);
  field("grid", s.grid);
  field("n_min", s.n_min);
  field("n_max", s.n_max);
  field("profile_budget", s.profile_budget);
  field("seed", s.seed);
  field("tolerances", s.tolerances);
  field("quadrature", s.quadrature);
  field("jobs", s.jobs);
  field("target", s.target);
  field("k", s.k);
  field("refine_iters", s.refine_iters);
  field("profile", s.profile);
  field("lemmas", s.lemmas);
  field("u", s.u);
  field("v", s.v);
  field("trace_n", s.trace_n);
  field("averaging_u", s.averaging_u);
  field("induction_profile", s.induction_profile);
  field("extra_mechanisms", s.extra_mechanisms);
}

inline void to_json(Json& j, const Witness& w) {
  j = Json{{"profile", w.profile},     {"agent", w.agent},         {"probe_lo", w.probe_lo},
           {"probe_hi", w.probe_hi},   {"permutation", w.permutation}, {"observed", w.observed},
           {"reference", w.reference}, {"magnitude", w.magnitude}};
}
inline void from_json(const Json& j, Witness& w) {
  j.at("profile").get_to(w.profile);
  j.at("agent").get_to(w.agent);
  j.at("probe_lo").get_to(w.probe_lo);
  j.at("probe_hi").get_to(w.probe_hi);
  j.at("permutation").get_to(w.permutation);
  j.at("observed").get_to(w.observed);
  j.at("reference").get_to(w.reference);
  j.at("magnitude").get_to(w.magnitude);
}

inline void to_json(Json& j, const AxiomReport& r) {
  j = Json{{"axiom", to_string(r.axiom)},
           {"verdict", to_string(r.verdict)},
           {"violations", r.violations},
           {"profiles_tested", r.profiles_tested},
           {"search_config", r.search_config},
           {"witnesses", r.witnesses}};
}
inline void from_json(const Json& j, AxiomReport& r) {
  r.axiom = axiom_from_string(j.at("axiom").get<std::string>());
  r.verdict = j.at("verdict").get<std::string>() == "pass" ? Verdict::pass : Verdict::fail;
  j.at("violations").get_to(r.violations);
  j.at("profiles_tested").get_to(r.profiles_tested);
  j.at("search_config").get_to(r.search_config);
  j.at("witnesses").get_to(r.witnesses);
}

inline void to_json(Json& j, const NamedAxiomReport& r) {
  j = r.report;
  j["mechanism"] = r.mechanism;
}
inline void from_json(const Json& j, NamedAxiomReport& r) {
  j.at("mechanism").get_to(r.mechanism);
  from_json(j, r.report);
}

inline void to_json(Json& j, const Deviation& d) {
  j = Json{{"kind", to_string(d.kind)},
           {"profile", d.profile},
           {"deviator", d.deviator},
           {"misreport_bid", d.misreport_bid ? Json(*d.misreport_bid) : Json(nullptr)},
           {"sybil_bids", d.sybil_bids},
           {"truthful_utility", d.truthful_utility},
           {"deviant_utility", d.deviant_utility},
           {"gain", d.gain},
           {"grid_gain", d.grid_gain}};
}
inline void from_json(const Json& j, Deviation& d) {
  d.kind = j.at("kind").get<std::string>() == "misreport" ? DeviationKind::misreport : DeviationKind::sybil;
  j.at("profile").get_to(d.profile);
  j.at("deviator").get_to(d.deviator);
  d.misreport_bid = j.at("misreport_bid").is_null() ? std::nullopt
                                                    : std::optional<double>(j.at("misreport_bid").get<double>());
  j.at("sybil_bids").get_to(d.sybil_bids);
  j.at("truthful_utility").get_to(d.truthful_utility);
  j.at("deviant_utility").get_to(d.deviant_utility);
  j.at("gain").get_to(d.gain);
  j.at("grid_gain").get_to(d.grid_gain);
}

inline void to_json(Json& j, const GainSummary& g) {
  j = Json{{"count", g.count}, {"profitable", g.profitable}, {"max_gain", g.max_gain}, {"mean_gain", g.mean_gain}};
}
inline void from_json(const Json& j, GainSummary& g) {
  j.at("count").get_to(g.count);
  j.at("profitable").get_to(g.profitable);
  j.at("max_gain").get_to(g.max_gain);
  j.at("mean_gain").get_to(g.mean_gain);
}

inline void to_json(Json& j, const NamedSummary& s) {
  j = Json{{"mechanism", s.mechanism}, {"kind", s.kind}, {"summary", s.summary}};
}
inline void from_json(const Json& j, NamedSummary& s) {
  j.at("mechanism").get_to(s.mechanism);
  j.at("kind").get_to(s.kind);
  j.at("summary").get_to(s.summary);
}

inline void to_json(Json& j, const TraceSample& s) {
  j = Json::array({s.x, s.computed, s.reference, s.slack});
}
inline void from_json(const Json& j, TraceSample& s) {
  s = {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

inline void to_json(Json& j, const LemmaTrace& t) {
  j = Json{{"lemma", to_string(t.lemma)},
           {"mechanism", t.mechanism},
           {"u", t.u},
           {"v", t.v},
           {"n_max", t.n_max},
           {"verdict", to_string(t.verdict)},
           {"worst_slack", t.worst_slack},
           {"tolerance", t.tolerance},
           {"summary", t.summary},
           {"aux_error", t.aux_error},
           {"note", t.note},
           {"columns", Json::array({"x", "computed", "reference", "slack"})},
           {"samples", t.samples}};
}
inline void from_json(const Json& j, LemmaTrace& t) {
  t.lemma = lemma_from_string(j.at("lemma").get<std::string>());
  j.at("mechanism").get_to(t.mechanism);
  j.at("u").get_to(t.u);
  j.at("v").get_to(t.v);
  j.at("n_max").get_to(t.n_max);
  t.verdict = j.at("verdict").get<std::string>() == "consistent" ? TraceVerdict::consistent
                                                                 : TraceVerdict::violated;
  j.at("worst_slack").get_to(t.worst_slack);
  j.at("tolerance").get_to(t.tolerance);
  j.at("summary").get_to(t.summary);
  j.at("aux_error").get_to(t.aux_error);
  j.at("note").get_to(t.note);
  j.at("samples").get_to(t.samples);
}

inline void to_json(Json& j, const IndependenceRow& r) {
  Json verdicts = Json::object();
  for (const auto& rep : r.reports) verdicts[to_string(rep.axiom)] = to_string(rep.verdict);
  j = Json{{"mechanism", r.mechanism},
           {"designated_failure", r.designated_failure ? Json(to_string(*r.designated_failure)) : Json(nullptr)},
           {"pattern_asserted", r.pattern_asserted},
           {"matches", r.matches},
           {"verdicts", verdicts},
           {"reports", r.reports}};
}
inline void from_json(const Json& j, IndependenceRow& r) {
  j.at("mechanism").get_to(r.mechanism);
  const Json& d = j.at("designated_failure");
  r.designated_failure = d.is_null() ? std::nullopt : std::optional<Axiom>(axiom_from_string(d.get<std::string>()));
  j.at("pattern_asserted").get_to(r.pattern_asserted);
  j.at("matches").get_to(r.matches);
  j.at("reports").get_to(r.reports);
}

inline void to_json(Json& j, const IndependenceMatrix& m) {
  j = Json{{"profiles", m.profiles}, {"matches", m.matches}, {"rows", m.rows}};
}
inline void from_json(const Json& j, IndependenceMatrix& m) {
  j.at("profiles").get_to(m.profiles);
  j.at("matches").get_to(m.matches);
  j.at("rows").get_to(m.rows);
}

inline void to_json(Json& j, const ReportDocument& d) {
  j = Json{{"tool", d.tool}, {"version", d.version}, {"command", d.command},
           {"status", d.status}, {"scenario", d.scenario}, {"scope_note", kScopeNote}};
  j["axiom_reports"] = d.axiom_reports;
  j["deviations"] = d.deviations;
  j["scan_summaries"] = d.scan_summaries;
  j["lemma_traces"] = d.lemma_traces;
  j["independence"] = d.independence ? Json(*d.independence) : Json(nullptr);
  j["warnings"] = d.warnings;
  if (!d.timings.empty()) {
    Json t = Json::object();
    for (const auto& [k, v] : d.timings) t[k] = v;
    j["timings"] = t;
  }
}
inline void from_json(const Json& j, ReportDocument& d) {
  j.at("tool").get_to(d.tool);
  j.at("version").get_to(d.version);
  j.at("command").get_to(d.command);
  j.at("status").get_to(d.status);
  d.scenario = ScenarioConfig{};
  from_json(j.at("scenario"), d.scenario);
  j.at("axiom_reports").get_to(d.axiom_reports);
  j.at("deviations").get_to(d.deviations);
  j.at("scan_summaries").get_to(d.scan_summaries);
  j.at("lemma_traces").get_to(d.lemma_traces);
  d.independence = j.at("independence").is_null()
                       ? std::nullopt
                       : std::optional<IndependenceMatrix>(j.at("independence").get<IndependenceMatrix>());
  j.at("warnings").get_to(d.warnings);
  d.timings.clear();
  if (j.contains("timings")) {
    for (auto it = j.at("timings").begin(); it != j.at("timings").end(); ++it) {
      d.timings.emplace_back(it.key(), it.value().get<double>());
    }
  }
}

inline std::string serialize(const ReportDocument& d) { return Json(d).dump(2) + "\n"; }

inline ReportDocument parse_report(const std::string& text) {
  return Json::parse(text).get<ReportDocument>();
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string csv_number(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace detail

inline void write_trace_csv(std::ostream& os, const LemmaTrace& t) {
  os << "# mechlab-csv " << kCsvVersion << " trace lemma=" << to_string(t.lemma)
     << " mechanism=" << t.mechanism << " verdict=" << to_string(t.verdict) << "\n";
  os << "x,computed,reference,slack\n";
  for (const auto& s : t.samples) {
    os << detail::csv_number(s.x) << ',' << detail::csv_number(s.computed) << ','
       << detail::csv_number(s.reference) << ',' << detail::csv_number(s.slack) << "\n";
  }
}

inline void write_gains_csv(std::ostream& os, const std::string& mechanism,
                            const std::vector<ScanRecord>& records) {
  os << "# mechlab-csv " << kCsvVersion << " gains mechanism=" << mechanism << "\n";
  os << "profile_index,n_agents,agent,kind,bid,gain\n";
  for (const auto& r : records) {
    os << r.profile_index << ',' << r.n_agents << ',' << r.agent.value << ',' << to_string(r.kind)
       << ',' << detail::csv_number(r.bid) << ',' << detail::csv_number(r.gain) << "\n";
  }
}

inline void write_axioms_csv(std::ostream& os, const std::vector<NamedAxiomReport>& reports) {
  os << "# mechlab-csv " << kCsvVersion << " axioms\n";
  os << "mechanism,axiom,verdict,violations,profiles_tested,worst_magnitude\n";
  for (const auto& r : reports) {
    const double worst = r.report.witnesses.empty() ? 0.0 : r.report.witnesses.front().magnitude;
    os << r.mechanism << ',' << to_string(r.report.axiom) << ',' << to_string(r.report.verdict) << ','
       << r.report.violations << ',' << r.report.profiles_tested << ',' << detail::csv_number(worst) << "\n";
  }
}

inline void write_matrix_csv(std::ostream& os, const IndependenceMatrix& m) {
  os << "# mechlab-csv " << kCsvVersion << " matrix matches=" << (m.matches ? "true" : "false") << "\n";
  os << "mechanism";
  for (Axiom a : kAllAxioms) os << ',' << to_string(a);
  os << ",matches\n";
  for (const auto& row : m.rows) {
    os << row.mechanism;
    for (const auto& rep : row.reports) os << ',' << to_string(rep.verdict);
    os << ',' << (row.pattern_asserted ? (row.matches ? "yes" : "no") : "n/a") << "\n";
  }
}

/// Aligned plain-text rendering of the matrix.
inline std::string matrix_table(const IndependenceMatrix& m) {
  std::ostringstream os;
  std::size_t w0 = 9;
  for (const auto& row : m.rows) w0 = std::max(w0, row.mechanism.size());
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  os << pad("mechanism", w0 + 2);
  for (Axiom a : kAllAxioms) os << pad(to_string(a), std::string(to_string(a)).size() + 2);
  os << "pattern\n";
  for (const auto& row : m.rows) {
    os << pad(row.mechanism, w0 + 2);
    for (const auto& rep : row.reports) {
      os << pad(to_string(rep.verdict), std::string(to_string(rep.axiom)).size() + 2);
    }
    os << (row.pattern_asserted ? (row.matches ? "ok" : "MISMATCH") : "n/a") << "\n";
  }
  return os.str();
}

}  // namespace mechlab
