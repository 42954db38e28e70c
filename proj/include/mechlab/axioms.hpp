#pragma once

// Executable axiom checkers. Each checker searches a finite scope (a list of
// profiles, and for deviation axioms an augmented bid grid) and returns an
// AxiomReport. A pass only means that no violation exists within the
// declared scope.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mechlab/core.hpp"
#include "mechlab/mechanisms.hpp"
#include "mechlab/parallel.hpp"
#include "mechlab/sampling.hpp"

namespace mechlab {

enum class Axiom {
  non_wastefulness,
  symmetry,
  monotonicity,
  zero_bid_payment,
  incentive_compatibility,
  sybil_proofness,
  individual_rationality,
};

inline constexpr std::array<Axiom, 7> kAllAxioms = {
    Axiom::non_wastefulness,        Axiom::symmetry,        Axiom::monotonicity,
    Axiom::zero_bid_payment,        Axiom::incentive_compatibility,
    Axiom::sybil_proofness,         Axiom::individual_rationality,
};

inline const char* to_string(Axiom a) {
  switch (a) {
    case Axiom::non_wastefulness: return "non_wastefulness";
    case Axiom::symmetry: return "symmetry";
    case Axiom::monotonicity: return "monotonicity";
    case Axiom::zero_bid_payment: return "zero_bid_payment";
    case Axiom::incentive_compatibility: return "incentive_compatibility";
    case Axiom::sybil_proofness: return "sybil_proofness";
    case Axiom::individual_rationality: return "individual_rationality";
  }
  return "?";
}

inline Axiom axiom_from_string(std::string_view s) {
  for (Axiom a : kAllAxioms) {
    if (s == to_string(a)) return a;
  }
  throw Error("unknown axiom '" + std::string(s) + "'");
}

enum class Verdict { pass, fail };

inline const char* to_string(Verdict v) { return v == Verdict::pass ? "pass" : "fail"; }

/// One concrete violation. Which fields are meaningful depends on the axiom:
///   non_wastefulness  observed = sum of shares, reference = 1
///   symmetry          agent j, permutation, observed = x_{pi(j)}(v o pi^-1), reference = x_j(v)
///   monotonicity      agent, probe_lo < probe_hi, observed = x(probe_hi), reference = x(probe_lo)
///   zero_bid_payment  agent (bidding 0 in `profile`), observed = payment, reference = 0
///   incentive_compat. agent, probe_lo = misreport, observed = deviant U, reference = truthful U
///   sybil_proofness   agent, probe_lo = sybil bid, observed = deviant U, reference = truthful U
///   individual_rat.   agent, observed = truthful U, reference = 0
struct Witness {
  BidProfile profile;
  AgentId agent{};
  double probe_lo = 0.0;
  double probe_hi = 0.0;
  std::vector<AgentId> permutation;  // image of each agent, canonical order
  double observed = 0.0;
  double reference = 0.0;
  double magnitude = 0.0;

  bool operator==(const Witness&) const = default;
};

struct AxiomReport {
  Axiom axiom = Axiom::non_wastefulness;
  Verdict verdict = Verdict::pass;
  std::vector<Witness> witnesses;  // worst first, capped
  std::size_t violations = 0;      // total violating cases found
  std::size_t profiles_tested = 0;
  std::string search_config;

  bool passed() const noexcept { return verdict == Verdict::pass; }
  bool operator==(const AxiomReport&) const = default;
};

inline constexpr std::string_view kScopeNote =
    "pass means no violation was found within the declared search scope";

struct CheckOptions {
  ToleranceConfig tol;
  QuadratureConfig quad;
  unsigned jobs = 1;
  std::size_t max_witnesses = 8;
  int permutations_per_profile = 50;  // sampled when n > 5
  std::uint64_t seed = 42;
};

namespace detail {

inline AxiomReport finish_report(Axiom axiom, std::vector<std::vector<Witness>> per_profile,
                                 std::size_t profiles, std::string scope,
                                 const CheckOptions& opts) {
  AxiomReport r;
  r.axiom = axiom;
  r.profiles_tested = profiles;
  r.search_config = std::move(scope);
  for (auto& ws : per_profile) {
    for (auto& w : ws) r.witnesses.push_back(std::move(w));
  }
  r.violations = r.witnesses.size();
  std::stable_sort(r.witnesses.begin(), r.witnesses.end(),
                   [](const Witness& a, const Witness& b) { return a.magnitude > b.magnitude; });
  if (r.witnesses.size() > opts.max_witnesses) r.witnesses.resize(opts.max_witnesses);
  r.verdict = r.witnesses.empty() ? Verdict::pass : Verdict::fail;
  return r;
}

inline std::string scope_string(std::size_t profiles, const SearchGrid* grid, double threshold,
                                const std::string& extra = {}) {
  std::ostringstream os;
  os.precision(6);
  os << profiles << " profiles";
  if (grid) os << "; grid " << grid->describe() << " augmented with 0, profile bids and hi";
  if (!extra.empty()) os << "; " << extra;
  os << "; threshold " << threshold << "; " << kScopeNote;
  return os.str();
}

/// Profile obtained by moving each agent's bid to its image: agent pi(j) bids v_j.
inline BidProfile permute_profile(const BidProfile& p, const std::vector<AgentId>& image) {
  std::vector<BidEntry> e;
  e.reserve(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) e.push_back({image[k], p[k].bid});
  return BidProfile(std::move(e));
}

inline std::vector<std::vector<AgentId>> permutations_for(const BidProfile& p, int sampled,
                                                          std::uint64_t seed) {
  std::vector<AgentId> ids = p.agents();
  std::vector<std::vector<AgentId>> out;
  if (p.size() <= 5) {
    std::vector<AgentId> perm = ids;
    do {
      out.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
  }
  std::mt19937_64 rng(seed);
  for (int s = 0; s < sampled; ++s) {
    std::vector<AgentId> perm = ids;
    for (std::size_t k = perm.size() - 1; k > 0; --k) {
      std::swap(perm[k], perm[static_cast<std::size_t>(rng() % (k + 1))]);
    }
    out.push_back(std::move(perm));
  }
  return out;
}

/// Combined utility of agent k (truthful bid) plus sybils with fresh ids
/// max id + 1, max id + 2, ... bidding `sybil_bids`, collecting every share and
/// paying every payment.
inline Bracket sybil_utility(const Mechanism& mech, const BidProfile& p, std::size_t k,
                             const std::vector<double>& sybil_bids, const QuadratureConfig& quad,
                             double slack) {
  std::vector<BidEntry> e = p.entries();
  const std::uint64_t first = p.max_id().value + 1;
  for (std::size_t s = 0; s < sybil_bids.size(); ++s) e.push_back({AgentId{first + s}, sybil_bids[s]});
  const BidProfile ext(std::move(e));
  // Original agents keep their canonical positions; sybils follow.
  const Allocation x = mech.allocate(ext);
  const Bracket pi = payment_at(mech, ext, k, quad, slack);
  double xs = 0.0, ps = 0.0, width = pi.width;
  for (std::size_t s = 0; s < sybil_bids.size(); ++s) {
    const std::size_t js = p.size() + s;
    const Bracket pj = payment_at(mech, ext, js, quad, slack);
    xs += x[js];
    ps += pj.value;
    width += pj.width;
  }
  const double value = p[k].bid;
  return {value * (x[k] + xs) - pi.value - ps, width};
}

inline Bracket sybil_utility(const Mechanism& mech, const BidProfile& p, std::size_t k,
                             double sybil_bid, const QuadratureConfig& quad, double slack) {
  return sybil_utility(mech, p, k, std::vector<double>{sybil_bid}, quad, slack);
}

}  // namespace detail

inline AxiomReport check_non_wastefulness(const Mechanism& mech,
                                          const std::vector<BidProfile>& profiles,
                                          const CheckOptions& opts = {}) {
  auto per = parallel_map(profiles.size(), opts.jobs, [&](std::size_t s) {
    std::vector<Witness> ws;
    const double sum = mech.allocate(profiles[s]).sum();
    const double gap = std::abs(sum - 1.0);
    if (gap > opts.tol.tol_alloc) {
      Witness w;
      w.profile = profiles[s];
      w.observed = sum;
      w.reference = 1.0;
      w.magnitude = gap;
      ws.push_back(std::move(w));
    }
    return ws;
  });
  return detail::finish_report(Axiom::non_wastefulness, std::move(per), profiles.size(),
                               detail::scope_string(profiles.size(), nullptr, opts.tol.tol_alloc),
                               opts);
}

inline AxiomReport check_symmetry(const Mechanism& mech, const std::vector<BidProfile>& profiles,
                                  const CheckOptions& opts = {}) {
  auto per = parallel_map(profiles.size(), opts.jobs, [&](std::size_t s) {
    const BidProfile& p = profiles[s];
    std::vector<Witness> ws;
    const Allocation base = mech.allocate(p);
    for (const auto& image : detail::permutations_for(p, opts.permutations_per_profile,
                                                      opts.seed ^ (0x9e3779b97f4a7c15ULL * (s + 1)))) {
      const BidProfile moved = detail::permute_profile(p, image);
      const Allocation x = mech.allocate(moved);
      std::optional<Witness> worst;
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double after = x.of(image[j]);
        const double gap = std::abs(after - base[j]);
        if (gap > opts.tol.tol_num && (!worst || gap > worst->magnitude)) {
          Witness w;
          w.profile = p;
          w.agent = p[j].agent;
          w.permutation = image;
          w.observed = after;
          w.reference = base[j];
          w.magnitude = gap;
          worst = std::move(w);
        }
      }
      if (worst) ws.push_back(std::move(*worst));
    }
    return ws;
  });
  std::string extra = "all permutations for n <= 5, " +
                      std::to_string(opts.permutations_per_profile) + " sampled otherwise";
  return detail::finish_report(Axiom::symmetry, std::move(per), profiles.size(),
                               detail::scope_string(profiles.size(), nullptr, opts.tol.tol_num, extra),
                               opts);
}

inline AxiomReport check_monotonicity(const Mechanism& mech, const std::vector<BidProfile>& profiles,
                                      const SearchGrid& grid, const CheckOptions& opts = {}) {
  grid.validate();
  auto per = parallel_map(profiles.size(), opts.jobs, [&](std::size_t s) {
    const BidProfile& p = profiles[s];
    std::vector<Witness> ws;
    const std::vector<double> pts = grid.points_for(p);
    for (std::size_t k = 0; k < p.size(); ++k) {
      double prev = share_at(mech, p, k, pts[0]);
      for (std::size_t g = 1; g < pts.size(); ++g) {
        const double cur = share_at(mech, p, k, pts[g]);
        if (prev - cur > opts.tol.tol_num) {
          Witness w;
          w.profile = p;
          w.agent = p[k].agent;
          w.probe_lo = pts[g - 1];
          w.probe_hi = pts[g];
          w.observed = cur;
          w.reference = prev;
          w.magnitude = prev - cur;
          ws.push_back(std::move(w));
        }
        prev = cur;
      }
    }
    return ws;
  });
  return detail::finish_report(Axiom::monotonicity, std::move(per), profiles.size(),
                               detail::scope_string(profiles.size(), &grid, opts.tol.tol_num), opts);
}

inline AxiomReport check_zero_bid_payment(const Mechanism& mech,
                                          const std::vector<BidProfile>& profiles,
                                          const CheckOptions& opts = {}) {
  auto per = parallel_map(profiles.size(), opts.jobs, [&](std::size_t s) {
    std::vector<Witness> ws;
    for (std::size_t k = 0; k < profiles[s].size(); ++k) {
      const BidProfile zeroed = profiles[s].with_bid_at(k, 0.0);
      const double pay = payment_at(mech, zeroed, k, opts.quad, opts.tol.tol_num).value;
      if (std::abs(pay) > opts.tol.tol_num) {
        Witness w;
        w.profile = zeroed;
        w.agent = zeroed[k].agent;
        w.observed = pay;
        w.reference = 0.0;
        w.magnitude = std::abs(pay);
        ws.push_back(std::move(w));
      }
    }
    return ws;
  });
  return detail::finish_report(Axiom::zero_bid_payment, std::move(per), profiles.size(),
                               detail::scope_string(profiles.size(), nullptr, opts.tol.tol_num), opts);
}

inline AxiomReport check_ic(const Mechanism& mech, const std::vector<BidProfile>& profiles,
                            const SearchGrid& grid, const CheckOptions& opts = {}) {
  grid.validate();
  const double threshold = opts.tol.tol_num + 2.0 * opts.quad.tol_quad;
  auto per = parallel_map(profiles.size(), opts.jobs, [&](std::size_t s) {
    const BidProfile& p = profiles[s];
    std::vector<Witness> ws;
    const std::vector<double> pts = grid.points_for(p);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double value = p[k].bid;
      const double truthful = truthful_utility_at(mech, p, k, opts.quad, opts.tol.tol_num).value;
      std::optional<Witness> best;
      for (double b : pts) {
        if (b == value) continue;
        const double dev =
            utility_at(mech, p.with_bid_at(k, b), k, value, opts.quad, opts.tol.tol_num).value;
        const double gain = dev - truthful;
        if (gain > threshold && (!best || gain > best->magnitude)) {
          Witness w;
          w.profile = p;
          w.agent = p[k].agent;
          w.probe_lo = b;
          w.observed = dev;
          w.reference = truthful;
          w.magnitude = gain;
          best = std::move(w);
        }
      }
      if (best) ws.push_back(std::move(*best));
    }
    return ws;
  });
  return detail::finish_report(Axiom::incentive_compatibility, std::move(per), profiles.size(),
                               detail::scope_string(profiles.size(), &grid, threshold), opts);
}

inline AxiomReport check_sybil_proofness(const Mechanism& mech,
                                         const std::vector<BidProfile>& profiles,
                                         const SearchGrid& grid, const CheckOptions& opts = {}) {
  grid.validate();
  const double threshold = opts.tol.tol_num + 4.0 * opts.quad.tol_quad;
  auto per = parallel_map(profiles.size(), opts.jobs, [&](std::size_t s) {
    const BidProfile& p = profiles[s];
    std::vector<Witness> ws;
    const std::vector<double> pts = grid.points_for(p);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double truthful = truthful_utility_at(mech, p, k, opts.quad, opts.tol.tol_num).value;
      std::optional<Witness> best;
      for (double u : pts) {
        const double dev = detail::sybil_utility(mech, p, k, u, opts.quad, opts.tol.tol_num).value;
        const double gain = dev - truthful;
        if (gain > threshold && (!best || gain > best->magnitude)) {
          Witness w;
          w.profile = p;
          w.agent = p[k].agent;
          w.probe_lo = u;
          w.observed = dev;
          w.reference = truthful;
          w.magnitude = gain;
          best = std::move(w);
        }
      }
      if (best) ws.push_back(std::move(*best));
    }
    return ws;
  });
  return detail::finish_report(
      Axiom::sybil_proofness, std::move(per), profiles.size(),
      detail::scope_string(profiles.size(), &grid, threshold, "one sybil, id = max id + 1"), opts);
}

inline AxiomReport check_ir(const Mechanism& mech, const std::vector<BidProfile>& profiles,
                            const CheckOptions& opts = {}) {
  const double threshold = opts.tol.tol_num + 2.0 * opts.quad.tol_quad;
  auto per = parallel_map(profiles.size(), opts.jobs, [&](std::size_t s) {
    const BidProfile& p = profiles[s];
    std::vector<Witness> ws;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double u = truthful_utility_at(mech, p, k, opts.quad, opts.tol.tol_num).value;
      if (u < -threshold) {
        Witness w;
        w.profile = p;
        w.agent = p[k].agent;
        w.observed = u;
        w.reference = 0.0;
        w.magnitude = -u;
        ws.push_back(std::move(w));
      }
    }
    return ws;
  });
  return detail::finish_report(Axiom::individual_rationality, std::move(per), profiles.size(),
                               detail::scope_string(profiles.size(), nullptr, threshold), opts);
}

inline AxiomReport check_axiom(Axiom axiom, const Mechanism& mech,
                               const std::vector<BidProfile>& profiles, const SearchGrid& grid,
                               const CheckOptions& opts = {}) {
  switch (axiom) {
    case Axiom::non_wastefulness: return check_non_wastefulness(mech, profiles, opts);
    case Axiom::symmetry: return check_symmetry(mech, profiles, opts);
    case Axiom::monotonicity: return check_monotonicity(mech, profiles, grid, opts);
    case Axiom::zero_bid_payment: return check_zero_bid_payment(mech, profiles, opts);
    case Axiom::incentive_compatibility: return check_ic(mech, profiles, grid, opts);
    case Axiom::sybil_proofness: return check_sybil_proofness(mech, profiles, grid, opts);
    case Axiom::individual_rationality: return check_ir(mech, profiles, opts);
  }
  throw Error("unknown axiom");
}

inline std::vector<AxiomReport> check_all(const Mechanism& mech,
                                          const std::vector<BidProfile>& profiles,
                                          const SearchGrid& grid, const CheckOptions& opts = {}) {
  std::vector<AxiomReport> out;
  for (Axiom a : kAllAxioms) out.push_back(check_axiom(a, mech, profiles, grid, opts));
  return out;
}

/// Recomputes a witness's violation magnitude from the mechanism alone,
/// without going through the checker that produced it.
inline double replay_witness(const Mechanism& mech, Axiom axiom, const Witness& w,
                             const QuadratureConfig& quad = {}) {
  const BidProfile& p = w.profile;
  switch (axiom) {
    case Axiom::non_wastefulness: {
      const Allocation x = mech.allocate(p);
      return std::abs(x.sum() - 1.0);
    }
    case Axiom::symmetry: {
      const BidProfile moved = detail::permute_profile(p, w.permutation);
      const std::size_t j = p.index_of(w.agent);
      return std::abs(mech.allocate(moved).of(w.permutation[j]) - mech.allocate(p).of(w.agent));
    }
    case Axiom::monotonicity: {
      const double lo = mech.allocate(p.with_bid(w.agent, w.probe_lo)).of(w.agent);
      const double hi = mech.allocate(p.with_bid(w.agent, w.probe_hi)).of(w.agent);
      return lo - hi;
    }
    case Axiom::zero_bid_payment: {
      return std::abs(payments(mech, p, quad).of(w.agent));
    }
    case Axiom::incentive_compatibility: {
      const double value = p.bid_of(w.agent);
      const Outcome truthful = evaluate(mech, p, quad);
      const BidProfile lied = p.with_bid(w.agent, w.probe_lo);
      const Outcome dev = evaluate(mech, lied, quad);
      const double u_true = utility(value, truthful.allocation.of(w.agent), truthful.payments.of(w.agent));
      const double u_dev = utility(value, dev.allocation.of(w.agent), dev.payments.of(w.agent));
      return u_dev - u_true;
    }
    case Axiom::sybil_proofness: {
      const double value = p.bid_of(w.agent);
      const AgentId sybil{p.max_id().value + 1};
      const Outcome truthful = evaluate(mech, p, quad);
      const Outcome dev = evaluate(mech, extend_profile(p, sybil, w.probe_lo), quad);
      const double u_true = utility(value, truthful.allocation.of(w.agent), truthful.payments.of(w.agent));
      const double u_dev = value * (dev.allocation.of(w.agent) + dev.allocation.of(sybil)) -
                           dev.payments.of(w.agent) - dev.payments.of(sybil);
      return u_dev - u_true;
    }
    case Axiom::individual_rationality: {
      const Outcome o = evaluate(mech, p, quad);
      return -utility(p.bid_of(w.agent), o.allocation.of(w.agent), o.payments.of(w.agent));
    }
  }
  throw Error("unknown axiom");
}

// ---------------------------------------------------------------------------
// Logical independence of the axioms
// ---------------------------------------------------------------------------

/// The four axioms of the characterization; each counterexample mechanism
/// must fail exactly one of them.
inline constexpr std::array<Axiom, 4> kCharacterizationAxioms = {
    Axiom::non_wastefulness, Axiom::symmetry, Axiom::incentive_compatibility,
    Axiom::sybil_proofness};

struct IndependenceRow {
  std::string mechanism;
  std::vector<AxiomReport> reports;          // kAllAxioms order
  std::optional<Axiom> designated_failure;   // empty for SPA
  bool pattern_asserted = true;
  bool matches = true;

  bool operator==(const IndependenceRow&) const = default;
};

struct IndependenceMatrix {
  std::vector<IndependenceRow> rows;
  std::size_t profiles = 0;
  bool matches = true;  // over rows with pattern_asserted

  Verdict verdict(std::size_t row, Axiom a) const {
    return rows[row].reports[static_cast<std::size_t>(a)].verdict;
  }
  bool operator==(const IndependenceMatrix&) const = default;
};

struct IndependenceConfig {
  SearchGrid grid;
  int n_min = 2;
  int n_max = 5;
  std::size_t profile_budget = 500;
  double c = 0.5;
  double r = 4.0;
  CheckOptions check;
};

/// Whether a row's verdicts match the expected pattern: SPA passes all seven
/// checks; a counterexample fails its designated axiom and passes the other
/// three characterization axioms.
inline bool row_matches(const IndependenceRow& row) {
  if (!row.designated_failure) {
    return std::all_of(row.reports.begin(), row.reports.end(),
                       [](const AxiomReport& r) { return r.passed(); });
  }
  for (Axiom a : kCharacterizationAxioms) {
    const bool should_fail = (a == *row.designated_failure);
    if (row.reports[static_cast<std::size_t>(a)].passed() == should_fail) return false;
  }
  return true;
}

inline IndependenceRow audit_row(const Mechanism& mech, std::optional<Axiom> designated,
                                 const std::vector<BidProfile>& profiles, const SearchGrid& grid,
                                 const CheckOptions& opts, bool assert_pattern = true) {
  IndependenceRow row;
  row.mechanism = mech.name();
  row.reports = check_all(mech, profiles, grid, opts);
  row.designated_failure = designated;
  row.pattern_asserted = assert_pattern;
  row.matches = assert_pattern ? row_matches(row) : true;
  return row;
}

/// Runs every checker on the five reference mechanisms (plus any `extra`
/// rows, which are reported without a pattern assertion).
inline IndependenceMatrix independence_matrix(const IndependenceConfig& cfg,
                                              const std::vector<Mechanism>& extra = {}) {
  ProfileSampler sampler{cfg.n_min, cfg.n_max, cfg.grid, cfg.check.seed};
  const std::vector<BidProfile> profiles = sampler.sample(cfg.profile_budget);
  const double eps = cfg.check.tol.eps_tie;

  IndependenceMatrix m;
  m.profiles = profiles.size();
  m.rows.push_back(audit_row(make_spa(eps), std::nullopt, profiles, cfg.grid, cfg.check));
  m.rows.push_back(audit_row(make_spa_reserve({cfg.r}, eps), Axiom::non_wastefulness, profiles,
                             cfg.grid, cfg.check));
  m.rows.push_back(audit_row(make_lottery(), Axiom::sybil_proofness, profiles, cfg.grid, cfg.check));
  m.rows.push_back(audit_row(make_asymmetric_spa(eps), Axiom::symmetry, profiles, cfg.grid, cfg.check));
  m.rows.push_back(audit_row(make_proportional({cfg.c}), Axiom::incentive_compatibility, profiles,
                             cfg.grid, cfg.check));
  for (const auto& mech : extra) {
    m.rows.push_back(audit_row(mech, std::nullopt, profiles, cfg.grid, cfg.check, false));
  }
  m.matches = std::all_of(m.rows.begin(), m.rows.end(),
                          [](const IndependenceRow& r) { return r.matches; });
  return m;
}

}  // namespace mechlab
