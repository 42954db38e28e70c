#pragma once

// Step-by-step numerical trace of the characterization proof against a
// candidate mechanism. Each step yields a LemmaTrace of (parameter, computed,
// reference, slack) samples. Asymptotic statements are only checked up to a
// finite truncation, and every trace says so.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mechlab/attack.hpp"
#include "mechlab/axioms.hpp"
#include "mechlab/core.hpp"
#include "mechlab/mechanisms.hpp"

namespace mechlab {

enum class Lemma { lemma1, eqn2, lemma2, lemma3, averaging, induction };

inline constexpr std::array<Lemma, 6> kAllLemmas = {Lemma::lemma1, Lemma::eqn2,      Lemma::lemma2,
                                                    Lemma::lemma3, Lemma::averaging, Lemma::induction};

inline const char* to_string(Lemma l) {
  switch (l) {
    case Lemma::lemma1: return "lemma1";
    case Lemma::eqn2: return "eqn2";
    case Lemma::lemma2: return "lemma2";
    case Lemma::lemma3: return "lemma3";
    case Lemma::averaging: return "averaging";
    case Lemma::induction: return "induction";
  }
  return "?";
}

inline Lemma lemma_from_string(std::string_view s) {
  for (Lemma l : kAllLemmas) {
    if (s == to_string(l)) return l;
  }
  throw Error("unknown lemma '" + std::string(s) + "'");
}

enum class TraceVerdict { consistent, violated };

inline const char* to_string(TraceVerdict v) {
  return v == TraceVerdict::consistent ? "consistent" : "violated";
}

struct TraceSample {
  double x = 0.0;  // n, v, or the sample's parameter
  double computed = 0.0;
  double reference = 0.0;
  double slack = 0.0;  // >= 0 when the sample satisfies its reference

  bool operator==(const TraceSample&) const = default;
};

struct LemmaTrace {
  Lemma lemma = Lemma::lemma1;
  std::string mechanism;
  double u = 0.0;
  double v = 0.0;
  int n_max = 0;
  std::vector<TraceSample> samples;
  TraceVerdict verdict = TraceVerdict::consistent;
  double worst_slack = 0.0;
  double tolerance = 0.0;
  double summary = 0.0;  // running max (lemma1), averaged value (averaging), gap (lemma2)
  double aux_error = 0.0;  // sybil-share identity error (eqn2), half-resolution gap (averaging)
  std::string note;

  bool consistent() const noexcept { return verdict == TraceVerdict::consistent; }
  bool operator==(const LemmaTrace&) const = default;
};

inline constexpr std::string_view kTruncationNote =
    "finite evidence only: limits and almost-sure statements are checked on a truncation";

struct TheoremOptions {
  ToleranceConfig tol;
  QuadratureConfig quad;
};

namespace detail {

inline void finalize(LemmaTrace& t) {
  t.worst_slack = 0.0;
  bool bad = false;
  for (std::size_t s = 0; s < t.samples.size(); ++s) {
    const double sl = t.samples[s].slack;
    if (s == 0 || sl < t.worst_slack) t.worst_slack = sl;
    if (sl < -t.tolerance) bad = true;
  }
  if (bad) t.verdict = TraceVerdict::violated;
}

inline double first_share(const Mechanism& mech, const BidProfile& p) { return mech.allocate(p)[0]; }

}  // namespace detail

/// x_1(u, v, ..., v) for n = 2..n_max. Consistent when the running maximum
/// reaches 1 within tol_num.
inline LemmaTrace lemma1_trace(const Mechanism& mech, double u, double v, int n_max,
                               const TheoremOptions& opts = {}) {
  if (!(u > v && v >= 0.0)) throw PreconditionError("lemma1 needs u > v >= 0");
  if (n_max < 2) throw PreconditionError("lemma1 needs n_max >= 2");
  LemmaTrace t;
  t.lemma = Lemma::lemma1;
  t.mechanism = mech.name();
  t.u = u;
  t.v = v;
  t.n_max = n_max;
  t.tolerance = opts.tol.tol_num;
  double running = 0.0;
  for (int n = 2; n <= n_max; ++n) {
    const double x1 = detail::first_share(mech, replicate_profile(u, v, n));
    running = std::max(running, x1);
    t.samples.push_back({static_cast<double>(n), x1, 1.0, x1 - 1.0});
  }
  t.summary = running;
  t.worst_slack = running - 1.0;
  t.verdict = running >= 1.0 - opts.tol.tol_num ? TraceVerdict::consistent : TraceVerdict::violated;
  std::ostringstream os;
  os << "running max of x1 up to n = " << n_max << " is " << running
     << "; the limit itself is not claimed; " << kTruncationNote;
  t.note = os.str();
  return t;
}

/// |x_2(u, v^(n)) - (1 - x_1(u, v^(n))) / n| on the profile with n + 1 agents
/// where agents 2..n+1 bid v. Zero for symmetric, non-wasteful rules.
inline double sybil_share_identity_error(const Mechanism& mech, double u, double v, int n) {
  const Allocation x = mech.allocate(replicate_profile(u, v, n + 1));
  return std::abs(x[1] - (1.0 - x[0]) / static_cast<double>(n));
}

/// For n = 2..n_max checks
///   U_1(u, v^(n)) >= U_1(u, v^(n+1)) + (u - v)(1/n)[1 - x_1(u, v^(n+1))]
/// under the mechanism's payments, plus the sybil-share identity it uses.
inline LemmaTrace eqn2_chain_check(const Mechanism& mech, double u, double v, int n_max,
                                   const TheoremOptions& opts = {}) {
  if (!(u > v && v >= 0.0)) throw PreconditionError("eqn2 needs u > v >= 0");
  if (n_max < 2) throw PreconditionError("eqn2 needs n_max >= 2");
  LemmaTrace t;
  t.lemma = Lemma::eqn2;
  t.mechanism = mech.name();
  t.u = u;
  t.v = v;
  t.n_max = n_max;
  t.tolerance = opts.tol.tol_num + 4.0 * opts.quad.tol_quad;
  auto u1 = [&](int n) {
    return truthful_utility_at(mech, replicate_profile(u, v, n), 0, opts.quad, opts.tol.tol_num).value;
  };
  double next = u1(2);
  for (int n = 2; n <= n_max; ++n) {
    const double lhs = next;
    next = u1(n + 1);
    const double x1 = detail::first_share(mech, replicate_profile(u, v, n + 1));
    const double rhs = next + (u - v) * (1.0 / static_cast<double>(n)) * (1.0 - x1);
    t.samples.push_back({static_cast<double>(n), lhs, rhs, lhs - rhs});
    t.aux_error = std::max(t.aux_error, sybil_share_identity_error(mech, u, v, n));
  }
  detail::finalize(t);
  if (t.aux_error > opts.tol.tol_num) t.verdict = TraceVerdict::violated;
  std::ostringstream os;
  os << "one inequality per n; sybil-share identity max error " << t.aux_error << "; "
     << kTruncationNote;
  t.note = os.str();
  return t;
}

/// U_1(u, v) - (u - v) on the two-agent profile {1:u, 2:v}.
inline double lemma2_gap(const Mechanism& mech, double u, double v, const TheoremOptions& opts = {}) {
  if (!(u >= v && v >= 0.0)) throw PreconditionError("lemma2 needs u >= v >= 0");
  const BidProfile p = BidProfile::from_bids({u, v});
  return truthful_utility_at(mech, p, 0, opts.quad, opts.tol.tol_num).value - (u - v);
}

inline LemmaTrace lemma2_trace(const Mechanism& mech, double u, double v,
                               const TheoremOptions& opts = {}) {
  LemmaTrace t;
  t.lemma = Lemma::lemma2;
  t.mechanism = mech.name();
  t.u = u;
  t.v = v;
  t.tolerance = opts.tol.tol_num + 2.0 * opts.quad.tol_quad;
  const double gap = lemma2_gap(mech, u, v, opts);
  t.samples.push_back({v, gap + (u - v), u - v, gap});
  t.summary = gap;
  detail::finalize(t);
  t.note = "slack = U1(u,v) - (u - v); sybil-proof mechanisms need slack >= 0";
  return t;
}

/// U_1(u, v) over the grid points in [0, u] (u itself included). Violated if
/// it increases between consecutive points by more than the tolerance stack.
inline LemmaTrace lemma3_monotone(const Mechanism& mech, double u, const SearchGrid& v_grid,
                                  const TheoremOptions& opts = {}) {
  if (!(u >= 0.0)) throw PreconditionError("lemma3 needs u >= 0");
  v_grid.validate();
  std::vector<double> vs;
  for (double v : v_grid.base_points()) {
    if (v <= u) vs.push_back(v);
  }
  if (vs.empty() || vs.back() != u) vs.push_back(u);
  LemmaTrace t;
  t.lemma = Lemma::lemma3;
  t.mechanism = mech.name();
  t.u = u;
  t.tolerance = opts.tol.tol_num + 4.0 * opts.quad.tol_quad;
  double prev = 0.0;
  for (std::size_t s = 0; s < vs.size(); ++s) {
    const BidProfile p = BidProfile::from_bids({u, vs[s]});
    const double val = truthful_utility_at(mech, p, 0, opts.quad, opts.tol.tol_num).value;
    const double ref = s == 0 ? val : prev;
    t.samples.push_back({vs[s], val, ref, ref - val});
    prev = val;
  }
  detail::finalize(t);
  t.note = "reference = U1 at the previous grid point; slack = decrease";
  return t;
}

struct AveragingConfig {
  std::size_t intervals = 2000;
  std::size_t precondition_samples = 64;
};

/// (1/u) \int_0^u U_1(u, v) dv by the composite trapezoid rule, compared with
/// u/2. The same integral at half resolution is kept in aux_error.
inline LemmaTrace averaging_identity(const Mechanism& mech, double u, const TheoremOptions& opts = {},
                                     const AveragingConfig& cfg = {}) {
  if (!(u > 0.0)) throw PreconditionError("averaging identity needs u > 0");
  if (cfg.intervals < 2 || cfg.intervals % 2 != 0) {
    throw PreconditionError("averaging identity needs an even number of intervals");
  }

  // The identity only holds for non-wasteful, symmetric two-agent rules.
  for (std::size_t s = 0; s <= cfg.precondition_samples; ++s) {
    const double v = u * static_cast<double>(s) / static_cast<double>(cfg.precondition_samples);
    const Allocation a = mech.allocate(BidProfile::from_bids({u, v}));
    const Allocation b = mech.allocate(BidProfile::from_bids({v, u}));
    if (std::abs(a.sum() - 1.0) > opts.tol.tol_alloc) {
      throw PreconditionError("averaging identity needs a non-wasteful mechanism; " + mech.name() +
                              " allocates " + std::to_string(a.sum()) + " at " +
                              describe(BidProfile::from_bids({u, v})));
    }
    if (std::abs(a[0] - b[1]) > opts.tol.tol_num || std::abs(a[1] - b[0]) > opts.tol.tol_num) {
      throw PreconditionError("averaging identity needs a symmetric mechanism; " + mech.name() +
                              " is not symmetric at " + describe(BidProfile::from_bids({u, v})));
    }
  }

  const std::size_t n = cfg.intervals;
  std::vector<double> vals(n + 1);
  const double h = u / static_cast<double>(n);
  for (std::size_t s = 0; s <= n; ++s) {
    const double v = s == n ? u : h * static_cast<double>(s);
    vals[s] = truthful_utility_at(mech, BidProfile::from_bids({u, v}), 0, opts.quad, opts.tol.tol_num).value;
  }
  auto trapezoid = [&](std::size_t stride) {
    double acc = 0.5 * (vals.front() + vals.back());
    for (std::size_t s = stride; s < n; s += stride) acc += vals[s];
    return acc * h * static_cast<double>(stride);
  };
  const double full = trapezoid(1) / u;
  const double half = trapezoid(2) / u;

  LemmaTrace t;
  t.lemma = Lemma::averaging;
  t.mechanism = mech.name();
  t.u = u;
  t.tolerance = 10.0 * opts.quad.tol_quad;
  t.summary = full;
  t.aux_error = std::abs(full - half);
  t.samples.push_back({u, full, 0.5 * u, -std::abs(full - 0.5 * u)});
  detail::finalize(t);
  std::ostringstream os;
  os.precision(3);
  os << n << " trapezoid intervals; half-resolution gap " << t.aux_error
     << (t.aux_error <= opts.quad.tol_quad ? " (within" : " (exceeds") << " tol_quad)";
  t.note = os.str();
  return t;
}

/// The induction step's attack. If the lowest-id agent, bidding v below the
/// highest rival bid u, still receives a positive share, a bidder with value
/// u facing the other rivals gains by bidding u and adding one sybil that
/// bids the removed rival's bid. Returns that deviation when it is profitable.
inline std::optional<Deviation> induction_witness(const Mechanism& mech, const BidProfile& profile,
                                                  const TheoremOptions& opts = {}) {
  if (profile.size() < 3) throw PreconditionError("induction step needs at least 3 agents");
  const double v = profile[0].bid;
  std::size_t argmax = 1;
  for (std::size_t k = 2; k < profile.size(); ++k) {
    if (profile[k].bid > profile[argmax].bid) argmax = k;
  }
  const double u = profile[argmax].bid;
  if (!(v < u)) throw PreconditionError("induction step needs agent 1's bid below the highest rival bid");

  const double x1 = detail::first_share(mech, profile);
  if (x1 <= opts.tol.tol_num) return std::nullopt;

  // The sybil takes over a rival other than the one holding the maximum, so
  // the remaining k-agent profile still contains u.
  std::size_t removed = profile.size() - 1;
  if (removed == argmax) --removed;
  const BidProfile reduced = profile.without(profile[removed].agent).with_bid_at(0, u);
  const double sybil_bid = profile[removed].bid;

  const double truthful = truthful_utility_at(mech, reduced, 0, opts.quad, opts.tol.tol_num).value;
  const double deviant = detail::sybil_utility(mech, reduced, 0, sybil_bid, opts.quad, opts.tol.tol_num).value;

  Deviation d;
  d.kind = DeviationKind::sybil;
  d.profile = reduced;
  d.deviator = reduced[0].agent;
  d.sybil_bids = {sybil_bid};
  d.truthful_utility = truthful;
  d.deviant_utility = deviant;
  d.gain = deviant - truthful;
  d.grid_gain = d.gain;
  if (d.gain <= opts.tol.tol_num + 4.0 * opts.quad.tol_quad) return std::nullopt;
  return d;
}

inline LemmaTrace induction_trace(const Mechanism& mech, const BidProfile& profile,
                                  const TheoremOptions& opts = {}) {
  LemmaTrace t;
  t.lemma = Lemma::induction;
  t.mechanism = mech.name();
  t.v = profile[0].bid;
  t.tolerance = opts.tol.tol_num + 4.0 * opts.quad.tol_quad;
  const auto w = induction_witness(mech, profile, opts);
  const double x1 = detail::first_share(mech, profile);
  t.samples.push_back({static_cast<double>(profile.size()), x1, 0.0, -x1});
  t.summary = w ? w->gain : 0.0;
  if (w) {
    t.u = w->profile[0].bid;
    t.verdict = TraceVerdict::violated;
    t.worst_slack = -w->gain;
    std::ostringstream os;
    os.precision(17);
    os << "agent " << w->deviator.value << " with value " << t.u << " at " << describe(w->profile)
       << " gains " << w->gain << " by adding a sybil bidding " << w->sybil_bids[0];
    t.note = os.str();
  } else {
    t.u = 0.0;
    for (std::size_t k = 1; k < profile.size(); ++k) t.u = std::max(t.u, profile[k].bid);
    t.worst_slack = x1 <= opts.tol.tol_num ? 0.0 : -x1;
    t.note = x1 <= opts.tol.tol_num ? "low bidder receives nothing; no attack needed"
                                    : "low bidder receives a share but the constructed attack is not profitable";
  }
  return t;
}

}  // namespace mechlab
