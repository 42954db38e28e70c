#pragma once

// Adversarial deviation search: best misreport, best one-sybil attack with a
// truthful original bid, its k-sybil generalization, and a seeded scan over
// many profiles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mechlab/axioms.hpp"
#include "mechlab/core.hpp"
#include "mechlab/mechanisms.hpp"
#include "mechlab/parallel.hpp"
#include "mechlab/sampling.hpp"

namespace mechlab {

/// Golden-section search for a maximum of `f` on [a, b]. Returns the best
/// point evaluated, so the result never falls below f at the probed points.
template <typename F>
std::pair<double, double> golden_section_max(F&& f, double a, double b, int iters) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  std::pair<double, double> best = fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
  for (int it = 0; it < iters; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      if (fc > best.second) best = {c, fc};
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      if (fd > best.second) best = {d, fd};
    }
  }
  return best;
}

enum class DeviationKind { misreport, sybil };

inline const char* to_string(DeviationKind k) {
  return k == DeviationKind::misreport ? "misreport" : "sybil";
}

struct Deviation {
  DeviationKind kind = DeviationKind::misreport;
  BidProfile profile;  // truthful profile the deviation starts from
  AgentId deviator{};
  std::optional<double> misreport_bid;
  std::vector<double> sybil_bids;
  double truthful_utility = 0.0;
  double deviant_utility = 0.0;
  double gain = 0.0;
  double grid_gain = 0.0;  // best gain before refinement

  double bid() const { return misreport_bid ? *misreport_bid : (sybil_bids.empty() ? 0.0 : sybil_bids[0]); }
  bool operator==(const Deviation&) const = default;
};

/// Deterministic order: larger gain, then smaller bid, then smaller agent id.
inline bool better_deviation(const Deviation& a, const Deviation& b) {
  if (a.gain != b.gain) return a.gain > b.gain;
  if (a.bid() != b.bid()) return a.bid() < b.bid();
  return a.deviator < b.deviator;
}

struct AttackOptions {
  ToleranceConfig tol;
  QuadratureConfig quad;
  int refine_iters = 40;
  std::size_t evaluation_cap = 1'000'000;  // k * |grid| limit for multi-sybil search
};

namespace detail {

// Grid sweep plus optional golden-section refinement on the interval around
// the best grid point. `deviant(b)` is the deviator's utility at bid b.
template <typename F>
std::pair<double, double> sweep_and_refine(F&& deviant, const std::vector<double>& pts,
                                           int refine_iters, double& grid_best) {
  std::size_t best = 0;
  double best_u = deviant(pts[0]);
  for (std::size_t g = 1; g < pts.size(); ++g) {
    const double u = deviant(pts[g]);
    if (u > best_u) {
      best_u = u;
      best = g;
    }
  }
  grid_best = best_u;
  double bid = pts[best];
  if (refine_iters > 0 && pts.size() > 1) {
    const double lo = pts[best == 0 ? 0 : best - 1];
    const double hi = pts[std::min(best + 1, pts.size() - 1)];
    auto [x, fx] = golden_section_max(deviant, lo, hi, refine_iters);
    if (fx > best_u) {
      best_u = fx;
      bid = x;
    }
  }
  return {bid, best_u};
}

inline Deviation sybil_search(const Mechanism& mech, const BidProfile& profile, AgentId i,
                              std::size_t k_sybils, const SearchGrid& grid, int refine_iters,
                              const AttackOptions& opts) {
  grid.validate();
  if (k_sybils < 1) throw PreconditionError("need at least one sybil");
  const std::vector<double> pts = grid.points_for(profile);
  if (k_sybils * pts.size() > opts.evaluation_cap) {
    throw Error("multi-sybil search needs " + std::to_string(k_sybils * pts.size()) +
                " evaluations, above the cap of " + std::to_string(opts.evaluation_cap));
  }
  const std::size_t k = profile.index_of(i);
  const double truthful = truthful_utility_at(mech, profile, k, opts.quad, opts.tol.tol_num).value;
  auto deviant = [&](double u) {
    return sybil_utility(mech, profile, k, std::vector<double>(k_sybils, u), opts.quad,
                         opts.tol.tol_num)
        .value;
  };
  double grid_best = 0.0;
  auto [bid, best_u] = sweep_and_refine(deviant, pts, refine_iters, grid_best);

  Deviation d;
  d.kind = DeviationKind::sybil;
  d.profile = profile;
  d.deviator = i;
  d.sybil_bids.assign(k_sybils, bid);
  d.truthful_utility = truthful;
  d.deviant_utility = best_u;
  d.gain = best_u - truthful;
  d.grid_gain = grid_best - truthful;
  return d;
}

}  // namespace detail

/// Best misreport for agent i over the augmented grid, refined by
/// golden-section search. gain <= 0 means no profitable misreport was found.
inline Deviation best_misreport(const Mechanism& mech, const BidProfile& profile, AgentId i,
                                const SearchGrid& grid, int refine_iters,
                                const AttackOptions& opts = {}) {
  grid.validate();
  const std::size_t k = profile.index_of(i);
  const double value = profile[k].bid;
  const double truthful = truthful_utility_at(mech, profile, k, opts.quad, opts.tol.tol_num).value;
  auto deviant = [&](double b) {
    return utility_at(mech, profile.with_bid_at(k, b), k, value, opts.quad, opts.tol.tol_num).value;
  };
  double grid_best = 0.0;
  auto [bid, best_u] = detail::sweep_and_refine(deviant, grid.points_for(profile), refine_iters,
                                                grid_best);
  Deviation d;
  d.kind = DeviationKind::misreport;
  d.profile = profile;
  d.deviator = i;
  d.misreport_bid = bid;
  d.truthful_utility = truthful;
  d.deviant_utility = best_u;
  d.gain = best_u - truthful;
  d.grid_gain = grid_best - truthful;
  return d;
}

/// Best single sybil for agent i while its own account bids truthfully.
inline Deviation best_sybil_response(const Mechanism& mech, const BidProfile& profile, AgentId i,
                                     const SearchGrid& grid, int refine_iters,
                                     const AttackOptions& opts = {}) {
  return detail::sybil_search(mech, profile, i, 1, grid, refine_iters, opts);
}

/// k sybils, all bidding a common grid value. With k = 1 this is
/// best_sybil_response with the same refinement budget.
inline Deviation multi_sybil_response(const Mechanism& mech, const BidProfile& profile, AgentId i,
                                      std::size_t k, const SearchGrid& grid,
                                      const AttackOptions& opts = {}, int refine_iters = 0) {
  return detail::sybil_search(mech, profile, i, k, grid, refine_iters, opts);
}

/// Re-evaluates the deviant utility from the mechanism's outcomes.
inline double replay_deviation(const Mechanism& mech, const Deviation& d,
                               const QuadratureConfig& quad = {}) {
  const double value = d.profile.bid_of(d.deviator);
  if (d.kind == DeviationKind::misreport) {
    const BidProfile lied = d.profile.with_bid(d.deviator, *d.misreport_bid);
    const Outcome o = evaluate(mech, lied, quad);
    return utility(value, o.allocation.of(d.deviator), o.payments.of(d.deviator));
  }
  BidProfile ext = d.profile;
  std::vector<AgentId> sybils;
  for (double b : d.sybil_bids) {
    AgentId s{ext.max_id().value + 1};
    ext = extend_profile(ext, s, b);
    sybils.push_back(s);
  }
  const Outcome o = evaluate(mech, ext, quad);
  double u = value * o.allocation.of(d.deviator) - o.payments.of(d.deviator);
  for (AgentId s : sybils) u += value * o.allocation.of(s) - o.payments.of(s);
  return u;
}

// ---------------------------------------------------------------------------
// Scans
// ---------------------------------------------------------------------------

struct ScanRecord {
  std::size_t profile_index = 0;
  std::size_t n_agents = 0;
  AgentId agent{};
  DeviationKind kind = DeviationKind::misreport;
  double bid = 0.0;
  double gain = 0.0;

  bool operator==(const ScanRecord&) const = default;
};

struct GainSummary {
  std::size_t count = 0;
  std::size_t profitable = 0;  // gain above the tolerance stack
  double max_gain = 0.0;
  double mean_gain = 0.0;

  bool operator==(const GainSummary&) const = default;
};

struct ScanResult {
  std::optional<Deviation> worst;
  std::optional<Deviation> worst_misreport;
  std::optional<Deviation> worst_sybil;
  GainSummary misreport;
  GainSummary sybil;
  std::vector<ScanRecord> records;

  bool operator==(const ScanResult&) const = default;
};

struct ScanTargets {
  bool misreport = true;
  bool sybil = true;
  std::size_t sybils = 1;  // > 1 runs multi_sybil_response instead of best_sybil_response
};

inline ScanResult exploit_scan(const Mechanism& mech, const ProfileSampler& sampler,
                               std::size_t budget, const SearchGrid& grid,
                               const AttackOptions& opts = {}, ScanTargets targets = {},
                               unsigned jobs = 1) {
  if (budget < 1) throw PreconditionError("scan budget must be >= 1");
  const std::vector<BidProfile> profiles = sampler.sample(budget);

  auto per = parallel_map(profiles.size(), jobs, [&](std::size_t s) {
    std::vector<Deviation> out;
    for (const auto& e : profiles[s]) {
      if (targets.misreport) out.push_back(best_misreport(mech, profiles[s], e.agent, grid, opts.refine_iters, opts));
      if (targets.sybil) {
        out.push_back(targets.sybils == 1
                          ? best_sybil_response(mech, profiles[s], e.agent, grid, opts.refine_iters, opts)
                          : multi_sybil_response(mech, profiles[s], e.agent, targets.sybils, grid, opts));
      }
    }
    return out;
  });

  ScanResult r;
  const double stack_mis = opts.tol.tol_num + 2.0 * opts.quad.tol_quad;
  const double stack_syb = opts.tol.tol_num + 4.0 * opts.quad.tol_quad * static_cast<double>(targets.sybils);
  double sum_mis = 0.0, sum_syb = 0.0;
  auto keep = [](std::optional<Deviation>& slot, const Deviation& d) {
    if (!slot || better_deviation(d, *slot)) slot = d;
  };
  for (std::size_t s = 0; s < per.size(); ++s) {
    for (const Deviation& d : per[s]) {
      r.records.push_back({s, d.profile.size(), d.deviator, d.kind, d.bid(), d.gain});
      GainSummary& g = d.kind == DeviationKind::misreport ? r.misreport : r.sybil;
      const double stack = d.kind == DeviationKind::misreport ? stack_mis : stack_syb;
      (d.kind == DeviationKind::misreport ? sum_mis : sum_syb) += d.gain;
      if (g.count == 0 || d.gain > g.max_gain) g.max_gain = d.gain;
      ++g.count;
      if (d.gain > stack) ++g.profitable;
      keep(d.kind == DeviationKind::misreport ? r.worst_misreport : r.worst_sybil, d);
      keep(r.worst, d);
    }
  }
  if (r.misreport.count) r.misreport.mean_gain = sum_mis / static_cast<double>(r.misreport.count);
  if (r.sybil.count) r.sybil.mean_gain = sum_syb / static_cast<double>(r.sybil.count);
  return r;
}

}  // namespace mechlab
