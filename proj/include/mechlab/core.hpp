#pragma once

// Domain types shared by every part of mechlab: agents, bid profiles,
// allocations, payments and the linear utility that ties them together.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mechlab {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidProfileError : public Error {
 public:
  using Error::Error;
};

class DuplicateAgentError : public InvalidProfileError {
 public:
  explicit DuplicateAgentError(std::uint64_t id)
      : InvalidProfileError("duplicate agent id " + std::to_string(id)), id_(id) {}
  std::uint64_t id() const noexcept { return id_; }

 private:
  std::uint64_t id_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

struct ToleranceConfig {
  double tol_alloc = 1e-9;  // slack on sum of shares
  double tol_num = 1e-9;    // equality comparisons
  double tol_quad = 1e-6;   // quadrature error budget
  double eps_tie = 1e-12;   // tie detection between bids

  void validate() const {
    if (!(tol_alloc > 0 && tol_num > 0 && tol_quad > 0 && eps_tie > 0)) {
      throw PreconditionError("tolerances must be strictly positive");
    }
  }

  bool operator==(const ToleranceConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Agents and profiles
// ---------------------------------------------------------------------------

struct AgentId {
  std::uint64_t value = 1;

  constexpr AgentId() = default;
  constexpr explicit AgentId(std::uint64_t v) : value(v) {}

  auto operator<=>(const AgentId&) const = default;
};

inline std::string to_string(AgentId id) { return std::to_string(id.value); }

struct BidEntry {
  AgentId agent;
  double bid = 0.0;

  bool operator==(const BidEntry&) const = default;
};

/// A finite agent set with one nonnegative bid per agent, kept in canonical
/// (ascending id) order. Values and bids share this type.
class BidProfile {
 public:
  BidProfile() = default;

  BidProfile(std::initializer_list<BidEntry> entries)
      : BidProfile(std::vector<BidEntry>(entries)) {}

  explicit BidProfile(std::vector<BidEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(),
              [](const BidEntry& a, const BidEntry& b) { return a.agent < b.agent; });
    validate();
  }

  /// Agents 1..n bidding `bids` in order.
  static BidProfile from_bids(const std::vector<double>& bids) {
    std::vector<BidEntry> e;
    e.reserve(bids.size());
    for (std::size_t k = 0; k < bids.size(); ++k) {
      e.push_back({AgentId{k + 1}, bids[k]});
    }
    return BidProfile(std::move(e));
  }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<BidEntry>& entries() const noexcept { return entries_; }
  const BidEntry& operator[](std::size_t k) const { return entries_[k]; }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  std::optional<std::size_t> find(AgentId id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const BidEntry& e, AgentId a) { return e.agent < a; });
    if (it == entries_.end() || it->agent != id) return std::nullopt;
    return static_cast<std::size_t>(it - entries_.begin());
  }

  bool contains(AgentId id) const { return find(id).has_value(); }

  std::size_t index_of(AgentId id) const {
    auto k = find(id);
    if (!k) throw InvalidProfileError("agent " + to_string(id) + " not in profile");
    return *k;
  }

  double bid_of(AgentId id) const { return entries_[index_of(id)].bid; }

  std::vector<AgentId> agents() const {
    std::vector<AgentId> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.agent);
    return out;
  }

  std::vector<double> bids() const {
    std::vector<double> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.bid);
    return out;
  }

  AgentId max_id() const { return entries_.back().agent; }

  /// Copy with the bid at canonical position `k` replaced.
  BidProfile with_bid_at(std::size_t k, double bid) const {
    check_bid(bid);
    BidProfile out = *this;
    out.entries_[k].bid = bid;
    return out;
  }

  BidProfile with_bid(AgentId id, double bid) const { return with_bid_at(index_of(id), bid); }

  BidProfile without(AgentId id) const {
    std::size_t k = index_of(id);
    if (entries_.size() == 1) throw InvalidProfileError("cannot remove the only agent");
    BidProfile out;
    out.entries_ = entries_;
    out.entries_.erase(out.entries_.begin() + static_cast<std::ptrdiff_t>(k));
    return out;
  }

  bool operator==(const BidProfile&) const = default;

 private:
  static void check_bid(double bid) {
    if (!std::isfinite(bid) || bid < 0.0) {
      std::ostringstream os;
      os << "bid must be finite and nonnegative, got " << bid;
      throw InvalidProfileError(os.str());
    }
  }

  void validate() const {
    if (entries_.empty()) throw InvalidProfileError("profile needs at least one agent");
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      if (entries_[k].agent.value == 0) throw InvalidProfileError("agent ids start at 1");
      check_bid(entries_[k].bid);
      if (k > 0 && entries_[k].agent == entries_[k - 1].agent) {
        throw DuplicateAgentError(entries_[k].agent.value);
      }
    }
  }

  std::vector<BidEntry> entries_;
};

/// Returns `profile` with one additional agent. Throws DuplicateAgentError if
/// `new_agent` is already present.
inline BidProfile extend_profile(const BidProfile& profile, AgentId new_agent, double bid) {
  if (profile.contains(new_agent)) throw DuplicateAgentError(new_agent.value);
  std::vector<BidEntry> e = profile.entries();
  e.push_back({new_agent, bid});
  return BidProfile(std::move(e));
}

/// Agent 1 bids u, agents 2..n bid v.
inline BidProfile replicate_profile(double u, double v, int n) {
  if (n < 2) throw PreconditionError("replicate_profile needs n >= 2");
  std::vector<double> bids(static_cast<std::size_t>(n), v);
  bids[0] = u;
  return BidProfile::from_bids(bids);
}

inline std::string describe(const BidProfile& p) {
  std::ostringstream os;
  os.precision(17);
  os << '{';
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k) os << ", ";
    os << p[k].agent.value << ':' << p[k].bid;
  }
  os << '}';
  return os.str();
}

// ---------------------------------------------------------------------------
// Allocations, payments, outcomes
// ---------------------------------------------------------------------------

/// Per-agent values aligned with a profile's canonical agent order.
class AgentVector {
 public:
  AgentVector() = default;
  AgentVector(std::vector<AgentId> agents, std::vector<double> values)
      : agents_(std::move(agents)), values_(std::move(values)) {
    if (agents_.size() != values_.size()) throw Error("agent/value length mismatch");
  }

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<AgentId>& agents() const noexcept { return agents_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }

  double of(AgentId id) const {
    auto it = std::lower_bound(agents_.begin(), agents_.end(), id);
    if (it == agents_.end() || *it != id) throw Error("agent " + to_string(id) + " missing");
    return values_[static_cast<std::size_t>(it - agents_.begin())];
  }

  double sum() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
  }

  bool operator==(const AgentVector&) const = default;

 protected:
  std::vector<AgentId> agents_;
  std::vector<double> values_;
};

class Allocation : public AgentVector {
 public:
  using AgentVector::AgentVector;
  Allocation(const BidProfile& p, std::vector<double> shares)
      : AgentVector(p.agents(), std::move(shares)) {}
  const std::vector<double>& shares() const noexcept { return values_; }
};

class PaymentVector : public AgentVector {
 public:
  using AgentVector::AgentVector;
  PaymentVector(const BidProfile& p, std::vector<double> payments)
      : AgentVector(p.agents(), std::move(payments)) {}
  const std::vector<double>& payments() const noexcept { return values_; }
};

/// Linear utility of an agent with `value` receiving `share` and paying `payment`.
constexpr double utility(double value, double share, double payment) noexcept {
  return value * share - payment;
}

struct Outcome {
  Allocation allocation;
  PaymentVector payments;
  std::vector<double> utilities;  // aligned with allocation.agents(); values = bids

  static Outcome make(const BidProfile& values, Allocation alloc, PaymentVector pay) {
    Outcome o{std::move(alloc), std::move(pay), {}};
    o.utilities.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      o.utilities.push_back(utility(values[k].bid, o.allocation[k], o.payments[k]));
    }
    return o;
  }
};

struct Validation {
  bool ok = true;
  std::string message;

  explicit operator bool() const noexcept { return ok; }
  static Validation pass() { return {}; }
  static Validation fail(std::string msg) { return {false, std::move(msg)}; }
};

inline Validation validate_allocation(const Allocation& alloc, const BidProfile& profile,
                                      const ToleranceConfig& tol = {}) {
  if (alloc.agents() != profile.agents()) {
    return Validation::fail("allocation agent set differs from profile agent set");
  }
  std::ostringstream os;
  os.precision(17);
  for (std::size_t k = 0; k < alloc.size(); ++k) {
    if (!std::isfinite(alloc[k])) {
      os << "non-finite share for agent " << alloc.agents()[k].value;
      return Validation::fail(os.str());
    }
    if (alloc[k] < -tol.tol_num) {
      os << "negative share " << alloc[k] << " for agent " << alloc.agents()[k].value;
      return Validation::fail(os.str());
    }
  }
  double s = alloc.sum();
  if (s > 1.0 + tol.tol_alloc) {
    os << "sum " << s << " > 1 (excess " << s - 1.0 << ")";
    return Validation::fail(os.str());
  }
  return Validation::pass();
}

}  // namespace mechlab
