#pragma once

// Built-in allocation rules, the Myerson payment engine and truthful-utility
// evaluation.
//
// A Mechanism is a variable-population rule: `allocate` accepts a profile of
// any size. Payments are either Myerson payments derived from the allocation
// rule,
//
//     p_i(v) = v_i x_i(v) - \int_0^{v_i} x_i(z, v_{-i}) dz,
//
// or an explicit payment function. When a closed-form integral is supplied
// it is used directly; otherwise the integral is bracketed by monotone
// Riemann sums (see quadrature.hpp).

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mechlab/core.hpp"
#include "mechlab/quadrature.hpp"

namespace mechlab {

enum class PaymentMode { myerson, explicit_payments };

inline const char* to_string(PaymentMode m) {
  return m == PaymentMode::myerson ? "myerson" : "explicit";
}

using AllocateFn = std::function<Allocation(const BidProfile&)>;
using PaymentFn = std::function<PaymentVector(const BidProfile&)>;
/// \int_0^upper x_k(z, v_{-k}) dz for the agent at canonical index k.
using IntegralFn = std::function<double(const BidProfile&, std::size_t k, double upper)>;

struct ProportionalParams {
  double c = 0.5;
  void validate() const {
    if (!(c > 0) || !std::isfinite(c)) throw PreconditionError("proportional price c must be > 0");
  }
};

struct ReserveParams {
  double r = 0.0;
  void validate() const {
    if (!(r >= 0) || !std::isfinite(r)) throw PreconditionError("reserve r must be >= 0");
  }
};

class Mechanism {
 public:
  Mechanism(std::string name, AllocateFn allocate, IntegralFn exact_integral = {})
      : name_(std::move(name)),
        allocate_(std::move(allocate)),
        mode_(PaymentMode::myerson),
        exact_integral_(std::move(exact_integral)) {
    if (!allocate_) throw PreconditionError("mechanism needs an allocation rule");
  }

  Mechanism(std::string name, AllocateFn allocate, PaymentFn explicit_pay,
            IntegralFn exact_integral = {})
      : name_(std::move(name)),
        allocate_(std::move(allocate)),
        mode_(PaymentMode::explicit_payments),
        explicit_pay_(std::move(explicit_pay)),
        exact_integral_(std::move(exact_integral)) {
    if (!allocate_) throw PreconditionError("mechanism needs an allocation rule");
    if (!explicit_pay_) throw PreconditionError("explicit payment mode needs a payment rule");
  }

  const std::string& name() const noexcept { return name_; }
  PaymentMode payment_mode() const noexcept { return mode_; }
  bool has_exact_integral() const noexcept { return static_cast<bool>(exact_integral_); }

  Allocation allocate(const BidProfile& p) const { return allocate_(p); }
  PaymentVector explicit_payments(const BidProfile& p) const { return explicit_pay_(p); }
  double exact_integral(const BidProfile& p, std::size_t k, double upper) const {
    return exact_integral_(p, k, upper);
  }

  /// Same rule with the closed-form integral removed, forcing the quadrature
  /// path. Used to test the engine.
  Mechanism opaque() const {
    Mechanism m = *this;
    m.exact_integral_ = {};
    m.name_ += "/opaque";
    return m;
  }

  Mechanism renamed(std::string name) const {
    Mechanism m = *this;
    m.name_ = std::move(name);
    return m;
  }

 private:
  std::string name_;
  AllocateFn allocate_;
  PaymentMode mode_;
  PaymentFn explicit_pay_;
  IntegralFn exact_integral_;
};

// ---------------------------------------------------------------------------
// Allocation rules
// ---------------------------------------------------------------------------

namespace detail {

inline double max_other(const BidProfile& p, std::size_t k) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j != k) m = std::max(m, p[j].bid);
  }
  return m;
}

inline double sum_other(const BidProfile& p, std::size_t k) {
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j != k) s += p[j].bid;
  }
  return s;
}

// Threshold integral for rules that award the full unit above a threshold:
// x_k(z) = 0 below t and 1 above, so the integral up to b is max(0, b - t).
inline double threshold_integral(double upper, double threshold) {
  return std::max(0.0, upper - std::max(0.0, threshold));
}

}  // namespace detail

/// Highest bid wins; ties within eps_tie of the maximum split the unit equally.
inline Allocation spa_allocate(const BidProfile& p, double eps_tie = 1e-12) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& e : p) top = std::max(top, e.bid);
  std::size_t winners = 0;
  for (const auto& e : p) winners += (e.bid >= top - eps_tie) ? 1 : 0;
  std::vector<double> x(p.size(), 0.0);
  const double share = 1.0 / static_cast<double>(winners);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].bid >= top - eps_tie) x[k] = share;
  }
  return Allocation(p, std::move(x));
}

inline Allocation lottery_allocate(const BidProfile& p) {
  return Allocation(p, std::vector<double>(p.size(), 1.0 / static_cast<double>(p.size())));
}

/// Shares proportional to bids; the all-zero profile splits uniformly.
inline Allocation proportional_allocate(const BidProfile& p) {
  double total = 0.0;
  for (const auto& e : p) total += e.bid;
  if (total <= 0.0) return lottery_allocate(p);
  std::vector<double> x(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) x[k] = p[k].bid / total;
  return Allocation(p, std::move(x));
}

inline PaymentVector proportional_payments(const BidProfile& p, const ProportionalParams& params) {
  std::vector<double> pay(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) pay[k] = params.c * p[k].bid;
  return PaymentVector(p, std::move(pay));
}

/// Second-price auction among bids >= r. Nobody is served when every bid is
/// below the reserve.
inline Allocation spa_reserve_allocate(const BidProfile& p, const ReserveParams& params,
                                       double eps_tie = 1e-12) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& e : p) top = std::max(top, e.bid);
  std::vector<double> x(p.size(), 0.0);
  if (top < params.r - eps_tie) return Allocation(p, std::move(x));
  return spa_allocate(p, eps_tie);
}

/// Second-price auction with ties resolved in favour of the lowest agent id.
inline Allocation asymmetric_spa_allocate(const BidProfile& p, double eps_tie = 1e-12) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& e : p) top = std::max(top, e.bid);
  std::vector<double> x(p.size(), 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].bid >= top - eps_tie) {
      x[k] = 1.0;  // canonical order: first hit has the lowest id
      break;
    }
  }
  return Allocation(p, std::move(x));
}

// ---------------------------------------------------------------------------
// Built-in mechanisms
// ---------------------------------------------------------------------------

inline Mechanism make_spa(double eps_tie = 1e-12) {
  return Mechanism(
      "spa", [eps_tie](const BidProfile& p) { return spa_allocate(p, eps_tie); },
      [](const BidProfile& p, std::size_t k, double b) {
        return detail::threshold_integral(b, detail::max_other(p, k));
      });
}

inline Mechanism make_spa_reserve(ReserveParams params, double eps_tie = 1e-12) {
  params.validate();
  return Mechanism(
      "spa_reserve",
      [params, eps_tie](const BidProfile& p) { return spa_reserve_allocate(p, params, eps_tie); },
      [params](const BidProfile& p, std::size_t k, double b) {
        return detail::threshold_integral(b, std::max(params.r, detail::max_other(p, k)));
      });
}

inline Mechanism make_asymmetric_spa(double eps_tie = 1e-12) {
  return Mechanism(
      "asymmetric_spa", [eps_tie](const BidProfile& p) { return asymmetric_spa_allocate(p, eps_tie); },
      [](const BidProfile& p, std::size_t k, double b) {
        return detail::threshold_integral(b, detail::max_other(p, k));
      });
}

inline Mechanism make_lottery() {
  return Mechanism("lottery", lottery_allocate, [](const BidProfile& p, std::size_t, double b) {
    return b * (1.0 / static_cast<double>(p.size()));
  });
}

namespace detail {

// \int_0^b z / (z + s) dz = b - s log(1 + b / s); x = 1 for z > 0 when s = 0.
inline double proportional_integral(const BidProfile& p, std::size_t k, double b) {
  double s = sum_other(p, k);
  if (s <= 0.0) return b;
  return b - s * std::log1p(b / s);
}

}  // namespace detail

/// Proportional rule with explicit per-unit-bid payments c * u_i.
inline Mechanism make_proportional(ProportionalParams params) {
  params.validate();
  return Mechanism(
      "proportional", proportional_allocate,
      [params](const BidProfile& p) { return proportional_payments(p, params); },
      detail::proportional_integral);
}

/// Proportional rule priced with Myerson payments.
inline Mechanism make_proportional_myerson() {
  return Mechanism("proportional_myerson", proportional_allocate, detail::proportional_integral);
}

// ---------------------------------------------------------------------------
// Payment engine
// ---------------------------------------------------------------------------

/// Share of the agent at index k when its bid is replaced by z.
inline double share_at(const Mechanism& mech, const BidProfile& p, std::size_t k, double z) {
  return mech.allocate(p.with_bid_at(k, z))[k];
}

/// \int_0^upper x_k(z, v_{-k}) dz, exact when available.
inline Bracket allocation_integral(const Mechanism& mech, const BidProfile& p, std::size_t k,
                                   double upper, const QuadratureConfig& quad,
                                   double slack = 1e-9) {
  if (upper <= 0.0) return {0.0, 0.0};
  if (mech.has_exact_integral()) return {mech.exact_integral(p, k, upper), 0.0};
  return integrate_monotone([&](double z) { return share_at(mech, p, k, z); }, 0.0, upper, quad,
                            slack);
}

/// Myerson payment of the agent at index k. A zero bid pays exactly 0.
inline Bracket myerson_payment_at(const Mechanism& mech, const BidProfile& p, std::size_t k,
                                  const QuadratureConfig& quad, double slack = 1e-9) {
  const double b = p[k].bid;
  if (b == 0.0) return {0.0, 0.0};
  const double x = mech.allocate(p)[k];
  Bracket integral = allocation_integral(mech, p, k, b, quad, slack);
  return {b * x - integral.value, integral.width};
}

inline Bracket myerson_payment(const Mechanism& mech, const BidProfile& p, AgentId i,
                               const QuadratureConfig& quad = {}, double slack = 1e-9) {
  return myerson_payment_at(mech, p, p.index_of(i), quad, slack);
}

/// Payment charged by the mechanism under its own payment mode.
inline Bracket payment_at(const Mechanism& mech, const BidProfile& p, std::size_t k,
                          const QuadratureConfig& quad, double slack = 1e-9) {
  if (mech.payment_mode() == PaymentMode::explicit_payments) {
    return {mech.explicit_payments(p)[k], 0.0};
  }
  return myerson_payment_at(mech, p, k, quad, slack);
}

/// Utility of an agent with private `value` at index k of the reported profile.
inline Bracket utility_at(const Mechanism& mech, const BidProfile& reported, std::size_t k,
                          double value, const QuadratureConfig& quad, double slack = 1e-9) {
  const double x = mech.allocate(reported)[k];
  Bracket pay = payment_at(mech, reported, k, quad, slack);
  return {utility(value, x, pay.value), pay.width};
}

/// Utility of truthful bidding. Under Myerson payments this is the integral
/// \int_0^{v_i} x_i(z, v_{-i}) dz; otherwise v_i x_i - p_i.
inline Bracket truthful_utility_at(const Mechanism& mech, const BidProfile& p, std::size_t k,
                                   const QuadratureConfig& quad, double slack = 1e-9) {
  if (mech.payment_mode() == PaymentMode::myerson) {
    return allocation_integral(mech, p, k, p[k].bid, quad, slack);
  }
  return utility_at(mech, p, k, p[k].bid, quad, slack);
}

inline Bracket truthful_utility(const Mechanism& mech, const BidProfile& p, AgentId i,
                                const QuadratureConfig& quad = {}, double slack = 1e-9) {
  return truthful_utility_at(mech, p, p.index_of(i), quad, slack);
}

inline PaymentVector payments(const Mechanism& mech, const BidProfile& p,
                              const QuadratureConfig& quad = {}) {
  if (mech.payment_mode() == PaymentMode::explicit_payments) return mech.explicit_payments(p);
  std::vector<double> pay(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) pay[k] = myerson_payment_at(mech, p, k, quad).value;
  return PaymentVector(p, std::move(pay));
}

/// Allocation, payments and truthful utilities at `p`.
inline Outcome evaluate(const Mechanism& mech, const BidProfile& p,
                        const QuadratureConfig& quad = {}) {
  return Outcome::make(p, mech.allocate(p), payments(mech, p, quad));
}

}  // namespace mechlab
