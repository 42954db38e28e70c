#pragma once

// Guaranteed-bracket integration of non-decreasing functions.
//
// For f non-decreasing on [a, b] the left and right Riemann sums over any
// partition are a lower and an upper bound of the integral. Intervals are
// bisected in order of their contribution h * (f(r) - f(l)) to the bracket
// width, so step functions converge after a few dozen evaluations and the
// bound stays rigorous for any monotone integrand.

#include <cstddef>
#include <queue>
#include <sstream>
#include <vector>

#include "mechlab/core.hpp"

namespace mechlab {

struct QuadratureConfig {
  std::size_t max_subdivisions = std::size_t{1} << 20;
  double tol_quad = 1e-6;
  std::size_t initial_panels = 16;

  void validate() const {
    if (max_subdivisions < 2) throw PreconditionError("max_subdivisions must be >= 2");
    if (!(tol_quad > 0)) throw PreconditionError("tol_quad must be > 0");
    if (initial_panels < 1) throw PreconditionError("initial_panels must be >= 1");
  }

  bool operator==(const QuadratureConfig&) const = default;
};

/// Integral estimate with a guaranteed error bracket: the true value lies in
/// [value - width/2, value + width/2].
struct Bracket {
  double value = 0.0;
  double width = 0.0;
  double lower() const noexcept { return value - 0.5 * width; }
  double upper() const noexcept { return value + 0.5 * width; }
};

/// Thrown when the integrand decreases between two evaluated points.
class MonotonicityViolation : public Error {
 public:
  MonotonicityViolation(double z1, double z2, double f1, double f2)
      : Error(message(z1, z2, f1, f2)), z1_(z1), z2_(z2), f1_(f1), f2_(f2) {}

  double z1() const noexcept { return z1_; }
  double z2() const noexcept { return z2_; }
  double f1() const noexcept { return f1_; }
  double f2() const noexcept { return f2_; }

 private:
  static std::string message(double z1, double z2, double f1, double f2) {
    std::ostringstream os;
    os.precision(17);
    os << "allocation not monotone: x(" << z1 << ") = " << f1 << " > x(" << z2 << ") = " << f2;
    return os.str();
  }
  double z1_, z2_, f1_, f2_;
};

class BudgetExhausted : public Error {
 public:
  BudgetExhausted(std::size_t splits, double width)
      : Error("quadrature budget exhausted after " + std::to_string(splits) +
              " subdivisions (bracket width " + std::to_string(width) + ")"),
        width_(width) {}
  double width() const noexcept { return width_; }

 private:
  double width_;
};

namespace detail {

struct Panel {
  double l, r, fl, fr;
  double contribution() const noexcept { return (r - l) * (fr - fl); }
  bool operator<(const Panel& o) const noexcept { return contribution() < o.contribution(); }
};

}  // namespace detail

/// Integrates a non-decreasing `f` over [a, b] until the bracket width is at
/// most cfg.tol_quad. `slack` is how far f may dip between two points before
/// it counts as a monotonicity violation.
template <typename F>
Bracket integrate_monotone(F&& f, double a, double b, const QuadratureConfig& cfg,
                           double slack = 1e-9) {
  if (!(b > a)) return {0.0, 0.0};

  const std::size_t n0 = cfg.initial_panels;
  std::vector<double> nodes(n0 + 1);
  std::vector<double> fv(n0 + 1);
  for (std::size_t k = 0; k <= n0; ++k) {
    nodes[k] = (k == n0) ? b : a + (b - a) * static_cast<double>(k) / static_cast<double>(n0);
    fv[k] = f(nodes[k]);
    if (k > 0 && fv[k - 1] > fv[k] + slack) {
      throw MonotonicityViolation(nodes[k - 1], nodes[k], fv[k - 1], fv[k]);
    }
  }

  std::priority_queue<detail::Panel> open;
  std::vector<detail::Panel> settled;
  double width = 0.0;
  for (std::size_t k = 0; k < n0; ++k) {
    detail::Panel p{nodes[k], nodes[k + 1], fv[k], fv[k + 1]};
    width += p.contribution();
    open.push(p);
  }

  std::size_t splits = 0;
  while (width > cfg.tol_quad && !open.empty()) {
    detail::Panel p = open.top();
    if (p.contribution() <= 0.0) break;
    if (splits >= cfg.max_subdivisions) throw BudgetExhausted(splits, width);
    open.pop();
    double m = 0.5 * (p.l + p.r);
    if (!(m > p.l && m < p.r)) {
      // Panel cannot be split in floating point; keep it as is.
      settled.push_back(p);
      continue;
    }
    double fm = f(m);
    if (p.fl > fm + slack) throw MonotonicityViolation(p.l, m, p.fl, fm);
    if (fm > p.fr + slack) throw MonotonicityViolation(m, p.r, fm, p.fr);
    ++splits;
    detail::Panel left{p.l, m, p.fl, fm};
    detail::Panel right{m, p.r, fm, p.fr};
    width += left.contribution() + right.contribution() - p.contribution();
    open.push(left);
    open.push(right);
    if (width <= cfg.tol_quad) break;
  }

  // Recompute the sums from scratch to avoid drift in the running width.
  double lo = 0.0, hi = 0.0;
  auto add = [&](const detail::Panel& p) {
    lo += (p.r - p.l) * p.fl;
    hi += (p.r - p.l) * p.fr;
  };
  for (const auto& p : settled) add(p);
  while (!open.empty()) {
    add(open.top());
    open.pop();
  }
  // Dips within `slack` can make hi < lo by rounding.
  if (hi < lo) std::swap(hi, lo);
  if (hi - lo > cfg.tol_quad) throw BudgetExhausted(splits, hi - lo);
  return {0.5 * (lo + hi), hi - lo};
}

}  // namespace mechlab
