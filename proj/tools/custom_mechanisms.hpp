#pragma once

// Example of the registration extension point: mechanisms added here are
// compiled into the binary and selectable with --mechanism or --extra.

#include <algorithm>
#include <vector>

#include "mechlab/cli.hpp"
#include "mechlab/mechanisms.hpp"

namespace mechlab::custom {

/// Highest bid(s) weigh 3, the next distinct bid level weighs 1, the rest 0;
/// shares are weight / total weight. Monotone and symmetric, priced with
/// Myerson payments through the quadrature engine (no closed form given).
inline Allocation top_two_allocate(const BidProfile& p, double eps_tie) {
  std::vector<double> b = p.bids();
  std::vector<double> levels = b;
  std::sort(levels.begin(), levels.end(), std::greater<>());
  const double top = levels.front();
  double second = -1.0;
  for (double l : levels) {
    if (l < top - eps_tie) {
      second = l;
      break;
    }
  }
  std::vector<double> w(b.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (b[k] >= top - eps_tie) w[k] = 3.0;
    else if (second >= 0.0 && b[k] >= second - eps_tie) w[k] = 1.0;
    total += w[k];
  }
  for (auto& x : w) x /= total;
  return Allocation(p, std::move(w));
}

inline void register_all(MechanismRegistry& reg) {
  reg.add("top_two", [](const ScenarioConfig& s) {
    const double eps = s.tolerances.eps_tie;
    return Mechanism("top_two", [eps](const BidProfile& p) { return top_two_allocate(p, eps); });
  });
}

}  // namespace mechlab::custom
