#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mechlab/core.hpp"

namespace mechlab {

/// Bid grid used by every deviation search: the uniform points lo, lo+step,
/// ..., hi, augmented per profile with 0, every bid in the profile, and hi.
struct SearchGrid {
  double lo = 0.0;
  double hi = 10.0;
  double step = 0.5;
  std::vector<double> augment_with;

  void validate() const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo < 0.0 || lo > hi) {
      throw PreconditionError("grid needs 0 <= lo <= hi");
    }
    if (!(step > 0) || !std::isfinite(step)) throw PreconditionError("grid step must be > 0");
    for (double a : augment_with) {
      if (!std::isfinite(a) || a < 0.0) throw PreconditionError("grid augment values must be >= 0");
    }
  }

  std::vector<double> base_points() const {
    std::vector<double> pts;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t k = 0; k <= count; ++k) pts.push_back(lo + static_cast<double>(k) * step);
    pts.push_back(hi);
    for (double a : augment_with) pts.push_back(a);
    pts.push_back(0.0);
    normalize(pts);
    return pts;
  }

  std::vector<double> points_for(const BidProfile& p) const {
    std::vector<double> pts = base_points();
    for (const auto& e : p) pts.push_back(e.bid);
    normalize(pts);
    return pts;
  }

  /// True when the uniform part of the grid has fewer than two points, so the
  /// search only ever probes 0 and the rival bids.
  bool degenerate() const { return !(hi - lo >= step) || hi <= 0.0; }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << lo << ':' << hi << ':' << step;
    return os.str();
  }

  bool operator==(const SearchGrid&) const = default;

 private:
  static void normalize(std::vector<double>& pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  }
};

/// Deterministic profile generator: n uniform in [n_min, n_max], bids drawn
/// from the uniform grid points so utilities stay exactly representable.
struct ProfileSampler {
  int n_min = 2;
  int n_max = 5;
  SearchGrid grid;
  std::uint64_t seed = 42;

  void validate() const {
    if (n_min < 1 || n_max < n_min) throw PreconditionError("need 1 <= n_min <= n_max");
    grid.validate();
  }

  std::vector<BidProfile> sample(std::size_t count) const {
    validate();
    std::mt19937_64 rng(seed);
    const std::uint64_t span = static_cast<std::uint64_t>(n_max - n_min + 1);
    const auto steps = static_cast<std::uint64_t>(std::floor((grid.hi - grid.lo) / grid.step + 1e-9));
    std::vector<BidProfile> out;
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
      const auto n = static_cast<std::size_t>(n_min) + static_cast<std::size_t>(rng() % span);
      std::vector<double> bids(n);
      for (auto& b : bids) b = grid.lo + static_cast<double>(rng() % (steps + 1)) * grid.step;
      out.push_back(BidProfile::from_bids(bids));
    }
    return out;
  }
};

/// Every profile of n agents with bids on the uniform grid points.
inline std::vector<BidProfile> enumerate_profiles(int n, const SearchGrid& grid) {
  std::vector<double> pts;
  const auto count = static_cast<std::size_t>(std::floor((grid.hi - grid.lo) / grid.step + 1e-9));
  for (std::size_t k = 0; k <= count; ++k) pts.push_back(grid.lo + static_cast<double>(k) * grid.step);
  std::vector<BidProfile> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  for (;;) {
    std::vector<double> bids(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) bids[k] = pts[idx[k]];
    out.push_back(BidProfile::from_bids(bids));
    std::size_t pos = 0;
    while (pos < idx.size() && ++idx[pos] == pts.size()) idx[pos++] = 0;
    if (pos == idx.size()) break;
  }
  return out;
}

}  // namespace mechlab
