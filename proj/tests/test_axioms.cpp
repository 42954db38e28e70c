#include <catch_amalgamated.hpp>

#include <cmath>

#include "mechlab/axioms.hpp"

using namespace mechlab;
using Catch::Approx;

namespace {

const SearchGrid kGrid{0, 10, 0.5, {}};

std::vector<BidProfile> sampled(std::size_t count, std::uint64_t seed = 42, int n_min = 2, int n_max = 5) {
  return ProfileSampler{n_min, n_max, kGrid, seed}.sample(count);
}

std::vector<BidProfile> one(std::vector<double> bids) { return {BidProfile::from_bids(bids)}; }

Mechanism entry_fee() {
  return Mechanism("entry_fee", [](const BidProfile& p) { return spa_allocate(p); }, [](const BidProfile& p) {
    return PaymentVector(p, std::vector<double>(p.size(), 1.0));
  });
}

Mechanism broken_monotone() {
  return Mechanism("broken", [](const BidProfile& p) {
    std::vector<double> x(p.size(), 0.0);
    x[0] = 1.0 - std::min(p[0].bid, 1.0);
    return Allocation(p, std::move(x));
  });
}

void check_replay(const Mechanism& m, const AxiomReport& r) {
  for (const auto& w : r.witnesses) {
    CHECK(w.magnitude > 1e-9);
    CHECK(replay_witness(m, r.axiom, w) == Approx(w.magnitude).margin(1e-9));
  }
}

}  // namespace

TEST_CASE("non-wastefulness", "[axioms]") {
  CHECK(check_non_wastefulness(make_spa(), sampled(100)).passed());
  CHECK(check_non_wastefulness(make_lottery(), sampled(100)).passed());

  const auto reserve = make_spa_reserve({4.0});
  const auto r = check_non_wastefulness(reserve, one({2, 3}));
  REQUIRE_FALSE(r.passed());
  CHECK(r.witnesses[0].observed == 0.0);
  check_replay(reserve, r);
}

TEST_CASE("symmetry", "[axioms]") {
  CHECK(check_symmetry(make_spa(), one({4, 4})).passed());

  const auto asym = make_asymmetric_spa();
  const auto r = check_symmetry(asym, one({4, 4}));
  REQUIRE_FALSE(r.passed());
  CHECK(r.witnesses[0].magnitude == 1.0);
  check_replay(asym, r);

  CHECK(check_symmetry(make_proportional({0.5}), sampled(100, 3, 2, 4)).passed());
}

TEST_CASE("symmetry samples permutations beyond five agents", "[axioms]") {
  CheckOptions opts;
  opts.permutations_per_profile = 10;
  const auto r = check_symmetry(make_asymmetric_spa(), one({1, 2, 3, 4, 5, 6, 6}), opts);
  CHECK(r.profiles_tested == 1);
  CHECK_FALSE(r.passed());
  CHECK(check_symmetry(make_spa(), one({1, 2, 3, 4, 5, 6, 6}), opts).passed());
}

TEST_CASE("monotonicity", "[axioms]") {
  CHECK(check_monotonicity(make_spa(), sampled(50), kGrid).passed());
  CHECK(check_monotonicity(make_proportional({0.5}), sampled(50), kGrid).passed());

  const auto broken = broken_monotone();
  const auto r = check_monotonicity(broken, one({0.5}), kGrid);
  REQUIRE_FALSE(r.passed());
  CHECK(r.witnesses[0].probe_lo < r.witnesses[0].probe_hi);
  check_replay(broken, r);
}

TEST_CASE("zero-bid payment", "[axioms]") {
  for (const auto& m : {make_spa(), make_lottery(), make_spa_reserve({4}), make_proportional_myerson()}) {
    CHECK(check_zero_bid_payment(m, sampled(50)).passed());
  }
  CHECK(check_zero_bid_payment(make_proportional({0.5}), sampled(50)).passed());

  const auto fee = entry_fee();
  const auto r = check_zero_bid_payment(fee, one({3, 1}));
  REQUIRE_FALSE(r.passed());
  CHECK(r.violations == 2);
  check_replay(fee, r);
}

TEST_CASE("incentive compatibility", "[axioms]") {
  const SearchGrid fine{0, 10, 0.25, {}};
  CHECK(check_ic(make_spa(), sampled(100), fine).passed());
  CHECK(check_ic(make_lottery(), sampled(100), fine).passed());

  const auto prop = make_proportional({0.5});
  const auto r = check_ic(prop, one({4, 4}), fine);
  REQUIRE_FALSE(r.passed());
  // Shading is profitable: U(b) = 4b/(b+4) - b/2 peaks near b = 1.66.
  CHECK(r.witnesses[0].probe_lo < 4.0);
  check_replay(prop, r);
}

TEST_CASE("sybil-proofness", "[axioms]") {
  const auto lottery = make_lottery();
  const auto r = check_sybil_proofness(lottery, one({5, 1}), kGrid);
  REQUIRE_FALSE(r.passed());
  const Witness& w = r.witnesses[0];
  CHECK(w.agent == AgentId{1});
  CHECK(w.reference == Approx(2.5).margin(1e-12));
  CHECK(w.observed == Approx(10.0 / 3.0).margin(1e-12));
  CHECK(w.magnitude == Approx(5.0 / 6.0).margin(1e-12));
  check_replay(lottery, r);

  CHECK(check_sybil_proofness(make_spa(), sampled(200), kGrid).passed());

  std::vector<BidProfile> distinct;
  for (const auto& p : sampled(100, 7, 2, 2)) {
    if (p[0].bid != p[1].bid) distinct.push_back(p);
  }
  const auto pm = make_proportional_myerson();
  const auto rp = check_sybil_proofness(pm, distinct, kGrid);
  REQUIRE_FALSE(rp.passed());
  check_replay(pm, rp);
}

TEST_CASE("individual rationality", "[axioms]") {
  CHECK(check_ir(make_spa(), sampled(100)).passed());
  CHECK(check_ir(make_proportional_myerson(), sampled(100)).passed());
  CHECK(check_ir(make_lottery(), sampled(100)).passed());

  const auto prop = make_proportional({0.5});
  const auto r = check_ir(prop, one({0.1, 10}));
  REQUIRE_FALSE(r.passed());
  CHECK(r.witnesses[0].observed == Approx(0.1 * (0.1 / 10.1) - 0.05).margin(1e-12));
  check_replay(prop, r);
}

TEST_CASE("enlarging the search never turns a failure into a pass", "[axioms][property]") {
  const auto profiles = sampled(40, 5);
  const SearchGrid coarse{0, 10, 2.0, {}};
  const std::vector<Mechanism> mechs = {make_lottery(), make_proportional({0.5}), make_asymmetric_spa(),
                                        make_spa_reserve({4})};
  for (const auto& m : mechs) {
    for (Axiom a : kAllAxioms) {
      const auto small = check_axiom(a, m, {profiles.begin(), profiles.begin() + 20}, coarse);
      const auto big = check_axiom(a, m, profiles, kGrid);
      if (!small.passed()) CHECK_FALSE(big.passed());
      CHECK(big.violations >= small.violations);
    }
  }
}

TEST_CASE("reports are deterministic and independent of the job count", "[axioms]") {
  const auto profiles = sampled(60, 13);
  CheckOptions serial, threaded;
  threaded.jobs = 4;
  for (Axiom a : kAllAxioms) {
    const auto r1 = check_axiom(a, make_lottery(), profiles, kGrid, serial);
    const auto r2 = check_axiom(a, make_lottery(), profiles, kGrid, serial);
    const auto r3 = check_axiom(a, make_lottery(), profiles, kGrid, threaded);
    CHECK(r1 == r2);
    CHECK(r1 == r3);
  }
}

TEST_CASE("SPA passes every check on the full grid for n <= 6", "[axioms][spa]") {
  std::vector<BidProfile> profiles;
  for (int n = 1; n <= 3; ++n) {
    const auto all = enumerate_profiles(n, kGrid);
    profiles.insert(profiles.end(), all.begin(), all.end());
  }
  for (int n = 4; n <= 6; ++n) {
    const auto s = ProfileSampler{n, n, kGrid, 100 + static_cast<std::uint64_t>(n)}.sample(150);
    profiles.insert(profiles.end(), s.begin(), s.end());
  }
  REQUIRE(profiles.size() == 21 + 21 * 21 + 21 * 21 * 21 + 450);
  const auto spa = make_spa();
  for (const auto& r : check_all(spa, profiles, kGrid)) {
    INFO(to_string(r.axiom));
    CHECK(r.passed());
  }
}

TEST_CASE("witness magnitudes exceed tolerance and verdict tracks witnesses", "[axioms]") {
  const auto profiles = sampled(80, 21);
  for (const auto& m : {make_lottery(), make_proportional({0.5}), make_asymmetric_spa(), make_spa_reserve({4})}) {
    for (const auto& r : check_all(m, profiles, kGrid)) {
      CHECK((r.verdict == Verdict::fail) == !r.witnesses.empty());
      CHECK(r.witnesses.size() <= 8);
      for (std::size_t k = 1; k < r.witnesses.size(); ++k) {
        CHECK(r.witnesses[k - 1].magnitude >= r.witnesses[k].magnitude);
      }
      check_replay(m, r);
      CHECK_THAT(r.search_config, Catch::Matchers::ContainsSubstring("no violation was found"));
    }
  }
}

TEST_CASE("independence matrix on a reduced budget", "[axioms][independence]") {
  IndependenceConfig cfg;
  cfg.profile_budget = 150;
  const auto m = independence_matrix(cfg);
  REQUIRE(m.rows.size() == 5);
  for (const auto& row : m.rows) {
    INFO(row.mechanism);
    CHECK(row.matches);
  }
  CHECK(m.matches);
  // SPA row: all pass
  for (Axiom a : kAllAxioms) CHECK(m.verdict(0, a) == Verdict::pass);
  CHECK(m.verdict(2, Axiom::sybil_proofness) == Verdict::fail);
  CHECK(m.verdict(1, Axiom::non_wastefulness) == Verdict::fail);
}

TEST_CASE("extra rows are reported without a pattern assertion", "[axioms][independence]") {
  IndependenceConfig cfg;
  cfg.profile_budget = 30;
  const Mechanism odd = make_lottery().renamed("lottery_copy");
  const auto m = independence_matrix(cfg, {odd});
  REQUIRE(m.rows.size() == 6);
  CHECK_FALSE(m.rows[5].pattern_asserted);
  CHECK(m.rows[5].matches);
}
