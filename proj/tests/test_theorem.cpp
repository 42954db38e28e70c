#include <catch_amalgamated.hpp>

#include <cmath>

#include "mechlab/theorem.hpp"

using namespace mechlab;
using Catch::Approx;

namespace {

// \int_0^b z / (z + S) dz
double prop_integral(double b, double s) { return b - s * std::log1p(b / s); }

}  // namespace

TEST_CASE("lemma1 traces", "[theorem]") {
  const auto spa = lemma1_trace(make_spa(), 7, 3, 50);
  REQUIRE(spa.samples.size() == 49);
  for (const auto& s : spa.samples) CHECK(s.computed == 1.0);
  CHECK(spa.verdict == TraceVerdict::consistent);
  CHECK(spa.summary == 1.0);

  const auto lot = lemma1_trace(make_lottery(), 7, 3, 50);
  for (const auto& s : lot.samples) CHECK(s.computed == Approx(1.0 / s.x).margin(1e-15));
  CHECK(lot.summary == 0.5);
  CHECK(lot.verdict == TraceVerdict::violated);

  const auto prop = lemma1_trace(make_proportional({0.5}), 7, 3, 50);
  for (const auto& s : prop.samples) {
    CHECK(std::abs(s.computed - 7.0 / (7.0 + 3.0 * (s.x - 1.0))) <= 1e-12);
  }
  CHECK(prop.verdict == TraceVerdict::violated);
  CHECK_THAT(prop.note, Catch::Matchers::ContainsSubstring("not claimed"));

  CHECK_THROWS_AS(lemma1_trace(make_spa(), 3, 7, 10), PreconditionError);
}

TEST_CASE("lemma1 running max never decreases as n_max grows", "[theorem][property]") {
  for (const auto& m : {make_spa(), make_lottery(), make_proportional_myerson(), make_spa_reserve({4})}) {
    double prev = -1.0;
    for (int n : {2, 4, 8, 16, 32, 64}) {
      const auto t = lemma1_trace(m, 7, 3, n);
      CHECK(t.summary >= prev);
      prev = t.summary;
    }
  }
}

TEST_CASE("eqn2 chain", "[theorem]") {
  const auto spa = eqn2_chain_check(make_spa(), 7, 3, 20);
  for (const auto& s : spa.samples) {
    CHECK(s.computed == 4.0);
    CHECK(s.reference == 4.0);
  }
  CHECK(spa.verdict == TraceVerdict::consistent);
  CHECK(spa.aux_error <= 1e-15);

  const auto lot = eqn2_chain_check(make_lottery(), 7, 3, 10);
  REQUIRE_FALSE(lot.samples.empty());
  CHECK(lot.samples[0].computed == Approx(3.5).margin(1e-12));
  CHECK(lot.samples[0].reference == Approx(11.0 / 3.0).margin(1e-12));
  CHECK(lot.verdict == TraceVerdict::violated);
  // The lottery is symmetric and non-wasteful, so the identity itself holds.
  CHECK(lot.aux_error <= 1e-15);

  // The reserve price wastes the good, which breaks the sybil-share identity.
  const auto res = eqn2_chain_check(make_spa_reserve({8}), 7, 3, 5);
  CHECK(res.aux_error > 0.1);
  CHECK(res.verdict == TraceVerdict::violated);
}

TEST_CASE("lemma2 gap", "[theorem]") {
  CHECK(lemma2_gap(make_spa(), 7, 3) == 0.0);
  CHECK(lemma2_gap(make_spa(), 5, 5) == 0.0);
  CHECK(lemma2_gap(make_lottery(), 7, 3) == Approx(-0.5).margin(1e-12));
  CHECK(lemma2_trace(make_lottery(), 7, 3).verdict == TraceVerdict::violated);
  CHECK(lemma2_trace(make_spa(), 7, 3).verdict == TraceVerdict::consistent);

  // U1(u, v) = u - v ln(1 + u/v) for the proportional rule with Myerson payments.
  const double u = 6, v = 2;
  CHECK(lemma2_gap(make_proportional_myerson(), u, v) ==
        Approx(prop_integral(u, v) - (u - v)).margin(1e-12));
  CHECK_THROWS_AS(lemma2_gap(make_spa(), 3, 7), PreconditionError);
}

TEST_CASE("lemma3 monotonicity", "[theorem]") {
  const SearchGrid grid{0, 10, 0.5, {}};
  const auto spa = lemma3_monotone(make_spa(), 7, grid);
  REQUIRE(spa.samples.size() == 15);
  for (const auto& s : spa.samples) CHECK(s.computed == Approx(7.0 - s.x).margin(1e-12));
  CHECK(spa.verdict == TraceVerdict::consistent);

  const auto lot = lemma3_monotone(make_lottery(), 7, grid);
  for (const auto& s : lot.samples) CHECK(s.computed == Approx(3.5).margin(1e-12));
  CHECK(lot.verdict == TraceVerdict::consistent);

  const auto off = lemma3_monotone(make_spa(), 6.25, grid);
  CHECK(off.samples.back().x == 6.25);
}

TEST_CASE("averaging identity", "[theorem]") {
  for (const auto& m : {make_spa(), make_lottery(), make_proportional_myerson()}) {
    for (double u : {1.0, 2.0, 5.0}) {
      const auto t = averaging_identity(m, u);
      INFO(m.name() << " u=" << u);
      CHECK(std::abs(t.summary - u / 2.0) <= 1e-4);
      CHECK(t.verdict == TraceVerdict::consistent);
      CHECK(t.aux_error <= 1e-4);
    }
  }
  CHECK_THROWS_AS(averaging_identity(make_spa_reserve({4}), 2), PreconditionError);
  CHECK_THROWS_AS(averaging_identity(make_asymmetric_spa(), 2), PreconditionError);
  CHECK_THROWS_AS(averaging_identity(make_spa(), 0), PreconditionError);
  AveragingConfig odd;
  odd.intervals = 7;
  CHECK_THROWS_AS(averaging_identity(make_spa(), 2, {}, odd), PreconditionError);
}

TEST_CASE("induction witness", "[theorem]") {
  const auto profile = BidProfile::from_bids({2, 7, 5});
  CHECK_FALSE(induction_witness(make_spa(), profile));
  CHECK(induction_trace(make_spa(), profile).verdict == TraceVerdict::consistent);

  const auto lot = induction_witness(make_lottery(), profile);
  REQUIRE(lot);
  CHECK(lot->deviator == AgentId{1});
  CHECK(lot->profile == BidProfile::from_bids({7, 7}));
  CHECK(lot->sybil_bids == std::vector<double>{5});
  // 7 * 2/3 - 7/2
  CHECK(lot->gain == Approx(7.0 / 6.0).margin(1e-12));

  // Proportional rule with Myerson payments: value 7 against a rival bidding 7.
  const double truthful = prop_integral(7, 7);
  const double x1 = 7.0 / 19.0, xs = 5.0 / 19.0;
  const double p1 = 7 * x1 - prop_integral(7, 12);
  const double ps = 5 * xs - prop_integral(5, 14);
  const double oracle = 7 * (x1 + xs) - p1 - ps - truthful;
  const auto pm = induction_witness(make_proportional_myerson(), profile);
  REQUIRE(pm);
  CHECK(pm->gain == Approx(oracle).margin(1e-9));
  CHECK(pm->gain == Approx(0.59).margin(0.01));
  CHECK(replay_deviation(make_proportional_myerson(), *pm) == Approx(pm->deviant_utility).margin(1e-9));

  CHECK_THROWS_AS(induction_witness(make_spa(), BidProfile::from_bids({2, 7})), PreconditionError);
  CHECK_THROWS_AS(induction_witness(make_spa(), BidProfile::from_bids({9, 7, 5})), PreconditionError);
}

TEST_CASE("induction localizes to a positive low-bidder share", "[theorem][property]") {
  const SearchGrid grid{0, 10, 1.0, {}};
  for (const auto& m : {make_spa(), make_lottery(), make_proportional_myerson(), make_spa_reserve({4})}) {
    for (const auto& p : enumerate_profiles(3, grid)) {
      double top = std::max(p[1].bid, p[2].bid);
      if (!(p[0].bid < top)) continue;
      const auto w = induction_witness(m, p);
      if (m.allocate(p)[0] <= 1e-9) CHECK_FALSE(w);
      if (w) CHECK(w->gain > 0.0);
    }
  }
}
