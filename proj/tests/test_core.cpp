#include <catch_amalgamated.hpp>

#include <random>

#include "mechlab/core.hpp"

using namespace mechlab;
using Catch::Approx;

TEST_CASE("utility is value times share minus payment", "[core]") {
  CHECK(utility(5, 1, 3) == 2);
  CHECK(utility(7, 0, 0) == 0);
  CHECK(utility(5, 1.0 / 3.0, 0) == Approx(5.0 / 3.0));
}

TEST_CASE("utility scales with value and payment", "[core][property]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0.0, 10.0), s(0.0, 1.0);
  for (int it = 0; it < 200; ++it) {
    const double v = d(rng), x = s(rng), p = d(rng), a = d(rng);
    CHECK(utility(v, x, p) == v * x - p);
    CHECK(utility(a * v, x, a * p) == Approx(a * utility(v, x, p)).margin(1e-12));
  }
}

TEST_CASE("BidProfile keeps canonical order and rejects bad input", "[core]") {
  BidProfile p{{AgentId{3}, 1.0}, {AgentId{1}, 5.0}};
  REQUIRE(p.size() == 2);
  CHECK(p[0].agent == AgentId{1});
  CHECK(p.bid_of(AgentId{3}) == 1.0);

  CHECK_THROWS_AS(BidProfile(std::vector<BidEntry>{}), InvalidProfileError);
  CHECK_THROWS_AS((BidProfile{{AgentId{1}, -1.0}}), InvalidProfileError);
  CHECK_THROWS_AS((BidProfile{{AgentId{1}, std::numeric_limits<double>::infinity()}}), InvalidProfileError);
  CHECK_THROWS_AS((BidProfile{{AgentId{2}, 1.0}, {AgentId{2}, 3.0}}), DuplicateAgentError);
}

TEST_CASE("validate_allocation", "[core]") {
  const auto p = BidProfile::from_bids({1, 1});
  CHECK(validate_allocation(Allocation(p, {0.5, 0.5}), p).ok);

  auto over = validate_allocation(Allocation(p, {0.7, 0.7}), p);
  CHECK_FALSE(over.ok);
  CHECK_THAT(over.message, Catch::Matchers::ContainsSubstring("sum 1.3999"));

  auto neg = validate_allocation(Allocation(p, {-0.1, 1.1}), p);
  CHECK_FALSE(neg.ok);
  CHECK_THAT(neg.message, Catch::Matchers::ContainsSubstring("negative share"));

  const auto q = BidProfile::from_bids({1, 1, 1});
  CHECK_FALSE(validate_allocation(Allocation(p, {0.5, 0.5}), q).ok);

  // Wasteful allocations are representable.
  CHECK(validate_allocation(Allocation(p, {0.0, 0.0}), p).ok);
}

TEST_CASE("extend_profile", "[core]") {
  const BidProfile one{{AgentId{1}, 5.0}};
  const auto two = extend_profile(one, AgentId{2}, 3.0);
  CHECK(two == BidProfile{{AgentId{1}, 5.0}, {AgentId{2}, 3.0}});
  CHECK(one.size() == 1);

  const auto three = extend_profile(two, AgentId{3}, 0.0);
  CHECK(three == BidProfile::from_bids({5, 3, 0}));

  CHECK_THROWS_AS(extend_profile(one, AgentId{1}, 3.0), DuplicateAgentError);
}

TEST_CASE("replicate_profile", "[core]") {
  CHECK(replicate_profile(7, 3, 4) == BidProfile::from_bids({7, 3, 3, 3}));
  CHECK(replicate_profile(5, 5, 2) == BidProfile::from_bids({5, 5}));
  CHECK(replicate_profile(1, 0, 3) == BidProfile::from_bids({1, 0, 0}));
  CHECK_THROWS_AS(replicate_profile(1, 0, 1), PreconditionError);

  for (int n = 2; n < 40; ++n) {
    const auto p = replicate_profile(2.5, 1.5, n);
    REQUIRE(p.size() == static_cast<std::size_t>(n));
    const auto bids = p.bids();
    CHECK(std::count(bids.begin(), bids.end(), 1.5) == n - 1);
  }
}

TEST_CASE("ToleranceConfig defaults and validation", "[core]") {
  ToleranceConfig t;
  CHECK(t.tol_alloc == 1e-9);
  CHECK(t.tol_num == 1e-9);
  CHECK(t.tol_quad == 1e-6);
  CHECK(t.eps_tie == 1e-12);
  t.validate();
  t.tol_num = 0;
  CHECK_THROWS_AS(t.validate(), PreconditionError);
}
