#include "activetest/error.hpp"
#include "activetest/stratify.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace activetest;
using namespace activetest::testing;

namespace {

void check_invariants(const Stratification& s, const Vector& se) {
  REQUIRE(s.pool_size() == se.size());
  Index total = 0;
  for (Index n : s.sizes) {
    CHECK(n >= 1);
    total += n;
  }
  CHECK(total == se.size());
  std::vector<Index> counted(s.sizes.size(), 0);
  std::vector<double> lo(s.sizes.size(), 1e300), hi(s.sizes.size(), -1e300);
  for (Index i = 0; i < se.size(); ++i) {
    const auto h = static_cast<std::size_t>(s.assignment[static_cast<std::size_t>(i)]);
    REQUIRE(h < s.sizes.size());
    ++counted[h];
    lo[h] = std::min(lo[h], se[i]);
    hi[h] = std::max(hi[h], se[i]);
  }
  for (std::size_t h = 0; h < s.sizes.size(); ++h) CHECK(counted[h] == s.sizes[h]);
  for (std::size_t h = 1; h < s.sizes.size(); ++h) CHECK(hi[h - 1] <= lo[h]);
}

const Vector kAdaptiveExample = to_vector({0, 0, 0, 0, 0.3, 0.5, 0.7, 0.9, 1.0, 1.1, 1.2, 1.3});

}  // namespace

TEST_CASE("adaptive SE stratification") {
  SUBCASE("degenerate pool") {
    const auto s = adaptive_se_stratify(Vector::Zero(7), 5);
    CHECK(s.num_strata() == 1);
    CHECK(s.sizes == std::vector<Index>{7});
  }
  SUBCASE("base stratum plus four rank bins") {
    const auto s = adaptive_se_stratify(kAdaptiveExample, 5);
    CHECK(s.sizes == std::vector<Index>{4, 2, 2, 2, 2});
    CHECK(s.assignment == std::vector<Index>{0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4});
    check_invariants(s, kAdaptiveExample);
  }
  SUBCASE("default H") { CHECK(kDefaultStrata == 5); }
  SUBCASE("H < 2 rejected") {
    CHECK_THROWS_AS(adaptive_se_stratify(kAdaptiveExample, 1), ConfigError);
    CHECK_THROWS_AS(adaptive_se_stratify(to_vector({0, -1}), 3), InputError);
  }
}

TEST_CASE("quantile stratification") {
  const auto ten = to_vector({0.5, 0.1, 0.9, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6, 1.0});
  const auto s = quantile_stratify(ten, 5);
  CHECK(s.sizes == std::vector<Index>(5, 2));
  check_invariants(s, ten);

  // Rank edges 0,2,4,6,8,10; the six zeros span bins 0-2 and merge into bin 0.
  const auto zeros = to_vector({0, 0, 0, 0, 0, 0, 1, 2, 3, 4});
  const auto z = quantile_stratify(zeros, 5);
  CHECK(z.sizes == std::vector<Index>{6, 2, 2});
  CHECK(z.num_strata() < 5);

  const auto tiny = quantile_stratify(to_vector({0.2, 0.1, 0.3}), 5);
  CHECK(tiny.num_strata() <= 3);
  check_invariants(tiny, to_vector({0.2, 0.1, 0.3}));
}

TEST_CASE("equal-width stratification") {
  const auto s = equal_width_stratify(kAdaptiveExample, 5);
  // Interval oracle: width 0.26 over [0, 1.3], last bin closed.
  const double w = 1.3 / 5;
  std::vector<Index> expected;
  for (Index i = 0; i < kAdaptiveExample.size(); ++i) {
    Index b = 0;
    while (b < 4 && !(kAdaptiveExample[i] < (b + 1) * w)) ++b;
    expected.push_back(b);
  }
  CHECK(s.assignment == expected);
  CHECK(s.assignment[4] == 1);   // 0.3 in [0.26, 0.52)
  CHECK(s.assignment[11] == 4);  // the maximum lands in the last bin
  check_invariants(s, kAdaptiveExample);

  CHECK(equal_width_stratify(Vector::Constant(5, 0.4), 5).num_strata() == 1);

  // Empty middle intervals are dropped.
  const auto gap = equal_width_stratify(to_vector({0, 0.01, 0.99, 1.0}), 5);
  CHECK(gap.sizes == std::vector<Index>{2, 2});
}

TEST_CASE("k-means stratification") {
  CHECK(kmeans_stratify(to_vector({0, 0, 0, 1, 1, 1}), 2).assignment == std::vector<Index>{0, 0, 0, 1, 1, 1});
  CHECK(kmeans_stratify(Vector::Constant(4, 0.7), 3).num_strata() == 1);
  // Init at 0 and 1.0; Lloyd converges to centroids 0.05 and 0.95.
  CHECK(kmeans_stratify(to_vector({0, 0.1, 0.9, 1.0}), 2).assignment == std::vector<Index>{0, 0, 1, 1});
  // More clusters than distinct values.
  CHECK(kmeans_stratify(to_vector({0, 0, 1, 1, 2}), 5).num_strata() == 3);
}

TEST_CASE("stratum mean self-consistency") {
  const auto s = quantile_stratify(to_vector({0, 0, 0.5, 0.6}), 2);
  const auto p = stratum_mean_sc(s, to_vector({1, 1, 1.0, 0.5}));
  CHECK(p[0] == 1.0);
  CHECK(p[1] == doctest::Approx(0.75));
  CHECK_THROWS_AS(stratum_mean_sc(s, to_vector({1, 1})), InputError);

  const auto pool = toy_pool({true, true, false, true, false});
  const auto ps = stratify_pool(pool, StratifyMethod::adaptive_se, 5);
  CHECK(ps.mean_sc[0] == 1.0);
}

TEST_CASE("method tags") {
  for (auto m : {StratifyMethod::adaptive_se, StratifyMethod::equal_width, StratifyMethod::quantile,
                 StratifyMethod::kmeans}) {
    CHECK(parse_stratify_method(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_stratify_method("random"), ConfigError);
}

TEST_CASE("stratification invariants on random inputs") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 300; ++rep) {
    const Index n = std::uniform_int_distribution<Index>(1, 200)(rng);
    const int H = std::uniform_int_distribution<int>(2, 9)(rng);
    const double zero_frac = std::uniform_real_distribution<double>(0, 0.7)(rng);
    Vector se(n);
    for (Index i = 0; i < n; ++i) {
      const bool zero = std::uniform_real_distribution<double>(0, 1)(rng) < zero_frac;
      // Coarse grid so ties are common.
      se[i] = zero ? 0.0 : std::uniform_int_distribution<int>(1, 12)(rng) * 0.1;
    }
    for (auto m : {StratifyMethod::adaptive_se, StratifyMethod::equal_width, StratifyMethod::quantile,
                   StratifyMethod::kmeans}) {
      const auto a = stratify(m, se, H);
      check_invariants(a, se);
      CHECK(a.num_strata() <= H);
      const auto b = stratify(m, se, H);
      CHECK(a.assignment == b.assignment);
    }
  }
}

TEST_CASE("adaptive SE matches quantile without zeros and ties") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = std::uniform_int_distribution<Index>(1, 150)(rng);
    const int H = std::uniform_int_distribution<int>(2, 8)(rng);
    Vector se(n);
    for (Index i = 0; i < n; ++i) se[i] = std::uniform_real_distribution<double>(0.01, 2.0)(rng);
    CHECK(adaptive_se_stratify(se, H).assignment == quantile_stratify(se, H).assignment);

    // With a zero block the positive bins stay balanced.
    Vector with_zeros(n + 5);
    with_zeros << Vector::Zero(5), se;
    const auto s = adaptive_se_stratify(with_zeros, H);
    CHECK(s.sizes[0] == 5);
    const auto [mn, mx] = std::minmax_element(s.sizes.begin() + 1, s.sizes.end());
    if (s.num_strata() > 1) CHECK(*mx - *mn <= 1);
  }
}
