#include "activetest/error.hpp"
#include "activetest/estimate.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>

using namespace activetest;
using namespace activetest::testing;

namespace {

// All size-m subsets of {0..n-1}, as index lists.
void subsets(Index n, Index m, Index start, std::vector<Index>& cur, std::vector<std::vector<Index>>& out) {
  if (static_cast<Index>(cur.size()) == m) {
    out.push_back(cur);
    return;
  }
  for (Index i = start; i < n; ++i) {
    cur.push_back(i);
    subsets(n, m, i + 1, cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<Index>> all_subsets(Index n, Index m) {
  std::vector<std::vector<Index>> out;
  std::vector<Index> cur;
  subsets(n, m, 0, cur, out);
  return out;
}

AllocationPlan plan_of(std::vector<Index> m) {
  AllocationPlan p;
  p.M = std::accumulate(m.begin(), m.end(), Index{0});
  p.m = std::move(m);
  return p;
}

}  // namespace

TEST_CASE("sampling without replacement") {
  const std::vector<std::string> ids{"a", "b", "c", "d", "e"};
  auto rng = make_stream(1, 0, 0);
  auto all = sample_without_replacement(std::span<const std::string>(ids), 5, rng);
  CHECK(std::set<std::string>(all.begin(), all.end()) == std::set<std::string>(ids.begin(), ids.end()));

  auto r1 = make_stream(42, 3, 1);
  auto r2 = make_stream(42, 3, 1);
  CHECK(sample_without_replacement(std::span<const std::string>(ids), 3, r1) ==
        sample_without_replacement(std::span<const std::string>(ids), 3, r2));

  CHECK_THROWS_AS(sample_without_replacement(std::span<const std::string>(ids), 0, rng), InputError);
  CHECK_THROWS_AS(sample_without_replacement(std::span<const std::string>(ids), 6, rng), InputError);
}

TEST_CASE("single draws over two ids are balanced") {
  const std::vector<Index> ids{0, 1};
  int first = 0;
  for (std::uint64_t t = 0; t < 10000; ++t) {
    auto rng = make_stream(99, t, 0);
    first += sample_without_replacement(std::span<const Index>(ids), 1, rng).front() == 0;
  }
  // Binomial(10000, 0.5): sd 50, 4 sd band.
  CHECK(first >= 4800);
  CHECK(first <= 5200);
}

TEST_CASE("sample_in_place restores the scratch order") {
  std::vector<Index> scratch(20);
  std::iota(scratch.begin(), scratch.end(), Index{0});
  const auto original = scratch;
  auto r1 = make_stream(5, 5, 5);
  std::vector<Index> picked;
  sample_in_place(std::span<Index>(scratch), 7, r1, picked);
  CHECK(scratch == original);
  auto r2 = make_stream(5, 5, 5);
  CHECK(picked == sample_without_replacement(std::span<const Index>(original), 7, r2));
}

TEST_CASE("stratified estimator worked examples") {
  const auto pool4 = toy_pool({true, true, false, false});
  const Vector l4 = to_vector({1, 0, 0, 1});
  LabelOracle o4(pool4, l4);
  SampleDraw census;
  census.strata = {{0, 1, 2, 3}};
  const auto r = ht_estimate(census, plan_of({4}), {4}, o4);
  CHECK(r.value == 0.5);
  CHECK(r.labels_used == 4);

  // Sizes (4, 2), m = (2, 1); stratum 0 draws losses {1, 0}, stratum 1 draws {1}.
  const auto pool6 = toy_pool({true, true, true, true, false, false});
  const Vector l6 = to_vector({1, 0, 1, 1, 1, 0});
  LabelOracle o6(pool6, l6);
  SampleDraw draw;
  draw.strata = {{0, 1}, {4}};
  const auto plan = plan_of({2, 1});
  const auto est = ht_estimate(draw, plan, {4, 2}, o6);
  CHECK(est.value == doctest::Approx((4 * 0.5 + 2 * 1.0) / 6.0).epsilon(1e-15));
  CHECK(est.labels_used == 3);
  CHECK(ht_weighted_form(draw, plan, {4, 2}, l6) == doctest::Approx(est.value).epsilon(1e-14));

  SampleDraw wrong;
  wrong.strata = {{0}, {4}};
  CHECK_THROWS_AS(ht_estimate(wrong, plan, {4, 2}, o6), InputError);
}

TEST_CASE("exhaustive enumeration: the stratified estimator is unbiased") {
  const auto pool = toy_pool({true, true, true, true, false, false});
  const Vector losses = to_vector({0.2, 0.9, 0.0, 0.7, 0.4, 1.0});
  const double risk = finite_pool_risk(losses);
  const auto plan = plan_of({2, 1});
  const std::vector<Index> sizes{4, 2};

  double sum = 0.0;
  int draws = 0;
  for (const auto& s0 : all_subsets(4, 2)) {
    for (const auto& s1 : all_subsets(2, 1)) {
      SampleDraw d;
      d.strata = {s0, {4 + s1[0]}};
      LabelOracle oracle(pool, losses);
      const auto est = ht_estimate(d, plan, sizes, oracle);
      CHECK(est.labels_used == 3);
      CHECK(ht_weighted_form(d, plan, sizes, losses) == doctest::Approx(est.value).epsilon(1e-13));
      sum += est.value;
      ++draws;
    }
  }
  CHECK(draws == 12);
  CHECK(std::abs(sum / draws - risk) < 1e-12);
}

TEST_CASE("inclusion frequencies match m_h / N_h") {
  const std::vector<std::vector<Index>> members{{0, 1, 2, 3, 4, 5, 6}, {7, 8, 9, 10, 11}};
  const auto plan = plan_of({3, 2});
  const int T = 20000;
  std::vector<int> hits(12, 0);
  for (int t = 0; t < T; ++t) {
    const auto d = draw_stratified(members, plan, 8, static_cast<std::uint64_t>(t));
    for (const auto& s : d.strata) {
      CHECK(std::set<Index>(s.begin(), s.end()).size() == s.size());
      for (Index i : s) ++hits[static_cast<std::size_t>(i)];
    }
  }
  for (Index i = 0; i < 12; ++i) {
    const double pi = i < 7 ? 3.0 / 7.0 : 2.0 / 5.0;
    const double band = 4.0 * std::sqrt(T * pi * (1 - pi));
    CHECK(std::abs(hits[static_cast<std::size_t>(i)] - T * pi) <= band);
  }
}

TEST_CASE("census draws reproduce the pool risk for any seed") {
  const auto pool = toy_pool({true, false, true, false, false});
  const Vector losses = to_vector({1, 0, 0.5, 1, 0});
  const std::vector<std::vector<Index>> members{{0, 2}, {1, 3, 4}};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    LabelOracle oracle(pool, losses);
    const auto d = draw_stratified(members, plan_of({2, 3}), seed, 0);
    CHECK(ht_estimate(d, plan_of({2, 3}), {2, 3}, oracle).value == doctest::Approx(finite_pool_risk(losses)));
  }
}

TEST_CASE("uniform estimator") {
  const auto pool = toy_pool({true, false, true, false});
  const Vector losses = to_vector({1, 0, 1, 1});
  {
    LabelOracle oracle(pool, losses);
    auto rng = make_stream(1, 0, kUniformStream);
    const auto r = uniform_estimate(pool, 4, rng, oracle);
    CHECK(r.value == doctest::Approx(0.75));
    CHECK(r.labels_used == 4);
  }

  const auto two = toy_pool({true, false});
  const Vector half = to_vector({0, 1});
  double mean = 0;
  const int T = 4000;
  for (int t = 0; t < T; ++t) {
    LabelOracle oracle(two, half);
    auto rng = make_stream(3, static_cast<std::uint64_t>(t), kUniformStream);
    const double v = uniform_estimate(two, 1, rng, oracle).value;
    CHECK((v == 0.0 || v == 1.0));
    mean += v / T;
  }
  CHECK(std::abs(mean - 0.5) < 4 * 0.5 / std::sqrt(T));

  LabelOracle o1(pool, losses), o2(pool, losses);
  auto r1 = make_stream(77, 1, kUniformStream);
  auto r2 = make_stream(77, 1, kUniformStream);
  CHECK(uniform_estimate(pool, 2, r1, o1).value == uniform_estimate(pool, 2, r2, o2).value);
  CHECK_THROWS_AS(uniform_estimate(pool, 0, r1, o1), InputError);
  CHECK_THROWS_AS(uniform_estimate(pool, 5, r1, o1), InputError);
}
