#include "activetest/error.hpp"
#include "activetest/signals.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace activetest;
using namespace activetest::testing;

namespace {

// Independent route: base-2 entropy computed from raw counts, converted to nats.
double entropy_oracle(const std::vector<int>& counts) {
  double total = 0;
  for (int c : counts) total += c;
  double bits = 0;
  for (int c : counts) {
    if (c > 0) bits += (c / total) * std::log2(total / c);
  }
  return bits * std::numbers::ln2;
}

}  // namespace

TEST_CASE("semantic entropy examples") {
  CHECK(semantic_entropy(repeat("A", 10)) == 0.0);
  CHECK(semantic_entropy(concat({repeat("A", 5), repeat("B", 5)})) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const auto mixed = concat({repeat("A", 5), repeat("B", 3), repeat("C", 2)});
  const double oracle = entropy_oracle({5, 3, 2});
  CHECK(oracle == doctest::Approx(1.029653).epsilon(1e-6));
  CHECK(std::abs(semantic_entropy(mixed) - oracle) < 1e-12);
}

TEST_CASE("self-consistency examples") {
  CHECK(self_consistency(repeat("A", 10)) == 1.0);
  std::vector<std::string> distinct;
  for (int i = 0; i < 10; ++i) distinct.push_back("opt" + std::to_string(i));
  CHECK(self_consistency(distinct) == doctest::Approx(0.1));
  CHECK(semantic_entropy(distinct) == doctest::Approx(std::log(10.0)));
  CHECK(self_consistency(concat({repeat("A", 5), repeat("B", 3), repeat("C", 2)})) == 0.5);
}

TEST_CASE("empty input is rejected") {
  std::vector<std::string> none;
  CHECK_THROWS_AS(semantic_entropy(none), InputError);
  CHECK_THROWS_AS(self_consistency(none), InputError);
  CHECK_THROWS_AS(semantic_entropy(std::vector<std::string>{"A", ""}), InputError);
}

TEST_CASE("unparsed label counts as its own class") {
  const auto answers = concat({repeat("A", 5), repeat(std::string(kUnparsedLabel), 5)});
  CHECK(semantic_entropy(answers) == doctest::Approx(std::log(2.0)));
  CHECK(self_consistency(answers) == 0.5);
}

TEST_CASE("signal properties on random histograms") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = std::uniform_int_distribution<int>(2, 30)(rng);
    const int classes = std::uniform_int_distribution<int>(1, k)(rng);
    std::vector<std::string> answers;
    std::uniform_int_distribution<int> pick(0, classes - 1);
    for (int j = 0; j < k; ++j) answers.push_back("c" + std::to_string(pick(rng)));

    const double se = semantic_entropy(answers);
    const double sc = self_consistency(answers);
    CHECK(se >= 0.0);
    CHECK(se <= std::log(static_cast<double>(k)) + 1e-12);
    CHECK(sc >= 1.0 / k);
    CHECK(sc <= 1.0);
    CHECK((se == 0.0) == (sc == 1.0));

    const auto hist = AnswerHistogram::from_answers(answers);
    const bool all_distinct = static_cast<int>(hist.counts.size()) == k;
    CHECK(all_distinct == (std::abs(se - std::log(static_cast<double>(k))) < 1e-12));

    auto shuffled = answers;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(semantic_entropy(shuffled) == se);
    CHECK(self_consistency(shuffled) == sc);

    // Bijective renaming that reverses the lexicographic class order.
    auto renamed = answers;
    for (auto& a : renamed) a = "z" + std::to_string(1000 - std::stoi(a.substr(1)));
    CHECK(semantic_entropy(renamed) == se);
    CHECK(self_consistency(renamed) == sc);
  }
}
