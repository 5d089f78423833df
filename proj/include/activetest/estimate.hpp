#pragma once

#include "activetest/allocate.hpp"
#include "activetest/error.hpp"
#include "activetest/pool.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace activetest {

using Rng = std::mt19937_64;

/// Stream address reserved for the flat uniform baseline.
inline constexpr std::uint64_t kUniformStream = ~std::uint64_t{0};

/// Keyed random stream for (master_seed, trial, stratum). Equal addresses give
/// identical streams; the address is hashed with splitmix64 before seeding.
Rng make_stream(std::uint64_t master_seed, std::uint64_t trial, std::uint64_t stratum);

/// Partial Fisher-Yates over `scratch`: the first m slots end up holding a
/// uniform size-m subset. Every swap is undone before returning, so scratch
/// is left in its original order. Appends the selection to `out`.
template <class T>
void sample_in_place(std::span<T> scratch, Index m, Rng& rng, std::vector<T>& out) {
  const auto n = static_cast<Index>(scratch.size());
  if (m < 1 || m > n) {
    throw InputError("sample size " + std::to_string(m) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<Index> swaps(static_cast<std::size_t>(m));
  for (Index j = 0; j < m; ++j) {
    std::uniform_int_distribution<Index> pick(j, n - 1);
    const Index r = pick(rng);
    swaps[static_cast<std::size_t>(j)] = r;
    std::swap(scratch[static_cast<std::size_t>(j)], scratch[static_cast<std::size_t>(r)]);
  }
  out.insert(out.end(), scratch.begin(), scratch.begin() + m);
  for (Index j = m - 1; j >= 0; --j) {
    std::swap(scratch[static_cast<std::size_t>(j)], scratch[static_cast<std::size_t>(swaps[static_cast<std::size_t>(j)])]);
  }
}

/// Uniform size-m subset of ids, without replacement. Throws InputError when
/// m is outside [1, |ids|].
template <class T>
std::vector<T> sample_without_replacement(std::span<const T> ids, Index m, Rng& rng) {
  std::vector<T> scratch(ids.begin(), ids.end());
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(std::max<Index>(m, 0)));
  sample_in_place(std::span<T>(scratch), m, rng, out);
  return out;
}

/// Per-stratum selections S_h, with |S_h| = m_h.
struct SampleDraw {
  std::vector<std::vector<Index>> strata;
  std::uint64_t master_seed = 0;
  std::uint64_t trial = 0;
};

struct RiskEstimate {
  double value = 0.0;
  Index labels_used = 0;
};

/// Draws S_h from every stratum using stream (master_seed, trial, h).
SampleDraw draw_stratified(const std::vector<std::vector<Index>>& members, const AllocationPlan& plan,
                           std::uint64_t master_seed, std::uint64_t trial);

/// Stratified estimator (1/N) sum_h N_h * mean loss over S_h. Reveals exactly
/// the drawn instances through the oracle. Throws InputError when the draw
/// does not match the plan.
RiskEstimate ht_estimate(const SampleDraw& draw, const AllocationPlan& plan, const std::vector<Index>& sizes,
                         LabelOracle& oracle);

/// Inverse-inclusion-probability form sum_{i in S} loss_i / (N pi_i) with
/// pi_i = m_h / N_h. Algebraically equal to ht_estimate on the same draw.
double ht_weighted_form(const SampleDraw& draw, const AllocationPlan& plan, const std::vector<Index>& sizes,
                        const Vector& losses);

/// Mean loss over a uniform size-M subset of the whole pool.
RiskEstimate uniform_estimate(const Pool& pool, Index M, Rng& rng, LabelOracle& oracle);

}  // namespace activetest
