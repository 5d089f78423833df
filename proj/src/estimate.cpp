#include "activetest/estimate.hpp"

#include <numeric>
#include <string>

namespace activetest {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_draw(const SampleDraw& draw, const AllocationPlan& plan, const std::vector<Index>& sizes) {
  if (draw.strata.size() != plan.m.size() || sizes.size() != plan.m.size()) {
    throw InputError("draw, plan and stratum sizes disagree on the number of strata");
  }
  for (std::size_t h = 0; h < plan.m.size(); ++h) {
    if (static_cast<Index>(draw.strata[h].size()) != plan.m[h]) {
      throw InputError("stratum " + std::to_string(h) + " drew " + std::to_string(draw.strata[h].size()) +
                       " instances, plan allocates " + std::to_string(plan.m[h]));
    }
    if (plan.m[h] < 1 || plan.m[h] > sizes[h]) {
      throw InputError("plan violates 1 <= m_h <= N_h in stratum " + std::to_string(h));
    }
  }
}

}  // namespace

Rng make_stream(std::uint64_t master_seed, std::uint64_t trial, std::uint64_t stratum) {
  std::uint64_t key = splitmix64(master_seed);
  key = splitmix64(key ^ trial);
  key = splitmix64(key ^ stratum);
  return Rng(key);
}

SampleDraw draw_stratified(const std::vector<std::vector<Index>>& members, const AllocationPlan& plan,
                           std::uint64_t master_seed, std::uint64_t trial) {
  if (members.size() != plan.m.size()) {
    throw InputError("plan and stratification disagree on the number of strata");
  }
  SampleDraw draw;
  draw.master_seed = master_seed;
  draw.trial = trial;
  draw.strata.resize(members.size());
  for (std::size_t h = 0; h < members.size(); ++h) {
    auto rng = make_stream(master_seed, trial, h);
    draw.strata[h] = sample_without_replacement(std::span<const Index>(members[h]), plan.m[h], rng);
  }
  return draw;
}

RiskEstimate ht_estimate(const SampleDraw& draw, const AllocationPlan& plan, const std::vector<Index>& sizes,
                         LabelOracle& oracle) {
  check_draw(draw, plan, sizes);
  const Index before = oracle.labels_used();
  double total = 0.0;
  Index N = 0;
  for (std::size_t h = 0; h < plan.m.size(); ++h) {
    double stratum_sum = 0.0;
    for (Index i : draw.strata[h]) stratum_sum += oracle.reveal(i);
    total += static_cast<double>(sizes[h]) * (stratum_sum / static_cast<double>(plan.m[h]));
    N += sizes[h];
  }
  return {total / static_cast<double>(N), oracle.labels_used() - before};
}

double ht_weighted_form(const SampleDraw& draw, const AllocationPlan& plan, const std::vector<Index>& sizes,
                        const Vector& losses) {
  check_draw(draw, plan, sizes);
  const Index N = std::accumulate(sizes.begin(), sizes.end(), Index{0});
  double total = 0.0;
  for (std::size_t h = 0; h < plan.m.size(); ++h) {
    const double inclusion = static_cast<double>(plan.m[h]) / static_cast<double>(sizes[h]);
    for (Index i : draw.strata[h]) total += losses[i] / (static_cast<double>(N) * inclusion);
  }
  return total;
}

RiskEstimate uniform_estimate(const Pool& pool, Index M, Rng& rng, LabelOracle& oracle) {
  if (M < 1 || M > pool.size()) {
    throw InputError("uniform budget M = " + std::to_string(M) + " outside [1, " + std::to_string(pool.size()) + "]");
  }
  std::vector<Index> all(static_cast<std::size_t>(pool.size()));
  std::iota(all.begin(), all.end(), Index{0});
  const auto picked = sample_without_replacement(std::span<const Index>(all), M, rng);
  const Index before = oracle.labels_used();
  double sum = 0.0;
  for (Index i : picked) sum += oracle.reveal(i);
  return {sum / static_cast<double>(M), oracle.labels_used() - before};
}

}  // namespace activetest
