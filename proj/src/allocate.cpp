#include "activetest/allocate.hpp"

#include "activetest/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace activetest {

namespace {

// Quotas whose fractional parts lie within this many labels of each other are
// treated as tied, and a quota this close to an integer counts as that
// integer. Keeps the plan stable under rescaling of the weights and under
// perturbations far below one label.
constexpr double kQuotaTolerance = 1e-3;

// Largest-remainder apportionment of `total` units over the strata flagged in
// `active`, proportional to `weights`; adds the result onto `m`. Remainder
// ties go to the lower stratum index.
void apportion(const Vector& weights, const std::vector<bool>& active, Index total, std::vector<Index>& m) {
  if (total <= 0) return;
  std::vector<Index> ids;
  double weight_sum = 0.0;
  for (std::size_t h = 0; h < active.size(); ++h) {
    if (active[h]) {
      ids.push_back(static_cast<Index>(h));
      weight_sum += weights[static_cast<Index>(h)];
    }
  }
  if (ids.empty() || !(weight_sum > 0.0)) {
    throw ConfigError("no stratum can absorb the remaining budget");
  }

  std::vector<double> rem(active.size(), 0.0);
  Index assigned = 0;
  for (Index h : ids) {
    const double quota = static_cast<double>(total) * weights[h] / weight_sum;
    const auto floor_part = static_cast<Index>(std::floor(quota + kQuotaTolerance));
    m[static_cast<std::size_t>(h)] += floor_part;
    assigned += floor_part;
    rem[static_cast<std::size_t>(h)] = std::max(0.0, quota - static_cast<double>(floor_part));
  }

  Index leftover = total - assigned;
  if (leftover <= 0) return;

  std::stable_sort(ids.begin(), ids.end(), [&](Index a, Index b) {
    return rem[static_cast<std::size_t>(a)] > rem[static_cast<std::size_t>(b)];
  });
  // Chain near-equal remainders into groups and order each group by index.
  for (std::size_t start = 0; start < ids.size();) {
    std::size_t end = start + 1;
    while (end < ids.size() &&
           rem[static_cast<std::size_t>(ids[end - 1])] - rem[static_cast<std::size_t>(ids[end])] <= kQuotaTolerance) {
      ++end;
    }
    std::sort(ids.begin() + static_cast<std::ptrdiff_t>(start), ids.begin() + static_cast<std::ptrdiff_t>(end));
    start = end;
  }
  for (std::size_t j = 0; leftover > 0; j = (j + 1) % ids.size(), --leftover) {
    ++m[static_cast<std::size_t>(ids[j])];
  }
}

void check_sizes(const std::vector<Index>& sizes) {
  if (sizes.empty()) throw InputError("allocation needs at least one stratum");
  for (Index n : sizes) {
    if (n < 1) throw InputError("stratum sizes must be at least 1");
  }
}

}  // namespace

std::string_view to_string(AllocRule rule) {
  switch (rule) {
    case AllocRule::proxy_neyman: return "proxy_neyman";
    case AllocRule::equal: return "equal";
    case AllocRule::proportional: return "proportional";
    case AllocRule::power: return "power";
    case AllocRule::oracle_neyman: return "oracle_neyman";
  }
  return "unknown";
}

AllocRule parse_alloc_rule(std::string_view tag) {
  for (auto r : {AllocRule::proxy_neyman, AllocRule::equal, AllocRule::proportional, AllocRule::power,
                 AllocRule::oracle_neyman}) {
    if (tag == to_string(r)) return r;
  }
  throw ConfigError("unknown allocation rule '" + std::string(tag) +
                    "' (expected proxy_neyman, equal, proportional, power or oracle_neyman)");
}

StratumWeights proxy_neyman_weights(const std::vector<Index>& sizes, const Vector& p, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ConfigError("proxy-Neyman offset delta must be a finite positive number, got " + std::to_string(delta));
  }
  check_sizes(sizes);
  if (p.size() != static_cast<Index>(sizes.size())) {
    throw InputError("p_h has " + std::to_string(p.size()) + " entries for " + std::to_string(sizes.size()) +
                     " strata");
  }
  StratumWeights w(p.size());
  for (Index h = 0; h < p.size(); ++h) {
    if (!(p[h] >= 0.0 && p[h] <= 1.0)) {
      throw InputError("p_h must lie in [0, 1]");
    }
    const double spread = std::sqrt(std::max(0.0, p[h] * (1.0 - p[h])));
    w[h] = static_cast<double>(sizes[static_cast<std::size_t>(h)]) * (spread + delta);
  }
  return w;
}

StratumWeights oracle_neyman_weights(const Stratification& strata, const Vector& losses) {
  if (losses.size() != strata.pool_size()) {
    throw InputError("loss vector does not cover the stratified pool");
  }
  const Index H = strata.num_strata();
  Vector sum = Vector::Zero(H);
  Vector sum_sq = Vector::Zero(H);
  for (Index i = 0; i < losses.size(); ++i) {
    const Index h = strata.assignment[static_cast<std::size_t>(i)];
    sum[h] += losses[i];
  }
  Vector mean(H);
  for (Index h = 0; h < H; ++h) mean[h] = sum[h] / static_cast<double>(strata.sizes[static_cast<std::size_t>(h)]);
  for (Index i = 0; i < losses.size(); ++i) {
    const Index h = strata.assignment[static_cast<std::size_t>(i)];
    const double d = losses[i] - mean[h];
    sum_sq[h] += d * d;
  }
  StratumWeights w(H);
  for (Index h = 0; h < H; ++h) {
    const double n = static_cast<double>(strata.sizes[static_cast<std::size_t>(h)]);
    w[h] = n * std::sqrt(sum_sq[h] / n);
  }
  return w;
}

StratumWeights baseline_weights(AllocRule rule, const std::vector<Index>& sizes) {
  check_sizes(sizes);
  StratumWeights w(static_cast<Index>(sizes.size()));
  for (std::size_t h = 0; h < sizes.size(); ++h) {
    const double n = static_cast<double>(sizes[h]);
    switch (rule) {
      case AllocRule::equal: w[static_cast<Index>(h)] = 1.0; break;
      case AllocRule::proportional: w[static_cast<Index>(h)] = n; break;
      case AllocRule::power: w[static_cast<Index>(h)] = std::sqrt(n); break;
      default: throw ConfigError("baseline_weights supports equal, proportional and power only");
    }
  }
  return w;
}

AllocationPlan round_allocation(const StratumWeights& weights, Index M, const std::vector<Index>& caps) {
  check_sizes(caps);
  const auto H = static_cast<Index>(caps.size());
  if (weights.size() != H) {
    throw InputError("weights and stratum caps differ in length");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any() || !(weights.sum() > 0.0)) {
    throw InputError("allocation weights must be finite, nonnegative and not all zero");
  }
  const Index N = std::accumulate(caps.begin(), caps.end(), Index{0});
  if (M < H) {
    throw ConfigError("budget M = " + std::to_string(M) + " is below the number of strata H_eff = " +
                      std::to_string(H) + "; every stratum needs at least one label");
  }
  if (M > N) {
    throw ConfigError("budget M = " + std::to_string(M) + " exceeds the pool size N = " + std::to_string(N));
  }

  AllocationPlan plan;
  plan.M = M;
  plan.m.assign(caps.size(), 0);
  apportion(weights, std::vector<bool>(caps.size(), true), M, plan.m);

  // Every stratum gets at least one label, paid for by the largest allocation.
  for (std::size_t h = 0; h < plan.m.size(); ++h) {
    if (plan.m[h] == 0) {
      const auto donor = std::max_element(plan.m.begin(), plan.m.end());
      --*donor;
      plan.m[h] = 1;
    }
  }

  // Clip at the stratum size and hand the excess to the unclipped strata.
  std::vector<bool> open(caps.size(), true);
  for (;;) {
    Index excess = 0;
    for (std::size_t h = 0; h < caps.size(); ++h) {
      if (plan.m[h] > caps[h]) {
        excess += plan.m[h] - caps[h];
        plan.m[h] = caps[h];
        open[h] = false;
      }
    }
    if (excess == 0) break;
    double open_weight = 0.0;
    for (std::size_t h = 0; h < caps.size(); ++h) {
      if (open[h]) open_weight += weights[static_cast<Index>(h)];
    }
    if (open_weight > 0.0) {
      apportion(weights, open, excess, plan.m);
    } else {
      Vector room(H);
      for (std::size_t h = 0; h < caps.size(); ++h) room[static_cast<Index>(h)] = static_cast<double>(caps[h] - plan.m[h]);
      apportion(room, open, excess, plan.m);
    }
  }
  return plan;
}

AllocationPlan allocate(AllocRule rule, const Stratification& strata, Index M, double delta, const Vector* losses) {
  StratumWeights w;
  switch (rule) {
    case AllocRule::proxy_neyman:
      if (strata.mean_sc.size() != strata.num_strata()) {
        throw InputError("proxy-Neyman allocation needs the per-stratum mean self-consistency");
      }
      w = proxy_neyman_weights(strata.sizes, strata.mean_sc, delta);
      break;
    case AllocRule::oracle_neyman:
      if (losses == nullptr) {
        throw ConfigError("oracle-Neyman allocation needs the full loss vector");
      }
      w = oracle_neyman_weights(strata, *losses);
      // Every stratum is constant: any plan has zero variance, fall back to N_h.
      if (!(w.sum() > 0.0)) w = baseline_weights(AllocRule::proportional, strata.sizes);
      break;
    default:
      w = baseline_weights(rule, strata.sizes);
      break;
  }
  auto plan = round_allocation(w, M, strata.sizes);
  plan.rule = rule;
  plan.delta = rule == AllocRule::proxy_neyman ? delta : 0.0;
  return plan;
}

}  // namespace activetest
