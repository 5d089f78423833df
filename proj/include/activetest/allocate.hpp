#pragma once

#include "activetest/stratify.hpp"

#include <string_view>
#include <vector>

namespace activetest {

enum class AllocRule { proxy_neyman, equal, proportional, power, oracle_neyman };

std::string_view to_string(AllocRule rule);
/// Throws ConfigError on an unknown tag.
AllocRule parse_alloc_rule(std::string_view tag);

inline constexpr double kDefaultDelta = 0.75;

/// Pre-rounding allocation weights, one per stratum.
using StratumWeights = Vector;

/// Integer label counts per stratum with sum(m) == M and 1 <= m_h <= N_h.
struct AllocationPlan {
  std::vector<Index> m;
  Index M = 0;
  AllocRule rule = AllocRule::proxy_neyman;
  double delta = 0.0;  // only meaningful for proxy_neyman
};

/// w_h = N_h * (sqrt(p_h (1 - p_h)) + delta).
StratumWeights proxy_neyman_weights(const std::vector<Index>& sizes, const Vector& p, double delta);

/// w_h = N_h * sigma_h with sigma_h the population standard deviation of the
/// losses in stratum h. Needs the full loss vector, so harness use only.
StratumWeights oracle_neyman_weights(const Stratification& strata, const Vector& losses);

/// equal: 1, proportional: N_h, power: sqrt(N_h).
StratumWeights baseline_weights(AllocRule rule, const std::vector<Index>& sizes);

/// Integerizes weights into a plan: largest-remainder apportionment of M,
/// then the m_h >= 1 repair, then the m_h <= N_h clip-and-redistribute step.
/// Throws ConfigError if M < H or M > sum(caps).
AllocationPlan round_allocation(const StratumWeights& weights, Index M, const std::vector<Index>& caps);

/// Weights for the rule followed by round_allocation. proxy_neyman needs
/// strata.mean_sc; oracle_neyman needs losses.
AllocationPlan allocate(AllocRule rule, const Stratification& strata, Index M,
                        double delta = kDefaultDelta, const Vector* losses = nullptr);

}  // namespace activetest
