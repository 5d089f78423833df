#pragma once

#include "activetest/pool.hpp"

#include <string_view>
#include <vector>

namespace activetest {

enum class StratifyMethod { adaptive_se, equal_width, quantile, kmeans };

std::string_view to_string(StratifyMethod method);
/// Accepts the tags adaptive_se, equal_width, quantile, kmeans. Throws ConfigError.
StratifyMethod parse_stratify_method(std::string_view tag);

inline constexpr int kDefaultStrata = 5;

/// Partition of the pool into H_eff non-empty, SE-ordered strata.
struct Stratification {
  std::vector<Index> assignment;  // stratum of each instance, pool order
  std::vector<Index> sizes;       // N_h
  StratifyMethod method = StratifyMethod::adaptive_se;
  int requested_strata = 0;       // H as configured
  Vector mean_sc;                 // p_h, empty until attached

  Index num_strata() const { return static_cast<Index>(sizes.size()); }
  Index pool_size() const { return static_cast<Index>(assignment.size()); }
  /// Instance indices of every stratum, each list in pool order.
  std::vector<std::vector<Index>> members() const;
};

/// Base stratum {SE == 0} plus equal-frequency bins over the positive values.
/// When no instance has SE == 0 all H bins go to the positive values.
Stratification adaptive_se_stratify(const Vector& se, int H);
/// Equal-frequency bins over all values by sorted rank.
Stratification quantile_stratify(const Vector& se, int H);
/// H equal-width intervals over [min, max]; empty intervals are dropped.
Stratification equal_width_stratify(const Vector& se, int H);
/// Deterministic 1-D Lloyd clustering, clusters ordered by centroid.
Stratification kmeans_stratify(const Vector& se, int H);

Stratification stratify(StratifyMethod method, const Vector& se, int H);

/// p_h: mean self-consistency of each stratum.
Vector stratum_mean_sc(const Stratification& strata, const Vector& sc);

/// Convenience: stratify the pool's SE values and attach p_h.
Stratification stratify_pool(const Pool& pool, StratifyMethod method, int H);

}  // namespace activetest
