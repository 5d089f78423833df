#pragma once

#include "activetest/allocate.hpp"
#include "activetest/estimate.hpp"
#include "activetest/stratify.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace activetest {

inline constexpr Index kDefaultTrials = 3000;

/// Either the flat uniform baseline or a stratification + allocation pair.
struct MethodSpec {
  bool uniform = true;
  StratifyMethod stratify_method = StratifyMethod::adaptive_se;
  int strata = kDefaultStrata;
  AllocRule rule = AllocRule::proxy_neyman;
  double delta = kDefaultDelta;

  static MethodSpec flat_uniform() { return {}; }
  static MethodSpec stratified(StratifyMethod method, int H, AllocRule rule, double delta = kDefaultDelta) {
    return {false, method, H, rule, delta};
  }

  /// "uniform", or e.g. "adaptive_se/proxy_neyman/H=5/delta=0.75".
  std::string label() const;
};

struct RunOptions {
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 1;
};

/// Stratification and allocation for one (method, M); both are deterministic
/// so they are computed once per cell. Throws ConfigError when M is
/// infeasible for the method.
struct PreparedMethod {
  MethodSpec spec;
  std::optional<Stratification> strata;
  std::optional<AllocationPlan> plan;
};
PreparedMethod prepare_method(const LabeledPool& data, const MethodSpec& spec, Index M);

/// T independent trials; trial t draws from streams (master_seed, t, .).
/// Results do not depend on opts.threads.
std::vector<RiskEstimate> run_trials(const LabeledPool& data, const MethodSpec& spec, Index M, Index T,
                                     std::uint64_t master_seed, const RunOptions& opts = {});
std::vector<RiskEstimate> run_trials(const LabeledPool& data, const PreparedMethod& method, Index M, Index T,
                                     std::uint64_t master_seed, const RunOptions& opts = {});

Vector estimate_values(const std::vector<RiskEstimate>& estimates);

/// (1/T) sum_t (R_t - R_D)^2. Throws InputError on an empty set.
double mse(const Vector& estimates, double risk);
/// MSE(method) / MSE(uniform); nullopt when the uniform MSE is zero (census).
std::optional<double> relative_mse(const Vector& method_estimates, const Vector& uniform_estimates, double risk);
/// Sample standard deviation over sqrt(T). Throws InputError when T < 2.
double sem(const Vector& estimates);

struct CurvePoint {
  double budget = 0.0;
  double mse = 0.0;
};

struct SavingsRecord {
  double uniform_reference_budget = 0.0;
  double target_mse = 0.0;
  std::optional<double> matched_budget;    // nullopt: unresolved on the grid
  std::optional<double> savings_fraction;  // 1 - matched / reference
};

/// Smallest budget at which the piecewise-linear method curve reaches the
/// uniform MSE at reference_budget. No extrapolation beyond the grid.
SavingsRecord budget_savings(std::span<const CurvePoint> uniform_curve, std::span<const CurvePoint> method_curve,
                             double reference_budget);

struct CellResult {
  MethodSpec spec;
  Index budget = 0;
  Index strata_effective = 0;  // H_eff, 1 for the uniform baseline
  std::vector<Index> strata_sizes;
  std::vector<Index> allocation;
  double mean_estimate = 0.0;
  double mse = 0.0;
  std::optional<double> relative_mse;
  double sem = 0.0;
  bool skipped = false;
  std::string skip_reason;
};

struct ExperimentReport {
  Index pool_size = 0;
  double risk = 0.0;  // R_D
  Index trials = 0;
  std::uint64_t master_seed = 0;
  bool shared_seeds = true;
  std::vector<Index> budgets;
  std::vector<CellResult> cells;

  const CellResult* find(const std::string& method_label, Index budget) const;
};

/// Every (method, M) cell plus the uniform baseline, which is always present
/// and is the relative-MSE denominator. Infeasible cells are kept, flagged
/// as skipped.
ExperimentReport sweep(const LabeledPool& data, const std::vector<MethodSpec>& methods,
                       const std::vector<Index>& budgets, Index T, std::uint64_t master_seed,
                       const RunOptions& opts = {});

}  // namespace activetest
