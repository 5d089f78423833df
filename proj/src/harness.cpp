#include "activetest/harness.hpp"

#include "activetest/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace activetest {

std::string MethodSpec::label() const {
  if (uniform) return "uniform";
  std::ostringstream os;
  os << to_string(stratify_method) << '/' << to_string(rule) << "/H=" << strata;
  if (rule == AllocRule::proxy_neyman) os << "/delta=" << delta;
  return os.str();
}

PreparedMethod prepare_method(const LabeledPool& data, const MethodSpec& spec, Index M) {
  data.validate();
  PreparedMethod out;
  out.spec = spec;
  if (spec.uniform) {
    if (M < 1 || M > data.pool.size()) {
      throw ConfigError("budget M = " + std::to_string(M) + " outside [1, N = " + std::to_string(data.pool.size()) +
                        "]");
    }
    return out;
  }
  out.strata = stratify_pool(data.pool, spec.stratify_method, spec.strata);
  out.plan = allocate(spec.rule, *out.strata, M, spec.delta, &data.losses);
  return out;
}

std::vector<RiskEstimate> run_trials(const LabeledPool& data, const MethodSpec& spec, Index M, Index T,
                                     std::uint64_t master_seed, const RunOptions& opts) {
  return run_trials(data, prepare_method(data, spec, M), M, T, master_seed, opts);
}

std::vector<RiskEstimate> run_trials(const LabeledPool& data, const PreparedMethod& method, Index M, Index T,
                                     std::uint64_t master_seed, const RunOptions& opts) {
  if (T < 1) throw ConfigError("number of trials must be at least 1");
  if (!method.spec.uniform && method.plan->M != M) {
    throw ConfigError("prepared plan was built for a different budget");
  }
  const Pool& pool = data.pool;
  std::vector<RiskEstimate> results(static_cast<std::size_t>(T));

  std::vector<std::vector<Index>> members;
  if (method.spec.uniform) {
    members.emplace_back(static_cast<std::size_t>(pool.size()));
    std::iota(members.front().begin(), members.front().end(), Index{0});
  } else {
    members = method.strata->members();
  }

  auto worker = [&](Index first, Index stride) {
    // Each worker shuffles its own copy; sample_in_place restores the order.
    auto scratch = members;
    std::vector<Index> picked;
    for (Index t = first; t < T; t += stride) {
      LabelOracle oracle(pool, data.losses);
      const auto trial = static_cast<std::uint64_t>(t);
      if (method.spec.uniform) {
        auto rng = make_stream(master_seed, trial, kUniformStream);
        picked.clear();
        sample_in_place(std::span<Index>(scratch.front()), M, rng, picked);
        double sum = 0.0;
        for (Index i : picked) sum += oracle.reveal(i);
        results[static_cast<std::size_t>(t)] = {sum / static_cast<double>(M), oracle.labels_used()};
      } else {
        SampleDraw draw;
        draw.master_seed = master_seed;
        draw.trial = trial;
        draw.strata.resize(scratch.size());
        for (std::size_t h = 0; h < scratch.size(); ++h) {
          auto rng = make_stream(master_seed, trial, h);
          sample_in_place(std::span<Index>(scratch[h]), method.plan->m[h], rng, draw.strata[h]);
        }
        results[static_cast<std::size_t>(t)] = ht_estimate(draw, *method.plan, method.strata->sizes, oracle);
      }
    }
  };

  unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opts.threads;
  threads = static_cast<unsigned>(std::min<Index>(threads, T));
  if (threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::jthread> pool_threads;
    for (unsigned w = 0; w < threads; ++w) pool_threads.emplace_back(worker, Index{w}, Index{threads});
  }
  return results;
}

Vector estimate_values(const std::vector<RiskEstimate>& estimates) {
  Vector out(static_cast<Index>(estimates.size()));
  for (std::size_t t = 0; t < estimates.size(); ++t) out[static_cast<Index>(t)] = estimates[t].value;
  return out;
}

double mse(const Vector& estimates, double risk) {
  if (estimates.size() == 0) throw InputError("MSE of an empty estimate set");
  return (estimates.array() - risk).square().mean();
}

std::optional<double> relative_mse(const Vector& method_estimates, const Vector& uniform_estimates, double risk) {
  const double denom = mse(uniform_estimates, risk);
  if (!(denom > 0.0)) return std::nullopt;
  return mse(method_estimates, risk) / denom;
}

double sem(const Vector& estimates) {
  const Index T = estimates.size();
  if (T < 2) throw InputError("standard error needs at least two estimates");
  const double mean = estimates.mean();
  const double var = (estimates.array() - mean).square().sum() / static_cast<double>(T - 1);
  return std::sqrt(var / static_cast<double>(T));
}

namespace {

std::vector<CurvePoint> sorted_curve(std::span<const CurvePoint> curve) {
  std::vector<CurvePoint> out(curve.begin(), curve.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.budget < b.budget; });
  return out;
}

std::optional<double> interpolate(const std::vector<CurvePoint>& curve, double budget) {
  if (curve.empty() || budget < curve.front().budget || budget > curve.back().budget) return std::nullopt;
  for (std::size_t j = 0; j < curve.size(); ++j) {
    if (curve[j].budget == budget) return curve[j].mse;
    if (curve[j].budget > budget) {
      const auto& a = curve[j - 1];
      const auto& b = curve[j];
      return a.mse + (b.mse - a.mse) * (budget - a.budget) / (b.budget - a.budget);
    }
  }
  return std::nullopt;
}

}  // namespace

SavingsRecord budget_savings(std::span<const CurvePoint> uniform_curve, std::span<const CurvePoint> method_curve,
                             double reference_budget) {
  const auto uniform = sorted_curve(uniform_curve);
  const auto method = sorted_curve(method_curve);
  const auto target = interpolate(uniform, reference_budget);
  if (!target) {
    throw InputError("reference budget " + std::to_string(reference_budget) + " is not covered by the uniform curve");
  }
  SavingsRecord rec;
  rec.uniform_reference_budget = reference_budget;
  rec.target_mse = *target;
  for (std::size_t j = 0; j < method.size(); ++j) {
    if (method[j].mse > *target) continue;
    double matched = method[j].budget;
    if (j > 0) {
      const auto& a = method[j - 1];
      const auto& b = method[j];
      matched = a.budget + (a.mse - *target) * (b.budget - a.budget) / (a.mse - b.mse);
    }
    rec.matched_budget = matched;
    rec.savings_fraction = 1.0 - matched / reference_budget;
    break;
  }
  return rec;
}

const CellResult* ExperimentReport::find(const std::string& method_label, Index budget) const {
  for (const auto& c : cells) {
    if (c.budget == budget && c.spec.label() == method_label) return &c;
  }
  return nullptr;
}

ExperimentReport sweep(const LabeledPool& data, const std::vector<MethodSpec>& methods,
                       const std::vector<Index>& budgets, Index T, std::uint64_t master_seed, const RunOptions& opts) {
  data.validate();
  if (T < 1) throw ConfigError("number of trials must be at least 1");
  if (budgets.empty()) throw ConfigError("sweep needs at least one budget");
  ExperimentReport report;
  report.pool_size = data.pool.size();
  report.risk = finite_pool_risk(data.losses);
  report.trials = T;
  report.master_seed = master_seed;
  report.budgets = budgets;

  std::vector<MethodSpec> all{MethodSpec::flat_uniform()};
  for (const auto& m : methods) {
    if (!m.uniform) all.push_back(m);
  }

  std::vector<std::optional<Vector>> uniform_estimates(budgets.size());
  for (const auto& spec : all) {
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      const Index M = budgets[b];
      CellResult cell;
      cell.spec = spec;
      cell.budget = M;
      try {
        const auto prepared = prepare_method(data, spec, M);
        if (prepared.strata) {
          cell.strata_effective = prepared.strata->num_strata();
          cell.strata_sizes = prepared.strata->sizes;
          cell.allocation = prepared.plan->m;
        } else {
          cell.strata_effective = 1;
          cell.strata_sizes = {data.pool.size()};
          cell.allocation = {M};
        }
        const auto est = estimate_values(run_trials(data, prepared, M, T, master_seed, opts));
        cell.mean_estimate = est.mean();
        cell.mse = mse(est, report.risk);
        cell.sem = T >= 2 ? sem(est) : 0.0;
        if (spec.uniform) uniform_estimates[b] = est;
        if (uniform_estimates[b]) cell.relative_mse = relative_mse(est, *uniform_estimates[b], report.risk);
      } catch (const ConfigError& e) {
        cell.skipped = true;
        cell.skip_reason = e.what();
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace activetest
