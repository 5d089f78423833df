#include "activetest/stratify.hpp"

#include "activetest/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace activetest {

namespace {

void check_inputs(const Vector& se, int H) {
  if (H < 2) {
    throw ConfigError("number of strata H must be at least 2, got " + std::to_string(H));
  }
  if (se.size() < 1) {
    throw InputError("cannot stratify an empty pool");
  }
  for (Index i = 0; i < se.size(); ++i) {
    if (!std::isfinite(se[i]) || se[i] < 0.0) {
      throw InputError("SE value at index " + std::to_string(i) + " is not a finite nonnegative number");
    }
  }
}

// Turns arbitrary nonnegative bin labels into a Stratification: empty bins are
// dropped and the remaining ones renumbered in label order.
Stratification from_labels(const std::vector<Index>& labels, StratifyMethod method, int H) {
  const Index max_label = *std::max_element(labels.begin(), labels.end());
  std::vector<Index> counts(static_cast<std::size_t>(max_label + 1), 0);
  for (Index b : labels) ++counts[static_cast<std::size_t>(b)];

  std::vector<Index> remap(counts.size(), -1);
  Stratification out;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] > 0) {
      remap[b] = static_cast<Index>(out.sizes.size());
      out.sizes.push_back(counts[b]);
    }
  }
  out.assignment.reserve(labels.size());
  for (Index b : labels) out.assignment.push_back(remap[static_cast<std::size_t>(b)]);
  out.method = method;
  out.requested_strata = H;
  return out;
}

// Equal-frequency binning of se[subset] into `bins` bins: sorted rank r goes to
// the bin b with floor(b n / B) <= r < floor((b + 1) n / B). A run of equal
// values straddling an edge is kept whole in the lower bin.
void rank_bins(const Vector& se, std::vector<Index> subset, Index bins, Index offset, std::vector<Index>& labels) {
  const auto n = static_cast<Index>(subset.size());
  if (n == 0) return;
  std::stable_sort(subset.begin(), subset.end(), [&](Index a, Index b) { return se[a] < se[b]; });
  Index b = 0;
  Index run_bin = 0;
  for (Index r = 0; r < n; ++r) {
    while ((b + 1) * n / bins <= r) ++b;
    const Index i = subset[static_cast<std::size_t>(r)];
    const bool continues_run = r > 0 && se[subset[static_cast<std::size_t>(r - 1)]] == se[i];
    if (!continues_run) run_bin = b;
    labels[static_cast<std::size_t>(i)] = offset + run_bin;
  }
}

}  // namespace

std::string_view to_string(StratifyMethod method) {
  switch (method) {
    case StratifyMethod::adaptive_se: return "adaptive_se";
    case StratifyMethod::equal_width: return "equal_width";
    case StratifyMethod::quantile: return "quantile";
    case StratifyMethod::kmeans: return "kmeans";
  }
  return "unknown";
}

StratifyMethod parse_stratify_method(std::string_view tag) {
  for (auto m : {StratifyMethod::adaptive_se, StratifyMethod::equal_width, StratifyMethod::quantile,
                 StratifyMethod::kmeans}) {
    if (tag == to_string(m)) return m;
  }
  throw ConfigError("unknown stratification method '" + std::string(tag) +
                    "' (expected adaptive_se, equal_width, quantile or kmeans)");
}

std::vector<std::vector<Index>> Stratification::members() const {
  std::vector<std::vector<Index>> out(sizes.size());
  for (std::size_t h = 0; h < sizes.size(); ++h) out[h].reserve(static_cast<std::size_t>(sizes[h]));
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    out[static_cast<std::size_t>(assignment[i])].push_back(static_cast<Index>(i));
  }
  return out;
}

Stratification adaptive_se_stratify(const Vector& se, int H) {
  check_inputs(se, H);
  std::vector<Index> labels(static_cast<std::size_t>(se.size()), 0);
  std::vector<Index> positive;
  for (Index i = 0; i < se.size(); ++i) {
    if (se[i] > 0.0) positive.push_back(i);
  }
  const bool has_base = static_cast<Index>(positive.size()) < se.size();
  if (has_base) {
    rank_bins(se, std::move(positive), H - 1, 1, labels);
  } else {
    rank_bins(se, std::move(positive), H, 0, labels);
  }
  return from_labels(labels, StratifyMethod::adaptive_se, H);
}

Stratification quantile_stratify(const Vector& se, int H) {
  check_inputs(se, H);
  std::vector<Index> labels(static_cast<std::size_t>(se.size()), 0);
  std::vector<Index> all(static_cast<std::size_t>(se.size()));
  std::iota(all.begin(), all.end(), Index{0});
  rank_bins(se, std::move(all), H, 0, labels);
  return from_labels(labels, StratifyMethod::quantile, H);
}

Stratification equal_width_stratify(const Vector& se, int H) {
  check_inputs(se, H);
  const double lo = se.minCoeff();
  const double hi = se.maxCoeff();
  std::vector<Index> labels(static_cast<std::size_t>(se.size()), 0);
  if (hi > lo) {
    const double width = (hi - lo) / H;
    for (Index i = 0; i < se.size(); ++i) {
      const auto b = static_cast<Index>(std::floor((se[i] - lo) / width));
      labels[static_cast<std::size_t>(i)] = std::clamp<Index>(b, 0, H - 1);
    }
  }
  return from_labels(labels, StratifyMethod::equal_width, H);
}

Stratification kmeans_stratify(const Vector& se, int H) {
  check_inputs(se, H);
  std::vector<double> distinct(se.data(), se.data() + se.size());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const auto n_distinct = static_cast<Index>(distinct.size());
  const Index clusters = std::min<Index>(H, n_distinct);
  if (clusters == 1) {
    return from_labels(std::vector<Index>(static_cast<std::size_t>(se.size()), 0), StratifyMethod::kmeans, H);
  }

  // Centroids start at equally spaced quantiles of the distinct values,
  // including the minimum and maximum; they are distinct by construction.
  std::vector<double> centroids(static_cast<std::size_t>(clusters));
  for (Index j = 0; j < clusters; ++j) {
    const double pos = static_cast<double>(j) * static_cast<double>(n_distinct - 1) / static_cast<double>(clusters - 1);
    centroids[static_cast<std::size_t>(j)] = distinct[static_cast<std::size_t>(std::llround(pos))];
  }

  auto nearest = [&](double v) {
    Index best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < clusters; ++j) {
      const double c = centroids[static_cast<std::size_t>(j)];
      const double d = std::abs(v - c);
      // Equidistant: prefer the lower centroid.
      if (d < best_dist || (d == best_dist && c < centroids[static_cast<std::size_t>(best)])) {
        best = j;
        best_dist = d;
      }
    }
    return best;
  };

  std::vector<Index> labels(static_cast<std::size_t>(se.size()), -1);
  constexpr int kMaxIterations = 100;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    bool changed = false;
    for (Index i = 0; i < se.size(); ++i) {
      const Index j = nearest(se[i]);
      if (labels[static_cast<std::size_t>(i)] != j) {
        labels[static_cast<std::size_t>(i)] = j;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> sum(static_cast<std::size_t>(clusters), 0.0);
    std::vector<Index> count(static_cast<std::size_t>(clusters), 0);
    for (Index i = 0; i < se.size(); ++i) {
      const auto j = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
      sum[j] += se[i];
      ++count[j];
    }
    for (std::size_t j = 0; j < sum.size(); ++j) {
      if (count[j] > 0) centroids[j] = sum[j] / static_cast<double>(count[j]);
    }
  }

  // Relabel clusters in centroid order.
  std::vector<Index> order(static_cast<std::size_t>(clusters));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return centroids[static_cast<std::size_t>(a)] < centroids[static_cast<std::size_t>(b)];
  });
  std::vector<Index> rank(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[static_cast<std::size_t>(order[r])] = static_cast<Index>(r);
  for (auto& l : labels) l = rank[static_cast<std::size_t>(l)];
  return from_labels(labels, StratifyMethod::kmeans, H);
}

Stratification stratify(StratifyMethod method, const Vector& se, int H) {
  switch (method) {
    case StratifyMethod::adaptive_se: return adaptive_se_stratify(se, H);
    case StratifyMethod::equal_width: return equal_width_stratify(se, H);
    case StratifyMethod::quantile: return quantile_stratify(se, H);
    case StratifyMethod::kmeans: return kmeans_stratify(se, H);
  }
  throw ConfigError("unknown stratification method");
}

Vector stratum_mean_sc(const Stratification& strata, const Vector& sc) {
  if (sc.size() != strata.pool_size()) {
    throw InputError("SC vector has " + std::to_string(sc.size()) + " entries, stratification covers " +
                     std::to_string(strata.pool_size()));
  }
  Vector sum = Vector::Zero(strata.num_strata());
  for (Index i = 0; i < sc.size(); ++i) sum[strata.assignment[static_cast<std::size_t>(i)]] += sc[i];
  for (Index h = 0; h < strata.num_strata(); ++h) sum[h] /= static_cast<double>(strata.sizes[static_cast<std::size_t>(h)]);
  return sum;
}

Stratification stratify_pool(const Pool& pool, StratifyMethod method, int H) {
  auto strata = stratify(method, pool.se_values(), H);
  strata.mean_sc = stratum_mean_sc(strata, pool.sc_values());
  return strata;
}

}  // namespace activetest
