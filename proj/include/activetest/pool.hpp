#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace activetest {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;

/// Reserved canonical label for generations the parser could not map.
inline constexpr std::string_view kUnparsedLabel = "<unparsed>";

/// One evaluation input with its k parsed surrogate answers and the cached
/// uncertainty signals derived from them.
struct PoolInstance {
  std::string id;
  std::vector<std::string> surrogate_answers;
  double se = 0.0;  // semantic entropy, nats
  double sc = 1.0;  // self-consistency
};

/// Immutable evaluation pool. Instance order is ingestion order and is the
/// tie-breaking order for everything downstream.
class Pool {
 public:
  /// Validates the instances (N >= 1, unique ids, uniform k >= 2) and fills
  /// in se/sc from the surrogate answers. Throws InputError.
  explicit Pool(std::vector<PoolInstance> instances);

  Index size() const { return static_cast<Index>(instances_.size()); }
  int k() const { return k_; }

  const PoolInstance& operator[](Index i) const { return instances_[static_cast<std::size_t>(i)]; }
  const std::vector<PoolInstance>& instances() const { return instances_; }

  std::optional<Index> find(std::string_view id) const;
  /// Throws InputError for an unknown id.
  Index index_of(std::string_view id) const;

  Vector se_values() const;
  Vector sc_values() const;

 private:
  std::vector<PoolInstance> instances_;
  std::unordered_map<std::string, Index> by_id_;
  int k_ = 0;
};

/// A pool together with its full (normally hidden) target loss vector.
struct LabeledPool {
  Pool pool;
  Vector losses;

  /// Throws InputError unless losses has one finite entry per instance.
  void validate() const;
};

/// R_D: the mean loss over every instance of the pool.
double finite_pool_risk(const Vector& losses);
/// Same, with the loss vector checked against the pool size.
double finite_pool_risk(const Pool& pool, const Vector& losses);

/// Reveals target losses on request and counts distinct instances revealed.
/// Holds references to the pool and loss vector; one oracle per trial.
class LabelOracle {
 public:
  LabelOracle(const Pool& pool, const Vector& losses);

  double reveal(Index i);
  double reveal(std::string_view id);

  Index labels_used() const { return used_; }
  bool revealed(Index i) const { return revealed_.at(static_cast<std::size_t>(i)); }

 private:
  const Pool* pool_;
  const Vector* losses_;
  std::vector<bool> revealed_;
  Index used_ = 0;
};

}  // namespace activetest
