#include "activetest/pool.hpp"

#include "activetest/error.hpp"
#include "activetest/signals.hpp"

#include <cmath>
#include <string>

namespace activetest {

Pool::Pool(std::vector<PoolInstance> instances) : instances_(std::move(instances)) {
  if (instances_.empty()) {
    throw InputError("pool must contain at least one instance");
  }
  k_ = static_cast<int>(instances_.front().surrogate_answers.size());
  if (k_ < 2) {
    throw InputError("instance '" + instances_.front().id + "' has " + std::to_string(k_) +
                     " surrogate answers; need k >= 2");
  }
  by_id_.reserve(instances_.size());
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    auto& inst = instances_[i];
    if (static_cast<int>(inst.surrogate_answers.size()) != k_) {
      throw InputError("instance '" + inst.id + "' has " + std::to_string(inst.surrogate_answers.size()) +
                       " surrogate answers, pool k = " + std::to_string(k_));
    }
    if (!by_id_.emplace(inst.id, static_cast<Index>(i)).second) {
      throw InputError("duplicate instance id '" + inst.id + "'");
    }
    const auto hist = AnswerHistogram::from_answers(inst.surrogate_answers);
    inst.se = semantic_entropy(hist);
    inst.sc = self_consistency(hist);
  }
}

std::optional<Index> Pool::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Index Pool::index_of(std::string_view id) const {
  if (auto i = find(id)) return *i;
  throw InputError("unknown instance id '" + std::string(id) + "'");
}

Vector Pool::se_values() const {
  Vector out(size());
  for (Index i = 0; i < size(); ++i) out[i] = (*this)[i].se;
  return out;
}

Vector Pool::sc_values() const {
  Vector out(size());
  for (Index i = 0; i < size(); ++i) out[i] = (*this)[i].sc;
  return out;
}

void LabeledPool::validate() const {
  if (losses.size() != pool.size()) {
    throw InputError("loss vector has " + std::to_string(losses.size()) + " entries, pool has " +
                     std::to_string(pool.size()));
  }
  if (!losses.allFinite()) {
    throw InputError("loss vector contains non-finite values");
  }
}

double finite_pool_risk(const Vector& losses) {
  if (losses.size() == 0) {
    throw InputError("finite_pool_risk of an empty loss vector");
  }
  if (!losses.allFinite()) {
    throw InputError("loss vector contains non-finite values");
  }
  return losses.mean();
}

double finite_pool_risk(const Pool& pool, const Vector& losses) {
  if (losses.size() != pool.size()) {
    throw InputError("loss vector has " + std::to_string(losses.size()) + " entries, pool has " +
                     std::to_string(pool.size()));
  }
  return finite_pool_risk(losses);
}

LabelOracle::LabelOracle(const Pool& pool, const Vector& losses)
    : pool_(&pool), losses_(&losses), revealed_(static_cast<std::size_t>(pool.size()), false) {
  if (losses.size() != pool.size()) {
    throw InputError("oracle loss vector does not match the pool size");
  }
}

double LabelOracle::reveal(Index i) {
  if (i < 0 || i >= pool_->size()) {
    throw InputError("instance index " + std::to_string(i) + " out of range");
  }
  const auto slot = static_cast<std::size_t>(i);
  if (!revealed_[slot]) {
    revealed_[slot] = true;
    ++used_;
  }
  return (*losses_)[i];
}

double LabelOracle::reveal(std::string_view id) { return reveal(pool_->index_of(id)); }

}  // namespace activetest
