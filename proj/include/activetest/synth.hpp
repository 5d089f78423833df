#pragma once

#include "activetest/pool.hpp"

#include <cstdint>

namespace activetest {

struct SynthConfig {
  Index N = 3000;
  int k = 10;
  int options = 4;  // C, answer-option count
  double difficulty_alpha = 1.0;
  double difficulty_beta = 3.0;
  double target_link = 0.9;     // lambda: target error probability is lambda * d
  double zero_se_boost = 0.5;   // probability that d is forced to 0
  std::uint64_t seed = 20240601;

  /// Throws InputError on N < 1, k < 2, C < 2 or a probability outside [0, 1].
  void validate() const;
};

struct SyntheticPool {
  LabeledPool data;
  Vector difficulty;  // d_i
};

/// Per instance: d = 0 with probability zero_se_boost, else Beta(alpha, beta);
/// each surrogate answer is correct with probability 1 - d, else a uniform
/// distractor; target loss ~ Bernoulli(lambda * d). Deterministic in seed.
SyntheticPool make_pool(const SynthConfig& config);

/// The fixed fixture used by the acceptance suite.
SynthConfig reference_config();
LabeledPool reference_pool();

}  // namespace activetest
