#pragma once

#include <map>
#include <span>
#include <string>

namespace activetest {

/// Class masses of k parsed generations: distinct canonical answers and their
/// occurrence counts.
struct AnswerHistogram {
  std::map<std::string, int> counts;
  int k = 0;

  /// Throws InputError on an empty list or an empty label.
  static AnswerHistogram from_answers(std::span<const std::string> answers);
};

/// Shannon entropy (nats) over parsed-answer frequencies. Exactly 0 when all
/// answers agree.
double semantic_entropy(const AnswerHistogram& hist);
double semantic_entropy(std::span<const std::string> answers);

/// Fraction of generations agreeing with the modal answer, in [1/k, 1].
double self_consistency(const AnswerHistogram& hist);
double self_consistency(std::span<const std::string> answers);

}  // namespace activetest
