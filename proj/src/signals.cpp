#include "activetest/signals.hpp"

#include "activetest/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace activetest {

AnswerHistogram AnswerHistogram::from_answers(std::span<const std::string> answers) {
  if (answers.empty()) {
    throw InputError("answer list is empty");
  }
  AnswerHistogram hist;
  for (const auto& a : answers) {
    if (a.empty()) {
      throw InputError("empty answer label; unparsed generations must use the reserved label");
    }
    ++hist.counts[a];
  }
  hist.k = static_cast<int>(answers.size());
  return hist;
}

double semantic_entropy(const AnswerHistogram& hist) {
  if (hist.k <= 0 || hist.counts.empty()) {
    throw InputError("semantic entropy of an empty histogram");
  }
  if (hist.counts.size() == 1) return 0.0;
  // Sum in sorted-count order so the result is independent of label names.
  std::vector<int> counts;
  counts.reserve(hist.counts.size());
  for (const auto& [label, n] : hist.counts) counts.push_back(n);
  std::sort(counts.begin(), counts.end());
  const double k = hist.k;
  double h = 0.0;
  for (int n : counts) {
    const double p = n / k;
    h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double semantic_entropy(std::span<const std::string> answers) {
  return semantic_entropy(AnswerHistogram::from_answers(answers));
}

double self_consistency(const AnswerHistogram& hist) {
  if (hist.k <= 0 || hist.counts.empty()) {
    throw InputError("self-consistency of an empty histogram");
  }
  int top = 0;
  for (const auto& [label, n] : hist.counts) top = std::max(top, n);
  return static_cast<double>(top) / hist.k;
}

double self_consistency(std::span<const std::string> answers) {
  return self_consistency(AnswerHistogram::from_answers(answers));
}

}  // namespace activetest
