#include "activetest/synth.hpp"

#include "activetest/error.hpp"
#include "activetest/estimate.hpp"

#include <cstdio>
#include <random>
#include <string>

namespace activetest {

namespace {

std::string option_label(int j) {
  if (j < 26) return std::string(1, static_cast<char>('A' + j));
  return "opt" + std::to_string(j);
}

std::string instance_id(Index i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "syn-%06lld", static_cast<long long>(i));
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (N < 1) throw InputError("synthetic pool needs N >= 1");
  if (k < 2) throw InputError("synthetic pool needs k >= 2");
  if (options < 2) throw InputError("synthetic pool needs at least two answer options");
  if (!(difficulty_alpha > 0.0) || !(difficulty_beta > 0.0)) {
    throw InputError("difficulty shape parameters must be positive");
  }
  if (!(target_link >= 0.0 && target_link <= 1.0)) throw InputError("target_link must lie in [0, 1]");
  if (!(zero_se_boost >= 0.0 && zero_se_boost <= 1.0)) throw InputError("zero_se_boost must lie in [0, 1]");
}

SyntheticPool make_pool(const SynthConfig& config) {
  config.validate();
  std::vector<PoolInstance> instances(static_cast<std::size_t>(config.N));
  Vector losses(config.N);
  Vector difficulty(config.N);

  std::gamma_distribution<double> shape_a(config.difficulty_alpha, 1.0);
  std::gamma_distribution<double> shape_b(config.difficulty_beta, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> any_option(0, config.options - 1);
  std::uniform_int_distribution<int> any_distractor(0, config.options - 2);

  for (Index i = 0; i < config.N; ++i) {
    auto rng = make_stream(config.seed, static_cast<std::uint64_t>(i), 0);
    double d = 0.0;
    if (unit(rng) >= config.zero_se_boost) {
      const double x = shape_a(rng);
      const double y = shape_b(rng);
      d = x / (x + y);
    }
    const int correct = any_option(rng);
    auto& inst = instances[static_cast<std::size_t>(i)];
    inst.id = instance_id(i);
    inst.surrogate_answers.reserve(static_cast<std::size_t>(config.k));
    for (int j = 0; j < config.k; ++j) {
      int choice = correct;
      if (unit(rng) < d) {
        choice = any_distractor(rng);
        if (choice >= correct) ++choice;
      }
      inst.surrogate_answers.push_back(option_label(choice));
    }
    difficulty[i] = d;
    losses[i] = unit(rng) < config.target_link * d ? 1.0 : 0.0;
  }
  return {LabeledPool{Pool(std::move(instances)), std::move(losses)}, std::move(difficulty)};
}

SynthConfig reference_config() { return SynthConfig{}; }

LabeledPool reference_pool() { return make_pool(reference_config()).data; }

}  // namespace activetest
