#pragma once

#include "activetest/pool.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace activetest {

enum class ParserKind { exact_match, mc_letter };

struct ParserSpec {
  ParserKind kind = ParserKind::exact_match;
  bool case_fold = true;
  bool collapse_whitespace = true;
};

/// Throws ConfigError on an unknown parser name.
ParserSpec parse_parser_spec(std::string_view name);

/// Maps free text to a canonical label, or kUnparsedLabel.
///   exact_match: trim, lowercase, collapse internal whitespace runs.
///   mc_letter:   the letter A-J of the last "answer is X" match (X may be
///                wrapped in () or []), else a terminal standalone A-J token.
std::string parse_answer(std::string_view text, const ParserSpec& spec);

enum class LossRule {
  automatic,             // target_loss if present, else derived from gold + target_generation
  provided,              // target_loss only
  exact_match_accuracy,  // 0/1 loss from parsed target_generation vs gold_answer
};

/// Throws ConfigError on an unknown name.
LossRule parse_loss_rule(std::string_view name);

struct LoadOptions {
  ParserSpec parser;
  LossRule loss_rule = LossRule::automatic;
  bool require_losses = false;
  double parse_failure_warning = 0.05;
};

struct LoadedPool {
  Pool pool;
  std::optional<Vector> losses;  // present when every record carries a loss
  double parse_failure_fraction = 0.0;
  std::vector<std::string> warnings;

  /// Throws InputError when no loss vector is available.
  LabeledPool labeled() const;
};

/// Reads line-delimited JSON pool records (fields id, surrogate_generations
/// or surrogate_answers, target_loss, gold_answer, target_generation). Blank
/// lines are skipped. Errors are InputError with the 1-based line number.
LoadedPool load_pool(std::istream& in, const LoadOptions& opts = {});
LoadedPool load_pool(const std::string& path, const LoadOptions& opts = {});

/// Writes one record per instance with surrogate_answers and, when given,
/// target_loss. load_pool on the output reproduces the pool.
void write_pool_jsonl(std::ostream& out, const Pool& pool, const Vector* losses = nullptr);
void write_pool_jsonl(const std::string& path, const Pool& pool, const Vector* losses = nullptr);

}  // namespace activetest
