#pragma once

#include "activetest/ingest.hpp"
#include "activetest/pool.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace activetest {

/// Surrogate decoding settings. Defaults are the reference configuration:
/// k = 10, temperature 0.7, top_p 0.8, top_k 20, presence_penalty 1.5,
/// repetition_penalty 1.0, max_new_tokens left to the model maximum.
struct DecodingConfig {
  int k = 10;
  double temperature = 0.7;
  double top_p = 0.8;
  int top_k = 20;
  double presence_penalty = 1.5;
  double repetition_penalty = 1.0;
  std::optional<int> max_new_tokens;

  /// Throws ConfigError unless k >= 2 and temperature > 0.
  void validate() const;
};

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model;
  std::string api_key_env = "ACTIVE_EVAL_API_KEY";
  double timeout_seconds = 120.0;
  int max_retries = 4;
  double backoff_initial_seconds = 1.0;
  double backoff_multiplier = 2.0;
  /// true: one request with n = k; false: k requests with n = 1.
  bool single_request = true;
  unsigned concurrency = 4;

  /// Throws ConfigError on a malformed URL, timeout <= 0 or retries < 0.
  void validate() const;
};

/// Raised when an input cannot be completed: a non-transient HTTP status,
/// a malformed response, or exhausted retries.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Chat-completions request body. top_k and repetition_penalty travel as
/// extension fields next to the standard ones.
nlohmann::json chat_payload(const EndpointConfig& endpoint, const std::string& prompt, const DecodingConfig& decoding,
                            int n);

struct GenerationStats {
  int requests = 0;  // HTTP attempts, including retried ones
  int retries = 0;
};

/// k completions for one prompt, in response order. Retries timeouts, 429
/// and 5xx with exponential backoff. Throws GenerationError.
std::vector<std::string> generate_k(const EndpointConfig& endpoint, const std::string& prompt,
                                    const DecodingConfig& decoding, GenerationStats* stats = nullptr);

/// One line of the generation input file.
struct EvalInput {
  std::string id;
  std::string prompt;
  std::optional<std::string> gold_answer;
  std::optional<std::string> target_generation;
  std::optional<double> target_loss;
};

/// JSONL with fields id, prompt and optional gold_answer, target_generation,
/// target_loss. Throws InputError with line numbers.
std::vector<EvalInput> load_inputs(const std::string& path);

struct BuildSummary {
  Index completed = 0;        // written during this run
  Index already_done = 0;     // skipped thanks to the journal
  std::vector<std::pair<std::string, std::string>> failures;  // (id, reason)
  int requests = 0;
  Index unparsed_generations = 0;
  Index parsed_generations = 0;
};

/// Generates k surrogate outputs per input and appends pool records to
/// out_path. Progress is journaled per input in journal_path as JSONL
/// {"id", "status"}; inputs already done are not requested again. A journal
/// naming ids absent from `inputs` is rejected as stale (InputError).
BuildSummary build_pool(const EndpointConfig& endpoint, const std::vector<EvalInput>& inputs,
                        const DecodingConfig& decoding, const ParserSpec& parser, const std::string& out_path,
                        const std::string& journal_path);

}  // namespace activetest
