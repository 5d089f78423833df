#include "activetest/genclient.hpp"

#include "activetest/error.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace activetest {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint URL '" + url + "' has no scheme");
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("endpoint URL '" + url + "' must use http or https");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  if (out.origin.size() <= scheme_end + 3) throw ConfigError("endpoint URL '" + url + "' has no host");
  if (path_start != std::string::npos) out.prefix = url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

enum class Attempt { ok, transient, fatal };

std::chrono::duration<double> backoff(const EndpointConfig& endpoint, int attempt) {
  double s = endpoint.backoff_initial_seconds;
  for (int i = 0; i < attempt; ++i) s *= endpoint.backoff_multiplier;
  return std::chrono::duration<double>(s);
}

// One chat-completions call with retries; returns the choice texts.
std::vector<std::string> request_completions(const EndpointConfig& endpoint, const std::string& prompt,
                                             const DecodingConfig& decoding, int n, GenerationStats& stats) {
  const auto url = split_url(endpoint.base_url);
  const auto body = chat_payload(endpoint, prompt, decoding, n).dump();
  httplib::Headers headers;
  if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const auto timeout = std::chrono::duration<double>(endpoint.timeout_seconds);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout).count();

  std::string last_error;
  for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
    if (attempt > 0) {
      ++stats.retries;
      std::this_thread::sleep_for(backoff(endpoint, attempt - 1));
    }
    ++stats.requests;
    httplib::Client client(url.origin);
    client.set_connection_timeout(0, timeout_us);
    client.set_read_timeout(0, timeout_us);
    client.set_write_timeout(0, timeout_us);
    auto res = client.Post(url.prefix + "/chat/completions", headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw GenerationError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    try {
      const auto doc = nlohmann::json::parse(res->body);
      std::vector<std::string> texts;
      for (const auto& choice : doc.at("choices")) {
        const auto& content = choice.at("message").at("content");
        texts.push_back(content.is_string() ? content.get<std::string>() : std::string());
      }
      return texts;
    } catch (const nlohmann::json::exception& e) {
      throw GenerationError(std::string("malformed completion response: ") + e.what());
    }
  }
  throw GenerationError("retries exhausted after " + std::to_string(endpoint.max_retries + 1) +
                        " attempts, last error: " + last_error);
}

std::unordered_map<std::string, std::string> read_journal(const std::string& path) {
  std::unordered_map<std::string, std::string> status;
  std::ifstream in(path);
  if (!in) return status;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(text);
      status[rec.at("id").get<std::string>()] = rec.at("status").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError("journal '" + path + "' line " + std::to_string(line) + ": " + e.what());
    }
  }
  return status;
}

std::vector<std::string> ids_in_output(const std::string& path) {
  std::vector<std::string> ids;
  std::ifstream in(path);
  if (!in) return ids;
  std::string text;
  while (std::getline(in, text)) {
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      ids.push_back(nlohmann::json::parse(text).at("id").get<std::string>());
    } catch (const nlohmann::json::exception&) {
      // A torn final line from an interrupted run; the input is redone.
    }
  }
  return ids;
}

}  // namespace

void DecodingConfig::validate() const {
  if (k < 2) throw ConfigError("decoding needs k >= 2 generations per input");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive; sampling is required");
  if (max_new_tokens && *max_new_tokens < 1) throw ConfigError("max_new_tokens must be positive");
}

void EndpointConfig::validate() const {
  split_url(base_url);
  if (!(timeout_seconds > 0.0)) throw ConfigError("request timeout must be positive");
  if (max_retries < 0) throw ConfigError("max_retries must be nonnegative");
  if (backoff_initial_seconds < 0.0 || backoff_multiplier < 1.0) throw ConfigError("invalid retry backoff");
  if (concurrency < 1) throw ConfigError("concurrency must be at least 1");
}

nlohmann::json chat_payload(const EndpointConfig& endpoint, const std::string& prompt, const DecodingConfig& decoding,
                            int n) {
  nlohmann::json body;
  body["model"] = endpoint.model;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = decoding.temperature;
  body["top_p"] = decoding.top_p;
  body["n"] = n;
  if (decoding.max_new_tokens) body["max_tokens"] = *decoding.max_new_tokens;
  body["presence_penalty"] = decoding.presence_penalty;
  body["top_k"] = decoding.top_k;
  body["repetition_penalty"] = decoding.repetition_penalty;
  return body;
}

std::vector<std::string> generate_k(const EndpointConfig& endpoint, const std::string& prompt,
                                    const DecodingConfig& decoding, GenerationStats* stats) {
  endpoint.validate();
  decoding.validate();
  GenerationStats local;
  GenerationStats& s = stats ? *stats : local;
  std::vector<std::string> texts;
  if (endpoint.single_request) {
    texts = request_completions(endpoint, prompt, decoding, decoding.k, s);
  } else {
    for (int j = 0; j < decoding.k; ++j) {
      auto one = request_completions(endpoint, prompt, decoding, 1, s);
      if (one.empty()) break;
      texts.push_back(std::move(one.front()));
    }
  }
  if (static_cast<int>(texts.size()) < decoding.k) {
    throw GenerationError("received " + std::to_string(texts.size()) + " generations, expected k = " +
                          std::to_string(decoding.k));
  }
  texts.resize(static_cast<std::size_t>(decoding.k));
  return texts;
}

std::vector<EvalInput> load_inputs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  std::vector<EvalInput> out;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(text);
      EvalInput input;
      input.id = rec.at("id").get<std::string>();
      input.prompt = rec.at("prompt").get<std::string>();
      if (rec.contains("gold_answer")) input.gold_answer = rec["gold_answer"].get<std::string>();
      if (rec.contains("target_generation")) input.target_generation = rec["target_generation"].get<std::string>();
      if (rec.contains("target_loss")) input.target_loss = rec["target_loss"].get<double>();
      if (!seen.insert(input.id).second) {
        throw InputError("line " + std::to_string(line) + ": duplicate id '" + input.id + "'");
      }
      out.push_back(std::move(input));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("line " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

BuildSummary build_pool(const EndpointConfig& endpoint, const std::vector<EvalInput>& inputs,
                        const DecodingConfig& decoding, const ParserSpec& parser, const std::string& out_path,
                        const std::string& journal_path) {
  endpoint.validate();
  decoding.validate();
  if (inputs.empty()) throw InputError("no inputs to generate for");

  std::unordered_set<std::string> known;
  for (const auto& in : inputs) {
    if (!known.insert(in.id).second) throw InputError("duplicate input id '" + in.id + "'");
  }

  std::unordered_set<std::string> done;
  for (const auto& [id, status] : read_journal(journal_path)) {
    if (!known.count(id)) {
      throw InputError("stale journal '" + journal_path + "': id '" + id + "' is not among the inputs");
    }
    if (status == "done") done.insert(id);
  }
  for (const auto& id : ids_in_output(out_path)) {
    if (!known.count(id)) {
      throw InputError("output '" + out_path + "' holds id '" + id + "' that is not among the inputs");
    }
    done.insert(id);
  }

  std::vector<const EvalInput*> todo;
  for (const auto& in : inputs) {
    if (!done.count(in.id)) todo.push_back(&in);
  }

  BuildSummary summary;
  summary.already_done = static_cast<Index>(inputs.size() - todo.size());

  struct Outcome {
    bool ok = false;
    std::vector<std::string> texts;
    std::string error;
    GenerationStats stats;
  };
  std::vector<std::optional<Outcome>> outcomes(todo.size());
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t j = next++; j < todo.size(); j = next++) {
      Outcome o;
      try {
        o.texts = generate_k(endpoint, todo[j]->prompt, decoding, &o.stats);
        o.ok = true;
      } catch (const GenerationError& e) {
        o.error = e.what();
      }
      {
        std::lock_guard lock(mu);
        outcomes[j] = std::move(o);
      }
      ready.notify_all();
    }
  };

  std::ofstream out(out_path, std::ios::app);
  std::ofstream journal(journal_path, std::ios::app);
  if (!out) throw InputError("cannot open '" + out_path + "' for appending");
  if (!journal) throw InputError("cannot open journal '" + journal_path + "' for appending");

  std::vector<std::jthread> workers;
  const auto n_workers = std::min<std::size_t>(endpoint.concurrency, todo.size());
  for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(worker);

  // Single writer, input order.
  for (std::size_t j = 0; j < todo.size(); ++j) {
    Outcome o;
    {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return outcomes[j].has_value(); });
      o = std::move(*outcomes[j]);
    }
    summary.requests += o.stats.requests;
    const auto& input = *todo[j];
    nlohmann::json entry{{"id", input.id}};
    if (o.ok) {
      nlohmann::json rec;
      rec["id"] = input.id;
      rec["surrogate_generations"] = o.texts;
      if (input.gold_answer) rec["gold_answer"] = *input.gold_answer;
      if (input.target_generation) rec["target_generation"] = *input.target_generation;
      if (input.target_loss) rec["target_loss"] = *input.target_loss;
      for (const auto& t : o.texts) {
        ++summary.parsed_generations;
        if (parse_answer(t, parser) == kUnparsedLabel) ++summary.unparsed_generations;
      }
      out << rec.dump() << '\n';
      out.flush();
      entry["status"] = "done";
      ++summary.completed;
    } else {
      entry["status"] = "failed";
      entry["error"] = o.error;
      summary.failures.emplace_back(input.id, o.error);
    }
    journal << entry.dump() << '\n';
    journal.flush();
  }
  return summary;
}

}  // namespace activetest
