#include "activetest/ingest.hpp"

#include "activetest/error.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace activetest {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_choice_letter(char c) { return c >= 'A' && c <= 'J'; }

std::string normalize_text(std::string_view text, bool case_fold, bool collapse) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  std::string out;
  out.reserve(e - b);
  bool in_space = false;
  for (std::size_t i = b; i < e; ++i) {
    char c = text[i];
    if (collapse && is_space(c)) {
      if (!in_space) out.push_back(' ');
      in_space = true;
      continue;
    }
    in_space = false;
    out.push_back(case_fold ? static_cast<char>(std::tolower(static_cast<unsigned char>(c))) : c);
  }
  return out;
}

// Letter following "answer is" at `pos` (the index just past the phrase),
// optionally wrapped in () or [].
std::optional<char> letter_after(std::string_view text, std::size_t pos) {
  auto skip = [&] {
    while (pos < text.size() && is_space(text[pos])) ++pos;
  };
  skip();
  if (pos < text.size() && (text[pos] == '(' || text[pos] == '[')) {
    ++pos;
    skip();
  }
  if (pos >= text.size() || !is_choice_letter(text[pos])) return std::nullopt;
  const char letter = text[pos++];
  if (pos < text.size() && is_alnum(text[pos])) return std::nullopt;
  return letter;
}

std::string parse_mc_letter(std::string_view text) {
  static constexpr std::string_view kPhrase = "answer is";
  std::string lower(text);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  std::optional<char> found;
  for (std::size_t pos = lower.find(kPhrase); pos != std::string::npos; pos = lower.find(kPhrase, pos + 1)) {
    if (pos > 0 && is_alnum(lower[pos - 1])) continue;
    if (auto letter = letter_after(text, pos + kPhrase.size())) found = letter;
  }
  if (found) return std::string(1, *found);

  std::size_t e = text.size();
  while (e > 0 && is_space(text[e - 1])) --e;
  std::size_t b = e;
  while (b > 0 && !is_space(text[b - 1])) --b;
  std::string_view token = text.substr(b, e - b);
  static constexpr std::string_view kOpen = "([{*\"'";
  static constexpr std::string_view kClose = ")]}.,;:!?*\"'";
  while (!token.empty() && kOpen.find(token.front()) != std::string_view::npos) token.remove_prefix(1);
  while (!token.empty() && kClose.find(token.back()) != std::string_view::npos) token.remove_suffix(1);
  if (token.size() == 1 && is_choice_letter(token.front())) return std::string(token);
  return std::string(kUnparsedLabel);
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw InputError("line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* field, std::size_t line) {
  if (!j.is_array()) fail(line, std::string("field '") + field + "' must be an array of strings");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_string()) fail(line, std::string("field '") + field + "' must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::optional<std::string> optional_string(const nlohmann::json& rec, const char* field, std::size_t line) {
  const auto it = rec.find(field);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail(line, std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

std::string canonical_gold(const std::string& gold, const ParserSpec& parser) {
  auto label = parse_answer(gold, parser);
  if (label == kUnparsedLabel) label = normalize_text(gold, true, true);
  return label;
}

}  // namespace

ParserSpec parse_parser_spec(std::string_view name) {
  if (name == "exact_match") return {ParserKind::exact_match};
  if (name == "mc_letter") return {ParserKind::mc_letter};
  throw ConfigError("unknown parser '" + std::string(name) + "' (expected exact_match or mc_letter)");
}

std::string parse_answer(std::string_view text, const ParserSpec& spec) {
  if (spec.kind == ParserKind::mc_letter) return parse_mc_letter(text);
  auto out = normalize_text(text, spec.case_fold, spec.collapse_whitespace);
  if (out.empty()) return std::string(kUnparsedLabel);
  return out;
}

LossRule parse_loss_rule(std::string_view name) {
  if (name == "auto") return LossRule::automatic;
  if (name == "provided") return LossRule::provided;
  if (name == "exact_match_accuracy") return LossRule::exact_match_accuracy;
  throw ConfigError("unknown loss rule '" + std::string(name) + "' (expected auto, provided or exact_match_accuracy)");
}

LabeledPool LoadedPool::labeled() const {
  if (!losses) throw InputError("pool file does not provide a target loss for every record");
  LabeledPool out{pool, *losses};
  out.validate();
  return out;
}

LoadedPool load_pool(std::istream& in, const LoadOptions& opts) {
  std::vector<PoolInstance> instances;
  std::vector<std::optional<double>> losses;
  std::unordered_map<std::string, std::size_t> first_line;
  std::size_t k = 0;
  std::size_t k_line = 0;
  std::size_t parsed = 0;
  std::size_t unparsed = 0;

  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(line, std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object()) fail(line, "record must be a JSON object");

    const auto id = optional_string(rec, "id", line);
    if (!id || id->empty()) fail(line, "record has no 'id'");
    if (auto [it, fresh] = first_line.emplace(*id, line); !fresh) {
      fail(line, "duplicate id '" + *id + "' (first seen on line " + std::to_string(it->second) + ")");
    }

    const bool has_gen = rec.contains("surrogate_generations");
    const bool has_ans = rec.contains("surrogate_answers");
    if (has_gen == has_ans) {
      fail(line, "record '" + *id + "' must carry exactly one of surrogate_generations / surrogate_answers");
    }
    PoolInstance inst;
    inst.id = *id;
    if (has_gen) {
      for (const auto& g : string_list(rec["surrogate_generations"], "surrogate_generations", line)) {
        auto label = parse_answer(g, opts.parser);
        ++parsed;
        if (label == kUnparsedLabel) ++unparsed;
        inst.surrogate_answers.push_back(std::move(label));
      }
    } else {
      inst.surrogate_answers = string_list(rec["surrogate_answers"], "surrogate_answers", line);
      for (const auto& a : inst.surrogate_answers) {
        if (a.empty()) fail(line, "record '" + *id + "' has an empty answer label");
      }
    }

    const std::size_t n_out = inst.surrogate_answers.size();
    if (k == 0) {
      if (n_out < 2) fail(line, "record '" + *id + "' has " + std::to_string(n_out) + " surrogate outputs; need k >= 2");
      k = n_out;
      k_line = line;
    } else if (n_out != k) {
      fail(line, "record '" + *id + "' has " + std::to_string(n_out) + " surrogate outputs, expected k = " +
                     std::to_string(k) + " (set by line " + std::to_string(k_line) + ")");
    }

    std::optional<double> loss;
    if (const auto it = rec.find("target_loss"); it != rec.end() && !it->is_null()) {
      if (!it->is_number()) fail(line, "target_loss must be a number");
      const double v = it->get<double>();
      if (!(v >= 0.0 && v <= 1.0)) fail(line, "target_loss " + std::to_string(v) + " outside [0, 1]");
      if (opts.loss_rule != LossRule::exact_match_accuracy) loss = v;
    }
    if (!loss && opts.loss_rule != LossRule::provided) {
      const auto gold = optional_string(rec, "gold_answer", line);
      const auto target = optional_string(rec, "target_generation", line);
      if (gold && target) {
        loss = parse_answer(*target, opts.parser) == canonical_gold(*gold, opts.parser) ? 0.0 : 1.0;
      }
    }
    if (!loss && opts.require_losses) fail(line, "record '" + *id + "' has no target loss");

    instances.push_back(std::move(inst));
    losses.push_back(loss);
  }
  if (instances.empty()) throw InputError("pool file contains no records");

  LoadedPool out{Pool(std::move(instances)), std::nullopt, 0.0, {}};
  std::size_t with_loss = 0;
  for (const auto& l : losses) with_loss += l.has_value();
  if (with_loss == losses.size()) {
    Vector v(static_cast<Index>(losses.size()));
    for (std::size_t i = 0; i < losses.size(); ++i) v[static_cast<Index>(i)] = *losses[i];
    out.losses = std::move(v);
  } else if (with_loss > 0) {
    out.warnings.push_back(std::to_string(losses.size() - with_loss) + " of " + std::to_string(losses.size()) +
                           " records carry no target loss; the pool has no oracle");
  }
  if (parsed > 0) {
    out.parse_failure_fraction = static_cast<double>(unparsed) / static_cast<double>(parsed);
    if (out.parse_failure_fraction > opts.parse_failure_warning) {
      std::ostringstream os;
      os << "parse failures in " << unparsed << " of " << parsed << " generations ("
         << 100.0 * out.parse_failure_fraction << "%)";
      out.warnings.push_back(os.str());
    }
  }
  return out;
}

LoadedPool load_pool(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open pool file '" + path + "'");
  return load_pool(in, opts);
}

void write_pool_jsonl(std::ostream& out, const Pool& pool, const Vector* losses) {
  if (losses && losses->size() != pool.size()) {
    throw InputError("loss vector does not match the pool size");
  }
  for (Index i = 0; i < pool.size(); ++i) {
    nlohmann::json rec;
    rec["id"] = pool[i].id;
    rec["surrogate_answers"] = pool[i].surrogate_answers;
    if (losses) rec["target_loss"] = (*losses)[i];
    out << rec.dump() << '\n';
  }
}

void write_pool_jsonl(const std::string& path, const Pool& pool, const Vector* losses) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  write_pool_jsonl(out, pool, losses);
  if (!out) throw InputError("failed writing '" + path + "'");
}

}  // namespace activetest
