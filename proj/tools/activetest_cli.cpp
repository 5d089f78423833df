// activetest: stratified label-efficient evaluation from the command line.
#include "activetest/allocate.hpp"
#include "activetest/error.hpp"
#include "activetest/estimate.hpp"
#include "activetest/genclient.hpp"
#include "activetest/harness.hpp"
#include "activetest/ingest.hpp"
#include "activetest/report.hpp"
#include "activetest/stratify.hpp"
#include "activetest/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace activetest;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;

struct PoolArgs {
  std::string path;
  std::string parser = "exact_match";
  std::string loss_rule = "auto";
};

struct StrataArgs {
  std::string method = "adaptive_se";
  int strata = kDefaultStrata;
};

void add_pool_options(CLI::App* cmd, PoolArgs& a) {
  cmd->add_option("--pool", a.path, "pool file (JSONL)")->required();
  cmd->add_option("--parser", a.parser, "answer parser for raw generations: exact_match | mc_letter")
      ->capture_default_str();
  cmd->add_option("--loss-rule", a.loss_rule, "auto | provided | exact_match_accuracy")->capture_default_str();
}

void add_strata_options(CLI::App* cmd, StrataArgs& a) {
  cmd->add_option("--stratify-method", a.method, "adaptive_se | quantile | equal_width | kmeans")
      ->capture_default_str();
  cmd->add_option("--strata,-H", a.strata, "number of strata H")->capture_default_str();
}

LoadedPool load(const PoolArgs& a, bool need_losses) {
  LoadOptions opts;
  opts.parser = parse_parser_spec(a.parser);
  opts.loss_rule = parse_loss_rule(a.loss_rule);
  opts.require_losses = need_losses;
  auto loaded = load_pool(a.path, opts);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
  return loaded;
}

// Writes to --out, or stdout when no path is given.
void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw InputError("cannot open '" + out_path + "' for writing");
  out << text;
  if (!out) throw InputError("failed writing '" + out_path + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int check_strata(int H) {
  if (H < 1) throw ConfigError("--strata must be at least 1");
  return H;
}

std::vector<std::string> split_list(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& r : raw) {
    std::stringstream ss(r);
    for (std::string item; std::getline(ss, item, ',');) {
      if (!item.empty()) out.push_back(item);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-efficient evaluation by surrogate-entropy stratified sampling"};
  app.require_subcommand(1);

  // signals
  PoolArgs sig_pool;
  std::string sig_out;
  auto* sig = app.add_subcommand("signals", "per-instance semantic entropy and self-consistency (CSV)");
  add_pool_options(sig, sig_pool);
  sig->add_option("--out", sig_out, "output path (default stdout)");

  // stratify
  PoolArgs st_pool;
  StrataArgs st_args;
  std::string st_out;
  bool st_assign = false;
  auto* st = app.add_subcommand("stratify", "partition the pool by semantic entropy");
  add_pool_options(st, st_pool);
  add_strata_options(st, st_args);
  st->add_flag("--assignments", st_assign, "print id,stratum per instance instead of the stratum summary");
  st->add_option("--out", st_out, "output path (default stdout)");

  // allocate
  PoolArgs al_pool;
  StrataArgs al_args;
  Index al_budget = 0;
  std::string al_rule = "proxy_neyman";
  double al_delta = kDefaultDelta;
  std::string al_out;
  auto* al = app.add_subcommand("allocate", "per-stratum label counts for a budget");
  add_pool_options(al, al_pool);
  add_strata_options(al, al_args);
  al->add_option("--budget,-M", al_budget, "label budget M")->required();
  al->add_option("--alloc-rule", al_rule, "proxy_neyman | equal | proportional | power | oracle_neyman")
      ->capture_default_str();
  al->add_option("--delta", al_delta, "proxy-Neyman offset")->capture_default_str();
  al->add_option("--out", al_out, "output path (default stdout)");

  // estimate
  PoolArgs es_pool;
  StrataArgs es_args;
  Index es_budget = 0;
  std::string es_rule = "proxy_neyman";
  double es_delta = kDefaultDelta;
  std::uint64_t es_seed = 0;
  std::string es_out;
  auto* es = app.add_subcommand("estimate", "one estimation run: draw, reveal labels, print the risk estimate");
  add_pool_options(es, es_pool);
  add_strata_options(es, es_args);
  es->add_option("--budget,-M", es_budget, "label budget M")->required();
  es->add_option("--alloc-rule", es_rule, "allocation rule, or 'uniform' for flat uniform sampling")
      ->capture_default_str();
  es->add_option("--delta", es_delta, "proxy-Neyman offset")->capture_default_str();
  es->add_option("--seed", es_seed, "master seed")->capture_default_str();
  es->add_option("--out", es_out, "write the ids that were labeled to this file");

  // run
  PoolArgs run_pool;
  std::string run_synth;
  std::vector<std::string> run_budgets_raw;
  Index run_trials = kDefaultTrials;
  std::uint64_t run_seed = 0;
  std::vector<std::string> run_methods_raw{"adaptive_se"};
  std::vector<std::string> run_rules_raw{"proxy_neyman"};
  std::vector<int> run_strata{kDefaultStrata};
  std::vector<double> run_deltas{kDefaultDelta};
  unsigned run_threads = 0;
  std::string run_out;
  std::string run_csv;
  auto* run = app.add_subcommand("run", "Monte Carlo sweep over budgets and methods against the uniform baseline");
  run->add_option("--pool", run_pool.path, "pool file (JSONL) with target losses");
  run->add_option("--parser", run_pool.parser, "answer parser")->capture_default_str();
  run->add_option("--loss-rule", run_pool.loss_rule, "auto | provided | exact_match_accuracy")->capture_default_str();
  run->add_flag_function(
      "--reference-pool", [&](std::int64_t) { run_synth = "reference"; }, "use the built-in synthetic reference pool");
  run->add_option("--budgets,--budget", run_budgets_raw, "budgets M, comma separated")->required();
  run->add_option("--trials,-T", run_trials, "Monte Carlo trials per cell")->capture_default_str();
  run->add_option("--seed", run_seed, "master seed")->capture_default_str();
  run->add_option("--stratify-method", run_methods_raw, "stratification method(s)")->capture_default_str();
  run->add_option("--alloc-rule", run_rules_raw, "allocation rule(s)")->capture_default_str();
  run->add_option("--strata,-H", run_strata, "strata count(s)")->capture_default_str();
  run->add_option("--delta", run_deltas, "proxy-Neyman offset(s)")->capture_default_str();
  run->add_option("--threads", run_threads, "worker threads (0 = all cores)")->capture_default_str();
  run->add_option("--out", run_out, "JSON report path (default: CSV on stdout)");
  run->add_option("--csv", run_csv, "also write the CSV table here");

  // synth
  SynthConfig syn_cfg = reference_config();
  std::string syn_out;
  auto* syn = app.add_subcommand("synth", "write a synthetic pool with target losses");
  syn->add_option("--n", syn_cfg.N, "pool size")->capture_default_str();
  syn->add_option("--k", syn_cfg.k, "surrogate generations per instance")->capture_default_str();
  syn->add_option("--options", syn_cfg.options, "answer options per question")->capture_default_str();
  syn->add_option("--alpha", syn_cfg.difficulty_alpha, "difficulty Beta alpha")->capture_default_str();
  syn->add_option("--beta", syn_cfg.difficulty_beta, "difficulty Beta beta")->capture_default_str();
  syn->add_option("--target-link", syn_cfg.target_link, "target error probability per unit difficulty")
      ->capture_default_str();
  syn->add_option("--zero-se-boost", syn_cfg.zero_se_boost, "probability of a zero-difficulty instance")
      ->capture_default_str();
  syn->add_option("--seed", syn_cfg.seed, "generator seed")->capture_default_str();
  syn->add_option("--out", syn_out, "output path (default stdout)");

  // report
  std::string rep_in;
  std::string rep_format = "csv";
  double rep_ref = 0.0;
  std::string rep_out;
  auto* rep = app.add_subcommand("report", "render a saved run report");
  rep->add_option("--in", rep_in, "JSON report written by 'run --out'")->required();
  rep->add_option("--format", rep_format, "csv | json | plot | savings")->capture_default_str();
  rep->add_option("--reference-budget", rep_ref, "uniform budget for --format savings");
  rep->add_option("--out", rep_out, "output path (default stdout)");

  // generate
  std::string gen_inputs;
  std::string gen_out;
  std::string gen_journal;
  std::string gen_parser = "exact_match";
  EndpointConfig gen_ep;
  DecodingConfig gen_dec;
  bool gen_per_sample = false;
  auto* gen = app.add_subcommand("generate", "query a chat-completions endpoint for k surrogate generations per input");
  gen->add_option("--inputs", gen_inputs, "JSONL with id, prompt and optional gold_answer / target_generation")
      ->required();
  gen->add_option("--out", gen_out, "pool file to append to")->required();
  gen->add_option("--journal", gen_journal, "progress journal (default: <out>.journal)");
  gen->add_option("--parser", gen_parser, "parser used for the parse-failure report")->capture_default_str();
  gen->add_option("--base-url", gen_ep.base_url, "endpoint base URL")->capture_default_str();
  gen->add_option("--model", gen_ep.model, "model name")->required();
  gen->add_option("--api-key-env", gen_ep.api_key_env, "environment variable holding the bearer token")
      ->capture_default_str();
  gen->add_option("--timeout", gen_ep.timeout_seconds, "request timeout in seconds")->capture_default_str();
  gen->add_option("--max-retries", gen_ep.max_retries, "retries per request")->capture_default_str();
  gen->add_option("--concurrency", gen_ep.concurrency, "parallel inputs")->capture_default_str();
  gen->add_flag("--per-sample", gen_per_sample, "k requests with n = 1 instead of one request with n = k");
  gen->add_option("--k", gen_dec.k, "generations per input")->capture_default_str();
  gen->add_option("--temperature", gen_dec.temperature)->capture_default_str();
  gen->add_option("--top-p", gen_dec.top_p)->capture_default_str();
  gen->add_option("--top-k", gen_dec.top_k)->capture_default_str();
  gen->add_option("--presence-penalty", gen_dec.presence_penalty)->capture_default_str();
  gen->add_option("--repetition-penalty", gen_dec.repetition_penalty)->capture_default_str();
  gen->add_option("--max-new-tokens", gen_dec.max_new_tokens);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sig) {
      const auto loaded = load(sig_pool, false);
      std::ostringstream os;
      os << "id,se,sc\n";
      for (const auto& inst : loaded.pool.instances()) os << inst.id << ',' << fmt(inst.se) << ',' << fmt(inst.sc) << '\n';
      emit(sig_out, os.str());
    } else if (*st) {
      const auto loaded = load(st_pool, false);
      const auto strata =
          stratify_pool(loaded.pool, parse_stratify_method(st_args.method), check_strata(st_args.strata));
      std::ostringstream os;
      if (st_assign) {
        os << "id,stratum\n";
        for (Index i = 0; i < loaded.pool.size(); ++i) {
          os << loaded.pool[i].id << ',' << strata.assignment[static_cast<std::size_t>(i)] << '\n';
        }
      } else {
        os << "stratum,size,mean_sc,se_min,se_max\n";
        const auto se = loaded.pool.se_values();
        const auto members = strata.members();
        for (std::size_t h = 0; h < members.size(); ++h) {
          double lo = se[members[h].front()];
          double hi = lo;
          for (Index i : members[h]) {
            lo = std::min(lo, se[i]);
            hi = std::max(hi, se[i]);
          }
          os << h << ',' << strata.sizes[h] << ',' << fmt(strata.mean_sc[static_cast<Index>(h)]) << ',' << fmt(lo)
             << ',' << fmt(hi) << '\n';
        }
      }
      emit(st_out, os.str());
    } else if (*al) {
      const auto rule = parse_alloc_rule(al_rule);
      const auto loaded = load(al_pool, rule == AllocRule::oracle_neyman);
      const auto strata =
          stratify_pool(loaded.pool, parse_stratify_method(al_args.method), check_strata(al_args.strata));
      const auto plan = allocate(rule, strata, al_budget, al_delta, loaded.losses ? &*loaded.losses : nullptr);
      std::ostringstream os;
      os << "stratum,size,mean_sc,labels\n";
      for (std::size_t h = 0; h < plan.m.size(); ++h) {
        os << h << ',' << strata.sizes[h] << ',' << fmt(strata.mean_sc[static_cast<Index>(h)]) << ',' << plan.m[h]
           << '\n';
      }
      emit(al_out, os.str());
    } else if (*es) {
      const auto data = load(es_pool, true).labeled();
      LabelOracle oracle(data.pool, data.losses);
      RiskEstimate est;
      if (es_rule == "uniform") {
        auto rng = make_stream(es_seed, 0, kUniformStream);
        est = uniform_estimate(data.pool, es_budget, rng, oracle);
      } else {
        const auto spec = MethodSpec::stratified(parse_stratify_method(es_args.method), check_strata(es_args.strata),
                                                 parse_alloc_rule(es_rule), es_delta);
        const auto prepared = prepare_method(data, spec, es_budget);
        const auto draw = draw_stratified(prepared.strata->members(), *prepared.plan, es_seed, 0);
        est = ht_estimate(draw, *prepared.plan, prepared.strata->sizes, oracle);
      }
      std::cout << "R_hat=" << fmt(est.value) << "\nlabels_used=" << est.labels_used << '\n';
      if (!es_out.empty()) {
        std::ostringstream os;
        for (Index i = 0; i < data.pool.size(); ++i) {
          if (oracle.revealed(i)) os << data.pool[i].id << '\n';
        }
        emit(es_out, os.str());
      }
    } else if (*run) {
      if (run_pool.path.empty() == run_synth.empty()) {
        throw ConfigError("run needs exactly one of --pool or --reference-pool");
      }
      const auto data = run_synth.empty() ? load(run_pool, true).labeled() : reference_pool();
      std::vector<Index> budgets;
      for (const auto& b : split_list(run_budgets_raw)) {
        try {
          std::size_t used = 0;
          const long long v = std::stoll(b, &used);
          if (used != b.size()) throw std::invalid_argument(b);
          budgets.push_back(static_cast<Index>(v));
        } catch (const std::logic_error&) {
          throw ConfigError("budget '" + b + "' is not an integer");
        }
      }
      std::vector<MethodSpec> methods;
      for (const auto& m : split_list(run_methods_raw)) {
        for (const auto& r : split_list(run_rules_raw)) {
          const auto rule = parse_alloc_rule(r);
          for (int H : run_strata) {
            if (rule == AllocRule::proxy_neyman) {
              for (double d : run_deltas) methods.push_back(MethodSpec::stratified(parse_stratify_method(m), check_strata(H), rule, d));
            } else {
              methods.push_back(MethodSpec::stratified(parse_stratify_method(m), check_strata(H), rule));
            }
          }
        }
      }
      const auto report = sweep(data, methods, budgets, run_trials, run_seed, RunOptions{run_threads});
      for (const auto& c : report.cells) {
        if (c.skipped) std::cerr << "skipped " << c.spec.label() << " at M = " << c.budget << ": " << c.skip_reason << '\n';
      }
      if (!run_csv.empty()) emit(run_csv, report_to_csv(report));
      if (!run_out.empty()) {
        emit(run_out, report_to_json(report).dump(2) + "\n");
      } else if (run_csv.empty()) {
        std::cout << report_to_csv(report);
      }
    } else if (*syn) {
      const auto pool = make_pool(syn_cfg);
      std::ostringstream os;
      write_pool_jsonl(os, pool.data.pool, &pool.data.losses);
      emit(syn_out, os.str());
    } else if (*rep) {
      std::ifstream in(rep_in);
      if (!in) throw InputError("cannot open report '" + rep_in + "'");
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw InputError("report '" + rep_in + "' is not valid JSON: " + e.what());
      }
      const auto report = report_from_json(doc);
      if (rep_format == "csv") {
        emit(rep_out, report_to_csv(report));
      } else if (rep_format == "json") {
        emit(rep_out, report_to_json(report).dump(2) + "\n");
      } else if (rep_format == "plot") {
        emit(rep_out, plot_data(report).dump(2) + "\n");
      } else if (rep_format == "savings") {
        if (!(rep_ref > 0.0)) throw ConfigError("--format savings needs --reference-budget");
        std::map<std::string, std::vector<CurvePoint>> curves;
        std::vector<std::string> order;
        for (const auto& c : report.cells) {
          if (c.skipped) continue;
          const auto label = c.spec.label();
          if (!curves.count(label)) order.push_back(label);
          curves[label].push_back({static_cast<double>(c.budget), c.mse});
        }
        const auto& uniform = curves["uniform"];
        std::ostringstream os;
        os << "method,reference_budget,target_mse,matched_budget,savings\n";
        for (const auto& label : order) {
          if (label == "uniform") continue;
          const auto rec = budget_savings(uniform, curves[label], rep_ref);
          os << label << ',' << fmt(rec.uniform_reference_budget) << ',' << fmt(rec.target_mse) << ','
             << (rec.matched_budget ? fmt(*rec.matched_budget) : "NA") << ','
             << (rec.savings_fraction ? fmt(*rec.savings_fraction) : "NA") << '\n';
        }
        emit(rep_out, os.str());
      } else {
        throw ConfigError("unknown report format '" + rep_format + "'");
      }
    } else if (*gen) {
      gen_ep.single_request = !gen_per_sample;
      const auto parser = parse_parser_spec(gen_parser);
      const auto inputs = load_inputs(gen_inputs);
      const auto summary =
          build_pool(gen_ep, inputs, gen_dec, parser, gen_out, gen_journal.empty() ? gen_out + ".journal" : gen_journal);
      std::cerr << "completed " << summary.completed << ", already done " << summary.already_done << ", failed "
                << summary.failures.size() << ", requests " << summary.requests << '\n';
      for (const auto& [id, why] : summary.failures) std::cerr << "failed " << id << ": " << why << '\n';
      if (summary.parsed_generations > 0) {
        std::cerr << "unparsed generations: " << summary.unparsed_generations << " of " << summary.parsed_generations
                  << '\n';
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
