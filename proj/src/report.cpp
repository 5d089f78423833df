#include "activetest/report.hpp"

#include "activetest/error.hpp"

#include <cstdio>
#include <map>
#include <sstream>

namespace activetest {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string report_to_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "method,stratification,allocation,H,H_eff,delta,M,T,seed,mean_estimate,R_D,mse,relative_mse,sem\n";
  for (const auto& c : report.cells) {
    const auto& s = c.spec;
    os << s.label() << ',';
    if (s.uniform) {
      os << "none,none,,";
    } else {
      os << to_string(s.stratify_method) << ',' << to_string(s.rule) << ',' << s.strata << ',';
    }
    os << (c.skipped ? std::string("NA") : std::to_string(c.strata_effective)) << ',';
    os << (!s.uniform && s.rule == AllocRule::proxy_neyman ? num(s.delta) : std::string()) << ',';
    os << c.budget << ',' << report.trials << ',' << report.master_seed << ',';
    if (c.skipped) {
      os << "NA," << num(report.risk) << ",NA,NA,NA\n";
      continue;
    }
    os << num(c.mean_estimate) << ',' << num(report.risk) << ',' << num(c.mse) << ','
       << (c.relative_mse ? num(*c.relative_mse) : std::string("NA")) << ',' << num(c.sem) << '\n';
  }
  return os.str();
}

nlohmann::json report_to_json(const ExperimentReport& report) {
  nlohmann::json doc;
  doc["pool_size"] = report.pool_size;
  doc["R_D"] = report.risk;
  doc["T"] = report.trials;
  doc["seed"] = report.master_seed;
  doc["shared_seeds"] = report.shared_seeds;
  doc["budgets"] = report.budgets;
  auto& cells = doc["cells"] = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json j;
    j["method"] = c.spec.label();
    j["uniform"] = c.spec.uniform;
    if (!c.spec.uniform) {
      j["stratification"] = to_string(c.spec.stratify_method);
      j["allocation"] = to_string(c.spec.rule);
      j["H"] = c.spec.strata;
      j["delta"] = c.spec.delta;
    }
    j["M"] = c.budget;
    j["H_eff"] = c.strata_effective;
    j["strata_sizes"] = c.strata_sizes;
    j["allocation_plan"] = c.allocation;
    j["mean_estimate"] = c.mean_estimate;
    j["mse"] = c.mse;
    j["relative_mse"] = optional_number(c.relative_mse);
    j["sem"] = c.sem;
    j["skipped"] = c.skipped;
    if (c.skipped) j["skip_reason"] = c.skip_reason;
    cells.push_back(std::move(j));
  }
  return doc;
}

ExperimentReport report_from_json(const nlohmann::json& doc) {
  try {
    ExperimentReport r;
    r.pool_size = doc.at("pool_size").get<Index>();
    r.risk = doc.at("R_D").get<double>();
    r.trials = doc.at("T").get<Index>();
    r.master_seed = doc.at("seed").get<std::uint64_t>();
    r.shared_seeds = doc.at("shared_seeds").get<bool>();
    r.budgets = doc.at("budgets").get<std::vector<Index>>();
    for (const auto& j : doc.at("cells")) {
      CellResult c;
      if (j.at("uniform").get<bool>()) {
        c.spec = MethodSpec::flat_uniform();
      } else {
        c.spec = MethodSpec::stratified(parse_stratify_method(j.at("stratification").get<std::string>()),
                                        j.at("H").get<int>(), parse_alloc_rule(j.at("allocation").get<std::string>()),
                                        j.at("delta").get<double>());
      }
      c.budget = j.at("M").get<Index>();
      c.strata_effective = j.at("H_eff").get<Index>();
      c.strata_sizes = j.at("strata_sizes").get<std::vector<Index>>();
      c.allocation = j.at("allocation_plan").get<std::vector<Index>>();
      c.mean_estimate = j.at("mean_estimate").get<double>();
      c.mse = j.at("mse").get<double>();
      if (!j.at("relative_mse").is_null()) c.relative_mse = j.at("relative_mse").get<double>();
      c.sem = j.at("sem").get<double>();
      c.skipped = j.at("skipped").get<bool>();
      if (c.skipped) c.skip_reason = j.at("skip_reason").get<std::string>();
      r.cells.push_back(std::move(c));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed report document: ") + e.what());
  } catch (const ConfigError& e) {
    throw InputError(std::string("malformed report document: ") + e.what());
  }
}

nlohmann::json plot_data(const ExperimentReport& report) {
  std::map<std::string, nlohmann::json> curves;
  std::vector<std::string> order;
  for (const auto& c : report.cells) {
    if (c.skipped) continue;
    const auto label = c.spec.label();
    if (!curves.count(label)) {
      order.push_back(label);
      curves[label] = nlohmann::json::array();
    }
    curves[label].push_back({{"M", c.budget},
                             {"mse", c.mse},
                             {"relative_mse", optional_number(c.relative_mse)},
                             {"sem", c.sem},
                             {"mean_estimate", c.mean_estimate}});
  }
  nlohmann::json doc;
  doc["R_D"] = report.risk;
  doc["T"] = report.trials;
  doc["curves"] = nlohmann::json::array();
  for (const auto& label : order) doc["curves"].push_back({{"method", label}, {"points", curves[label]}});
  return doc;
}

}  // namespace activetest
