#pragma once

#include "activetest/harness.hpp"

#include <json.hpp>

#include <string>

namespace activetest {

/// One row per cell with columns method, stratification, allocation, H,
/// H_eff, delta, M, T, seed, mean_estimate, R_D, mse, relative_mse, sem.
/// Doubles are written with 17 significant digits.
std::string report_to_csv(const ExperimentReport& report);

nlohmann::json report_to_json(const ExperimentReport& report);
/// Inverse of report_to_json. Throws InputError on a malformed document.
ExperimentReport report_from_json(const nlohmann::json& doc);

/// Per-curve point lists (budget, mse, relative_mse, sem) for plotting.
nlohmann::json plot_data(const ExperimentReport& report);

}  // namespace activetest
