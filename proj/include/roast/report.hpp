#pragma once

#include "roast/experiment.hpp"
#include "roast/io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace roast {

// method, acc_in, acc_shift, acc_adv, ece, auroc_x100, delta_avg, rank_avg,
// then the per-seed standard deviations of the first six.
std::string render_csv(const std::vector<MethodSummary>& summaries);

Json report_json(const std::vector<RunResult>& results);
// Runs back from report_json; metrics and split scores round-trip exactly.
std::vector<RunResult> results_from_json(const Json& report);

// Writes report.csv and report.json into `dir`.
void write_report(const std::vector<RunResult>& results, const std::filesystem::path& dir);

// Re-renders report.csv from a stored report.json.
std::string rerender_csv(const std::filesystem::path& report_json_path);

}  // namespace roast
