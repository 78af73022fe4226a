#pragma once

#include <string>
#include <vector>

#include "cohbench/config.hpp"
#include "cohbench/workloads/experiments.hpp"

namespace cohbench {

// Runs every spec (independent engine instances, possibly in parallel) and
// returns results in spec order regardless of completion order.
std::vector<workloads::ExperimentResult> run_matrix(
    const Config& cfg, const std::vector<workloads::ExperimentSpec>& specs);

// run_matrix plus raw.csv/summary.csv under csv_dir (created if missing).
std::vector<workloads::ExperimentResult> run_matrix_to_csv(
    const Config& cfg, const std::vector<workloads::ExperimentSpec>& specs,
    const std::string& csv_dir);

}  // namespace cohbench
