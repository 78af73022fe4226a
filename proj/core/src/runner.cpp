#include "cohbench/runner.hpp"

#include <filesystem>
#include <future>
#include <system_error>
#include <thread>

#include "cohbench/csv.hpp"

namespace cohbench {

std::vector<workloads::ExperimentResult> run_matrix(
    const Config& cfg, const std::vector<workloads::ExperimentSpec>& specs) {
  std::vector<workloads::ExperimentResult> results(specs.size());
  bool tracing = false;
  for (const auto& spec : specs) tracing |= !spec.trace_path.empty();
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers <= 1 || specs.size() <= 1 || tracing) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      results[i] = workloads::run_experiment(cfg, specs[i]);
    }
    return results;
  }
  // Each experiment owns its engine; the shared config is read-only.
  std::vector<std::future<workloads::ExperimentResult>> futures;
  futures.reserve(specs.size());
  for (const auto& spec : specs) {
    futures.push_back(std::async(std::launch::async, [&cfg, spec] {
      return workloads::run_experiment(cfg, spec);
    }));
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    results[i] = futures[i].get();
  }
  return results;
}

std::vector<workloads::ExperimentResult> run_matrix_to_csv(
    const Config& cfg, const std::vector<workloads::ExperimentSpec>& specs,
    const std::string& csv_dir) {
  auto results = run_matrix(cfg, specs);
  std::error_code ec;
  std::filesystem::create_directories(csv_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + csv_dir + "'");
  write_file(csv_dir + "/raw.csv", raw_csv(results));
  write_file(csv_dir + "/summary.csv", summary_csv(results));
  return results;
}

}  // namespace cohbench
