#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cohbench/workloads/experiments.hpp"

namespace cohbench {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw rows: experiment,transport,size,iter,latency_ns
std::string raw_csv(const std::vector<workloads::ExperimentResult>& results);

// Summary rows:
// experiment,transport,size,n,p50_ns,p95_ns,p99_ns,p100_ns,throughput_bytes_per_s
std::string summary_csv(
    const std::vector<workloads::ExperimentResult>& results);

// Throws IoError when the path cannot be written.
void write_file(const std::string& path, const std::string& contents);

}  // namespace cohbench
