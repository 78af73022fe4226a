#include "cohbench/csv.hpp"

#include <cstdio>
#include <fstream>

namespace cohbench {

namespace {

std::string format_throughput(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string raw_csv(const std::vector<workloads::ExperimentResult>& results) {
  std::string out = "experiment,transport,size,iter,latency_ns\n";
  for (const auto& r : results) {
    const std::string prefix = std::string(to_string(r.spec.workload)) + "," +
                               to_string(r.spec.transport) + "," +
                               std::to_string(r.spec.size) + ",";
    for (std::size_t i = 0; i < r.latencies_ns.size(); ++i) {
      out += prefix;
      out += std::to_string(i);
      out += ',';
      out += std::to_string(r.latencies_ns[i]);
      out += '\n';
    }
  }
  return out;
}

std::string summary_csv(
    const std::vector<workloads::ExperimentResult>& results) {
  std::string out =
      "experiment,transport,size,n,p50_ns,p95_ns,p99_ns,p100_ns,"
      "throughput_bytes_per_s\n";
  for (const auto& r : results) {
    out += to_string(r.spec.workload);
    out += ',';
    out += to_string(r.spec.transport);
    out += ',';
    out += std::to_string(r.spec.size);
    out += ',';
    out += std::to_string(r.summary.n);
    out += ',';
    out += std::to_string(r.summary.p50);
    out += ',';
    out += std::to_string(r.summary.p95);
    out += ',';
    out += std::to_string(r.summary.p99);
    out += ',';
    out += std::to_string(r.summary.p100);
    out += ',';
    out += format_throughput(r.throughput_bytes_per_s);
    out += '\n';
  }
  return out;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path + "'");
  f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  f.flush();
  if (!f) throw IoError("write failed for '" + path + "'");
}

}  // namespace cohbench
