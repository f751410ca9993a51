#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dkrrt/execution.hpp"

namespace dkrrt {

struct BenchmarkSuite {
  std::vector<Scene> scenes;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
  std::uint64_t suite_seed = 0;

  void validate() const;
};

struct MetricsRow {
  std::string scene;
  std::string method;
  std::uint64_t seed = 0;
  bool success = false;
  std::string outcome;
  double execution_error = 0.0;  // rad
  double training_ms = 0.0;
  double planning_ms = 0.0;
  double min_clearance = 0.0;    // m
  double finish_time = 0.0;      // s
};

struct SuiteOptions {
  bool timing = true;
  std::string trajectory_dir;  // empty: no per-run trajectory CSVs
};

/// Seed of one run; methods on the same (scene, seed) share it so comparisons are paired.
std::uint64_t run_seed(std::uint64_t suite_seed, std::size_t scene_index, std::uint64_t seed);

/// One row per (scene, method, seed) in that nesting order; runs execute on an OpenMP pool.
std::vector<MetricsRow> run_suite(const BenchmarkSuite& suite, const SuiteOptions& options = {});
/// Serial reference for run_suite.
std::vector<MetricsRow> run_suite_serial(const BenchmarkSuite& suite, const SuiteOptions& options = {});

struct SummaryRow {
  std::string scene;
  std::string method;
  Index runs = 0;
  double success_rate = 0.0;
  double execution_error_mean = 0.0;
  double execution_error_std = 0.0;  // sample std (n - 1), 0 for a single run
  double training_ms_mean = 0.0;
  double planning_ms_mean = 0.0;
  double min_clearance_mean = 0.0;
};

/// Per (scene, method) in order of first appearance. Throws EmptyDataset on no rows.
std::vector<SummaryRow> aggregate(const std::vector<MetricsRow>& rows);

void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& os);
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os);
void write_summary_json(const std::vector<SummaryRow>& rows, std::ostream& os);

}  // namespace dkrrt
