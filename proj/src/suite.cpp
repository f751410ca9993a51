#include "dkrrt/suite.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>

#include <json.hpp>

#include "dkrrt/error.hpp"

namespace dkrrt {

namespace {

struct RunSpec {
  std::size_t scene;
  Method method;
  std::uint64_t seed;
};

std::vector<RunSpec> expand(const BenchmarkSuite& suite) {
  std::vector<RunSpec> runs;
  for (std::size_t s = 0; s < suite.scenes.size(); ++s)
    for (Method m : suite.methods)
      for (std::uint64_t seed : suite.seeds) runs.push_back({s, m, seed});
  return runs;
}

MetricsRow run_one(const BenchmarkSuite& suite, const RunSpec& r, const SuiteOptions& options) {
  const Scene& scene = suite.scenes[r.scene];
  ExecutionOptions eo;
  eo.timing = options.timing;
  eo.record_trajectory = !options.trajectory_dir.empty();
  const auto rep = execute_with_replanning(scene, r.method, run_seed(suite.suite_seed, r.scene, r.seed), eo);
  if (eo.record_trajectory) {
    const auto path = std::filesystem::path(options.trajectory_dir) /
                      (scene.name + "_" + method_name(r.method) + "_" + std::to_string(r.seed) + ".csv");
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path.string());
    write_trajectory_csv(rep.trajectory, out);
  }
  MetricsRow row;
  row.scene = scene.name;
  row.method = method_name(r.method);
  row.seed = r.seed;
  row.success = rep.success;
  row.outcome = rep.outcome;
  row.execution_error = rep.execution_error;
  row.training_ms = rep.training_ms;
  row.planning_ms = rep.planning_ms;
  row.min_clearance = rep.min_clearance;
  row.finish_time = rep.finish_time;
  return row;
}

}  // namespace

void BenchmarkSuite::validate() const {
  require(!scenes.empty(), ErrorKind::Config, "suite needs at least one scene");
  require(!methods.empty(), ErrorKind::Config, "suite needs at least one method");
  require(!seeds.empty(), ErrorKind::Config, "suite needs at least one seed");
  for (const auto& s : scenes) s.validate();
}

std::uint64_t run_seed(std::uint64_t suite_seed, std::size_t scene_index, std::uint64_t seed) {
  return derive_seed(derive_seed(suite_seed, scene_index), seed);
}

std::vector<MetricsRow> run_suite(const BenchmarkSuite& suite, const SuiteOptions& options) {
  suite.validate();
  if (!options.trajectory_dir.empty()) std::filesystem::create_directories(options.trajectory_dir);
  const auto runs = expand(suite);
  std::vector<MetricsRow> rows(runs.size());
  std::vector<std::string> errors(runs.size());
  const auto n = static_cast<long>(runs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      rows[static_cast<std::size_t>(i)] = run_one(suite, runs[static_cast<std::size_t>(i)], options);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error(ErrorKind::InvalidInput, "benchmark run failed: " + e);
  return rows;
}

std::vector<MetricsRow> run_suite_serial(const BenchmarkSuite& suite, const SuiteOptions& options) {
  suite.validate();
  if (!options.trajectory_dir.empty()) std::filesystem::create_directories(options.trajectory_dir);
  std::vector<MetricsRow> rows;
  for (const auto& r : expand(suite)) rows.push_back(run_one(suite, r, options));
  return rows;
}

std::vector<SummaryRow> aggregate(const std::vector<MetricsRow>& rows) {
  require(!rows.empty(), ErrorKind::EmptyDataset, "no metrics rows to aggregate");
  std::vector<SummaryRow> out;
  std::map<std::pair<std::string, std::string>, std::vector<const MetricsRow*>> groups;
  for (const auto& r : rows) {
    auto& g = groups[{r.scene, r.method}];
    if (g.empty()) out.push_back({r.scene, r.method});
    g.push_back(&r);
  }
  for (auto& s : out) {
    const auto& g = groups[{s.scene, s.method}];
    const auto n = static_cast<double>(g.size());
    s.runs = static_cast<Index>(g.size());
    double ok = 0.0, err = 0.0, tr = 0.0, pl = 0.0, cl = 0.0;
    for (const auto* r : g) {
      ok += r->success ? 1.0 : 0.0;
      err += r->execution_error;
      tr += r->training_ms;
      pl += r->planning_ms;
      cl += r->min_clearance;
    }
    s.success_rate = ok / n;
    s.execution_error_mean = err / n;
    s.training_ms_mean = tr / n;
    s.planning_ms_mean = pl / n;
    s.min_clearance_mean = cl / n;
    if (g.size() > 1) {
      double ss = 0.0;
      for (const auto* r : g) ss += (r->execution_error - s.execution_error_mean) * (r->execution_error - s.execution_error_mean);
      s.execution_error_std = std::sqrt(ss / (n - 1.0));
    }
  }
  return out;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& os) {
  os << "# schema: metrics/v1\n"
     << "scene,method,seed,success,outcome,execution_error,training_ms,planning_ms,min_clearance,finish_time\n";
  for (const auto& r : rows) {
    os << r.scene << ',' << r.method << ',' << r.seed << ',' << (r.success ? 1 : 0) << ',' << r.outcome << ','
       << std::fixed << std::setprecision(9) << r.execution_error << ',' << std::setprecision(3) << r.training_ms
       << ',' << r.planning_ms << ',' << std::setprecision(9) << r.min_clearance << ',' << std::setprecision(3)
       << r.finish_time << '\n';
  }
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os) {
  os << "# schema: summary/v1\n"
     << "scene,method,runs,success_rate,execution_error_mean,execution_error_std,training_ms_mean,"
        "planning_ms_mean,min_clearance_mean\n";
  for (const auto& r : rows) {
    os << r.scene << ',' << r.method << ',' << r.runs << ',' << std::fixed << std::setprecision(6) << r.success_rate
       << ',' << std::setprecision(9) << r.execution_error_mean << ',' << r.execution_error_std << ','
       << std::setprecision(3) << r.training_ms_mean << ',' << r.planning_ms_mean << ',' << std::setprecision(9)
       << r.min_clearance_mean << '\n';
  }
}

void write_summary_json(const std::vector<SummaryRow>& rows, std::ostream& os) {
  nlohmann::ordered_json j;
  j["schema"] = "summary/v1";
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"scene", r.scene},
                         {"method", r.method},
                         {"runs", r.runs},
                         {"success_rate", r.success_rate},
                         {"execution_error_mean", r.execution_error_mean},
                         {"execution_error_std", r.execution_error_std},
                         {"training_ms_mean", r.training_ms_mean},
                         {"planning_ms_mean", r.planning_ms_mean},
                         {"min_clearance_mean", r.min_clearance_mean}});
  }
  os << j.dump(2) << '\n';
}

}  // namespace dkrrt
