#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "dkrrt/error.hpp"
#include "dkrrt/execution.hpp"
#include "dkrrt/scene_io.hpp"
#include "dkrrt/suite.hpp"
#include "dkrrt/training.hpp"

namespace fs = std::filesystem;
using namespace dkrrt;

namespace {

constexpr int kOk = 0;
constexpr int kRunFailed = 1;
constexpr int kConfigError = 2;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = ".";
  bool no_timing = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  cmd->add_option("--seed", c.seed, "Seed for the run");
  auto* opt = cmd->add_option("--config", c.config, "Configuration file (YAML)");
  if (config_required) opt->required();
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_flag("--no-timing", c.no_timing, "Write zero wall-clock times for byte-stable outputs");
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error(ErrorKind::InvalidInput, "cannot write " + p.string());
  return os;
}

int cmd_train(const Common& c) {
  TrainSetup setup = c.config.empty() ? TrainSetup{} : load_train_setup(c.config);
  if (c.seed) {
    setup.config.seed = *c.seed;
    setup.encoder_seed = *c.seed;
  }
  fs::create_directories(c.out);
  const ObservationDataset ds = generate_observations(setup.scene);
  std::vector<Index> widths{ds.observation_dim()};
  widths.insert(widths.end(), setup.encoder_hidden.begin(), setup.encoder_hidden.end());
  widths.push_back(setup.encoder_features);
  const Mlp enc = Mlp::glorot(widths, setup.encoder_seed);
  const TrainResult r = train(ds, setup.config, Dictionary::polynomial(ds.robot_dim(), setup.robot_degree), enc,
                              std::nullopt, TrainOptions{!c.no_timing});
  auto loss = open_out(fs::path(c.out) / "loss.csv");
  write_loss_csv(r.history, loss);
  auto timing = open_out(fs::path(c.out) / "timing.csv");
  write_timing_csv(r.history, timing);
  checkpoint(r, setup.config).save(fs::path(c.out) / "checkpoint.dkrc");
  const double first = r.history.empty() ? 0.0 : r.history.front().loss;
  const double last = r.history.empty() ? 0.0 : r.history.back().loss;
  std::cout << "trained " << r.history.size() << " epochs, loss " << first << " -> " << last << ", operator version "
            << r.operator_version << "\n";
  return kOk;
}

int cmd_plan(const Common& c, const std::string& method) {
  const Scene scene = load_scene(c.config);
  fs::create_directories(c.out);
  ExecutionOptions eo;
  eo.timing = !c.no_timing;
  eo.record_trajectory = true;
  const std::uint64_t seed = c.seed.value_or(0);
  const auto rep = execute_with_replanning(scene, parse_method(method), seed, eo);
  auto traj = open_out(fs::path(c.out) / "trajectory.csv");
  write_trajectory_csv(rep.trajectory, traj);
  MetricsRow row{scene.name,        method,          seed,           rep.success,       rep.outcome,
                 rep.execution_error, rep.training_ms, rep.planning_ms, rep.min_clearance, rep.finish_time};
  auto metrics = open_out(fs::path(c.out) / "metrics.csv");
  write_metrics_csv({row}, metrics);
  std::cout << scene.name << " " << method << " seed " << seed << ": " << rep.outcome << " at t = " << rep.finish_time
            << " s, execution error " << rep.execution_error << " rad, min clearance " << rep.min_clearance
            << " m\n";
  return rep.success ? kOk : kRunFailed;
}

int cmd_bench(const Common& c, bool serial, bool quiet) {
  const SuiteConfig cfg = load_suite(c.config);
  BenchmarkSuite suite;
  for (const auto& f : cfg.scene_files) suite.scenes.push_back(load_scene(f));
  suite.methods = cfg.methods;
  suite.seeds = cfg.seeds;
  suite.suite_seed = c.seed.value_or(cfg.suite_seed);
  fs::create_directories(c.out);
  SuiteOptions so;
  so.timing = !c.no_timing;
  if (cfg.write_trajectories) so.trajectory_dir = (fs::path(c.out) / "trajectories").string();
  const auto rows = serial ? run_suite_serial(suite, so) : run_suite(suite, so);
  const auto summary = aggregate(rows);
  auto m = open_out(fs::path(c.out) / cfg.metrics_out);
  write_metrics_csv(rows, m);
  auto sc = open_out(fs::path(c.out) / "summary.csv");
  write_summary_csv(summary, sc);
  auto sj = open_out(fs::path(c.out) / cfg.summary_out);
  write_summary_json(summary, sj);
  if (!quiet) {
    std::cout << std::left << std::setw(20) << "scene" << std::setw(10) << "method" << std::right << std::setw(8)
              << "success" << std::setw(14) << "exec_err" << std::setw(14) << "plan_ms" << "\n";
    for (const auto& s : summary)
      std::cout << std::left << std::setw(20) << s.scene << std::setw(10) << s.method << std::right << std::fixed
                << std::setprecision(2) << std::setw(8) << s.success_rate << std::setw(14) << std::setprecision(5)
                << s.execution_error_mean << std::setw(14) << std::setprecision(1) << s.planning_ms_mean << "\n";
  }
  return kOk;
}

int cmd_simulate(const Common& c, double duration) {
  const Scene scene = load_scene(c.config);
  if (!(duration > 0.0)) throw Error(ErrorKind::Config, "--duration must be positive");
  fs::create_directories(c.out);
  const Index n = scene.robot.dof();
  const auto steps = static_cast<Index>(std::llround(duration / scene.sim_dt));
  const auto every = static_cast<Index>(std::llround(scene.control_dt / scene.sim_dt));
  // unactuated robot from rest alongside the scripted debris
  const Trajectory traj = integrate_rk4(scene.robot, scene.start, VectorXd::Zero(n),
                                        [n](double, const VectorXd&, const VectorXd&) { return VectorXd::Zero(n); },
                                        scene.sim_dt, steps);
  std::vector<TrajectorySample> samples;
  auto debris = open_out(fs::path(c.out) / "debris.csv");
  debris << "# schema: debris/v1\nt";
  for (std::size_t i = 1; i <= scene.field.obstacles.size(); ++i) debris << ",x" << i << ",y" << i << ",z" << i;
  debris << '\n' << std::fixed << std::setprecision(9);
  for (Index k = 0; k <= steps; k += every) {
    const auto& st = traj.states[static_cast<std::size_t>(k)];
    const double t = static_cast<double>(k) * scene.sim_dt;
    const VectorXd q = st.robot.head(n), qd = st.robot.tail(n);
    TrajectorySample s{t, q, qd, end_effector(scene.robot, q), {}};
    const auto spheres = debris_positions(scene.field, t);
    debris << t;
    for (const auto& sp : spheres) {
      debris << ',' << sp.center.x() << ',' << sp.center.y() << ',' << sp.center.z();
      double best = kClearanceCap;
      for (const auto& seg : link_segments(scene.robot, q))
        best = std::min(best, capsule_sphere_distance(seg.a, seg.b, scene.robot.capsule_radius, sp));
      s.clearance.push_back(best);
    }
    debris << '\n';
    samples.push_back(std::move(s));
  }
  auto out = open_out(fs::path(c.out) / "trajectory.csv");
  write_trajectory_csv(samples, out);
  std::cout << "simulated " << duration << " s of " << scene.name << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman-predictive RRT planning among moving debris"};
  app.require_subcommand(1);
  Common train_c, plan_c, bench_c, sim_c;
  std::string method = "dk_rrt";
  bool serial = false, quiet = false;
  double duration = 10.0;

  auto* train = app.add_subcommand("train", "Train the observation encoder and Koopman operator");
  add_common(train, train_c, false);
  auto* plan = app.add_subcommand("plan", "Run one planning query with online replanning");
  add_common(plan, plan_c, true);
  plan->add_option("--method", method, "dk_rrt, frozen or reactive")->capture_default_str();
  auto* bench = app.add_subcommand("bench", "Run a benchmark suite");
  add_common(bench, bench_c, true);
  bench->add_flag("--serial", serial, "Run without the thread pool");
  bench->add_flag("--quiet", quiet, "Do not print the summary table");
  auto* sim = app.add_subcommand("simulate", "Ground-truth rollout of a scene without planning");
  add_common(sim, sim_c, true);
  sim->add_option("--duration", duration, "Simulated time [s]")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kConfigError;
  }

  try {
    if (*train) return cmd_train(train_c);
    if (*plan) return cmd_plan(plan_c, method);
    if (*bench) return cmd_bench(bench_c, serial, quiet);
    if (*sim) return cmd_simulate(sim_c, duration);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Config ? kConfigError : kRunFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailed;
  }
  return kConfigError;
}
