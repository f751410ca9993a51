#include "dkrrt/scene_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "dkrrt/error.hpp"

namespace dkrrt {

namespace {

namespace fs = std::filesystem;

// parse context: names the file and the line of the offending node
struct Ctx {
  std::string origin;

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    const auto m = n.Mark();
    const std::string where = m.is_null() ? origin : origin + ":" + std::to_string(m.line + 1);
    throw Error(ErrorKind::Config, where + ": " + msg);
  }

  void check_keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& what) const {
    if (!map.IsMap()) fail(map, what + " must be a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

  template <typename T>
  T as(const YAML::Node& n, const std::string& what) const {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "invalid value for " + what);
    }
  }

  template <typename T>
  void opt(const YAML::Node& map, const char* key, T& out) const {
    if (const auto n = map[key]) out = as<T>(n, key);
  }

  YAML::Node need(const YAML::Node& map, const char* key) const {
    const auto n = map[key];
    if (!n) fail(map, std::string("missing required key '") + key + "'");
    return n;
  }

  std::vector<double> list(const YAML::Node& n, const std::string& what, std::size_t size = 0) const {
    if (!n.IsSequence()) fail(n, what + " must be a list");
    std::vector<double> out;
    for (const auto& x : n) out.push_back(as<double>(x, what));
    if (size && out.size() != size) fail(n, what + " must have " + std::to_string(size) + " entries");
    return out;
  }

  Vec3 vec3(const YAML::Node& n, const std::string& what) const {
    const auto v = list(n, what, 3);
    return {v[0], v[1], v[2]};
  }

  VectorXd vecx(const YAML::Node& n, const std::string& what) const {
    const auto v = list(n, what);
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
  }
};

YAML::Node load_yaml(const std::string& text, const std::string& origin) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorKind::Config, origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Config, file.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ManipulatorModel parse_robot(const Ctx& c, const YAML::Node& n) {
  c.check_keys(n, {"preset", "gravity", "capsule_radius", "links"}, "robot");
  ManipulatorModel m;
  std::string preset = n["links"] ? "" : "default_arm";
  c.opt(n, "preset", preset);
  if (!preset.empty()) {
    if (preset != "default_arm") c.fail(n["preset"], "unknown robot preset '" + preset + "'");
    if (n["links"]) c.fail(n["links"], "give either a preset or links, not both");
    m = ManipulatorModel::default_arm();
  } else {
    const auto links = n["links"];
    if (!links.IsSequence() || links.size() == 0) c.fail(links, "links must be a non-empty list");
    for (const auto& l : links) {
      c.check_keys(l, {"a", "alpha", "d", "theta_offset", "mass", "com", "inertia", "q_min", "q_max", "qd_max"},
                   "link");
      DhLink d;
      c.opt(l, "a", d.a);
      c.opt(l, "alpha", d.alpha);
      c.opt(l, "d", d.d);
      c.opt(l, "theta_offset", d.theta_offset);
      c.opt(l, "mass", d.mass);
      d.com = l["com"] ? c.vec3(l["com"], "com") : ManipulatorModel::link_midpoint(d);
      if (const auto in = l["inertia"]) {
        const auto v = c.list(in, "inertia");
        if (v.size() == 3) {
          d.inertia = Vec3(v[0], v[1], v[2]).asDiagonal();
        } else if (v.size() == 9) {
          d.inertia = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(v.data());
        } else {
          c.fail(in, "inertia must have 3 (diagonal) or 9 entries");
        }
      }
      c.opt(l, "q_min", d.q_min);
      c.opt(l, "q_max", d.q_max);
      c.opt(l, "qd_max", d.qd_max);
      m.links.push_back(d);
    }
  }
  if (n["gravity"]) m.gravity = c.vec3(n["gravity"], "gravity");
  c.opt(n, "capsule_radius", m.capsule_radius);
  try {
    m.validate();
  } catch (const Error& e) {
    c.fail(n, e.what());
  }
  return m;
}

Obstacle parse_obstacle(const Ctx& c, const YAML::Node& n) {
  if (!n.IsMap()) c.fail(n, "debris entry must be a mapping");
  const auto kind = c.as<std::string>(c.need(n, "motion"), "motion");
  Obstacle o;
  if (kind == "ballistic") {
    c.check_keys(n, {"motion", "radius", "p0", "v0"}, "ballistic debris");
    BallisticMotion b;
    b.p0 = c.vec3(c.need(n, "p0"), "p0");
    if (n["v0"]) b.v0 = c.vec3(n["v0"], "v0");
    o.motion = b;
  } else if (kind == "sinusoidal") {
    c.check_keys(n, {"motion", "radius", "center", "amplitude", "rate", "phase"}, "sinusoidal debris");
    SinusoidalMotion s;
    s.center = c.vec3(c.need(n, "center"), "center");
    s.amplitude = c.vec3(c.need(n, "amplitude"), "amplitude");
    s.rate = c.as<double>(c.need(n, "rate"), "rate");
    c.opt(n, "phase", s.phase);
    o.motion = s;
  } else if (kind == "circular") {
    c.check_keys(n, {"motion", "radius", "center", "orbit_radius", "rate", "phase"}, "circular debris");
    CircularMotion s;
    s.center = c.vec3(c.need(n, "center"), "center");
    s.radius = c.as<double>(c.need(n, "orbit_radius"), "orbit_radius");
    s.rate = c.as<double>(c.need(n, "rate"), "rate");
    c.opt(n, "phase", s.phase);
    o.motion = s;
  } else if (kind == "reversing") {
    c.check_keys(n, {"motion", "radius", "p0", "v0", "t_reverse"}, "reversing debris");
    ReversingMotion r;
    r.p0 = c.vec3(c.need(n, "p0"), "p0");
    r.v0 = c.vec3(c.need(n, "v0"), "v0");
    r.t_reverse = c.as<double>(c.need(n, "t_reverse"), "t_reverse");
    o.motion = r;
  } else {
    c.fail(n["motion"], "unknown motion '" + kind + "' (ballistic, sinusoidal, circular, reversing)");
  }
  o.radius = c.as<double>(c.need(n, "radius"), "radius");
  if (!(o.radius > 0.0)) c.fail(n["radius"], "radius must be positive");
  return o;
}

}  // namespace

Scene parse_scene(const std::string& text, const std::string& origin) {
  const Ctx c{origin};
  const YAML::Node root = load_yaml(text, origin);
  if (!root || !root.IsMap()) throw Error(ErrorKind::Config, origin + ":1: scene file must be a mapping");
  c.check_keys(root,
               {"name", "robot", "start", "goal", "goal_tolerance", "time_limit", "warmup", "control_dt", "sim_dt",
                "replan_period", "debris", "learner", "tracking", "planner"},
               "scene");
  Scene s;
  c.opt(root, "name", s.name);
  if (root["robot"]) s.robot = parse_robot(c, root["robot"]);
  s.start = c.vecx(c.need(root, "start"), "start");
  if (s.start.size() != s.robot.dof())
    c.fail(root["start"], "start needs " + std::to_string(s.robot.dof()) + " joint values");
  s.goal = c.vec3(c.need(root, "goal"), "goal");
  c.opt(root, "goal_tolerance", s.goal_tolerance);
  c.opt(root, "time_limit", s.time_limit);
  c.opt(root, "warmup", s.warmup);
  c.opt(root, "control_dt", s.control_dt);
  c.opt(root, "sim_dt", s.sim_dt);
  c.opt(root, "replan_period", s.replan_period);
  if (const auto d = root["debris"]) {
    if (!d.IsSequence()) c.fail(d, "debris must be a list");
    for (const auto& o : d) s.field.obstacles.push_back(parse_obstacle(c, o));
  }
  if (const auto l = root["learner"]) {
    c.check_keys(l, {"window", "refit_period", "tol_rel", "horizon_steps", "inflation", "observation_noise"},
                 "learner");
    c.opt(l, "window", s.learner.window);
    c.opt(l, "refit_period", s.learner.refit_period);
    c.opt(l, "tol_rel", s.learner.tol_rel);
    c.opt(l, "horizon_steps", s.learner.horizon_steps);
    c.opt(l, "observation_noise", s.learner.observation_noise);
    if (const auto inf = l["inflation"]) {
      c.check_keys(inf, {"c0", "c1"}, "inflation");
      c.opt(inf, "c0", s.learner.inflation.c0);
      c.opt(inf, "c1", s.learner.inflation.c1);
    }
  }
  if (const auto t = root["tracking"]) {
    c.check_keys(t, {"kp", "kd"}, "tracking");
    c.opt(t, "kp", s.gains.kp);
    c.opt(t, "kd", s.gains.kd);
  }
  if (const auto p = root["planner"]) {
    c.check_keys(p, {"max_nodes", "step_size", "goal_bias", "wait_probability", "min_speed_fraction", "resolution"},
                 "planner");
    c.opt(p, "max_nodes", s.planner.max_nodes);
    c.opt(p, "step_size", s.planner.step_size);
    c.opt(p, "goal_bias", s.planner.goal_bias);
    c.opt(p, "wait_probability", s.planner.wait_probability);
    c.opt(p, "min_speed_fraction", s.planner.min_speed_fraction);
    c.opt(p, "resolution", s.planner.resolution);
  }
  try {
    s.validate();
    PlanQuery q = s.planner;
    q.start = s.start;
    q.goal = s.goal;
    q.goal_tolerance = s.goal_tolerance;
    q.validate(s.robot);
  } catch (const Error& e) {
    c.fail(root, e.what());
  }
  return s;
}

Scene load_scene(const fs::path& file) { return parse_scene(read_file(file), file.string()); }

SuiteConfig parse_suite(const std::string& text, const std::string& origin, const fs::path& base_dir) {
  const Ctx c{origin};
  const YAML::Node root = load_yaml(text, origin);
  if (!root || !root.IsMap()) throw Error(ErrorKind::Config, origin + ":1: suite file must be a mapping");
  c.check_keys(root, {"scenes", "methods", "seeds", "suite_seed", "metrics_out", "summary_out", "trajectories"},
               "suite");
  SuiteConfig s;
  const auto scenes = c.need(root, "scenes");
  if (!scenes.IsSequence() || scenes.size() == 0) c.fail(scenes, "scenes must be a non-empty list");
  for (const auto& f : scenes) {
    fs::path p = c.as<std::string>(f, "scene path");
    s.scene_files.push_back(p.is_absolute() ? p : base_dir / p);
  }
  if (const auto m = root["methods"]) {
    if (!m.IsSequence() || m.size() == 0) c.fail(m, "methods must be a non-empty list");
    for (const auto& x : m) {
      try {
        s.methods.push_back(parse_method(c.as<std::string>(x, "method")));
      } catch (const Error& e) {
        c.fail(x, e.what());
      }
    }
  } else {
    s.methods = {Method::DkRrt, Method::Frozen, Method::Reactive};
  }
  const auto seeds = c.need(root, "seeds");
  if (seeds.IsSequence()) {
    for (const auto& x : seeds) s.seeds.push_back(c.as<std::uint64_t>(x, "seed"));
  } else if (seeds.IsMap()) {
    c.check_keys(seeds, {"first", "count"}, "seeds");
    std::uint64_t first = 0, count = 0;
    c.opt(seeds, "first", first);
    count = c.as<std::uint64_t>(c.need(seeds, "count"), "count");
    for (std::uint64_t i = 0; i < count; ++i) s.seeds.push_back(first + i);
  } else {
    c.fail(seeds, "seeds must be a list or {first, count}");
  }
  if (s.seeds.empty()) c.fail(seeds, "at least one seed is required");
  c.opt(root, "suite_seed", s.suite_seed);
  c.opt(root, "metrics_out", s.metrics_out);
  c.opt(root, "summary_out", s.summary_out);
  c.opt(root, "trajectories", s.write_trajectories);
  return s;
}

SuiteConfig load_suite(const fs::path& file) {
  return parse_suite(read_file(file), file.string(), file.parent_path());
}

TrainSetup parse_train_setup(const std::string& text, const std::string& origin) {
  const Ctx c{origin};
  const YAML::Node root = load_yaml(text, origin);
  if (!root || !root.IsMap()) throw Error(ErrorKind::Config, origin + ":1: training file must be a mapping");
  c.check_keys(root, {"data", "schedule", "encoder", "robot_dictionary"}, "training config");
  TrainSetup t;
  if (const auto d = root["data"]) {
    c.check_keys(d, {"trajectories", "samples", "dt", "seed", "noise_sigma", "grid"}, "data");
    c.opt(d, "trajectories", t.scene.trajectories);
    c.opt(d, "samples", t.scene.samples);
    c.opt(d, "dt", t.scene.dt);
    c.opt(d, "seed", t.scene.seed);
    c.opt(d, "noise_sigma", t.scene.observation.noise_sigma);
    if (const auto g = d["grid"]) {
      const auto v = c.list(g, "grid", 2);
      t.scene.observation.rows = static_cast<Index>(v[0]);
      t.scene.observation.cols = static_cast<Index>(v[1]);
    }
  }
  if (const auto s = root["schedule"]) {
    c.check_keys(s, {"n_epoch", "n_step", "refit_period", "learning_rate", "batch", "seed", "tol_rel", "ridge"},
                 "schedule");
    c.opt(s, "n_epoch", t.config.n_epoch);
    c.opt(s, "n_step", t.config.n_step);
    c.opt(s, "refit_period", t.config.refit_period);
    c.opt(s, "learning_rate", t.config.learning_rate);
    c.opt(s, "batch", t.config.batch);
    c.opt(s, "seed", t.config.seed);
    c.opt(s, "tol_rel", t.config.tol_rel);
    c.opt(s, "ridge", t.config.ridge);
  }
  if (const auto e = root["encoder"]) {
    c.check_keys(e, {"hidden", "features", "seed"}, "encoder");
    if (e["hidden"]) {
      t.encoder_hidden.clear();
      for (double h : c.list(e["hidden"], "hidden")) {
        if (h < 1) c.fail(e["hidden"], "hidden widths must be >= 1");
        t.encoder_hidden.push_back(static_cast<Index>(h));
      }
    }
    c.opt(e, "features", t.encoder_features);
    c.opt(e, "seed", t.encoder_seed);
    if (t.encoder_features < 1) c.fail(e, "encoder needs at least one feature");
  }
  if (const auto r = root["robot_dictionary"]) {
    c.check_keys(r, {"degree"}, "robot_dictionary");
    c.opt(r, "degree", t.robot_degree);
    if (t.robot_degree < 1) c.fail(r, "polynomial degree must be >= 1");
  }
  try {
    t.config.validate();
    t.scene.validate();
  } catch (const Error& e) {
    c.fail(root, e.what());
  }
  return t;
}

TrainSetup load_train_setup(const fs::path& file) { return parse_train_setup(read_file(file), file.string()); }

}  // namespace dkrrt
