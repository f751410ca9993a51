#include "dkrrt/training.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>

#include "dkrrt/error.hpp"

namespace dkrrt {

void TrainingConfig::validate() const {
  require(n_epoch >= 0, ErrorKind::Config, "n_epoch must be >= 0");
  require(n_step >= 1, ErrorKind::Config, "n_step must be >= 1");
  require(refit_period >= 1, ErrorKind::Config, "refit_period must be >= 1");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::Config,
          "learning_rate must be positive");
  require(batch >= 1, ErrorKind::Config, "batch must be >= 1");
  require(tol_rel > 0.0 && tol_rel < 1.0, ErrorKind::Config, "tol_rel must lie in (0, 1)");
  require(ridge >= 0.0, ErrorKind::Config, "ridge must be >= 0");
}

Container TrainingConfig::to_container() const {
  Container c;
  c.put("n_epoch", static_cast<std::int64_t>(n_epoch));
  c.put("n_step", static_cast<std::int64_t>(n_step));
  c.put("refit_period", static_cast<std::int64_t>(refit_period));
  c.put("learning_rate", learning_rate);
  c.put("batch", static_cast<std::int64_t>(batch));
  c.put("seed", static_cast<std::int64_t>(seed));
  c.put("tol_rel", tol_rel);
  c.put("ridge", ridge);
  return c;
}

TrainingConfig TrainingConfig::from_container(const Container& c) {
  TrainingConfig t;
  t.n_epoch = c.integer("n_epoch");
  t.n_step = c.integer("n_step");
  t.refit_period = c.integer("refit_period");
  t.learning_rate = c.scalar("learning_rate");
  t.batch = c.integer("batch");
  t.seed = static_cast<std::uint64_t>(c.integer("seed"));
  t.tol_rel = c.scalar("tol_rel");
  t.ridge = c.scalar("ridge");
  return t;
}

// ---------------------------------------------------------------- dataset

Index ObservationDataset::robot_dim() const {
  return trajectories.empty() || trajectories.front().robot.empty() ? 0
                                                                     : trajectories.front().robot.front().size();
}

Index ObservationDataset::observation_dim() const {
  return trajectories.empty() || trajectories.front().observations.empty()
             ? 0
             : trajectories.front().observations.front().size();
}

Index ObservationDataset::object_dim() const {
  return trajectories.empty() || trajectories.front().objects.empty()
             ? 0
             : trajectories.front().objects.front().size();
}

Index ObservationDataset::input_dim() const {
  return trajectories.empty() || trajectories.front().inputs.empty()
             ? 0
             : trajectories.front().inputs.front().size();
}

void ObservationDataset::validate() const {
  require(!trajectories.empty(), ErrorKind::EmptyDataset, "observation dataset is empty");
  require(dt > 0.0, ErrorKind::InvalidInput, "observation dataset dt must be positive");
  const Index nr = robot_dim(), no = observation_dim(), nw = object_dim(), m = input_dim();
  for (const auto& t : trajectories) {
    require(t.size() >= 2, ErrorKind::EmptyDataset, "observation trajectory needs >= 2 samples");
    require(static_cast<Index>(t.observations.size()) == t.size() &&
                (t.objects.empty() || static_cast<Index>(t.objects.size()) == t.size()) &&
                static_cast<Index>(t.inputs.size()) + 1 == t.size(),
            ErrorKind::DimensionMismatch, "observation trajectory lengths are not aligned");
    for (Index k = 0; k < t.size(); ++k) {
      const auto i = static_cast<std::size_t>(k);
      require(t.robot[i].size() == nr && t.observations[i].size() == no &&
                  (t.objects.empty() || t.objects[i].size() == nw),
              ErrorKind::DimensionMismatch, "observation sample dimensions change");
      if (k + 1 < t.size())
        require(t.inputs[i].size() == m, ErrorKind::DimensionMismatch, "input dimension changes");
    }
  }
}

FeatureFn encoder_features(const Mlp& enc) {
  return [enc](const ObservationTrajectory& t, Index k) {
    return enc.forward(t.observations[static_cast<std::size_t>(k)]);
  };
}

FeatureFn truth_features() {
  return [](const ObservationTrajectory& t, Index k) {
    require(!t.objects.empty(), ErrorKind::InvalidInput, "trajectory has no ground-truth objects");
    return t.objects[static_cast<std::size_t>(k)];
  };
}

std::vector<Trajectory> composite_trajectories(const ObservationDataset& ds, const FeatureFn& features) {
  ds.validate();
  std::vector<Trajectory> out;
  out.reserve(ds.trajectories.size());
  for (const auto& t : ds.trajectories) {
    Trajectory c;
    c.dt = ds.dt;
    c.inputs = t.inputs;
    for (Index k = 0; k < t.size(); ++k)
      c.states.push_back({t.robot[static_cast<std::size_t>(k)], features(t, k), static_cast<double>(k) * ds.dt});
    out.push_back(std::move(c));
  }
  return out;
}

Dictionary training_dictionary(const Dictionary& dict_r, const Dictionary& dict_w) {
  return compose_composite(dict_r, dict_w);
}

// ---------------------------------------------------------------- rollout loss

namespace {

void check_window(const ObservationTrajectory& traj, Index tau0, Index n_step) {
  require(n_step >= 1, ErrorKind::InvalidInput, "n_step must be >= 1");
  require(tau0 >= 0 && tau0 + n_step + 1 < traj.size(), ErrorKind::Index,
          "window [" + std::to_string(tau0) + ", " + std::to_string(tau0 + n_step + 1) +
              "] exceeds a trajectory of " + std::to_string(traj.size()) + " samples");
}

}  // namespace

RolloutGradient rollout_loss_gradient(const LiftedOperator& op, const Dictionary& dict,
                                      const ObservationTrajectory& traj, Index tau0, Index n_step,
                                      const VectorXd& w0) {
  check_window(traj, tau0, n_step);
  require(op.dict_id == dict.id(), ErrorKind::DimensionMismatch, "operator and dictionary do not match");
  const auto t0 = static_cast<std::size_t>(tau0);
  const Index nr = traj.robot[t0].size();
  const Index n = nr + w0.size();
  require(n == dict.in_dim(), ErrorKind::DimensionMismatch, "features do not match the dictionary");

  // forward pass, keeping the states for the adjoint sweep
  const Index steps = n_step + 1;
  std::vector<VectorXd> s(static_cast<std::size_t>(steps + 1));
  s[0].resize(n);
  s[0] << traj.robot[t0], w0;
  const MatrixXd pg = op.Pi * op.Gamma;
  RolloutGradient out;
  std::vector<VectorXd> err(static_cast<std::size_t>(steps + 1));
  for (Index k = 0; k < steps; ++k) {
    const auto i = static_cast<std::size_t>(k);
    VectorXd next = pg * dict.lift(s[i]);
    const VectorXd& u = traj.inputs[t0 + i];
    if (u.size() > 0) next.noalias() += op.Pi * (op.Delta * u);
    s[i + 1] = std::move(next);
    err[i + 1] = s[i + 1].head(nr) - traj.robot[t0 + i + 1];
    out.loss += err[i + 1].squaredNorm();
  }

  // adjoint: a_k = dL/ds_k
  VectorXd a = VectorXd::Zero(n);
  for (Index k = steps; k >= 1; --k) {
    const auto i = static_cast<std::size_t>(k);
    a.head(nr) += 2.0 * err[i];
    a = dict.state_jacobian(s[i - 1]).transpose() * (pg.transpose() * a);
  }
  out.d_features = a.tail(w0.size());
  return out;
}

double rollout_loss(const LiftedOperator& op, const Dictionary& dict, const Mlp& enc,
                    const ObservationTrajectory& traj, Index tau0, Index n_step) {
  check_window(traj, tau0, n_step);
  const VectorXd w0 = enc.forward(traj.observations[static_cast<std::size_t>(tau0)]);
  return rollout_loss_gradient(op, dict, traj, tau0, n_step, w0).loss;
}

VectorXd rollout_param_gradient(const LiftedOperator& op, const Dictionary& dict, const Mlp& enc,
                                const ObservationTrajectory& traj, Index tau0, Index n_step,
                                double* loss) {
  check_window(traj, tau0, n_step);
  const VectorXd& obs = traj.observations[static_cast<std::size_t>(tau0)];
  const RolloutGradient g = rollout_loss_gradient(op, dict, traj, tau0, n_step, enc.forward(obs));
  if (loss) *loss = g.loss;
  return enc.backward_params(obs, g.d_features);
}

LiftedOperator refit_operator(const ObservationDataset& ds, const FeatureFn& features,
                              const Dictionary& dict, const FitOptions& opts) {
  const auto trajs = composite_trajectories(ds, features);
  return fit_edmd(build_snapshots(trajs), dict, opts);
}

LiftedOperator refit_operator(const ObservationDataset& ds, const Mlp& enc, const Dictionary& dict,
                              const FitOptions& opts) {
  return refit_operator(ds, encoder_features(enc), dict, opts);
}

// ---------------------------------------------------------------- training loop

TrainResult train(const ObservationDataset& ds, const TrainingConfig& cfg, const Dictionary& dict_r,
                  const Mlp& enc, const std::optional<Dictionary>& dict_w, const TrainOptions& options) {
  cfg.validate();
  ds.validate();
  require(dict_r.in_dim() == ds.robot_dim(), ErrorKind::DimensionMismatch,
          "robot dictionary does not match the robot state");
  require(enc.in_dim() == ds.observation_dim(), ErrorKind::DimensionMismatch,
          "encoder input does not match the observations");

  const Dictionary dw = dict_w ? *dict_w : Dictionary::identity(enc.out_dim());
  require(dw.in_dim() == enc.out_dim(), ErrorKind::DimensionMismatch,
          "object dictionary does not match the encoder output");
  const FitOptions fit{cfg.tol_rel, cfg.ridge};

  TrainResult r{enc, LiftedOperator{}, training_dictionary(dict_r, dw), {}, {}, 0};
  r.op = refit_operator(ds, r.encoder, r.dict, fit);
  r.operator_version = 1;

  // valid windows: (trajectory, tau0) with tau0 + n_step + 1 inside the run
  std::vector<std::pair<std::size_t, Index>> windows;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i)
    for (Index t = 0; t + cfg.n_step + 1 < ds.trajectories[i].size(); ++t) windows.emplace_back(i, t);
  if (cfg.n_epoch > 0)
    require(!windows.empty(), ErrorKind::Index, "no trajectory is long enough for n_step");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, windows.empty() ? 0 : windows.size() - 1);
  using clock = std::chrono::steady_clock;

  for (Index epoch = 0; epoch < cfg.n_epoch; ++epoch) {
    const auto start = clock::now();
    VectorXd grad = VectorXd::Zero(r.encoder.param_count());
    double loss = 0.0;
    for (Index b = 0; b < cfg.batch; ++b) {
      const auto& [ti, tau0] = windows[pick(rng)];
      double l = 0.0;
      grad += rollout_param_gradient(r.op, r.dict, r.encoder, ds.trajectories[ti], tau0, cfg.n_step, &l);
      loss += l;
    }
    loss /= static_cast<double>(cfg.batch);
    grad /= static_cast<double>(cfg.batch);
    if (!std::isfinite(loss) || !all_finite(grad))
      throw StepError(ErrorKind::TrainingDiverged, epoch, "training loss is not finite");
    r.encoder.add_scaled(-cfg.learning_rate, grad);

    if ((epoch + 1) % cfg.refit_period == 0) {
      const auto trajs = composite_trajectories(ds, encoder_features(r.encoder));
      RefitRecord rec;
      rec.epoch = epoch;
      rec.loss_before = prediction_loss(r.op, r.dict, trajs);
      r.op = fit_edmd(build_snapshots(trajs), r.dict, fit);
      rec.loss_after = prediction_loss(r.op, r.dict, trajs);
      rec.version = ++r.operator_version;
      r.refits.push_back(rec);
    }
    const double ms =
        options.timing ? std::chrono::duration<double, std::milli>(clock::now() - start).count() : 0.0;
    r.history.push_back({epoch, loss, r.operator_version, ms});
  }
  return r;
}

void write_loss_csv(const std::vector<EpochLog>& history, std::ostream& os) {
  os << "# schema: loss/v1\n";
  os << "epoch,loss,operator_version\n";
  for (const auto& e : history) os << e.epoch << ',' << std::setprecision(17) << e.loss << ',' << e.operator_version << '\n';
}

void write_timing_csv(const std::vector<EpochLog>& history, std::ostream& os) {
  os << "# schema: timing/v1\n";
  os << "epoch,wall_ms\n";
  for (const auto& e : history)
    os << e.epoch << ',' << std::fixed << std::setprecision(3) << e.wall_ms << std::defaultfloat << '\n';
}

Container checkpoint(const TrainResult& r, const TrainingConfig& cfg) {
  Container c;
  c.put("type", "training_checkpoint");
  c.merge("encoder", r.encoder.to_container());
  c.merge("operator", r.op.to_container());
  c.merge("dictionary", r.dict.to_container());
  c.merge("config", cfg.to_container());
  c.put("seed", static_cast<std::int64_t>(cfg.seed));
  c.put("operator_version", static_cast<std::int64_t>(r.operator_version));
  VectorXd losses(static_cast<Index>(r.history.size()));
  for (std::size_t i = 0; i < r.history.size(); ++i) losses(static_cast<Index>(i)) = r.history[i].loss;
  c.put("loss_history", losses);
  return c;
}

// ---------------------------------------------------------------- synthetic scene

TrainingScene TrainingScene::two_obstacle() {
  TrainingScene s;
  DhLink link;
  link.a = 1.0;
  link.mass = 1.0;
  link.com = Vec3(-0.5, 0.0, 0.0);
  link.inertia = Vec3(0.01, 0.09, 0.09).asDiagonal();
  link.q_min = -2.0 * std::numbers::pi;
  link.q_max = 2.0 * std::numbers::pi;
  link.qd_max = 5.0;
  s.robot.links = {link};
  s.robot.gravity = Vec3(0.0, -9.81, 0.0);
  s.field.obstacles.push_back({0.35, CircularMotion{Vec3::Zero(), 1.1, 0.9, 0.0}});
  s.field.obstacles.push_back({0.25, CircularMotion{Vec3::Zero(), 0.6, -1.7, 1.0}});
  s.observation.rows = 16;
  s.observation.cols = 16;
  s.observation.extent = 4.0;
  s.observation.noise_sigma = 0.01;
  s.coupling = VectorXd(4);
  s.coupling << 1.5, 0.0, 0.0, -2.0;
  return s;
}

void TrainingScene::validate() const {
  robot.validate();
  field.validate();
  observation.validate();
  require(robot.dof() == 1, ErrorKind::Config, "training scene robot must have one joint");
  require(coupling.size() == 2 * static_cast<Index>(field.obstacles.size()), ErrorKind::Config,
          "coupling needs one gain per planar obstacle coordinate");
  require(trajectories >= 1 && samples >= 2, ErrorKind::Config, "training scene needs runs of >= 2 samples");
  require(dt > 0.0 && sim_dt > 0.0 && sim_dt <= dt, ErrorKind::Config, "bad training scene time steps");
  const double ratio = dt / sim_dt;
  require(std::abs(ratio - std::round(ratio)) < 1e-9, ErrorKind::Config,
          "dt must be an integer multiple of sim_dt");
}

ObservationDataset generate_observations(const TrainingScene& scene) {
  scene.validate();
  const auto sub = static_cast<Index>(std::llround(scene.dt / scene.sim_dt));
  const std::size_t nobs = scene.field.obstacles.size();
  auto planar = [&](double t) {
    VectorXd w(static_cast<Index>(2 * nobs));
    for (std::size_t j = 0; j < nobs; ++j) {
      const Vec3 p = motion_position(scene.field.obstacles[j].motion, t);
      w(static_cast<Index>(2 * j)) = p.x();
      w(static_cast<Index>(2 * j + 1)) = p.y();
    }
    return w;
  };

  std::mt19937_64 rng(scene.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ObservationDataset ds;
  ds.dt = scene.dt;
  for (Index i = 0; i < scene.trajectories; ++i) {
    const double offset = 0.5 * (unit(rng) + 1.0) * scene.time_spread;
    VectorXd q0(1), qd0(1);
    q0 << scene.q_center + scene.q_spread * unit(rng);
    qd0 << scene.qd_spread * unit(rng);
    const TorqueFn torque = [&](double t, const VectorXd&, const VectorXd& qd) {
      VectorXd tau(1);
      tau << scene.coupling.dot(planar(t + offset)) - scene.damping * qd(0);
      return tau;
    };
    const Trajectory sim = integrate_rk4(scene.robot, q0, qd0, torque, scene.sim_dt,
                                         (scene.samples - 1) * sub);
    ObservationSpec spec = scene.observation;
    spec.seed = scene.observation.seed + static_cast<std::uint64_t>(i);
    ObservationTrajectory ot;
    for (Index k = 0; k < scene.samples; ++k) {
      const double t = static_cast<double>(k) * scene.dt;
      ot.robot.push_back(sim.states[static_cast<std::size_t>(k * sub)].robot);
      ot.observations.push_back(render_observation(scene.field, spec, t + offset));
      ot.objects.push_back(planar(t + offset));
      if (k + 1 < scene.samples) ot.inputs.emplace_back();
    }
    ds.trajectories.push_back(std::move(ot));
  }
  return ds;
}

}  // namespace dkrrt
