#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dkrrt/container.hpp"
#include "dkrrt/debris.hpp"
#include "dkrrt/koopman.hpp"
#include "dkrrt/manipulator.hpp"
#include "dkrrt/observables.hpp"

namespace dkrrt {

struct TrainingConfig {
  Index n_epoch = 200;
  Index n_step = 10;        // rollout horizon
  Index refit_period = 25;  // epochs between operator refits
  double learning_rate = 1e-3;
  Index batch = 1;          // windows per epoch
  std::uint64_t seed = 0;
  double tol_rel = kDefaultPinvTol;
  double ridge = 0.0;

  void validate() const;
  Container to_container() const;
  static TrainingConfig from_container(const Container& c);
};

/// One recorded run: robot states, raw observations and the held-out object truth.
struct ObservationTrajectory {
  std::vector<VectorXd> robot;
  std::vector<VectorXd> observations;
  std::vector<VectorXd> objects;  // ground truth, evaluation only
  std::vector<VectorXd> inputs;   // robot inputs, size() - 1 entries (may be zero-length)

  Index size() const { return static_cast<Index>(robot.size()); }
};

struct ObservationDataset {
  std::vector<ObservationTrajectory> trajectories;
  double dt = 0.0;

  Index robot_dim() const;
  Index observation_dim() const;
  Index object_dim() const;
  Index input_dim() const;
  void validate() const;
};

/// Object-feature estimate for sample k of a trajectory.
using FeatureFn = std::function<VectorXd(const ObservationTrajectory&, Index k)>;

FeatureFn encoder_features(const Mlp& enc);
FeatureFn truth_features();

/// Composite trajectories [robot; features] for every recorded run.
std::vector<Trajectory> composite_trajectories(const ObservationDataset& ds, const FeatureFn& features);

/// Composite dictionary over [robot; features]: robot lifted by dict_r, features by dict_w.
Dictionary training_dictionary(const Dictionary& dict_r, const Dictionary& dict_w);

/**
 * Rollout loss from window start tau0: robot state from data, object features
 * from the encoder at tau0, then relift steps of the composite predictor.
 * Sums the squared robot-state error over k = 0..n_step (n_step + 1 terms).
 */
double rollout_loss(const LiftedOperator& op, const Dictionary& dict, const Mlp& enc,
                    const ObservationTrajectory& traj, Index tau0, Index n_step);

struct RolloutGradient {
  double loss = 0.0;
  VectorXd d_features;  // d loss / d object features at tau0
};

/// Loss and its gradient with respect to the initial object features w0.
RolloutGradient rollout_loss_gradient(const LiftedOperator& op, const Dictionary& dict,
                                      const ObservationTrajectory& traj, Index tau0, Index n_step,
                                      const VectorXd& w0);

/// Encoder parameter gradient of rollout_loss.
VectorXd rollout_param_gradient(const LiftedOperator& op, const Dictionary& dict, const Mlp& enc,
                                const ObservationTrajectory& traj, Index tau0, Index n_step,
                                double* loss = nullptr);

LiftedOperator refit_operator(const ObservationDataset& ds, const FeatureFn& features,
                              const Dictionary& dict, const FitOptions& opts = {});
LiftedOperator refit_operator(const ObservationDataset& ds, const Mlp& enc, const Dictionary& dict,
                              const FitOptions& opts = {});

struct EpochLog {
  Index epoch = 0;
  double loss = 0.0;
  Index operator_version = 0;
  double wall_ms = 0.0;
};

struct RefitRecord {
  Index epoch = 0;
  Index version = 0;
  double loss_before = 0.0;  // one-step lifted loss of the old operator on the rebuilt snapshots
  double loss_after = 0.0;
};

struct TrainResult {
  Mlp encoder;
  LiftedOperator op;
  Dictionary dict;
  std::vector<EpochLog> history;
  std::vector<RefitRecord> refits;
  Index operator_version = 0;  // 1 after the initial fit, +1 per refit
};

struct TrainOptions {
  bool timing = true;  // false zeroes wall_ms for byte-stable logs
};

/// Alternating optimization: encoder SGD on the rollout loss, operator refit every refit_period epochs.
TrainResult train(const ObservationDataset& ds, const TrainingConfig& cfg, const Dictionary& dict_r,
                  const Mlp& enc, const std::optional<Dictionary>& dict_w = std::nullopt,
                  const TrainOptions& options = {});

/// Writes "epoch,loss,operator_version" with a schema line; free of wall-clock data.
void write_loss_csv(const std::vector<EpochLog>& history, std::ostream& os);
/// Writes "epoch,wall_ms" with a schema line.
void write_timing_csv(const std::vector<EpochLog>& history, std::ostream& os);

Container checkpoint(const TrainResult& r, const TrainingConfig& cfg);

// ---------------------------------------------------------------- synthetic scene

/// Single-link arm whose joint is torqued by the planar positions of orbiting obstacles.
struct TrainingScene {
  ManipulatorModel robot;
  DebrisField field;
  ObservationSpec observation;
  VectorXd coupling;  // torque gain per planar obstacle coordinate (x1, y1, x2, y2, ...)
  double damping = 0.1;
  Index trajectories = 8;
  Index samples = 100;
  double dt = 0.05;
  double sim_dt = 1e-3;
  double q_center = -1.5707963267948966;  // hanging rest angle [rad]
  double q_spread = 0.4;    // initial joint offset range [rad]
  double qd_spread = 0.4;   // initial joint rate range [rad/s]
  double time_spread = 20;  // random obstacle time offset range [s]
  std::uint64_t seed = 0;

  /// Two obstacles on circles about the origin, 16 x 16 observation grid.
  static TrainingScene two_obstacle();
  void validate() const;
};

ObservationDataset generate_observations(const TrainingScene& scene);

}  // namespace dkrrt
