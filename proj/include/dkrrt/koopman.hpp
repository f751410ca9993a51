#pragma once

#include <span>
#include <string>
#include <vector>

#include "dkrrt/container.hpp"
#include "dkrrt/linalg.hpp"
#include "dkrrt/observables.hpp"

namespace dkrrt {

/// Robot state stacked with obstacle states at one instant.
struct CompositeState {
  VectorXd robot;    // joint angles [rad] then joint velocities [rad/s]
  VectorXd objects;  // per-obstacle position [m] (and velocity [m/s]) concatenated
  double time = 0.0;

  VectorXd stacked() const;
};

struct Trajectory {
  std::vector<CompositeState> states;
  std::vector<VectorXd> inputs;  // states.size() - 1 entries
  double dt = 0.0;

  /// Wraps plain state vectors (all in the robot block) sampled at t0 + k dt.
  /// Empty `inputs` means an autonomous system (zero-length input vectors).
  static Trajectory from_vectors(const std::vector<VectorXd>& xs, std::vector<VectorXd> inputs,
                                 double dt, double t0 = 0.0);

  Index state_dim() const;
  Index input_dim() const;
  /// Checks time spacing, input count, dimension consistency and finiteness.
  void validate() const;
};

/// Shifted snapshot matrices: column k of Xp is the successor of column k of X.
struct SnapshotDataset {
  MatrixXd X;   // n x (N-1)
  MatrixXd Xp;  // n x (N-1)
  MatrixXd U;   // m x (N-1)
  double dt = 0.0;
  std::vector<Index> segment_lengths;  // columns contributed by each trajectory

  Index state_dim() const { return X.rows(); }
  Index input_dim() const { return U.rows(); }
  Index columns() const { return X.cols(); }

  Container to_container() const;
  static SnapshotDataset from_container(const Container& c);
};

SnapshotDataset build_snapshots(std::span<const Trajectory> trajs);

/// Inverse of build_snapshots on the stacked state sequences (times restart at 0).
std::vector<Trajectory> split_snapshots(const SnapshotDataset& ds);

struct FitOptions {
  double tol_rel = kDefaultPinvTol;
  double ridge = 0.0;
};

/// Lifted linear model zeta' = Gamma zeta + Delta u with decoder chi = Pi zeta.
struct LiftedOperator {
  MatrixXd Gamma;  // rho x rho
  MatrixXd Delta;  // rho x m
  MatrixXd Pi;     // n x rho
  std::string dict_id;
  double dt = 0.0;
  double residual = 0.0;  // ||Xi'_phi - Theta Omega||_F on the fit data
  Index rank = 0;         // numerical rank of Omega
  bool rank_deficient = false;

  Index lifted_dim() const { return Gamma.rows(); }
  Index input_dim() const { return Delta.cols(); }
  Index state_dim() const { return Pi.rows(); }
  MatrixXd theta() const;

  Container to_container() const;
  static LiftedOperator from_container(const Container& c);
};

/// Theta = [Gamma Delta] = Xi'_phi pinv([Xi_phi; U]) (or its ridge variant).
LiftedOperator fit_edmd(const SnapshotDataset& ds, const Dictionary& dict,
                        const FitOptions& opts = {});

/// ||Xi'_phi - Theta Omega||_F for an arbitrary Theta on the dataset.
double lifted_residual(const MatrixXd& theta, const SnapshotDataset& ds, const Dictionary& dict);

VectorXd step_lifted(const LiftedOperator& op, const VectorXd& z, const VectorXd& u);

enum class RolloutMode {
  Relift,  // project to the state and lift again every step
  Lifted,  // iterate purely in the lifted space, project only for output
};

/// k predicted states after chi0. An empty `us` means zero inputs.
std::vector<VectorXd> predict_rollout(const LiftedOperator& op, const Dictionary& dict,
                                      const VectorXd& chi0, const std::vector<VectorXd>& us,
                                      Index k, RolloutMode mode = RolloutMode::Relift);

/// Sum over trajectories and steps of ||phi(x_{t+1}) - Gamma phi(x_t) - Delta u_t||^2.
double prediction_loss(const LiftedOperator& op, const Dictionary& dict,
                       std::span<const Trajectory> trajs);

}  // namespace dkrrt
