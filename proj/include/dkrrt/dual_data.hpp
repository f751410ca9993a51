#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dkrrt/container.hpp"
#include "dkrrt/koopman.hpp"
#include "dkrrt/observables.hpp"

namespace dkrrt {

/// Known vector field: d(state)/dt given (state, input).
using KnownField = std::function<VectorXd(const VectorXd& state, const VectorXd& input)>;

/// State/input points where the known part of the dynamics is evaluated.
struct CollocationSet {
  std::vector<VectorXd> states;
  std::vector<VectorXd> inputs;  // empty vectors for autonomous fields
  KnownField known_field;

  /// Uniform samples over the boxes [state_lo, state_hi] x [input_lo, input_hi].
  static CollocationSet uniform(const VectorXd& state_lo, const VectorXd& state_hi,
                                const VectorXd& input_lo, const VectorXd& input_hi, Index count,
                                std::uint64_t seed, KnownField field);

  void validate() const;
};

/**
 * Continuous-time generator L on Theta(x, u) = [phi(x); u] and its half-step
 * exponential exp(L dtau / 2). Inputs are held constant along the flow, so
 * the input rows of L are zero.
 */
struct GeneratorOperator {
  MatrixXd L;
  MatrixXd half_step;
  double dtau = 0.0;
  Index input_dim = 0;
  std::string dict_id;
  Index rank = 0;
  bool rank_deficient = false;

  Index lifted_dim() const { return L.rows(); }

  Container to_container() const;
  static GeneratorOperator from_container(const Container& c);
};

/// Discrete operator for the dynamics the known field leaves unexplained.
struct ResidualOperator {
  MatrixXd H;
  double dtau = 0.0;

  Container to_container() const;
  static ResidualOperator from_container(const Container& c);
};

/// Theta(x, u) = [phi(x); u]
VectorXd theta_lift(const Dictionary& dict, const VectorXd& state, const VectorXd& input);

/// Least-squares L with dTheta/dt = J_phi(x) f(x, u) stacked over the collocation points.
GeneratorOperator fit_generator(const CollocationSet& cs, const Dictionary& dict, double dtau,
                                double tol_rel = kDefaultPinvTol);

/// H = pinv(K) Theta(X', U) pinv(K Theta(X, U)) with K the generator's half step.
ResidualOperator fit_residual(const GeneratorOperator& gen, const SnapshotDataset& ds,
                              const Dictionary& dict, double tol_rel = kDefaultPinvTol);

/// ||K H K Theta(X, U) - Theta(X', U)||_F for an arbitrary H.
double composed_residual(const GeneratorOperator& gen, const MatrixXd& H, const SnapshotDataset& ds,
                         const Dictionary& dict);

/// k states stepping K H K in the lifted space, projecting and relifting each step.
std::vector<VectorXd> predict_composed(const GeneratorOperator& gen, const ResidualOperator& res,
                                       const Dictionary& dict, const VectorXd& chi0,
                                       const std::vector<VectorXd>& us, Index k);

/// Same rollout with the known flow only (K K = exp(L dtau)).
std::vector<VectorXd> predict_known(const GeneratorOperator& gen, const Dictionary& dict,
                                    const VectorXd& chi0, const std::vector<VectorXd>& us, Index k);

}  // namespace dkrrt
