#include "dkrrt/koopman.hpp"

#include <cmath>

#include "dkrrt/error.hpp"
#include "dkrrt/kernels.hpp"

namespace dkrrt {

VectorXd CompositeState::stacked() const {
  VectorXd out(robot.size() + objects.size());
  out << robot, objects;
  return out;
}

Trajectory Trajectory::from_vectors(const std::vector<VectorXd>& xs, std::vector<VectorXd> inputs,
                                    double dt, double t0) {
  Trajectory t;
  t.dt = dt;
  t.states.reserve(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k)
    t.states.push_back({xs[k], VectorXd(), t0 + static_cast<double>(k) * dt});
  if (inputs.empty() && xs.size() > 1) inputs.assign(xs.size() - 1, VectorXd());
  t.inputs = std::move(inputs);
  return t;
}

Index Trajectory::state_dim() const {
  return states.empty() ? 0 : states.front().robot.size() + states.front().objects.size();
}

Index Trajectory::input_dim() const { return inputs.empty() ? 0 : inputs.front().size(); }

void Trajectory::validate() const {
  require(dt > 0.0, ErrorKind::InvalidInput, "trajectory dt must be positive");
  require(inputs.size() + 1 == states.size(), ErrorKind::DimensionMismatch,
          "trajectory needs exactly one input per transition");
  if (states.empty()) return;
  const Index nr = states.front().robot.size();
  const Index nw = states.front().objects.size();
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto& s = states[k];
    require(s.robot.size() == nr && s.objects.size() == nw, ErrorKind::DimensionMismatch,
            "state dimensions change along the trajectory");
    require(all_finite(s.robot) && all_finite(s.objects) && std::isfinite(s.time),
            ErrorKind::InvalidInput, "trajectory state is not finite");
    if (k > 0) {
      const double step = s.time - states[k - 1].time;
      require(std::abs(step - dt) <= 1e-9 * dt, ErrorKind::InvalidInput,
              "timestamps are not spaced by dt at index " + std::to_string(k));
    }
  }
  const Index m = input_dim();
  for (const auto& u : inputs) {
    require(u.size() == m, ErrorKind::DimensionMismatch, "input dimension changes");
    require(all_finite(u), ErrorKind::InvalidInput, "input is not finite");
  }
}

// ---------------------------------------------------------------- snapshots

SnapshotDataset build_snapshots(std::span<const Trajectory> trajs) {
  require(!trajs.empty(), ErrorKind::EmptyDataset, "no trajectories");
  const Trajectory& first = trajs.front();
  const Index n = first.state_dim();
  const Index m = first.input_dim();
  Index cols = 0;
  for (const auto& t : trajs) {
    t.validate();
    require(t.states.size() >= 2, ErrorKind::InvalidInput, "trajectory needs at least 2 states");
    require(std::abs(t.dt - first.dt) <= 1e-9 * first.dt, ErrorKind::DimensionMismatch,
            "trajectories have mixed dt");
    require(t.state_dim() == n && t.input_dim() == m, ErrorKind::DimensionMismatch,
            "trajectories have mixed state or input dimensions");
    cols += static_cast<Index>(t.states.size()) - 1;
  }
  SnapshotDataset ds;
  ds.X.resize(n, cols);
  ds.Xp.resize(n, cols);
  ds.U.resize(m, cols);
  ds.dt = first.dt;
  Index c = 0;
  for (const auto& t : trajs) {
    const Index len = static_cast<Index>(t.states.size()) - 1;
    VectorXd prev = t.states[0].stacked();
    for (Index k = 0; k < len; ++k, ++c) {
      VectorXd next = t.states[static_cast<std::size_t>(k + 1)].stacked();
      ds.X.col(c) = prev;
      ds.Xp.col(c) = next;
      ds.U.col(c) = t.inputs[static_cast<std::size_t>(k)];
      prev = std::move(next);
    }
    ds.segment_lengths.push_back(len);
  }
  return ds;
}

std::vector<Trajectory> split_snapshots(const SnapshotDataset& ds) {
  std::vector<Trajectory> out;
  Index c = 0;
  for (Index len : ds.segment_lengths) {
    std::vector<VectorXd> xs;
    std::vector<VectorXd> us;
    for (Index k = 0; k < len; ++k) {
      xs.emplace_back(ds.X.col(c + k));
      us.emplace_back(ds.U.col(c + k));
    }
    xs.emplace_back(ds.Xp.col(c + len - 1));
    out.push_back(Trajectory::from_vectors(xs, std::move(us), ds.dt));
    c += len;
  }
  return out;
}

Container SnapshotDataset::to_container() const {
  Container c;
  c.put("type", "snapshot_dataset");
  c.put("X", X);
  c.put("Xp", Xp);
  c.put("U", U);
  c.put("dt", dt);
  VectorXd seg(static_cast<Index>(segment_lengths.size()));
  for (std::size_t i = 0; i < segment_lengths.size(); ++i)
    seg(static_cast<Index>(i)) = static_cast<double>(segment_lengths[i]);
  c.put("segment_lengths", seg);
  return c;
}

SnapshotDataset SnapshotDataset::from_container(const Container& c) {
  require(c.str("type") == "snapshot_dataset", ErrorKind::Format, "not a snapshot dataset");
  SnapshotDataset ds;
  ds.X = c.matrix("X");
  ds.Xp = c.matrix("Xp");
  ds.U = c.matrix("U");
  ds.dt = c.scalar("dt");
  const VectorXd seg = c.vector("segment_lengths");
  for (Index i = 0; i < seg.size(); ++i) ds.segment_lengths.push_back(static_cast<Index>(seg(i)));
  require(ds.X.rows() == ds.Xp.rows() && ds.X.cols() == ds.Xp.cols() && ds.U.cols() == ds.X.cols(),
          ErrorKind::Format, "snapshot matrix shapes disagree");
  return ds;
}

// ---------------------------------------------------------------- operator

MatrixXd LiftedOperator::theta() const {
  MatrixXd t(Gamma.rows(), Gamma.cols() + Delta.cols());
  t << Gamma, Delta;
  return t;
}

Container LiftedOperator::to_container() const {
  Container c;
  c.put("type", "lifted_operator");
  c.put("Gamma", Gamma);
  c.put("Delta", Delta);
  c.put("Pi", Pi);
  c.put("dict_id", dict_id);
  c.put("dt", dt);
  c.put("residual", residual);
  c.put("rank", static_cast<std::int64_t>(rank));
  c.put("rank_deficient", static_cast<std::int64_t>(rank_deficient ? 1 : 0));
  return c;
}

LiftedOperator LiftedOperator::from_container(const Container& c) {
  require(c.str("type") == "lifted_operator", ErrorKind::Format, "not a lifted operator");
  LiftedOperator op;
  op.Gamma = c.matrix("Gamma");
  op.Delta = c.matrix("Delta");
  op.Pi = c.matrix("Pi");
  op.dict_id = c.str("dict_id");
  op.dt = c.scalar("dt");
  op.residual = c.scalar("residual");
  op.rank = c.integer("rank");
  op.rank_deficient = c.integer("rank_deficient") != 0;
  require(op.Gamma.rows() == op.Gamma.cols() && op.Delta.rows() == op.Gamma.rows() &&
              op.Pi.cols() == op.Gamma.rows(),
          ErrorKind::Format, "operator shapes disagree");
  return op;
}

namespace {

MatrixXd stack_rows(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

void check_dict(const SnapshotDataset& ds, const Dictionary& dict) {
  require(ds.columns() >= 1, ErrorKind::EmptyDataset, "snapshot dataset has no columns");
  require(ds.state_dim() == dict.in_dim(), ErrorKind::DimensionMismatch,
          "dictionary lifts dimension " + std::to_string(dict.in_dim()) + " but states have " +
              std::to_string(ds.state_dim()));
}

}  // namespace

LiftedOperator fit_edmd(const SnapshotDataset& ds, const Dictionary& dict, const FitOptions& opts) {
  check_dict(ds, dict);
  const MatrixXd lifted = kernels::lift_columns(dict, ds.X);
  const MatrixXd lifted_next = kernels::lift_columns(dict, ds.Xp);
  const MatrixXd omega = stack_rows(lifted, ds.U);
  require(all_finite(omega) && all_finite(lifted_next), ErrorKind::InvalidInput,
          "lifted snapshots are not finite");

  const MatrixXd theta = solve_right_least_squares(lifted_next, omega, opts.tol_rel, opts.ridge);
  const Index rho = dict.out_dim();
  LiftedOperator op;
  op.Gamma = theta.leftCols(rho);
  op.Delta = theta.rightCols(ds.input_dim());
  op.Pi = dict.raw_positions() ? dict.raw_projection() : MatrixXd(ds.X * pinv(lifted, opts.tol_rel));
  op.dict_id = dict.id();
  op.dt = ds.dt;
  op.residual = (lifted_next - theta * omega).norm();
  op.rank = numerical_rank(omega, opts.tol_rel);
  op.rank_deficient = op.rank < rho + ds.input_dim();
  return op;
}

double lifted_residual(const MatrixXd& theta, const SnapshotDataset& ds, const Dictionary& dict) {
  check_dict(ds, dict);
  const MatrixXd omega = stack_rows(kernels::lift_columns(dict, ds.X), ds.U);
  require(theta.rows() == dict.out_dim() && theta.cols() == omega.rows(),
          ErrorKind::DimensionMismatch, "theta shape does not match dictionary and inputs");
  return (kernels::lift_columns(dict, ds.Xp) - theta * omega).norm();
}

VectorXd step_lifted(const LiftedOperator& op, const VectorXd& z, const VectorXd& u) {
  require(z.size() == op.lifted_dim(), ErrorKind::DimensionMismatch,
          "lifted vector has dimension " + std::to_string(z.size()) + ", operator expects " +
              std::to_string(op.lifted_dim()));
  require(u.size() == op.input_dim(), ErrorKind::DimensionMismatch,
          "input has dimension " + std::to_string(u.size()) + ", operator expects " +
              std::to_string(op.input_dim()));
  VectorXd out = op.Gamma * z;
  if (u.size() > 0) out.noalias() += op.Delta * u;
  return out;
}

std::vector<VectorXd> predict_rollout(const LiftedOperator& op, const Dictionary& dict,
                                      const VectorXd& chi0, const std::vector<VectorXd>& us,
                                      Index k, RolloutMode mode) {
  require(k >= 1, ErrorKind::InvalidInput, "rollout needs k >= 1");
  require(op.dict_id == dict.id(), ErrorKind::DimensionMismatch,
          "operator was fitted with dictionary " + op.dict_id + ", not " + dict.id());
  require(us.empty() || static_cast<Index>(us.size()) >= k, ErrorKind::DimensionMismatch,
          "input sequence shorter than the rollout");
  const VectorXd zero_u = VectorXd::Zero(op.input_dim());
  std::vector<VectorXd> out;
  out.reserve(static_cast<std::size_t>(k));
  VectorXd chi = chi0;
  VectorXd z = dict.lift(chi0);
  for (Index i = 0; i < k; ++i) {
    const VectorXd& u = us.empty() ? zero_u : us[static_cast<std::size_t>(i)];
    if (mode == RolloutMode::Relift && i > 0) z = dict.lift(chi);
    z = step_lifted(op, z, u);
    chi = op.Pi * z;
    if (!all_finite(chi)) throw StepError(ErrorKind::Divergence, i + 1, "rollout diverged");
    out.push_back(chi);
  }
  return out;
}

double prediction_loss(const LiftedOperator& op, const Dictionary& dict,
                       std::span<const Trajectory> trajs) {
  require(op.dict_id == dict.id(), ErrorKind::DimensionMismatch,
          "operator and dictionary do not match");
  double loss = 0.0;
  for (const auto& t : trajs) {
    require(t.state_dim() == dict.in_dim() && t.input_dim() == op.input_dim(),
            ErrorKind::DimensionMismatch, "trajectory incompatible with operator");
    if (t.states.size() < 2) continue;
    VectorXd z = dict.lift(t.states[0].stacked());
    for (std::size_t k = 0; k + 1 < t.states.size(); ++k) {
      VectorXd z_next = dict.lift(t.states[k + 1].stacked());
      loss += (z_next - step_lifted(op, z, t.inputs[k])).squaredNorm();
      z = std::move(z_next);
    }
  }
  return loss;
}

}  // namespace dkrrt
