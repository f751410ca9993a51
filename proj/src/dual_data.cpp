#include "dkrrt/dual_data.hpp"

#include <random>

#include "dkrrt/error.hpp"
#include "dkrrt/kernels.hpp"

namespace dkrrt {

CollocationSet CollocationSet::uniform(const VectorXd& state_lo, const VectorXd& state_hi,
                                       const VectorXd& input_lo, const VectorXd& input_hi,
                                       Index count, std::uint64_t seed, KnownField field) {
  require(state_lo.size() == state_hi.size() && input_lo.size() == input_hi.size(),
          ErrorKind::DimensionMismatch, "collocation box bounds disagree in size");
  require(count >= 1, ErrorKind::InvalidInput, "collocation set needs at least one point");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const VectorXd& lo, const VectorXd& hi) {
    VectorXd v(lo.size());
    for (Index i = 0; i < lo.size(); ++i) v(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
    return v;
  };
  CollocationSet cs;
  cs.known_field = std::move(field);
  for (Index i = 0; i < count; ++i) {
    cs.states.push_back(draw(state_lo, state_hi));
    cs.inputs.push_back(draw(input_lo, input_hi));
  }
  return cs;
}

void CollocationSet::validate() const {
  require(!states.empty(), ErrorKind::EmptyDataset, "collocation set is empty");
  require(states.size() == inputs.size(), ErrorKind::DimensionMismatch,
          "collocation states and inputs differ in count");
  require(static_cast<bool>(known_field), ErrorKind::InvalidInput, "collocation set has no field");
}

VectorXd theta_lift(const Dictionary& dict, const VectorXd& state, const VectorXd& input) {
  VectorXd out(dict.out_dim() + input.size());
  out << dict.lift(state), input;
  return out;
}

namespace {

MatrixXd theta_columns(const Dictionary& dict, const MatrixXd& x, const MatrixXd& u) {
  MatrixXd out(dict.out_dim() + u.rows(), x.cols());
  out << kernels::lift_columns(dict, x), u;
  return out;
}

void check_snapshots(const GeneratorOperator& gen, const SnapshotDataset& ds, const Dictionary& dict) {
  require(gen.dict_id == dict.id(), ErrorKind::DimensionMismatch,
          "generator was fitted with a different dictionary");
  require(ds.columns() >= 1, ErrorKind::EmptyDataset, "snapshot dataset has no columns");
  require(ds.state_dim() == dict.in_dim() && ds.input_dim() == gen.input_dim,
          ErrorKind::DimensionMismatch, "snapshots do not match the generator");
  require(std::abs(ds.dt - gen.dtau) <= 1e-12 * std::max(1.0, gen.dtau), ErrorKind::DimensionMismatch,
          "snapshot dt differs from the generator's step");
}

std::vector<VectorXd> rollout(const MatrixXd& step, Index input_dim, const Dictionary& dict,
                              const VectorXd& chi0, const std::vector<VectorXd>& us, Index k) {
  require(k >= 1, ErrorKind::InvalidInput, "rollout needs k >= 1");
  require(us.empty() || static_cast<Index>(us.size()) >= k, ErrorKind::DimensionMismatch,
          "input sequence shorter than the rollout");
  const MatrixXd pi = dict.raw_projection();
  const VectorXd zero_u = VectorXd::Zero(input_dim);
  std::vector<VectorXd> out;
  out.reserve(static_cast<std::size_t>(k));
  VectorXd chi = chi0;
  for (Index i = 0; i < k; ++i) {
    const VectorXd& u = us.empty() ? zero_u : us[static_cast<std::size_t>(i)];
    require(u.size() == input_dim, ErrorKind::DimensionMismatch, "input dimension mismatch");
    const VectorXd z = step * theta_lift(dict, chi, u);
    chi = pi * z.head(dict.out_dim());
    if (!all_finite(chi)) throw StepError(ErrorKind::Divergence, i + 1, "composed rollout diverged");
    out.push_back(chi);
  }
  return out;
}

}  // namespace

GeneratorOperator fit_generator(const CollocationSet& cs, const Dictionary& dict, double dtau,
                                double tol_rel) {
  cs.validate();
  require(dtau > 0.0, ErrorKind::InvalidInput, "dtau must be positive");
  const Index n = static_cast<Index>(cs.states.size());
  const Index m = cs.inputs.front().size();
  const Index rho = dict.out_dim();
  MatrixXd theta(rho + m, n), dtheta = MatrixXd::Zero(rho + m, n);
  for (Index i = 0; i < n; ++i) {
    const auto& x = cs.states[static_cast<std::size_t>(i)];
    const auto& u = cs.inputs[static_cast<std::size_t>(i)];
    require(x.size() == dict.in_dim() && u.size() == m, ErrorKind::DimensionMismatch,
            "collocation point does not match the dictionary");
    const VectorXd f = cs.known_field(x, u);
    require(f.size() == x.size() && all_finite(f), ErrorKind::InvalidInput,
            "known field is not finite on a collocation point");
    theta.col(i) = theta_lift(dict, x, u);
    // inputs are constant along the flow: their rows stay zero
    dtheta.col(i).head(rho) = dict.state_jacobian(x) * f;
  }
  GeneratorOperator g;
  g.L = dtheta * pinv(theta, tol_rel);
  g.dtau = dtau;
  g.half_step = expm(g.L * (0.5 * dtau));
  g.input_dim = m;
  g.dict_id = dict.id();
  g.rank = numerical_rank(theta, tol_rel);
  g.rank_deficient = g.rank < rho + m;
  return g;
}

ResidualOperator fit_residual(const GeneratorOperator& gen, const SnapshotDataset& ds,
                              const Dictionary& dict, double tol_rel) {
  check_snapshots(gen, ds, dict);
  const MatrixXd th = theta_columns(dict, ds.X, ds.U);
  const MatrixXd th_next = theta_columns(dict, ds.Xp, ds.U);
  const MatrixXd& k = gen.half_step;
  ResidualOperator r;
  r.H = pinv(k, tol_rel) * th_next * pinv(MatrixXd(k * th), tol_rel);
  r.dtau = gen.dtau;
  return r;
}

double composed_residual(const GeneratorOperator& gen, const MatrixXd& H, const SnapshotDataset& ds,
                         const Dictionary& dict) {
  check_snapshots(gen, ds, dict);
  require(H.rows() == gen.lifted_dim() && H.cols() == gen.lifted_dim(), ErrorKind::DimensionMismatch,
          "H does not match the generator");
  const MatrixXd& k = gen.half_step;
  return (k * H * k * theta_columns(dict, ds.X, ds.U) - theta_columns(dict, ds.Xp, ds.U)).norm();
}

std::vector<VectorXd> predict_composed(const GeneratorOperator& gen, const ResidualOperator& res,
                                       const Dictionary& dict, const VectorXd& chi0,
                                       const std::vector<VectorXd>& us, Index k) {
  require(gen.dict_id == dict.id(), ErrorKind::DimensionMismatch,
          "generator was fitted with a different dictionary");
  require(res.H.rows() == gen.lifted_dim() && res.H.cols() == gen.lifted_dim(),
          ErrorKind::DimensionMismatch, "residual operator does not match the generator");
  const MatrixXd step = gen.half_step * res.H * gen.half_step;
  return rollout(step, gen.input_dim, dict, chi0, us, k);
}

std::vector<VectorXd> predict_known(const GeneratorOperator& gen, const Dictionary& dict,
                                    const VectorXd& chi0, const std::vector<VectorXd>& us, Index k) {
  require(gen.dict_id == dict.id(), ErrorKind::DimensionMismatch,
          "generator was fitted with a different dictionary");
  return rollout(gen.half_step * gen.half_step, gen.input_dim, dict, chi0, us, k);
}

Container GeneratorOperator::to_container() const {
  Container c;
  c.put("type", "generator_operator");
  c.put("L", L);
  c.put("half_step", half_step);
  c.put("dtau", dtau);
  c.put("input_dim", static_cast<std::int64_t>(input_dim));
  c.put("dict_id", dict_id);
  c.put("rank", static_cast<std::int64_t>(rank));
  c.put("rank_deficient", static_cast<std::int64_t>(rank_deficient ? 1 : 0));
  return c;
}

GeneratorOperator GeneratorOperator::from_container(const Container& c) {
  require(c.str("type") == "generator_operator", ErrorKind::Format, "not a generator operator");
  GeneratorOperator g;
  g.L = c.matrix("L");
  g.half_step = c.matrix("half_step");
  g.dtau = c.scalar("dtau");
  g.input_dim = c.integer("input_dim");
  g.dict_id = c.str("dict_id");
  g.rank = c.integer("rank");
  g.rank_deficient = c.integer("rank_deficient") != 0;
  return g;
}

Container ResidualOperator::to_container() const {
  Container c;
  c.put("type", "residual_operator");
  c.put("H", H);
  c.put("dtau", dtau);
  return c;
}

ResidualOperator ResidualOperator::from_container(const Container& c) {
  require(c.str("type") == "residual_operator", ErrorKind::Format, "not a residual operator");
  return {c.matrix("H"), c.scalar("dtau")};
}

}  // namespace dkrrt
