#include <doctest.h>

#include <random>
#include <sstream>

#include "dkrrt/dual_data.hpp"
#include "dkrrt/error.hpp"
#include "oracles.hpp"

using namespace dkrrt;

namespace {

MatrixXd mat2(double a, double b, double c, double d) {
  MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

const MatrixXd kA = mat2(-0.1, 1.0, -2.0, -0.3);

KnownField linear_field(const MatrixXd& a) {
  return [a](const VectorXd& x, const VectorXd&) { return VectorXd(a * x); };
}

CollocationSet box(Index n, const KnownField& f, Index inputs = 0, Index count = 500, std::uint64_t seed = 1) {
  return CollocationSet::uniform(VectorXd::Constant(n, -2.0), VectorXd::Constant(n, 2.0),
                                 VectorXd::Constant(inputs, 1.0), VectorXd::Constant(inputs, 1.0),
                                 count, seed, f);
}

/// Fine-step RK4 rollouts of an ODE sampled every dt, one constant input per trajectory.
std::vector<Trajectory> simulate(const KnownField& f, const std::vector<VectorXd>& x0s, const VectorXd& u,
                                 double dt, int samples, int substeps = 20) {
  std::vector<Trajectory> out;
  for (const auto& x0 : x0s) {
    std::vector<VectorXd> xs{x0};
    VectorXd x = x0;
    auto g = [&](const VectorXd& s) { return f(s, u); };
    for (int k = 1; k < samples; ++k) {
      for (int s = 0; s < substeps; ++s) x = oracle::rk4(g, x, dt / substeps);
      xs.push_back(x);
    }
    out.push_back(Trajectory::from_vectors(xs, std::vector<VectorXd>(xs.size() - 1, u), dt));
  }
  return out;
}

std::vector<VectorXd> random_starts(int count, Index n, std::uint64_t seed, double r = 1.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-r, r);
  std::vector<VectorXd> out;
  for (int i = 0; i < count; ++i) out.push_back(VectorXd::NullaryExpr(n, [&] { return d(rng); }));
  return out;
}

double mse(const std::vector<VectorXd>& pred, const std::vector<VectorXd>& truth) {
  double s = 0.0;
  for (size_t k = 0; k < pred.size(); ++k) s += (pred[k] - truth[k + 1]).squaredNorm();
  return s / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("generator of a linear field is the field matrix") {
  const Dictionary d = Dictionary::identity(2);
  const GeneratorOperator g = fit_generator(box(2, linear_field(kA)), d, 0.1);
  CHECK((g.L - kA).norm() < 1e-8);
  CHECK((g.half_step - oracle::expm_taylor(kA * 0.05)).norm() < 1e-10);
  CHECK_FALSE(g.rank_deficient);
}

TEST_CASE("zero field gives a zero generator") {
  const GeneratorOperator g = fit_generator(
      box(3, [](const VectorXd& x, const VectorXd&) { return VectorXd(VectorXd::Zero(x.size())); }),
      Dictionary::polynomial(3, 2), 0.1);
  CHECK(g.L.norm() == 0.0);
  CHECK(g.half_step == MatrixXd::Identity(g.L.rows(), g.L.cols()));
}

TEST_CASE("harmonic oscillator half step is the analytic rotation") {
  const double w = 2.5, dtau = 0.1;
  const GeneratorOperator g =
      fit_generator(box(2, linear_field(mat2(0, 1, -w * w, 0))), Dictionary::identity(2), dtau);
  // x = cos, v = -w sin: flow of (x, v) over s
  const double s = 0.5 * dtau;
  const MatrixXd expected = mat2(std::cos(w * s), std::sin(w * s) / w, -w * std::sin(w * s), std::cos(w * s));
  CHECK((g.half_step - expected).norm() < 1e-8);
}

TEST_CASE("inputs enter as constant observables") {
  MatrixXd b(2, 1);
  b << 0.0, 1.0;
  const KnownField f = [b](const VectorXd& x, const VectorXd& u) { return VectorXd(kA * x + b * u); };
  const GeneratorOperator g = fit_generator(
      CollocationSet::uniform(VectorXd::Constant(2, -1), VectorXd::Constant(2, 1), VectorXd::Constant(1, -1),
                              VectorXd::Constant(1, 1), 200, 3, f),
      Dictionary::identity(2), 0.1);
  CHECK((g.L.topLeftCorner(2, 2) - kA).norm() < 1e-8);
  CHECK((g.L.topRightCorner(2, 1) - b).norm() < 1e-8);
  CHECK(g.L.bottomRows(1).norm() == 0.0);
}

TEST_CASE("data from the known field alone gives an identity residual") {
  const Dictionary d = Dictionary::identity(2);
  const double dt = 0.1;
  const GeneratorOperator g = fit_generator(box(2, linear_field(kA)), d, dt);
  const auto trajs = simulate(linear_field(kA), random_starts(10, 2, 4), VectorXd(0), dt, 30);
  const SnapshotDataset ds = build_snapshots(trajs);
  const ResidualOperator r = fit_residual(g, ds, d);
  MESSAGE("||H - I|| = " << (r.H - MatrixXd::Identity(2, 2)).norm());
  CHECK((r.H - MatrixXd::Identity(2, 2)).norm() < 1e-6);
}

TEST_CASE("with no known dynamics the residual is the plain DMD operator") {
  const Dictionary d = Dictionary::polynomial(2, 2);
  const GeneratorOperator g = fit_generator(
      box(2, [](const VectorXd& x, const VectorXd&) { return VectorXd(VectorXd::Zero(x.size())); }), d, 0.05);
  const auto trajs = simulate([](const VectorXd& x, const VectorXd&) { return oracle::pendulum_field(x); },
                              random_starts(6, 2, 5), VectorXd(0), 0.05, 25);
  const SnapshotDataset ds = build_snapshots(trajs);
  const ResidualOperator r = fit_residual(g, ds, d);
  const LiftedOperator dmd = fit_edmd(ds, d);
  CHECK((r.H - dmd.Gamma).norm() < 1e-8 * std::max(1.0, dmd.Gamma.norm()));
}

TEST_CASE("an unknown constant drift is absorbed by the residual") {
  const Dictionary d = Dictionary::identity(2);
  const double dt = 0.1;
  VectorXd drift(2);
  drift << 0.3, -0.5;
  const KnownField truth = [drift](const VectorXd& x, const VectorXd& u) { return VectorXd(kA * x + drift * u(0)); };
  // the constant input u = 1 carries the affine term
  const GeneratorOperator g = fit_generator(box(2, linear_field(kA), 1), d, dt);
  const VectorXd one = VectorXd::Ones(1);
  const SnapshotDataset train = build_snapshots(simulate(truth, random_starts(10, 2, 6), one, dt, 30));
  const ResidualOperator r = fit_residual(g, train, d);
  const auto held = simulate(truth, random_starts(5, 2, 7), one, dt, 2);
  double composed = 0.0, known = 0.0;
  for (const auto& t : held) {
    const VectorXd x0 = t.states[0].stacked(), x1 = t.states[1].stacked();
    composed += (predict_composed(g, r, d, x0, {one}, 1)[0] - x1).squaredNorm();
    known += (predict_known(g, d, x0, {one}, 1)[0] - x1).squaredNorm();
  }
  MESSAGE("one-step composed " << composed << " known-only " << known);
  CHECK(composed < known);
}

TEST_CASE("identity residual reproduces exact linear flow") {
  const Dictionary d = Dictionary::identity(2);
  const double dt = 0.1;
  const GeneratorOperator g = fit_generator(box(2, linear_field(kA)), d, dt);
  const ResidualOperator r{MatrixXd::Identity(2, 2), dt};
  VectorXd x0(2);
  x0 << 1.0, -0.5;
  const auto pred = predict_composed(g, r, d, x0, {}, 20);
  const MatrixXd step = oracle::expm_taylor(kA * dt);
  VectorXd x = x0;
  for (const auto& p : pred) {
    x = step * x;
    CHECK((p - x).norm() < 1e-8);
  }
}

TEST_CASE("identity operators leave the state unchanged") {
  GeneratorOperator g;
  g.L = MatrixXd::Zero(3, 3);
  g.half_step = MatrixXd::Identity(3, 3);
  g.dtau = 0.1;
  g.dict_id = Dictionary::identity(3).id();
  const ResidualOperator r{MatrixXd::Identity(3, 3), 0.1};
  VectorXd x0(3);
  x0 << 0.1, 0.2, 0.3;
  const auto out = predict_composed(g, r, Dictionary::identity(3), x0, {}, 1);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == x0);
  CHECK_THROWS_AS(predict_composed(g, r, Dictionary::identity(3), x0, {}, 0), Error);
}

TEST_CASE("damping unknown to the gravity model is corrected by the residual") {
  const double dt = 0.05, damping = 0.4;
  const Dictionary d = Dictionary::identity(2);
  const KnownField gravity = [](const VectorXd& x, const VectorXd&) { return oracle::pendulum_field(x); };
  const KnownField full = [damping](const VectorXd& x, const VectorXd&) { return oracle::pendulum_field(x, damping); };
  const GeneratorOperator g = fit_generator(
      CollocationSet::uniform(VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0), VectorXd(0), VectorXd(0),
                              2000, 8, gravity),
      d, dt);
  const SnapshotDataset train = build_snapshots(simulate(full, random_starts(20, 2, 9, 1.0), VectorXd(0), dt, 40));
  const ResidualOperator r = fit_residual(g, train, d);
  VectorXd x0(2);
  x0 << 0.7, -0.2;
  const auto truth = simulate(full, {x0}, VectorXd(0), dt, 21)[0];
  std::vector<VectorXd> tx;
  for (const auto& s : truth.states) tx.push_back(s.stacked());
  const double composed = mse(predict_composed(g, r, d, x0, {}, 20), tx);
  const double known = mse(predict_known(g, d, x0, {}, 20), tx);
  MESSAGE("20-step composed " << composed << " known-only " << known);
  CHECK(composed < known);
}

TEST_CASE("symmetric splitting error shrinks at second order") {
  const MatrixXd b = mat2(-0.2, 0.3, 0.1, -0.15);
  const Dictionary d = Dictionary::identity(2);
  VectorXd x0(2);
  x0 << 1.0, 0.5;
  const double horizon = 1.0;
  const VectorXd exact = oracle::expm_taylor((kA + b) * horizon) * x0;
  auto error = [&](double dtau) {
    const GeneratorOperator g = fit_generator(box(2, linear_field(kA)), d, dtau);
    const ResidualOperator r{oracle::expm_taylor(b * dtau), dtau};
    const auto steps = static_cast<Index>(std::llround(horizon / dtau));
    return (predict_composed(g, r, d, x0, {}, steps).back() - exact).norm();
  };
  const double e1 = error(0.1), e2 = error(0.05);
  MESSAGE("splitting errors " << e1 << " " << e2);
  CHECK(e1 / e2 >= 3.5);
}

TEST_CASE("fitted residual is optimal among perturbations") {
  const Dictionary d = Dictionary::polynomial(2, 2);
  const double dt = 0.05;
  const GeneratorOperator g = fit_generator(
      box(2, [](const VectorXd& x, const VectorXd&) { return oracle::pendulum_field(x); }), d, dt);
  const auto trajs = simulate([](const VectorXd& x, const VectorXd&) { return oracle::pendulum_field(x, 0.3); },
                              random_starts(8, 2, 11, 1.0), VectorXd(0), dt, 30);
  const SnapshotDataset ds = build_snapshots(trajs);
  const ResidualOperator r = fit_residual(g, ds, d);
  const double base = composed_residual(g, r.H, ds, d);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    MatrixXd p = MatrixXd::NullaryExpr(r.H.rows(), r.H.cols(), [&] { return n(rng); });
    p *= 1e-3 / p.norm();
    CHECK(composed_residual(g, r.H + p, ds, d) >= base);
  }
}

TEST_CASE("generator and residual round trip bit exactly") {
  const Dictionary d = Dictionary::identity(2);
  const GeneratorOperator g = fit_generator(box(2, linear_field(kA)), d, 0.1);
  const ResidualOperator r{MatrixXd::Random(2, 2), 0.1};
  std::stringstream a, b;
  g.to_container().write(a);
  r.to_container().write(b);
  CHECK(GeneratorOperator::from_container(Container::read(a)).to_container() == g.to_container());
  CHECK(ResidualOperator::from_container(Container::read(b)).to_container() == r.to_container());
}
