#include <doctest.h>

#include <random>

#include "dkrrt/error.hpp"
#include "dkrrt/observables.hpp"

using namespace dkrrt;

namespace {

VectorXd random_vec(Index n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

MatrixXd fd_state_jacobian(const Dictionary& dict, const VectorXd& x, double h = 1e-6) {
  MatrixXd j(dict.out_dim(), dict.in_dim());
  for (Index i = 0; i < dict.in_dim(); ++i) {
    VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    j.col(i) = (dict.lift(xp) - dict.lift(xm)) / (2 * h);
  }
  return j;
}

}  // namespace

TEST_CASE("lift examples") {
  VectorXd x(2);
  x << 1, 2;
  CHECK(Dictionary::identity(2).lift(x) == x);

  VectorXd s(1);
  s << 3;
  const VectorXd p = Dictionary::polynomial(1, 2).lift(s);
  REQUIRE(p.size() == 2);
  CHECK(p(0) == 3.0);
  CHECK(p(1) == 9.0);

  const Dictionary r = Dictionary::rbf(MatrixXd::Zero(1, 1), 1.0);
  const VectorXd z = r.lift(VectorXd::Zero(1));
  REQUIRE(z.size() == 2);
  CHECK(z(0) == 0.0);
  CHECK(z(1) == 1.0);

  CHECK_THROWS_AS(Dictionary::identity(3).lift(x), Error);
}

TEST_CASE("polynomial basis is graded and complete") {
  const Dictionary d = Dictionary::polynomial(2, 3);
  // monomials of degree 1..3 in two variables: 2 + 3 + 4
  CHECK(d.out_dim() == 9);
  VectorXd x(2);
  x << 2, 3;
  const VectorXd z = d.lift(x);
  CHECK(z(0) == 2.0);
  CHECK(z(1) == 3.0);
  // every product of the inputs of degree <= 3 appears exactly once
  std::vector<double> expected{2, 3, 4, 6, 9, 8, 12, 18, 27};
  std::vector<double> got(z.data(), z.data() + z.size());
  std::sort(expected.begin(), expected.end());
  std::sort(got.begin(), got.end());
  CHECK(got == expected);
}

TEST_CASE("leading-block law and determinism across dictionaries") {
  std::mt19937_64 rng(3);
  MatrixXd samples(3, 200);
  for (Index c = 0; c < samples.cols(); ++c) samples.col(c) = random_vec(3, rng, 2.0);
  const std::vector<Dictionary> dicts{
      Dictionary::identity(3), Dictionary::polynomial(3, 2), fit_rbf_dictionary(samples, 10, 1),
      fit_fourier_dictionary(samples, 3), Dictionary::trained(Mlp::glorot({3, 8, 4}, 2))};
  for (const auto& d : dicts) {
    CHECK(d.leading_block());
    for (int t = 0; t < 50; ++t) {
      const VectorXd x = random_vec(3, rng, 2.0);
      const VectorXd z = d.lift(x);
      CHECK((z.head(3) - x).norm() == 0.0);
      const VectorXd z2 = d.lift(x);
      CHECK(std::memcmp(z.data(), z2.data(), sizeof(double) * z.size()) == 0);
      CHECK((d.raw_projection() * z - x).norm() == 0.0);
    }
  }
}

TEST_CASE("state Jacobians match central differences") {
  std::mt19937_64 rng(4);
  MatrixXd samples(2, 100);
  for (Index c = 0; c < samples.cols(); ++c) samples.col(c) = random_vec(2, rng);
  const Dictionary composite =
      compose_composite(Dictionary::polynomial(2, 3), fit_fourier_dictionary(samples, 2));
  const std::vector<Dictionary> dicts{Dictionary::polynomial(2, 3), fit_rbf_dictionary(samples, 8, 5),
                                      fit_fourier_dictionary(samples, 4),
                                      Dictionary::trained(Mlp::glorot({2, 6, 6, 3}, 9)), composite};
  for (const auto& d : dicts) {
    for (int t = 0; t < 10; ++t) {
      const VectorXd x = random_vec(d.in_dim(), rng);
      const MatrixXd analytic = d.state_jacobian(x);
      const MatrixXd numeric = fd_state_jacobian(d, x);
      CHECK((analytic - numeric).norm() <= 1e-6 * std::max(1.0, numeric.norm()));
    }
  }
}

TEST_CASE("single linear layer gradient is the input outer product with ones") {
  DenseLayer l{MatrixXd::Random(2, 3), VectorXd::Random(2)};
  const Mlp net({l});
  VectorXd x(3);
  x << 0.5, -1.0, 2.0;
  const VectorXd g = net.backward_params(x, VectorXd::Ones(2));
  // weight row-major then bias
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j) CHECK(g(i * 3 + j) == x(j));
  CHECK(g(6) == 1.0);
  CHECK(g(7) == 1.0);
}

TEST_CASE("zero input with zero biases gives zero hidden-weight gradients") {
  const Mlp net = Mlp::glorot({3, 5, 2}, 7);
  const VectorXd g = net.backward_params(VectorXd::Zero(3), VectorXd::Ones(2));
  CHECK(g.head(15).norm() == 0.0);  // first layer weights see a zero input
  // output weights see tanh(0) = 0
  CHECK(g.segment(15 + 5, 10).norm() == 0.0);
}

TEST_CASE("parameter Jacobian matches central differences on 50 seeded cases") {
  int passed = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    Mlp net = Mlp::glorot({3, 16, 16, 4}, seed);
    // nonzero biases so every parameter is exercised
    net.add_scaled(0.1, random_vec(net.param_count(), rng));
    const Dictionary d = Dictionary::trained(net);
    const VectorXd x = random_vec(3, rng);
    const MatrixXd analytic = d.param_jacobian(x);
    const double h = 1e-6;
    MatrixXd numeric(d.out_dim(), net.param_count());
    for (Index p = 0; p < net.param_count(); ++p) {
      VectorXd e = VectorXd::Zero(net.param_count());
      e(p) = 1.0;
      Mlp np = net, nm = net;
      np.add_scaled(h, e);
      nm.add_scaled(-h, e);
      numeric.col(p) = (Dictionary::trained(np).lift(x) - Dictionary::trained(nm).lift(x)) / (2 * h);
    }
    const double rel = (analytic - numeric).norm() / numeric.norm();
    if (rel < 1e-5) ++passed;
  }
  CHECK(passed == 50);
}

TEST_CASE("param Jacobian is unsupported on fixed dictionaries") {
  CHECK_THROWS_AS(Dictionary::identity(2).param_jacobian(VectorXd::Zero(2)), Error);
}

TEST_CASE("composite block layout") {
  SUBCASE("identity blocks give the identity on the stacked state") {
    const Dictionary c = compose_composite(Dictionary::identity(3), Dictionary::identity(2));
    CHECK(c.out_dim() == 5);
    VectorXd x(5);
    x << 1, 2, 3, 4, 5;
    CHECK(c.lift(x) == x);
    CHECK(c.leading_block());
  }
  SUBCASE("12 + 8 + 4 + 6 entries in block order") {
    std::mt19937_64 rng(8);
    const Dictionary dr = Dictionary::trained(Mlp::glorot({12, 10, 8}, 1));
    const Dictionary dw = Dictionary::trained(Mlp::glorot({4, 10, 6}, 2));
    const Dictionary c = compose_composite(dr, dw);
    CHECK(c.out_dim() == 30);
    MatrixXd proj = MatrixXd::Zero(12, 30);
    proj.leftCols(12).setIdentity();
    for (int t = 0; t < 100; ++t) {
      const VectorXd xr = random_vec(12, rng), xw = random_vec(4, rng);
      VectorXd x(16);
      x << xr, xw;
      const VectorXd z = c.lift(x);
      CHECK((proj * z - xr).norm() == 0.0);
      CHECK((z.segment(12, 8) - dr.lift(xr).tail(8)).norm() == 0.0);
      CHECK((z.segment(20, 4) - xw).norm() == 0.0);
      CHECK((z.segment(24, 6) - dw.lift(xw).tail(6)).norm() == 0.0);
      CHECK((c.raw_projection() * z - x).norm() == 0.0);
    }
  }
}

TEST_CASE("dictionaries round trip through the container") {
  std::mt19937_64 rng(12);
  MatrixXd samples(2, 50);
  for (Index c = 0; c < samples.cols(); ++c) samples.col(c) = random_vec(2, rng);
  const std::vector<Dictionary> dicts{
      Dictionary::identity(2), Dictionary::polynomial(2, 2), fit_rbf_dictionary(samples, 5, 3),
      fit_fourier_dictionary(samples), Dictionary::trained(Mlp::glorot({2, 4, 3}, 1)),
      compose_composite(Dictionary::polynomial(2, 2), Dictionary::identity(2))};
  for (const auto& d : dicts) {
    const Container c = d.to_container();
    const Dictionary back = Dictionary::from_container(c);
    CHECK(back.id() == d.id());
    CHECK(back.to_container() == c);
    const VectorXd x = random_vec(d.in_dim(), rng);
    CHECK(back.lift(x) == d.lift(x));
  }
}

TEST_CASE("k-means recovers well separated clusters") {
  std::mt19937_64 rng(2);
  MatrixXd s(2, 300);
  const double cx[3] = {-5, 0, 5};
  for (Index c = 0; c < 300; ++c) {
    s.col(c) = random_vec(2, rng, 0.1);
    s(0, c) += cx[c % 3];
  }
  const MatrixXd centers = kmeans_centers(s, 3, 1);
  REQUIRE(centers.cols() == 3);
  std::vector<double> xs{centers(0, 0), centers(0, 1), centers(0, 2)};
  std::sort(xs.begin(), xs.end());
  for (int i = 0; i < 3; ++i) CHECK(std::abs(xs[i] - cx[i]) < 0.1);
  CHECK(kmeans_centers(s, 3, 1) == centers);
}
