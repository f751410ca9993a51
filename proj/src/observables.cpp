#include "dkrrt/observables.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "dkrrt/error.hpp"

namespace dkrrt {

// ---------------------------------------------------------------- Mlp

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  require(!layers_.empty(), ErrorKind::InvalidInput, "network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    require(l.bias.size() == l.weight.rows(), ErrorKind::DimensionMismatch,
            "bias length must equal layer output width");
    if (i > 0)
      require(l.weight.cols() == layers_[i - 1].weight.rows(), ErrorKind::DimensionMismatch,
              "consecutive layer widths do not chain");
    require(all_finite(l.weight) && all_finite(l.bias), ErrorKind::InvalidInput,
            "network parameters must be finite");
  }
}

Mlp Mlp::glorot(const std::vector<Index>& widths, std::uint64_t seed) {
  require(widths.size() >= 2, ErrorKind::InvalidInput, "need input and output widths");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const Index fan_in = widths[i];
    const Index fan_out = widths[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer l{MatrixXd(fan_out, fan_in), VectorXd::Zero(fan_out)};
    for (Index r = 0; r < fan_out; ++r)
      for (Index c = 0; c < fan_in; ++c) l.weight(r, c) = dist(rng);
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

Index Mlp::in_dim() const { return layers_.empty() ? 0 : layers_.front().weight.cols(); }
Index Mlp::out_dim() const { return layers_.empty() ? 0 : layers_.back().weight.rows(); }

Index Mlp::param_count() const {
  Index n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

VectorXd Mlp::forward_tape(const VectorXd& x, Tape& tape) const {
  require(x.size() == in_dim(), ErrorKind::DimensionMismatch, "network input size mismatch");
  tape.inputs.clear();
  VectorXd h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    tape.inputs.push_back(h);
    VectorXd a = layers_[i].weight * h + layers_[i].bias;
    if (i + 1 < layers_.size()) a = a.array().tanh().matrix();
    h = std::move(a);
  }
  return h;
}

VectorXd Mlp::forward(const VectorXd& x) const {
  Tape tape;
  return forward_tape(x, tape);
}

void Mlp::backward(const Tape& tape, VectorXd grad, VectorXd* grad_params,
                   VectorXd* grad_input) const {
  if (grad_params) grad_params->setZero(param_count());
  // offsets of each layer in the flat parameter vector
  std::vector<Index> offset(layers_.size());
  Index acc = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    offset[i] = acc;
    acc += layers_[i].weight.size() + layers_[i].bias.size();
  }
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const auto& l = layers_[i];
    const VectorXd& in = tape.inputs[i];
    // grad is d/d(pre-activation output of layer i) for the last layer, and is
    // converted below for hidden layers before reaching here.
    if (grad_params) {
      Index o = offset[i];
      for (Index r = 0; r < l.weight.rows(); ++r)
        for (Index c = 0; c < l.weight.cols(); ++c) (*grad_params)(o++) = grad(r) * in(c);
      grad_params->segment(o, l.bias.size()) = grad;
    }
    VectorXd g_in = l.weight.transpose() * grad;
    if (i > 0) {
      // in = tanh(pre) for hidden inputs
      g_in.array() *= (1.0 - in.array().square());
    }
    grad = std::move(g_in);
  }
  if (grad_input) *grad_input = std::move(grad);
}

VectorXd Mlp::backward_params(const VectorXd& x, const VectorXd& grad_out) const {
  require(grad_out.size() == out_dim(), ErrorKind::DimensionMismatch, "output gradient size");
  Tape tape;
  forward_tape(x, tape);
  VectorXd gp;
  backward(tape, grad_out, &gp, nullptr);
  return gp;
}

VectorXd Mlp::backward_input(const VectorXd& x, const VectorXd& grad_out) const {
  require(grad_out.size() == out_dim(), ErrorKind::DimensionMismatch, "output gradient size");
  Tape tape;
  forward_tape(x, tape);
  VectorXd gi;
  backward(tape, grad_out, nullptr, &gi);
  return gi;
}

MatrixXd Mlp::jacobian_params(const VectorXd& x) const {
  Tape tape;
  forward_tape(x, tape);
  MatrixXd jac(out_dim(), param_count());
  VectorXd gp;
  for (Index k = 0; k < out_dim(); ++k) {
    backward(tape, VectorXd::Unit(out_dim(), k), &gp, nullptr);
    jac.row(k) = gp.transpose();
  }
  return jac;
}

MatrixXd Mlp::jacobian_input(const VectorXd& x) const {
  Tape tape;
  forward_tape(x, tape);
  MatrixXd jac(out_dim(), in_dim());
  VectorXd gi;
  for (Index k = 0; k < out_dim(); ++k) {
    backward(tape, VectorXd::Unit(out_dim(), k), nullptr, &gi);
    jac.row(k) = gi.transpose();
  }
  return jac;
}

VectorXd Mlp::flat_params() const {
  VectorXd p(param_count());
  Index o = 0;
  for (const auto& l : layers_) {
    for (Index r = 0; r < l.weight.rows(); ++r)
      for (Index c = 0; c < l.weight.cols(); ++c) p(o++) = l.weight(r, c);
    p.segment(o, l.bias.size()) = l.bias;
    o += l.bias.size();
  }
  return p;
}

void Mlp::set_flat_params(const VectorXd& p) {
  require(p.size() == param_count(), ErrorKind::DimensionMismatch, "parameter vector size");
  Index o = 0;
  for (auto& l : layers_) {
    for (Index r = 0; r < l.weight.rows(); ++r)
      for (Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = p(o++);
    l.bias = p.segment(o, l.bias.size());
    o += l.bias.size();
  }
}

void Mlp::add_scaled(double alpha, const VectorXd& direction) {
  set_flat_params(flat_params() + alpha * direction);
}

Container Mlp::to_container() const {
  Container c;
  c.put("layers", static_cast<std::int64_t>(layers_.size()));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    c.put("W" + std::to_string(i), layers_[i].weight);
    c.put("b" + std::to_string(i), layers_[i].bias);
  }
  return c;
}

Mlp Mlp::from_container(const Container& c) {
  const auto n = c.integer("layers");
  std::vector<DenseLayer> layers;
  for (std::int64_t i = 0; i < n; ++i)
    layers.push_back({c.matrix("W" + std::to_string(i)), c.vector("b" + std::to_string(i))});
  return Mlp(std::move(layers));
}

// ---------------------------------------------------------------- Dictionary

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void graded_exponents(Index dim, int degree, std::vector<std::vector<int>>& out) {
  // all exponent vectors with total degree d, for d = 1..degree; within a
  // degree, lexicographically descending so degree 1 is (1,0,..),(0,1,..),...
  for (int d = 1; d <= degree; ++d) {
    std::vector<int> e(static_cast<std::size_t>(dim), 0);
    std::vector<std::vector<int>> level;
    auto rec = [&](auto&& self, Index pos, int remaining) -> void {
      if (pos == dim - 1) {
        e[static_cast<std::size_t>(pos)] = remaining;
        level.push_back(e);
        return;
      }
      for (int k = remaining; k >= 0; --k) {
        e[static_cast<std::size_t>(pos)] = k;
        self(self, pos + 1, remaining - k);
      }
    };
    rec(rec, 0, d);
    out.insert(out.end(), level.begin(), level.end());
  }
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_matrix(std::uint64_t h, const MatrixXd& m) {
  const Index dims[2] = {m.rows(), m.cols()};
  h = fnv1a(h, dims, sizeof(dims));
  return fnv1a(h, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

void standardization(const MatrixXd& samples, VectorXd& shift, VectorXd& scale) {
  require(samples.cols() > 0, ErrorKind::EmptyDataset, "no samples to standardize");
  shift = samples.rowwise().mean();
  scale.resize(samples.rows());
  for (Index r = 0; r < samples.rows(); ++r) {
    const double var = (samples.row(r).array() - shift(r)).square().mean();
    const double sd = std::sqrt(var);
    scale(r) = sd > 1e-12 ? sd : 1.0;
  }
}

}  // namespace

Dictionary::Dictionary(Basis basis, Index in_dim, Index out_dim, bool leading_block)
    : basis_(std::move(basis)), in_dim_(in_dim), out_dim_(out_dim), leading_block_(leading_block) {
  require(in_dim > 0, ErrorKind::InvalidInput, "dictionary input dimension must be positive");
  require(!leading_block || out_dim >= in_dim, ErrorKind::DimensionMismatch,
          "leading-block dictionary must not shrink the state");
  if (leading_block) {
    std::vector<Index> pos(static_cast<std::size_t>(in_dim));
    for (Index i = 0; i < in_dim; ++i) pos[static_cast<std::size_t>(i)] = i;
    raw_positions_ = std::move(pos);
  }
}

Dictionary Dictionary::identity(Index dim) { return Dictionary(IdentityBasis{}, dim, dim, true); }

Dictionary Dictionary::polynomial(Index dim, int degree) {
  require(degree >= 1, ErrorKind::InvalidInput, "polynomial degree must be at least 1");
  PolynomialBasis b;
  b.degree = degree;
  graded_exponents(dim, degree, b.exponents);
  const auto out = static_cast<Index>(b.exponents.size());
  return Dictionary(std::move(b), dim, out, true);
}

Dictionary Dictionary::rbf(MatrixXd centers, double width, VectorXd shift, VectorXd scale) {
  const Index dim = centers.cols();
  require(width > 0.0, ErrorKind::InvalidInput, "rbf width must be positive");
  require(shift.size() == dim && scale.size() == dim, ErrorKind::DimensionMismatch,
          "rbf standardization size");
  require((scale.array() > 0.0).all(), ErrorKind::InvalidInput, "rbf scale must be positive");
  const Index k = centers.rows();
  return Dictionary(RbfBasis{std::move(centers), width, std::move(shift), std::move(scale)}, dim,
                    dim + k, true);
}

Dictionary Dictionary::rbf(MatrixXd centers, double width) {
  const Index dim = centers.cols();
  return rbf(std::move(centers), width, VectorXd::Zero(dim), VectorXd::Ones(dim));
}

Dictionary Dictionary::fourier(Index dim, VectorXd frequencies, VectorXd shift, VectorXd scale) {
  require(shift.size() == dim && scale.size() == dim, ErrorKind::DimensionMismatch,
          "fourier standardization size");
  require((scale.array() > 0.0).all(), ErrorKind::InvalidInput, "fourier scale must be positive");
  const Index out = dim + 2 * dim * frequencies.size();
  return Dictionary(FourierBasis{std::move(frequencies), std::move(shift), std::move(scale)}, dim,
                    out, true);
}

Dictionary Dictionary::trained(Mlp net, bool leading_block) {
  const Index in = net.in_dim();
  const Index out = (leading_block ? in : 0) + net.out_dim();
  return Dictionary(TrainedBasis{std::move(net)}, in, out, leading_block);
}

std::string Dictionary::kind_name() const {
  return std::visit(overloaded{[](const IdentityBasis&) { return std::string("identity"); },
                               [](const PolynomialBasis&) { return std::string("polynomial"); },
                               [](const RbfBasis&) { return std::string("rbf"); },
                               [](const FourierBasis&) { return std::string("fourier"); },
                               [](const TrainedBasis&) { return std::string("trained"); },
                               [](const CompositeBasis&) { return std::string("composite"); }},
                    basis_);
}

std::string Dictionary::id() const {
  std::uint64_t h = 1469598103934665603ULL;
  const Index dims[3] = {in_dim_, out_dim_, leading_block_ ? 1 : 0};
  h = fnv1a(h, dims, sizeof(dims));
  std::visit(overloaded{[](const IdentityBasis&) {},
                        [&](const PolynomialBasis& b) { h = fnv1a(h, &b.degree, sizeof(b.degree)); },
                        [&](const RbfBasis& b) {
                          h = hash_matrix(h, b.centers);
                          h = fnv1a(h, &b.width, sizeof(double));
                          h = hash_matrix(h, b.shift);
                          h = hash_matrix(h, b.scale);
                        },
                        [&](const FourierBasis& b) {
                          h = hash_matrix(h, b.frequencies);
                          h = hash_matrix(h, b.shift);
                          h = hash_matrix(h, b.scale);
                        },
                        [&](const TrainedBasis& b) { h = hash_matrix(h, b.net.flat_params()); },
                        [&](const CompositeBasis& b) {
                          const std::string s = b.robot->id() + "|" + b.object->id();
                          h = fnv1a(h, s.data(), s.size());
                        }},
             basis_);
  std::ostringstream os;
  os << kind_name() << ":" << in_dim_ << "->" << out_dim_ << ":" << std::hex << h;
  return os.str();
}

void Dictionary::lift_features(const VectorXd& x, Eigen::Ref<VectorXd> out) const {
  std::visit(
      overloaded{
          [&](const IdentityBasis&) {},
          [&](const PolynomialBasis& b) {
            for (std::size_t k = static_cast<std::size_t>(in_dim_); k < b.exponents.size(); ++k) {
              double v = 1.0;
              for (Index i = 0; i < in_dim_; ++i) {
                const int e = b.exponents[k][static_cast<std::size_t>(i)];
                for (int p = 0; p < e; ++p) v *= x(i);
              }
              out(static_cast<Index>(k) - in_dim_) = v;
            }
          },
          [&](const RbfBasis& b) {
            const VectorXd s = ((x - b.shift).array() / b.scale.array()).matrix();
            const double inv_w2 = 1.0 / (b.width * b.width);
            for (Index k = 0; k < b.centers.rows(); ++k)
              out(k) = std::exp(-(s.transpose() - b.centers.row(k)).squaredNorm() * inv_w2);
          },
          [&](const FourierBasis& b) {
            const VectorXd s = ((x - b.shift).array() / b.scale.array()).matrix();
            Index o = 0;
            for (Index i = 0; i < in_dim_; ++i)
              for (Index j = 0; j < b.frequencies.size(); ++j) {
                out(o++) = std::sin(b.frequencies(j) * s(i));
                out(o++) = std::cos(b.frequencies(j) * s(i));
              }
          },
          [&](const TrainedBasis& b) { out = b.net.forward(x); },
          [&](const CompositeBasis&) {}},
      basis_);
}

VectorXd Dictionary::lift(const VectorXd& x) const {
  require(x.size() == in_dim_, ErrorKind::DimensionMismatch,
          "lift expects dimension " + std::to_string(in_dim_) + ", got " + std::to_string(x.size()));
  VectorXd out(out_dim_);
  if (const auto* c = std::get_if<CompositeBasis>(&basis_)) {
    const Index nr = c->robot->in_dim();
    const VectorXd zr = c->robot->lift(x.head(nr));
    const VectorXd zw = c->object->lift(x.tail(in_dim_ - nr));
    out << zr, zw;
    // raw-first ordering of each sub-lift already matches [x; gamma(x)]
    return out;
  }
  if (leading_block_) {
    out.head(in_dim_) = x;
    lift_features(x, out.tail(out_dim_ - in_dim_));
  } else {
    lift_features(x, out);
  }
  return out;
}

MatrixXd Dictionary::state_jacobian(const VectorXd& x) const {
  require(x.size() == in_dim_, ErrorKind::DimensionMismatch, "state jacobian input size");
  MatrixXd jac = MatrixXd::Zero(out_dim_, in_dim_);
  if (const auto* c = std::get_if<CompositeBasis>(&basis_)) {
    const Index nr = c->robot->in_dim();
    const Index nw = in_dim_ - nr;
    jac.topLeftCorner(c->robot->out_dim(), nr) = c->robot->state_jacobian(x.head(nr));
    jac.bottomRightCorner(c->object->out_dim(), nw) = c->object->state_jacobian(x.tail(nw));
    return jac;
  }
  const Index base = leading_block_ ? in_dim_ : 0;
  if (leading_block_) jac.topRows(in_dim_).setIdentity();
  std::visit(
      overloaded{
          [&](const IdentityBasis&) {},
          [&](const PolynomialBasis& b) {
            for (std::size_t k = static_cast<std::size_t>(in_dim_); k < b.exponents.size(); ++k) {
              const auto& e = b.exponents[k];
              for (Index j = 0; j < in_dim_; ++j) {
                const int ej = e[static_cast<std::size_t>(j)];
                if (ej == 0) continue;
                double v = static_cast<double>(ej);
                for (Index i = 0; i < in_dim_; ++i) {
                  const int p = e[static_cast<std::size_t>(i)] - (i == j ? 1 : 0);
                  for (int q = 0; q < p; ++q) v *= x(i);
                }
                jac(static_cast<Index>(k), j) = v;
              }
            }
          },
          [&](const RbfBasis& b) {
            const VectorXd s = ((x - b.shift).array() / b.scale.array()).matrix();
            const double inv_w2 = 1.0 / (b.width * b.width);
            for (Index k = 0; k < b.centers.rows(); ++k) {
              const VectorXd d = s - b.centers.row(k).transpose();
              const double f = std::exp(-d.squaredNorm() * inv_w2);
              jac.row(base + k) =
                  (-2.0 * inv_w2 * f * d.array() / b.scale.array()).matrix().transpose();
            }
          },
          [&](const FourierBasis& b) {
            Index o = base;
            for (Index i = 0; i < in_dim_; ++i) {
              const double s = (x(i) - b.shift(i)) / b.scale(i);
              for (Index j = 0; j < b.frequencies.size(); ++j) {
                const double w = b.frequencies(j);
                jac(o++, i) = w * std::cos(w * s) / b.scale(i);
                jac(o++, i) = -w * std::sin(w * s) / b.scale(i);
              }
            }
          },
          [&](const TrainedBasis& b) {
            jac.bottomRows(b.net.out_dim()) = b.net.jacobian_input(x);
          },
          [&](const CompositeBasis&) {}},
      basis_);
  return jac;
}

MatrixXd Dictionary::param_jacobian(const VectorXd& x) const {
  const auto* t = std::get_if<TrainedBasis>(&basis_);
  if (!t) throw Error(ErrorKind::Unsupported, "parameter jacobian needs a trained dictionary, got " + kind_name());
  require(x.size() == in_dim_, ErrorKind::DimensionMismatch, "param jacobian input size");
  MatrixXd jac = MatrixXd::Zero(out_dim_, t->net.param_count());
  jac.bottomRows(t->net.out_dim()) = t->net.jacobian_params(x);
  return jac;
}

MatrixXd Dictionary::raw_projection() const {
  if (!raw_positions_)
    throw Error(ErrorKind::Unsupported, kind_name() + " dictionary does not embed the raw state");
  MatrixXd pi = MatrixXd::Zero(in_dim_, out_dim_);
  for (Index i = 0; i < in_dim_; ++i) pi(i, (*raw_positions_)[static_cast<std::size_t>(i)]) = 1.0;
  return pi;
}

Dictionary compose_composite(const Dictionary& dr, const Dictionary& dw) {
  require(dr.leading_block() && dw.leading_block(), ErrorKind::InvalidInput,
          "composite blocks must embed their raw states as a leading block");
  const Index in = dr.in_dim() + dw.in_dim();
  const Index out = dr.out_dim() + dw.out_dim();
  const bool leading = dr.out_dim() == dr.in_dim();
  Dictionary d(CompositeBasis{std::make_shared<const Dictionary>(dr),
                              std::make_shared<const Dictionary>(dw)},
               in, out, leading);
  std::vector<Index> pos;
  for (Index i = 0; i < dr.in_dim(); ++i) pos.push_back(i);
  for (Index i = 0; i < dw.in_dim(); ++i) pos.push_back(dr.out_dim() + i);
  d.raw_positions_ = std::move(pos);
  return d;
}

Container Dictionary::to_container() const {
  Container c;
  c.put("kind", kind_name());
  c.put("in_dim", static_cast<std::int64_t>(in_dim_));
  c.put("out_dim", static_cast<std::int64_t>(out_dim_));
  c.put("leading_block", static_cast<std::int64_t>(leading_block_ ? 1 : 0));
  std::visit(overloaded{[](const IdentityBasis&) {},
                        [&](const PolynomialBasis& b) {
                          c.put("degree", static_cast<std::int64_t>(b.degree));
                        },
                        [&](const RbfBasis& b) {
                          c.put("centers", b.centers);
                          c.put("width", b.width);
                          c.put("shift", b.shift);
                          c.put("scale", b.scale);
                        },
                        [&](const FourierBasis& b) {
                          c.put("frequencies", b.frequencies);
                          c.put("shift", b.shift);
                          c.put("scale", b.scale);
                        },
                        [&](const TrainedBasis& b) { c.merge("net", b.net.to_container()); },
                        [&](const CompositeBasis& b) {
                          c.merge("robot", b.robot->to_container());
                          c.merge("object", b.object->to_container());
                        }},
             basis_);
  return c;
}

Dictionary Dictionary::from_container(const Container& c) {
  const std::string kind = c.str("kind");
  const Index in = c.integer("in_dim");
  Dictionary d = [&] {
    if (kind == "identity") return identity(in);
    if (kind == "polynomial") return polynomial(in, static_cast<int>(c.integer("degree")));
    if (kind == "rbf")
      return rbf(c.matrix("centers"), c.scalar("width"), c.vector("shift"), c.vector("scale"));
    if (kind == "fourier")
      return fourier(in, c.vector("frequencies"), c.vector("shift"), c.vector("scale"));
    if (kind == "trained")
      return trained(Mlp::from_container(c.sub("net")), c.integer("leading_block") != 0);
    if (kind == "composite")
      return compose_composite(from_container(c.sub("robot")), from_container(c.sub("object")));
    throw Error(ErrorKind::Format, "unknown dictionary kind '" + kind + "'");
  }();
  require(d.out_dim() == c.integer("out_dim"), ErrorKind::Format, "dictionary out_dim mismatch");
  return d;
}

// ---------------------------------------------------------------- fitting helpers

MatrixXd kmeans_centers(const MatrixXd& samples, Index k, std::uint64_t seed, int iterations) {
  const Index n = samples.cols();
  require(n > 0 && k > 0, ErrorKind::EmptyDataset, "k-means needs samples and k > 0");
  k = std::min(k, n);
  std::mt19937_64 rng(seed);
  MatrixXd centers(samples.rows(), k);

  // k-means++ seeding
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centers.col(0) = samples.col(pick(rng));
  VectorXd d2 = (samples.colwise() - centers.col(0)).colwise().squaredNorm().transpose();
  for (Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index chosen = 0;
    if (total <= 0.0) {
      chosen = pick(rng);
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (chosen = 0; chosen < n - 1; ++chosen) {
        r -= d2(chosen);
        if (r <= 0.0) break;
      }
    }
    centers.col(c) = samples.col(chosen);
    d2 = d2.cwiseMin((samples.colwise() - centers.col(c)).colwise().squaredNorm().transpose());
  }

  std::vector<Index> assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (Index j = 0; j < n; ++j) {
      Index best = 0;
      (centers.colwise() - samples.col(j)).colwise().squaredNorm().minCoeff(&best);
      if (assign[static_cast<std::size_t>(j)] != best) {
        assign[static_cast<std::size_t>(j)] = best;
        changed = true;
      }
    }
    MatrixXd sum = MatrixXd::Zero(samples.rows(), k);
    VectorXd count = VectorXd::Zero(k);
    for (Index j = 0; j < n; ++j) {
      sum.col(assign[static_cast<std::size_t>(j)]) += samples.col(j);
      count(assign[static_cast<std::size_t>(j)]) += 1.0;
    }
    for (Index c = 0; c < k; ++c)
      if (count(c) > 0) centers.col(c) = sum.col(c) / count(c);
    if (!changed) break;
  }
  return centers;
}

Dictionary fit_rbf_dictionary(const MatrixXd& samples, Index k, std::uint64_t seed) {
  VectorXd shift, scale;
  standardization(samples, shift, scale);
  const MatrixXd s = (samples.colwise() - shift).array().colwise() / scale.array();
  const MatrixXd centers = kmeans_centers(s, k, seed);
  std::vector<double> dists;
  for (Index a = 0; a < centers.cols(); ++a)
    for (Index b = a + 1; b < centers.cols(); ++b)
      dists.push_back((centers.col(a) - centers.col(b)).norm());
  double width = 1.0;
  if (!dists.empty()) {
    auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    width = *mid > 0.0 ? *mid : 1.0;
  }
  return Dictionary::rbf(centers.transpose(), width, shift, scale);
}

Dictionary fit_fourier_dictionary(const MatrixXd& samples, int harmonics, double base_frequency) {
  require(harmonics >= 1 && base_frequency > 0.0, ErrorKind::InvalidInput,
          "fourier dictionary needs harmonics >= 1 and a positive base frequency");
  VectorXd shift, scale;
  standardization(samples, shift, scale);
  VectorXd freqs(harmonics);
  for (int j = 0; j < harmonics; ++j) freqs(j) = base_frequency * (j + 1);
  return Dictionary::fourier(samples.rows(), freqs, shift, scale);
}

}  // namespace dkrrt
