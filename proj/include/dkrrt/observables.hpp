#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dkrrt/container.hpp"
#include "dkrrt/linalg.hpp"

namespace dkrrt {

struct DenseLayer {
  MatrixXd weight;  // out x in
  VectorXd bias;
};

/**
 * Small fully connected network: tanh on hidden layers, linear head.
 *
 * Serves both as the observation encoder and as the body of a trained
 * dictionary. Parameters flatten layer by layer, weight row-major then bias.
 */
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  /// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
  static Mlp glorot(const std::vector<Index>& widths, std::uint64_t seed);

  Index in_dim() const;
  Index out_dim() const;
  Index param_count() const;
  const std::vector<DenseLayer>& layers() const { return layers_; }

  VectorXd forward(const VectorXd& x) const;

  /// Vector-Jacobian product: d(grad_out . f(x)) / d params, flattened.
  VectorXd backward_params(const VectorXd& x, const VectorXd& grad_out) const;
  /// Vector-Jacobian product with respect to the input.
  VectorXd backward_input(const VectorXd& x, const VectorXd& grad_out) const;

  /// Full out_dim x param_count Jacobian, one reverse sweep per output.
  MatrixXd jacobian_params(const VectorXd& x) const;
  MatrixXd jacobian_input(const VectorXd& x) const;

  VectorXd flat_params() const;
  void set_flat_params(const VectorXd& p);
  /// params += alpha * direction
  void add_scaled(double alpha, const VectorXd& direction);

  Container to_container() const;
  static Mlp from_container(const Container& c);

 private:
  struct Tape {
    std::vector<VectorXd> inputs;  // input to each layer
  };
  VectorXd forward_tape(const VectorXd& x, Tape& tape) const;
  void backward(const Tape& tape, VectorXd grad, VectorXd* grad_params, VectorXd* grad_input) const;

  std::vector<DenseLayer> layers_;
};

using EncoderParams = Mlp;

class Dictionary;

struct IdentityBasis {};

struct PolynomialBasis {
  int degree = 1;
  std::vector<std::vector<int>> exponents;  // one per output, graded order
};

/// exp(-||s(x) - c||^2 / width^2) with s(x) = (x - shift) ./ scale.
struct RbfBasis {
  MatrixXd centers;  // k x in_dim, in standardized coordinates
  double width = 1.0;
  VectorXd shift;
  VectorXd scale;
};

/// sin(w s_i), cos(w s_i) for each coordinate i and frequency w.
struct FourierBasis {
  VectorXd frequencies;
  VectorXd shift;
  VectorXd scale;
};

struct TrainedBasis {
  Mlp net;
};

struct CompositeBasis {
  std::shared_ptr<const Dictionary> robot;
  std::shared_ptr<const Dictionary> object;
};

/**
 * Observable map phi lifting a state into a space where the dynamics are
 * approximately linear. Immutable; evaluation is deterministic.
 */
class Dictionary {
 public:
  using Basis = std::variant<IdentityBasis, PolynomialBasis, RbfBasis, FourierBasis, TrainedBasis,
                             CompositeBasis>;

  static Dictionary identity(Index dim);
  static Dictionary polynomial(Index dim, int degree);
  static Dictionary rbf(MatrixXd centers, double width, VectorXd shift, VectorXd scale);
  static Dictionary rbf(MatrixXd centers, double width);
  static Dictionary fourier(Index dim, VectorXd frequencies, VectorXd shift, VectorXd scale);
  static Dictionary trained(Mlp net, bool leading_block = true);

  Index in_dim() const { return in_dim_; }
  Index out_dim() const { return out_dim_; }
  /// First in_dim outputs equal the input verbatim.
  bool leading_block() const { return leading_block_; }
  /// Lifted indices holding the raw coordinates, when the state is embedded verbatim.
  const std::optional<std::vector<Index>>& raw_positions() const { return raw_positions_; }

  std::string kind_name() const;
  /// Stable fingerprint of kind, dimensions and parameters.
  std::string id() const;
  const Basis& basis() const { return basis_; }

  VectorXd lift(const VectorXd& x) const;
  /// d lift / d x, out_dim x in_dim.
  MatrixXd state_jacobian(const VectorXd& x) const;
  /// d lift / d params, out_dim x param_count. Trained dictionaries only.
  MatrixXd param_jacobian(const VectorXd& x) const;

  /// Decoding matrix copying the raw coordinates out of a lifted vector.
  /// Throws Unsupported when the state is not embedded verbatim.
  MatrixXd raw_projection() const;

  Container to_container() const;
  static Dictionary from_container(const Container& c);

 private:
  friend Dictionary compose_composite(const Dictionary& dr, const Dictionary& dw);

  Dictionary(Basis basis, Index in_dim, Index out_dim, bool leading_block);
  void lift_features(const VectorXd& x, Eigen::Ref<VectorXd> out) const;

  Basis basis_;
  Index in_dim_ = 0;
  Index out_dim_ = 0;
  bool leading_block_ = true;
  std::optional<std::vector<Index>> raw_positions_;
};

/// [x_r; gamma_r(x_r); x_w; gamma_w(x_w)] where gamma is a dictionary's non-raw block.
Dictionary compose_composite(const Dictionary& dr, const Dictionary& dw);

/// Seeded k-means (k-means++ seeding, Lloyd refinement). samples are columns.
MatrixXd kmeans_centers(const MatrixXd& samples, Index k, std::uint64_t seed, int iterations = 50);

/// RBF dictionary with k-means centers on standardized samples and width equal
/// to the median pairwise center distance.
Dictionary fit_rbf_dictionary(const MatrixXd& samples, Index k, std::uint64_t seed);

/// Fourier dictionary on standardized samples with integer harmonics of base_frequency.
Dictionary fit_fourier_dictionary(const MatrixXd& samples, int harmonics = 4,
                                  double base_frequency = 1.0);

}  // namespace dkrrt
