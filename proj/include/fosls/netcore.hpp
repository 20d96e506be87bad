#pragma once

// Fully-connected network engine: forward values, exact input Jacobians
// (forward mode), and reverse-mode parameter gradients of losses that depend
// on both the output and its input Jacobian.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fosls {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Flat parameter vector. Layout per layer: weight matrix (out x in,
/// row-major) followed by the bias vector.
using ParamVector = Eigen::VectorXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Activation {
  enum class Kind { SoftPlus, ReLU, Heaviside, Identity };

  Kind kind = Kind::Identity;
  double beta = 1.0;   // SoftPlus sharpness
  double ste_c = 0.5;  // Heaviside straight-through window

  static Activation softplus(double beta);
  static Activation relu() { return {Kind::ReLU, 1.0, 0.5}; }
  static Activation heaviside(double ste_c);
  static Activation identity() { return {}; }

  bool smooth() const { return kind == Kind::SoftPlus || kind == Kind::Identity; }
  std::string name() const;
  bool operator==(const Activation&) const = default;
};

/// Value and training derivative. For Heaviside the derivative is the
/// straight-through surrogate (1/c) * 1[0, c](z).
struct ActEval {
  double value;
  double derivative;
};

ActEval act_eval(const Activation& act, double z);

struct Layer {
  int width = 0;
  Activation act;
  bool operator==(const Layer&) const = default;
};

struct NetworkSpec {
  int input_dim = 0;
  std::vector<Layer> hidden;  // output layer is affine with Identity activation
  int output_dim = 0;

  /// All affine layers including the output layer.
  std::vector<Layer> affine_layers() const;
  std::size_t param_count() const;
  int depth() const { return static_cast<int>(hidden.size()); }
  void validate() const;  // throws std::invalid_argument
  bool operator==(const NetworkSpec&) const = default;
};

/// A network spec bundled with its parameters.
struct Network {
  NetworkSpec spec;
  ParamVector theta;
};

ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed);

struct PointEval {
  Vec y;
  std::optional<Mat> jac;  // output_dim x input_dim
};

PointEval forward_jac(const NetworkSpec& spec, const ParamVector& theta,
                      const Vec& x, bool want_jac);

/// d/dtheta of <cot_y, y(theta, x)> + <cot_jac, jac(theta, x)>.
/// An empty cot_jac is treated as zero.
ParamVector pullback(const NetworkSpec& spec, const ParamVector& theta,
                     const Vec& x, const Vec& cot_y, const Mat& cot_jac);

/// Batched evaluation over the columns of X (input_dim x B). Keeps the
/// intermediate quantities needed by the reverse pass.
///
/// Jacobians are stored dimension-major as out x (input_dim * B): the
/// block of columns [j * B, (j + 1) * B) holds d y / d x_j at every point.
class ForwardTape {
 public:
  void run(const NetworkSpec& spec, const ParamVector& theta, const Mat& X,
           bool want_jac);

  const Mat& output() const { return act_.back(); }
  const Mat& output_jac() const { return jac_.back(); }
  Eigen::Index batch() const { return act_.front().cols(); }
  bool has_jac() const { return with_jac_; }

  /// Accumulates into grad the pullback of the cotangents. cot_jac may be
  /// empty (0 x 0) to mean zero.
  void pullback(const Mat& cot_y, const Mat& cot_jac,
                Eigen::Ref<Vec> grad) const;

 private:
  ParamVector theta_;
  std::vector<Layer> layers_;
  std::vector<std::size_t> offsets_;
  bool with_jac_ = false;
  int dim_ = 0;
  std::vector<Mat> act_;    // act_[0] = X, act_[l] = sigma(z_l)
  std::vector<Mat> d1_;     // sigma'(z_l), exact (zero for Heaviside)
  std::vector<Mat> d2_;     // sigma''(z_l)
  std::vector<Mat> dtr_;    // training derivative (STE for Heaviside)
  std::vector<Mat> prejac_; // W_l J_{l-1}
  std::vector<Mat> jac_;    // jac_[0] unused; J_l = diag(sigma') W_l J_{l-1}
};

}  // namespace fosls
