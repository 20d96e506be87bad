#include "fosls/netcore.hpp"

#include <cmath>
#include <random>

namespace fosls {

namespace {

using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ActDerivs {
  double value;
  double d1;     // exact first derivative
  double d2;     // exact second derivative
  double train;  // derivative used in the reverse pass
};

inline ActDerivs evaluate(const Activation& act, double z) {
  switch (act.kind) {
    case Activation::Kind::SoftPlus: {
      const double t = act.beta * z;
      // one exponential serves both the value and the logistic slope
      const double e = std::exp(-std::abs(t));
      const double value = ((t > 0.0 ? t : 0.0) + std::log1p(e)) / act.beta;
      const double s = t >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      return {value, s, act.beta * s * (1.0 - s), s};
    }
    case Activation::Kind::ReLU: {
      const double slope = z > 0.0 ? 1.0 : 0.0;
      return {z > 0.0 ? z : 0.0, slope, 0.0, slope};
    }
    case Activation::Kind::Heaviside: {
      const double ste = (z >= 0.0 && z <= act.ste_c) ? 1.0 / act.ste_c : 0.0;
      return {z >= 0.0 ? 1.0 : 0.0, 0.0, 0.0, ste};
    }
    case Activation::Kind::Identity:
      break;
  }
  return {z, 1.0, 0.0, 1.0};
}

// Whole-layer version of evaluate(); SoftPlus goes through Eigen's packet
// exp/log1p, which dominates the forward cost otherwise.
void evaluate_layer(const Activation& act, const Mat& Z, Mat& A, Mat& d1, Mat& d2, Mat& dtr) {
  if (act.kind != Activation::Kind::SoftPlus) {
    A.resize(Z.rows(), Z.cols());
    d1.resize(Z.rows(), Z.cols());
    d2.resize(Z.rows(), Z.cols());
    dtr.resize(Z.rows(), Z.cols());
    for (Eigen::Index i = 0; i < Z.size(); ++i) {
      const auto e = evaluate(act, Z.data()[i]);
      A.data()[i] = e.value;
      d1.data()[i] = e.d1;
      d2.data()[i] = e.d2;
      dtr.data()[i] = e.train;
    }
    return;
  }
  const auto t = (act.beta * Z.array()).eval();
  const auto e = (-t.abs()).exp().eval();
  // log1p(e) = log(u) e / (u - 1) with u = 1 + e, exact when u rounds to 1;
  // this form vectorizes where Eigen's log1p falls back to libm
  const auto u = (1.0 + e).eval();
  const auto ratio = (u.log() * e / (u - 1.0)).eval();  // Select is not vectorized
  const auto l1p = (u == 1.0).select(e, ratio).eval();
  A = ((t.max(0.0) + l1p) / act.beta).matrix();
  const auto inv = u.inverse().eval();
  const auto s = (t >= 0.0).select(inv, e * inv).eval();
  d1 = s.matrix();
  d2 = (act.beta * s * (1.0 - s)).matrix();
  dtr = d1;
}

std::vector<std::size_t> layer_offsets(int input_dim, const std::vector<Layer>& layers) {
  std::vector<std::size_t> offsets;
  offsets.reserve(layers.size() + 1);
  std::size_t off = 0;
  int in = input_dim;
  for (const auto& layer : layers) {
    offsets.push_back(off);
    off += static_cast<std::size_t>(layer.width) * in + layer.width;
    in = layer.width;
  }
  offsets.push_back(off);
  return offsets;
}

}  // namespace

Activation Activation::softplus(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("softplus beta must be positive");
  return {Kind::SoftPlus, beta, 0.5};
}

Activation Activation::heaviside(double ste_c) {
  if (!(ste_c > 0.0)) throw std::invalid_argument("heaviside STE width must be positive");
  return {Kind::Heaviside, 1.0, ste_c};
}

std::string Activation::name() const {
  switch (kind) {
    case Kind::SoftPlus: return "softplus";
    case Kind::ReLU: return "relu";
    case Kind::Heaviside: return "heaviside";
    case Kind::Identity: return "identity";
  }
  return "identity";
}

ActEval act_eval(const Activation& act, double z) {
  const auto e = evaluate(act, z);
  return {e.value, e.train};
}

std::vector<Layer> NetworkSpec::affine_layers() const {
  std::vector<Layer> all = hidden;
  all.push_back({output_dim, Activation::identity()});
  return all;
}

std::size_t NetworkSpec::param_count() const {
  return layer_offsets(input_dim, affine_layers()).back();
}

void NetworkSpec::validate() const {
  if (input_dim <= 0) throw std::invalid_argument("network input_dim must be positive");
  if (output_dim <= 0) throw std::invalid_argument("network output_dim must be positive");
  for (const auto& layer : hidden) {
    if (layer.width <= 0) throw std::invalid_argument("layer width must be positive");
    if (layer.act.kind == Activation::Kind::SoftPlus && !(layer.act.beta > 0.0))
      throw std::invalid_argument("softplus beta must be positive");
    if (layer.act.kind == Activation::Kind::Heaviside && !(layer.act.ste_c > 0.0))
      throw std::invalid_argument("heaviside STE width must be positive");
  }
}

ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  ParamVector theta = ParamVector::Zero(static_cast<Eigen::Index>(spec.param_count()));
  std::size_t off = 0;
  int in = spec.input_dim;
  for (const auto& layer : spec.affine_layers()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + layer.width));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const std::size_t nw = static_cast<std::size_t>(layer.width) * in;
    for (std::size_t i = 0; i < nw; ++i) theta[static_cast<Eigen::Index>(off + i)] = dist(rng);
    off += nw + layer.width;  // biases stay zero
    in = layer.width;
  }
  return theta;
}

void ForwardTape::run(const NetworkSpec& spec, const ParamVector& theta, const Mat& X,
                      bool want_jac) {
  if (X.rows() != spec.input_dim)
    throw DimensionError("input dimension " + std::to_string(X.rows()) + " does not match network input_dim " +
                         std::to_string(spec.input_dim));
  if (static_cast<std::size_t>(theta.size()) != spec.param_count())
    throw DimensionError("parameter vector length does not match the network spec");

  theta_ = theta;
  layers_ = spec.affine_layers();
  offsets_ = layer_offsets(spec.input_dim, layers_);
  with_jac_ = want_jac;
  dim_ = spec.input_dim;

  const auto L = layers_.size();
  const Eigen::Index B = X.cols();
  act_.assign(L + 1, Mat());
  d1_.assign(L + 1, Mat());
  d2_.assign(L + 1, Mat());
  dtr_.assign(L + 1, Mat());
  prejac_.assign(L + 1, Mat());
  jac_.assign(L + 1, Mat());
  act_[0] = X;

  int in = spec.input_dim;
  for (std::size_t l = 1; l <= L; ++l) {
    const Layer& layer = layers_[l - 1];
    const int out = layer.width;
    const double* base = theta_.data() + offsets_[l - 1];
    Eigen::Map<const RowMajorMat> W(base, out, in);
    Eigen::Map<const Vec> b(base + static_cast<std::size_t>(out) * in, out);

    Mat Z = W * act_[l - 1];
    Z.colwise() += b;

    if (want_jac) {
      if (l == 1) {
        prejac_[l].resize(out, B * dim_);
        for (int j = 0; j < dim_; ++j) prejac_[l].middleCols(j * B, B) = W.col(j).replicate(1, B);
      } else {
        prejac_[l].noalias() = W * jac_[l - 1];
      }
    }

    if (layer.act.kind == Activation::Kind::Identity) {
      act_[l] = std::move(Z);
      if (want_jac) jac_[l] = prejac_[l];
    } else {
      evaluate_layer(layer.act, Z, act_[l], d1_[l], d2_[l], dtr_[l]);
      if (want_jac) jac_[l] = prejac_[l].cwiseProduct(d1_[l].replicate(1, dim_));
    }
    in = out;
  }
}

void ForwardTape::pullback(const Mat& cot_y, const Mat& cot_jac, Eigen::Ref<Vec> grad) const {
  const auto L = layers_.size();
  const Eigen::Index B = batch();
  if (cot_y.rows() != layers_.back().width || cot_y.cols() != B)
    throw DimensionError("output cotangent shape mismatch");
  const bool use_jac = cot_jac.size() != 0;
  if (use_jac) {
    if (!with_jac_) throw DimensionError("Jacobian cotangent given but tape recorded no Jacobian");
    if (cot_jac.rows() != layers_.back().width || cot_jac.cols() != B * dim_)
      throw DimensionError("Jacobian cotangent shape mismatch");
  }
  if (static_cast<std::size_t>(grad.size()) != offsets_.back())
    throw DimensionError("gradient buffer length mismatch");

  Mat abar = cot_y;
  Mat jbar;
  if (use_jac) jbar = cot_jac;

  for (std::size_t l = L; l >= 1; --l) {
    const Layer& layer = layers_[l - 1];
    const int out = layer.width;
    const int in = l == 1 ? dim_ : layers_[l - 2].width;
    const std::size_t off = offsets_[l - 1];
    Eigen::Map<const RowMajorMat> W(theta_.data() + off, out, in);
    Eigen::Map<RowMajorMat> gW(grad.data() + off, out, in);
    Eigen::Map<Vec> gb(grad.data() + off + static_cast<std::size_t>(out) * in, out);

    Mat zbar;
    Mat pjbar;  // cotangent of W_l J_{l-1}
    if (layer.act.kind == Activation::Kind::Identity) {
      zbar = std::move(abar);
      if (use_jac) pjbar = std::move(jbar);
    } else {
      zbar = abar.cwiseProduct(dtr_[l]);
      if (use_jac) {
        Mat contracted = Mat::Zero(out, B);
        for (int j = 0; j < dim_; ++j)
          contracted += jbar.middleCols(j * B, B).cwiseProduct(prejac_[l].middleCols(j * B, B));
        zbar += d2_[l].cwiseProduct(contracted);
        pjbar = jbar.cwiseProduct(d1_[l].replicate(1, dim_));
      }
    }

    gW.noalias() += zbar * act_[l - 1].transpose();
    gb += zbar.rowwise().sum();
    if (use_jac) {
      if (l == 1) {
        for (int j = 0; j < dim_; ++j) gW.col(j) += pjbar.middleCols(j * B, B).rowwise().sum();
      } else {
        gW.noalias() += pjbar * jac_[l - 1].transpose();
      }
    }

    if (l > 1) {
      abar.noalias() = W.transpose() * zbar;
      if (use_jac) jbar.noalias() = W.transpose() * pjbar;
    }
  }
}

PointEval forward_jac(const NetworkSpec& spec, const ParamVector& theta, const Vec& x,
                      bool want_jac) {
  ForwardTape tape;
  tape.run(spec, theta, x, want_jac);
  PointEval out;
  out.y = tape.output().col(0);
  if (want_jac) out.jac = tape.output_jac();
  return out;
}

ParamVector pullback(const NetworkSpec& spec, const ParamVector& theta, const Vec& x,
                     const Vec& cot_y, const Mat& cot_jac) {
  if (cot_y.size() != spec.output_dim) throw DimensionError("output cotangent length mismatch");
  const bool use_jac = cot_jac.size() != 0;
  if (use_jac && (cot_jac.rows() != spec.output_dim || cot_jac.cols() != spec.input_dim))
    throw DimensionError("Jacobian cotangent shape mismatch");
  ForwardTape tape;
  tape.run(spec, theta, x, use_jac);
  ParamVector grad = ParamVector::Zero(theta.size());
  tape.pullback(cot_y, use_jac ? cot_jac : Mat(), grad);
  return grad;
}

}  // namespace fosls
