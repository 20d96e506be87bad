#include "fosls/hnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fosls {

namespace {

using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct AffineLayer {
  Mat W;
  Vec b;
};

// Hidden ReLU maps of the min tree on m inputs, before composition with the
// combine step. Returns per level the expanding map and the combining map.
struct GadgetLevel {
  Mat expand;   // hidden x m
  Mat combine;  // m' x hidden
};

std::vector<GadgetLevel> gadget_levels(int k) {
  std::vector<GadgetLevel> levels;
  int m = k;
  while (m > 1) {
    const int pairs = m / 2;
    const int odd = m % 2;
    const int hidden = 4 * pairs + 2 * odd;
    GadgetLevel lvl{Mat::Zero(hidden, m), Mat::Zero(pairs + odd, hidden)};
    for (int j = 0; j < pairs; ++j) {
      const int a = 2 * j, b = 2 * j + 1, h = 4 * j;
      lvl.expand(h, a) = 1.0;      lvl.expand(h, b) = 1.0;
      lvl.expand(h + 1, a) = -1.0; lvl.expand(h + 1, b) = -1.0;
      lvl.expand(h + 2, a) = 1.0;  lvl.expand(h + 2, b) = -1.0;
      lvl.expand(h + 3, a) = -1.0; lvl.expand(h + 3, b) = 1.0;
      lvl.combine(j, h) = 0.5;
      lvl.combine(j, h + 1) = -0.5;
      lvl.combine(j, h + 2) = -0.5;
      lvl.combine(j, h + 3) = -0.5;
    }
    if (odd) {
      // x = ReLU(x) - ReLU(-x)
      const int h = 4 * pairs;
      lvl.expand(h, m - 1) = 1.0;
      lvl.expand(h + 1, m - 1) = -1.0;
      lvl.combine(pairs, h) = 1.0;
      lvl.combine(pairs, h + 1) = -1.0;
    }
    levels.push_back(std::move(lvl));
    m = pairs + odd;
  }
  return levels;
}

// Tree layers as plain affine maps. Merged: hidden layer l is
// expand_l * combine_{l-1}, one hidden layer per gadget level. Split: each
// intermediate minimum m is first materialised as ReLU(m), ReLU(-m), so it
// is rounded once on its own before the next level adds it to anything.
// That costs an extra layer per level but keeps every pairwise min as
// accurate as the scalar formula; merging sums several half-terms in one
// dot product and loses up to a few ulps.
std::vector<AffineLayer> min_tree_layers(int k, bool split) {
  const auto levels = gadget_levels(k);
  std::vector<AffineLayer> layers;
  if (levels.empty()) {
    layers.push_back({Mat::Identity(1, 1), Vec::Zero(1)});
    return layers;
  }
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (l == 0) {
      layers.push_back({levels[0].expand, Vec::Zero(levels[0].expand.rows())});
    } else if (!split) {
      Mat W = levels[l].expand * levels[l - 1].combine;
      layers.push_back({W, Vec::Zero(W.rows())});
    } else {
      const Mat& C = levels[l - 1].combine;
      const auto m = C.rows();
      Mat S(2 * m, C.cols());
      S << C, -C;
      layers.push_back({S, Vec::Zero(2 * m)});
      Mat P(m, 2 * m);
      P << Mat::Identity(m, m), -Mat::Identity(m, m);
      // entries of expand * P are 0 and +-1, so no rounding enters here
      Mat W = levels[l].expand * P;
      layers.push_back({W, Vec::Zero(W.rows())});
    }
  }
  layers.push_back({levels.back().combine, Vec::Zero(1)});
  return layers;
}

Network assemble(int input_dim, const std::vector<AffineLayer>& layers, const std::vector<Activation>& acts) {
  Network net;
  net.spec.input_dim = input_dim;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l)
    net.spec.hidden.push_back({static_cast<int>(layers[l].W.rows()), acts[l]});
  net.spec.output_dim = static_cast<int>(layers.back().W.rows());
  net.theta = ParamVector::Zero(static_cast<Eigen::Index>(net.spec.param_count()));
  Eigen::Index off = 0;
  for (const auto& layer : layers) {
    const auto nw = layer.W.size();
    Eigen::Map<RowMajorMat>(net.theta.data() + off, layer.W.rows(), layer.W.cols()) = layer.W;
    off += nw;
    net.theta.segment(off, layer.b.size()) = layer.b;
    off += layer.b.size();
  }
  return net;
}

std::vector<AffineLayer> disassemble(const Network& net) {
  std::vector<AffineLayer> layers;
  Eigen::Index off = 0;
  int in = net.spec.input_dim;
  for (const auto& layer : net.spec.affine_layers()) {
    AffineLayer a;
    a.W = Eigen::Map<const RowMajorMat>(net.theta.data() + off, layer.width, in);
    off += static_cast<Eigen::Index>(layer.width) * in;
    a.b = net.theta.segment(off, layer.width);
    off += layer.width;
    layers.push_back(std::move(a));
    in = layer.width;
  }
  return layers;
}

double bbox_diameter(const Simplex& s) {
  Vec lo = s.vertices.front(), hi = s.vertices.front();
  for (const auto& v : s.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

// Edge matrix T = [v1 - v0, ..., vd - v0].
Mat edge_matrix(const Simplex& s) {
  const int d = s.dim();
  Mat T(d, d);
  for (int j = 0; j < d; ++j) T.col(j) = s.vertices[j + 1] - s.vertices[0];
  return T;
}

// Barycentric coordinates (lambda_0, ..., lambda_d) of x.
Vec barycentric(const Simplex& s, const Vec& x) {
  const int d = s.dim();
  const Vec rest = edge_matrix(s).partialPivLu().solve(x - s.vertices[0]);
  Vec lam(d + 1);
  lam[0] = 1.0 - rest.sum();
  lam.tail(d) = rest;
  return lam;
}

}  // namespace

int validate_hnn(const NetworkSpec& spec) {
  spec.validate();
  int step = -1;
  for (int l = 0; l < spec.depth(); ++l) {
    const auto kind = spec.hidden[l].act.kind;
    if (kind == Activation::Kind::Heaviside) {
      if (step >= 0) throw std::invalid_argument("HNN must have exactly one step layer");
      step = l;
    } else if (kind != Activation::Kind::ReLU) {
      throw std::invalid_argument("HNN hidden layers other than the step layer must be ReLU");
    }
  }
  if (step < 0) throw std::invalid_argument("HNN must have exactly one step layer");
  return step;
}

NetworkSpec make_hnn_spec(int input_dim, const std::vector<int>& widths, int step_layer, double ste_c) {
  if (step_layer < 0 || step_layer >= static_cast<int>(widths.size()))
    throw std::invalid_argument("step layer index out of range");
  NetworkSpec spec;
  spec.input_dim = input_dim;
  spec.output_dim = 1;
  for (int l = 0; l < static_cast<int>(widths.size()); ++l)
    spec.hidden.push_back({widths[l], l == step_layer ? Activation::heaviside(ste_c) : Activation::relu()});
  validate_hnn(spec);
  return spec;
}

std::vector<int> min_tree_widths(int k) {
  if (k < 1) throw std::invalid_argument("min tree needs at least one input");
  std::vector<int> widths;
  const auto layers = min_tree_layers(k, true);
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) widths.push_back(static_cast<int>(layers[l].W.rows()));
  return widths;
}

Network min_tree_net(int k) {
  if (k < 1) throw std::invalid_argument("min tree needs at least one input");
  const auto layers = min_tree_layers(k, true);
  return assemble(k, layers, std::vector<Activation>(layers.size(), Activation::relu()));
}

Vec Simplex::centroid() const {
  Vec c = Vec::Zero(dim());
  for (const auto& v : vertices) c += v;
  return c / static_cast<double>(vertices.size());
}

void validate(const Simplex& s) {
  const int d = s.dim();
  if (d < 1 || static_cast<int>(s.vertices.size()) != d + 1)
    throw std::invalid_argument("simplex in R^d needs d + 1 vertices");
  for (const auto& v : s.vertices)
    if (v.size() != d) throw DimensionError("simplex vertices have inconsistent dimension");
  const double scale = bbox_diameter(s);
  const double vol = std::abs(edge_matrix(s).determinant());
  if (!(scale > 0.0) || vol < 1e-12 * std::pow(scale, d)) throw DegenerateSimplex("degenerate simplex");
}

Network simplex_chi_net(const Simplex& s) {
  validate(s);
  const int d = s.dim();
  if (d == 1) {
    const double v0 = std::min(s.vertices[0][0], s.vertices[1][0]);
    const double v1 = std::max(s.vertices[0][0], s.vertices[1][0]);
    AffineLayer step{Mat::Ones(2, 1), Vec(2)};
    step.b << -v0, -v1;
    AffineLayer out{Mat(1, 2), Vec::Zero(1)};
    out.W << 1.0, -1.0;
    return assemble(1, {step, out}, {Activation::heaviside(0.5)});
  }

  // Facet i is spanned by all vertices except v_i; its unit normal spans the
  // null space of the facet edge vectors.
  AffineLayer facets{Mat(d + 1, d), Vec(d + 1)};
  for (int i = 0; i <= d; ++i) {
    std::vector<Vec> pts;
    for (int j = 0; j <= d; ++j)
      if (j != i) pts.push_back(s.vertices[j]);
    Mat E(d - 1, d);
    for (int j = 1; j < d; ++j) E.row(j - 1) = (pts[j] - pts[0]).transpose();
    Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeFullV);
    Vec n = svd.matrixV().col(d - 1);
    double offset = -n.dot(pts[0]);
    if (n.dot(s.vertices[i]) + offset < 0.0) {
      n = -n;
      offset = -offset;
    }
    facets.W.row(i) = n.transpose();
    facets.b[i] = offset;
  }

  std::vector<AffineLayer> layers{facets};
  // facet indicators are 0 or 1, so the merged tree is exact here
  const auto tree = min_tree_layers(d + 1, false);
  layers.insert(layers.end(), tree.begin(), tree.end());
  std::vector<Activation> acts(layers.size() - 1, Activation::relu());
  acts[0] = Activation::heaviside(0.5);
  return assemble(d, layers, acts);
}

ChiNetSize chi_net_size(int d) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (d == 1) return {1, 2};
  // step layer of d + 1 facets, then one gadget level per halving
  int layers = 1, neurons = d + 1, m = d + 1;
  while (m > 1) {
    neurons += 4 * (m / 2) + 2 * (m % 2);
    m = m / 2 + m % 2;
    ++layers;
  }
  return {layers, neurons};
}

bool in_simplex(const Simplex& s, const Vec& x) {
  validate(s);
  return barycentric(s, x).minCoeff() >= -1e-12;
}

double facet_distance(const Simplex& s, const Vec& x) {
  validate(s);
  const int d = s.dim();
  const Vec lam = barycentric(s, x);
  // grad lambda_{1..d} are the rows of T^{-1}; grad lambda_0 = -sum of them
  const Mat Tinv = edge_matrix(s).inverse();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= d; ++i) {
    const Vec g = i == 0 ? Vec(-Tinv.colwise().sum().transpose()) : Vec(Tinv.row(i - 1).transpose());
    best = std::min(best, std::abs(lam[i]) / g.norm());
  }
  return best;
}

Network piecewise_constant_net(const std::vector<Simplex>& simplices, const std::vector<double>& coeffs) {
  if (simplices.empty() || simplices.size() != coeffs.size())
    throw std::invalid_argument("need one coefficient per simplex");
  std::vector<std::vector<AffineLayer>> parts;
  for (const auto& s : simplices) parts.push_back(disassemble(simplex_chi_net(s)));
  const int d = simplices.front().dim();
  const std::size_t L = parts.front().size();
  for (const auto& p : parts)
    if (p.size() != L || p.front().W.cols() != d) throw DimensionError("simplices must share a dimension");

  std::vector<AffineLayer> layers(L);
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& p : parts) {
      rows += p[l].W.rows();
      cols += p[l].W.cols();
    }
    const bool last = l + 1 == L;
    if (l == 0) cols = d;
    if (last) rows = 1;
    layers[l] = {Mat::Zero(rows, cols), Vec::Zero(rows)};
    Eigen::Index r = 0, c = 0;
    for (std::size_t t = 0; t < parts.size(); ++t) {
      const auto& a = parts[t][l];
      if (last) {
        layers[l].W.block(0, c, 1, a.W.cols()) = coeffs[t] * a.W;
        layers[l].b[0] += coeffs[t] * a.b[0];
      } else {
        layers[l].W.block(r, l == 0 ? 0 : c, a.W.rows(), a.W.cols()) = a.W;
        layers[l].b.segment(r, a.b.size()) = a.b;
      }
      r += a.W.rows();
      c += a.W.cols();
    }
  }
  std::vector<Activation> acts(L - 1, Activation::relu());
  acts[0] = Activation::heaviside(0.5);
  return assemble(d, layers, acts);
}

}  // namespace fosls
