#pragma once

// Hybrid networks with a single Heaviside layer (HNN_k): the ReLU min
// gadget, exact characteristic functions of simplices, and the
// point-in-simplex predicate used to verify them.

#include <vector>

#include "fosls/netcore.hpp"

namespace fosls {

/// Index of the single Heaviside hidden layer. Throws unless the spec has
/// exactly one step layer and every other hidden layer is ReLU.
int validate_hnn(const NetworkSpec& spec);

/// Hidden ReLU widths with a step activation at `step_layer`.
NetworkSpec make_hnn_spec(int input_dim, const std::vector<int>& widths, int step_layer, double ste_c);

/// ReLU network R^k -> R computing min of its inputs with
/// min{a, b} = (a + b)/2 - |a - b|/2 arranged in a binary tree of
/// ceil(log2 k) gadget levels. Between levels each partial minimum m is
/// carried as ReLU(m), ReLU(-m), giving 2 ceil(log2 k) - 1 hidden layers;
/// the result is as accurate as the scalar formula applied pairwise.
Network min_tree_net(int k);

/// Width of each hidden layer of min_tree_net(k).
std::vector<int> min_tree_widths(int k);

struct Simplex {
  std::vector<Vec> vertices;  // d + 1 points in R^d

  int dim() const { return static_cast<int>(vertices.empty() ? 0 : vertices.front().size()); }
  Vec centroid() const;
};

class DegenerateSimplex : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void validate(const Simplex& s);

/// Characteristic function of the closed simplex as an HNN: d + 1 facet
/// functions followed by Heaviside, then a min tree. For d = 1 the net is
/// H(x - v0) - H(x - v1), which is 1 on [v0, v1).
Network simplex_chi_net(const Simplex& s);

struct ChiNetSize {
  int hidden_layers;
  int neurons;  // hidden neurons
};

/// Size of simplex_chi_net in dimension d from the construction count.
ChiNetSize chi_net_size(int d);

/// Barycentric test with tolerance 1e-12.
bool in_simplex(const Simplex& s, const Vec& x);

/// Distance from x to the nearest facet hyperplane.
double facet_distance(const Simplex& s, const Vec& x);

/// sum_tau coeff_tau * chi_tau as one network (block-diagonal stacking).
/// Shared facets are counted once per simplex.
Network piecewise_constant_net(const std::vector<Simplex>& simplices, const std::vector<double>& coeffs);

}  // namespace fosls
