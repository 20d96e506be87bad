#pragma once

// Domains, surrogate distance functions to the boundary, uniform samplers
// and volumes.

#include <random>
#include <string>
#include <variant>

#include "fosls/netcore.hpp"

namespace fosls {

using Rng = std::mt19937_64;

/// Open ball of the given radius centred at the origin.
struct Ball {
  int dim = 1;
  double radius = 1.0;
};

struct Interval {
  double a = 0.0;
  double b = 1.0;
};

/// Open unit disk in R^2 with the slit {0} x [0, 1] removed.
struct UnitDiskSlit {};

using Domain = std::variant<Ball, Interval, UnitDiskSlit>;

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

int dimension(const Domain& dom);
std::string describe(const Domain& dom);
void validate(const Domain& dom);

struct DistanceEval {
  double d;
  Vec grad;
};

/// Surrogate distance to the boundary and its gradient. For the shipped
/// domains it coincides with the Euclidean distance. Throws DomainError
/// for points outside the closure.
DistanceEval surrogate_dist_grad(const Domain& dom, const Vec& x);

bool contains(const Domain& dom, const Vec& x);

double volume(const Domain& dom);

/// N i.i.d. uniform points, one per column.
Mat sample_uniform(const Domain& dom, Rng& rng, int n);

}  // namespace fosls
