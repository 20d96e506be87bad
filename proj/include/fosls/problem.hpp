#pragma once

// Obstacle problem data: domain, source f, obstacle g with its gradient,
// and optional closed-form solution.

#include <functional>
#include <optional>
#include <string>

#include "fosls/geometry.hpp"

namespace fosls {

struct ScalarGrad {
  double value;
  Vec grad;
};

/// Closed-form solution data: u0, grad u0 and the multiplier
/// lambda0 = -Laplace(u0) - f.
struct ExactSolution {
  std::function<ScalarGrad(const Vec&)> u;
  std::function<double(const Vec&)> lambda;
};

struct Problem {
  std::string name;
  Domain domain;
  std::function<double(const Vec&)> f;
  std::function<ScalarGrad(const Vec&)> obstacle;
  std::optional<ExactSolution> exact;
};

}  // namespace fosls
