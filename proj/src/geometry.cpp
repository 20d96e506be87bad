#include "fosls/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fosls {

namespace {

constexpr double kClosureSlack = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_dim(const Domain& dom, const Vec& x) {
  if (x.size() != dimension(dom))
    throw DimensionError("point has dimension " + std::to_string(x.size()) + ", domain has " +
                         std::to_string(dimension(dom)));
}

// Distance from x in R^2 to the segment {0} x [0, 1] and its gradient.
DistanceEval slit_distance(const Vec& x) {
  Vec foot(2);
  foot << 0.0, std::clamp(x[1], 0.0, 1.0);
  const Vec diff = x - foot;
  const double dist = diff.norm();
  Vec grad = Vec::Zero(2);
  if (dist > 0.0) grad = diff / dist;
  else grad[0] = 1.0;  // on the slit: pick the x1 > 0 side
  return {dist, grad};
}

}  // namespace

int dimension(const Domain& dom) {
  return std::visit(overloaded{[](const Ball& b) { return b.dim; }, [](const Interval&) { return 1; },
                               [](const UnitDiskSlit&) { return 2; }},
                    dom);
}

std::string describe(const Domain& dom) {
  return std::visit(
      overloaded{[](const Ball& b) { return "ball(d=" + std::to_string(b.dim) + ", R=" + std::to_string(b.radius) + ")"; },
                 [](const Interval& i) { return "interval(" + std::to_string(i.a) + ", " + std::to_string(i.b) + ")"; },
                 [](const UnitDiskSlit&) { return std::string("unit-disk-slit"); }},
      dom);
}

void validate(const Domain& dom) {
  std::visit(overloaded{[](const Ball& b) {
                          if (b.dim < 1) throw DomainError("ball dimension must be positive");
                          if (!(b.radius > 0.0)) throw DomainError("ball radius must be positive");
                        },
                        [](const Interval& i) {
                          if (!(i.a < i.b)) throw DomainError("interval requires a < b");
                        },
                        [](const UnitDiskSlit&) {}},
             dom);
}

DistanceEval surrogate_dist_grad(const Domain& dom, const Vec& x) {
  check_dim(dom, x);
  return std::visit(
      overloaded{
          [&](const Ball& b) -> DistanceEval {
            const double r = x.norm();
            if (r > b.radius + kClosureSlack) throw DomainError("point outside the ball");
            Vec grad = Vec::Zero(x.size());
            if (r > 0.0) grad = -x / r;
            return {std::max(b.radius - r, 0.0), grad};
          },
          [&](const Interval& i) -> DistanceEval {
            const double t = x[0];
            if (t < i.a - kClosureSlack || t > i.b + kClosureSlack) throw DomainError("point outside the interval");
            Vec grad(1);
            const double left = t - i.a;
            const double right = i.b - t;
            if (left <= right) {
              grad[0] = 1.0;
              return {std::max(left, 0.0), grad};
            }
            grad[0] = -1.0;
            return {std::max(right, 0.0), grad};
          },
          [&](const UnitDiskSlit&) -> DistanceEval {
            const double r = x.norm();
            if (r > 1.0 + kClosureSlack) throw DomainError("point outside the unit disk");
            auto slit = slit_distance(x);
            const double to_circle = std::max(1.0 - r, 0.0);
            if (to_circle < slit.d) {
              Vec grad = Vec::Zero(2);
              if (r > 0.0) grad = -x / r;
              return {to_circle, grad};
            }
            return slit;
          }},
      dom);
}

bool contains(const Domain& dom, const Vec& x) {
  if (x.size() != dimension(dom)) return false;
  return std::visit(overloaded{[&](const Ball& b) { return x.norm() < b.radius; },
                               [&](const Interval& i) { return x[0] > i.a && x[0] < i.b; },
                               [&](const UnitDiskSlit&) {
                                 const bool on_slit = x[0] == 0.0 && x[1] >= 0.0 && x[1] <= 1.0;
                                 return x.norm() < 1.0 && !on_slit;
                               }},
                    dom);
}

double volume(const Domain& dom) {
  return std::visit(overloaded{[](const Ball& b) {
                                 const double d = b.dim;
                                 return std::pow(std::numbers::pi, d / 2.0) * std::pow(b.radius, d) /
                                        std::tgamma(d / 2.0 + 1.0);
                               },
                               [](const Interval& i) { return i.b - i.a; },
                               [](const UnitDiskSlit&) { return std::numbers::pi; }},
                    dom);
}

Mat sample_uniform(const Domain& dom, Rng& rng, int n) {
  if (n < 1) throw std::invalid_argument("sample size must be at least 1");
  validate(dom);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int dim = dimension(dom);
  Mat pts(dim, n);

  auto sample_ball = [&](int d, double radius, auto col) {
    double norm = 0.0;
    do {
      for (int k = 0; k < d; ++k) col[k] = gauss(rng);
      norm = col.norm();
    } while (norm == 0.0);
    double r = 0.0;
    do {
      r = radius * std::pow(unif(rng), 1.0 / d);
    } while (r >= radius);
    col *= r / norm;
  };

  for (int k = 0; k < n; ++k) {
    auto col = pts.col(k);
    std::visit(overloaded{[&](const Ball& b) { sample_ball(b.dim, b.radius, col); },
                          [&](const Interval& i) {
                            double t;
                            do {
                              t = i.a + (i.b - i.a) * unif(rng);
                            } while (t <= i.a);
                            col[0] = t;
                          },
                          [&](const UnitDiskSlit&) {
                            do {
                              sample_ball(2, 1.0, col);
                            } while (col[0] == 0.0 && col[1] >= 0.0 && col[1] <= 1.0);
                          }},
               dom);
  }
  return pts;
}

}  // namespace fosls
