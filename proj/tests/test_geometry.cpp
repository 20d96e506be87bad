#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fosls/geometry.hpp"

using namespace fosls;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Distance from p to the segment {0} x [0, 1], computed by projection.
double slit_dist(const Vec& p) {
  const double t = std::clamp(p[1], 0.0, 1.0);
  return std::hypot(p[0], p[1] - t);
}

// Lower tail of the chi-square distribution is not needed: we compare the
// statistic against the 1% critical value via the Wilson-Hilferty cube root
// approximation, accurate to a few tenths for k >= 10.
double chi2_critical_99(int k) {
  const double z = 2.326347874;
  const double a = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - a + z * std::sqrt(a), 3);
}

}  // namespace

TEST_CASE("surrogate distance: documented points") {
  const auto b = surrogate_dist_grad(Ball{2, 2.0}, vec({1.0, 0.0}));
  CHECK(b.d == doctest::Approx(1.0));
  CHECK(b.grad[0] == doctest::Approx(-1.0));
  CHECK(b.grad[1] == doctest::Approx(0.0));

  const auto c = surrogate_dist_grad(Ball{3, 1.5}, Vec::Zero(3));
  CHECK(c.d == 1.5);
  CHECK(c.grad.norm() == 0.0);

  const auto s = surrogate_dist_grad(UnitDiskSlit{}, vec({0.5, 0.5}));
  CHECK(s.d == doctest::Approx(1.0 - std::sqrt(0.5)).epsilon(1e-14));

  const auto i = surrogate_dist_grad(Interval{-1.0, 3.0}, vec({0.0}));
  CHECK(i.d == doctest::Approx(1.0));
  CHECK(i.grad[0] == 1.0);
  CHECK(surrogate_dist_grad(Interval{-1.0, 3.0}, vec({2.5})).grad[0] == -1.0);

  CHECK_THROWS_AS(surrogate_dist_grad(Ball{2, 1.0}, vec({2.0, 0.0})), DomainError);
  CHECK(surrogate_dist_grad(Ball{2, 1.0}, vec({1.0, 0.0})).d == 0.0);
}

TEST_CASE("contains and volume") {
  CHECK(contains(Ball{10, 2.0}, Vec::Zero(10)));
  Vec far = Vec::Zero(10);
  far[0] = 3.0;
  CHECK_FALSE(contains(Ball{10, 2.0}, far));
  CHECK_FALSE(contains(UnitDiskSlit{}, vec({0.0, 0.5})));
  CHECK(contains(UnitDiskSlit{}, vec({0.0, -0.5})));
  CHECK(contains(UnitDiskSlit{}, vec({1e-9, 0.5})));

  CHECK(volume(Ball{2, 1.0}) == doctest::Approx(std::numbers::pi));
  CHECK(volume(UnitDiskSlit{}) == doctest::Approx(std::numbers::pi));
  CHECK(volume(Interval{-1.0, 3.0}) == 4.0);
  // pi^5 2^10 / 5!
  CHECK(volume(Ball{10, 2.0}) == doctest::Approx(std::pow(std::numbers::pi, 5) * 1024.0 / 120.0).epsilon(1e-13));
  CHECK(volume(Ball{10, 2.0}) == doctest::Approx(2611.37).epsilon(1e-5));
  CHECK(volume(Ball{1, 1.0}) == doctest::Approx(2.0));

  CHECK_THROWS(validate(Domain{Ball{2, -1.0}}));
  CHECK_THROWS(validate(Domain{Interval{1.0, 1.0}}));
}

TEST_CASE("ball volume against a Monte-Carlo hit ratio in d = 3") {
  Rng rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 400000;
  int hits = 0;
  for (int k = 0; k < n; ++k) {
    const double x = u(rng), y = u(rng), z = u(rng);
    if (x * x + y * y + z * z < 1.0) ++hits;
  }
  const double p = static_cast<double>(hits) / n;
  const double est = 8.0 * p, se = 8.0 * std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(est - volume(Ball{3, 1.0})) < 4.0 * se);
}

TEST_CASE("surrogates coincide with the true distance and are 1-Lipschitz") {
  Rng rng(4);
  const Domain doms[] = {Ball{2, 1.0}, Ball{5, 2.0}, Interval{-1.0, 2.0}, UnitDiskSlit{}};
  for (const auto& dom : doms) {
    const Mat pts = sample_uniform(dom, rng, 10000);
    for (Eigen::Index k = 0; k < pts.cols(); ++k) {
      const Vec x = pts.col(k);
      const auto e = surrogate_dist_grad(dom, x);
      double truth = 0.0;
      if (const auto* b = std::get_if<Ball>(&dom)) truth = b->radius - x.norm();
      else if (const auto* i = std::get_if<Interval>(&dom)) truth = std::min(x[0] - i->a, i->b - x[0]);
      else truth = std::min(1.0 - x.norm(), slit_dist(x));
      CHECK(e.d == doctest::Approx(truth).epsilon(1e-12));
      CHECK(e.d >= 0.0);
      CHECK(e.grad.norm() <= 1.0 + 1e-12);
      if (k > 0) {
        const Vec y = pts.col(k - 1);
        CHECK(std::abs(e.d - surrogate_dist_grad(dom, y).d) <= (x - y).norm() + 1e-12);
      }
    }
  }
}

TEST_CASE("sampler: inside, deterministic, E|X| = R d/(d+1)") {
  Rng a(17), b(17);
  const Mat A = sample_uniform(UnitDiskSlit{}, a, 5000);
  const Mat B = sample_uniform(UnitDiskSlit{}, b, 5000);
  CHECK((A.array() == B.array()).all());
  for (Eigen::Index k = 0; k < A.cols(); ++k) CHECK(contains(UnitDiskSlit{}, Vec(A.col(k))));

  Rng rng(2024);
  const int n = 1000000;
  const Mat P = sample_uniform(Ball{2, 1.0}, rng, n);
  const Eigen::ArrayXd r = P.colwise().norm().transpose().array();
  const double mean = r.mean();
  const double se = std::sqrt((r - mean).square().sum() / (n - 1) / n);
  CHECK(std::abs(mean - 2.0 / 3.0) < 3.0 * se);
}

TEST_CASE("radial histogram follows r^(d-1) (chi-square at 1%)") {
  for (int d : {2, 3, 10}) {
    Rng rng(100 + static_cast<std::uint64_t>(d));
    const int n = 1000000, bins = 20;
    const double R = 1.5;
    const Mat P = sample_uniform(Ball{d, R}, rng, n);
    std::vector<int> counts(bins, 0);
    for (Eigen::Index k = 0; k < P.cols(); ++k) {
      const double s = P.col(k).norm() / R;
      ++counts[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>(s * bins)))];
    }
    double stat = 0.0;
    for (int i = 0; i < bins; ++i) {
      // P(i/bins <= |X|/R < (i+1)/bins) = ((i+1)/bins)^d - (i/bins)^d
      const double p = std::pow((i + 1.0) / bins, d) - std::pow(static_cast<double>(i) / bins, d);
      const double expect = n * p;
      if (expect < 5.0) continue;  // pooled away, tiny inner shells in d = 10
      stat += (counts[static_cast<std::size_t>(i)] - expect) * (counts[static_cast<std::size_t>(i)] - expect) / expect;
    }
    CAPTURE(d);
    CHECK(stat < chi2_critical_99(bins - 1));
  }
}
