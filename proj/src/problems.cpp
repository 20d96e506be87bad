#include "fosls/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fosls {

namespace {

constexpr double kPi = std::numbers::pi;

void require_exact(const Problem& problem) {
  if (!problem.exact) throw std::invalid_argument("problem '" + problem.name + "' has no exact solution");
}

}  // namespace

RadialProfile fundamental_solution(int d, double r) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (!(r > 0.0)) throw std::invalid_argument("fundamental solution needs r > 0");
  if (d == 1) return {-r / 2.0, -0.5};
  if (d == 2) return {-std::log(r) / (2.0 * kPi), -1.0 / (2.0 * kPi * r)};
  const double dd = d;
  const double sphere_area = 2.0 * std::pow(kPi, dd / 2.0) / std::tgamma(dd / 2.0);
  const double c = 1.0 / ((dd - 2.0) * sphere_area);
  return {c * std::pow(r, 2.0 - dd), c * (2.0 - dd) * std::pow(r, 1.0 - dd)};
}

QuarticCoeffs solve_radial_coeffs(int d, double r0, double R0) {
  if (!(r0 > 0.0 && r0 < R0)) throw std::invalid_argument("radial benchmark needs 0 < r0 < R0");
  const auto F0 = fundamental_solution(d, r0);
  const auto F1 = fundamental_solution(d, R0);
  Eigen::Matrix3d A;
  A << std::pow(r0, 4), r0 * r0, 1.0,
       4.0 * std::pow(r0, 3), 2.0 * r0, 0.0,
       std::pow(R0, 4), R0 * R0, 1.0;
  const Eigen::Vector3d rhs(F0.value - F1.value, F0.derivative, 0.0);
  Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
  if (!lu.isInvertible()) throw std::runtime_error("singular radial coefficient system");
  Eigen::Vector3d q = lu.solve(rhs);
  // one step of iterative refinement
  q += lu.solve(rhs - A * q);
  return {q[0], q[1], q[2]};
}

RadialBenchmark RadialBenchmark::make(int d, double r0, double R0) {
  return {d, r0, R0, solve_radial_coeffs(d, r0, R0)};
}

double RadialBenchmark::Q(double r) const { return (q.qa * r * r + q.qb) * r * r + q.qc; }
double RadialBenchmark::dQ(double r) const { return (4.0 * q.qa * r * r + 2.0 * q.qb) * r; }
double RadialBenchmark::d2Q(double r) const { return 12.0 * q.qa * r * r + 2.0 * q.qb; }
double RadialBenchmark::dQ_over_r(double r) const { return 4.0 * q.qa * r * r + 2.0 * q.qb; }
double RadialBenchmark::minus_laplace_Q(double r) const { return -(d2Q(r) + (d - 1) * dQ_over_r(r)); }

RadialExact radial_exact(const RadialBenchmark& bench, const Vec& x) {
  const double r = x.norm();
  if (r > bench.R0 * (1.0 + 1e-12)) throw std::invalid_argument("point outside the benchmark ball");
  if (r <= bench.r0) return {bench.Q(r), bench.dQ_over_r(r) * x, bench.minus_laplace_Q(r)};
  const auto F = fundamental_solution(bench.d, r);
  const auto FR = fundamental_solution(bench.d, bench.R0);
  return {F.value - FR.value, (F.derivative / r) * x, 0.0};
}

ScalarGrad slit_obstacle(const Vec& x) {
  struct Peak {
    double height, cx, cy;
  };
  static constexpr Peak peaks[] = {{10.0, -0.4, -0.5}, {15.0, -0.4, 0.5}};
  ScalarGrad out{0.0, Vec::Zero(2)};
  for (const auto& p : peaks) {
    const double dx = x[0] - p.cx;
    const double dy = x[1] - p.cy;
    const double bump = p.height * std::exp(-30.0 * (dx * dx + dy * dy));
    if (bump - 1.0 >= 0.0) {
      out.value += bump - 1.0;
      out.grad[0] += -60.0 * dx * bump;
      out.grad[1] += -60.0 * dy * bump;
    }
  }
  return out;
}

Problem make_radial_problem(const RadialBenchmark& bench) {
  Problem p;
  p.name = "radial-d" + std::to_string(bench.d);
  p.domain = Ball{bench.d, bench.R0};
  p.f = [](const Vec&) { return 0.0; };
  p.obstacle = [bench](const Vec& x) {
    const double r = x.norm();
    return ScalarGrad{bench.Q(r), bench.dQ_over_r(r) * x};
  };
  ExactSolution ex;
  ex.u = [bench](const Vec& x) {
    auto e = radial_exact(bench, x);
    return ScalarGrad{e.u, std::move(e.grad_u)};
  };
  ex.lambda = [bench](const Vec& x) { return radial_exact(bench, x).lambda; };
  p.exact = std::move(ex);
  return p;
}

Problem make_slit_problem() {
  Problem p;
  p.name = "slit-2peaks";
  p.domain = UnitDiskSlit{};
  p.f = [](const Vec&) { return 0.0; };
  p.obstacle = slit_obstacle;
  return p;
}

std::vector<std::string> benchmark_names() {
  return {"radial-d1", "radial-d2", "radial-d10", "radial-d20", "slit-2peaks"};
}

RadialBenchmark radial_benchmark(const std::string& name) {
  if (name == "radial-d1") return RadialBenchmark::make(1, 0.5, 1.0);
  if (name == "radial-d2") return RadialBenchmark::make(2, 0.5, 1.0);
  if (name == "radial-d10") return RadialBenchmark::make(10, 0.7, 2.0);
  if (name == "radial-d20") return RadialBenchmark::make(20, 0.9, 2.0);
  throw std::invalid_argument("unknown radial benchmark '" + name + "'");
}

Problem make_benchmark(const std::string& name) {
  if (name == "slit-2peaks") return make_slit_problem();
  return make_radial_problem(radial_benchmark(name));
}

AdmissibleField radial_exact_triple(const RadialBenchmark& bench) {
  return [bench](const Vec& x) {
    const auto ex = radial_exact(bench, x);
    AdmissiblePointEval e;
    e.u = ex.u;
    e.grad_u = ex.grad_u;
    e.phi = ex.grad_u;
    // Laplace u0 = -lambda0 on the contact set, harmonic outside
    e.div_phi = -ex.lambda;
    e.lambda = ex.lambda;
    e.gamma = 0.0;
    e.d = bench.R0 - x.norm();
    e.a_v = e.d > 0.0 ? (ex.u - bench.Q(x.norm())) / e.d : 0.0;
    return e;
  };
}

double l2_error_on(const Problem& problem, const LiftConfig& lift, const TripleNets& nets, const Mat& points) {
  require_exact(problem);
  const auto evals = lift_batch(problem, lift, nets, points);
  std::vector<double> sq(evals.size());
  for (std::size_t k = 0; k < evals.size(); ++k) {
    const double diff = evals[k].u - problem.exact->u(points.col(static_cast<Eigen::Index>(k))).value;
    sq[k] = diff * diff;
  }
  return std::sqrt(volume(problem.domain) * pairwise_sum(sq) / static_cast<double>(points.cols()));
}

double l2_error_mc(const Problem& problem, const LiftConfig& lift, const TripleNets& nets, int n,
                   std::uint64_t seed) {
  require_exact(problem);
  Rng rng(seed);
  return l2_error_on(problem, lift, nets, sample_uniform(problem.domain, rng, n));
}

double l2_norm_exact_on(const Problem& problem, const Mat& points) {
  require_exact(problem);
  std::vector<double> sq(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    const double u = problem.exact->u(points.col(k)).value;
    sq[static_cast<std::size_t>(k)] = u * u;
  }
  return std::sqrt(volume(problem.domain) * pairwise_sum(sq) / static_cast<double>(points.cols()));
}

TripleError triple_error_on(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                            const Mat& points) {
  require_exact(problem);
  const auto evals = lift_batch(problem, lift, nets, points);
  const auto n = evals.size();
  std::vector<double> gu(n), ph(n), ga(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec x = points.col(static_cast<Eigen::Index>(k));
    const auto ex = problem.exact->u(x);
    gu[k] = (evals[k].grad_u - ex.grad).squaredNorm();
    ph[k] = (evals[k].phi - ex.grad).squaredNorm();
    const double r = evals[k].gamma + problem.f(x);
    ga[k] = r * r;
  }
  const double w = volume(problem.domain) / static_cast<double>(n);
  TripleError e;
  e.grad_u = std::sqrt(w * pairwise_sum(gu));
  e.phi = std::sqrt(w * pairwise_sum(ph));
  e.gamma = std::sqrt(w * pairwise_sum(ga));
  e.total = std::sqrt(e.grad_u * e.grad_u + e.phi * e.phi + e.gamma * e.gamma);
  return e;
}

TripleError triple_error_mc(const Problem& problem, const LiftConfig& lift, const TripleNets& nets, int n,
                            std::uint64_t seed) {
  require_exact(problem);
  Rng rng(seed);
  return triple_error_on(problem, lift, nets, sample_uniform(problem.domain, rng, n));
}

}  // namespace fosls
