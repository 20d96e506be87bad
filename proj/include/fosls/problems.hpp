#pragma once

// Benchmark obstacle problems and error metrics against closed-form
// solutions.

#include <cstdint>
#include <string>
#include <vector>

#include "fosls/admissible.hpp"
#include "fosls/problem.hpp"

namespace fosls {

struct RadialProfile {
  double value;
  double derivative;
};

/// Radial profile of the fundamental solution of -Laplace in R^d.
RadialProfile fundamental_solution(int d, double r);

struct QuarticCoeffs {
  double qa, qb, qc;  // Q(r) = qa r^4 + qb r^2 + qc
};

/// Coefficients matching Q(r0) = F(r0) - F(R0), Q'(r0) = F'(r0), Q(R0) = 0
/// with F the fundamental solution.
QuarticCoeffs solve_radial_coeffs(int d, double r0, double R0);

/// Radially symmetric benchmark on the ball B_R0: obstacle g(x) = Q(|x|),
/// f = 0, contact set |x| <= r0.
struct RadialBenchmark {
  int d;
  double r0;
  double R0;
  QuarticCoeffs q;

  static RadialBenchmark make(int d, double r0, double R0);

  double Q(double r) const;
  double dQ(double r) const;
  double d2Q(double r) const;
  /// Q'(r) / r, finite at r = 0.
  double dQ_over_r(double r) const;
  /// -Laplace Q(|x|) as a function of r.
  double minus_laplace_Q(double r) const;
};

struct RadialExact {
  double u;
  Vec grad_u;
  double lambda;
};

RadialExact radial_exact(const RadialBenchmark& bench, const Vec& x);

/// Two-peak obstacle on the slit disk.
ScalarGrad slit_obstacle(const Vec& x);

Problem make_radial_problem(const RadialBenchmark& bench);
Problem make_slit_problem();

/// Named benchmarks: radial-d1, radial-d2, radial-d10, radial-d20,
/// slit-2peaks. Throws std::invalid_argument for unknown names.
Problem make_benchmark(const std::string& name);
std::vector<std::string> benchmark_names();
/// The radial parameters behind a radial-* name.
RadialBenchmark radial_benchmark(const std::string& name);

/// The exact minimizer (u0, grad u0, -f) of a radial benchmark as an
/// admissible field (lambda = lambda0, div phi = Laplace u0).
AdmissibleField radial_exact_triple(const RadialBenchmark& bench);

/// sqrt(|Omega|/N sum (u_theta - u0)^2) over a fresh uniform sample.
double l2_error_mc(const Problem& problem, const LiftConfig& lift, const TripleNets& nets, int n,
                   std::uint64_t seed);
double l2_error_on(const Problem& problem, const LiftConfig& lift, const TripleNets& nets, const Mat& points);
/// MC estimate of ||u0||_L2, for relative errors.
double l2_norm_exact_on(const Problem& problem, const Mat& points);

struct TripleError {
  double total;     // (|grad(u - u0)|^2 + |phi - grad u0|^2 + |gamma + f|^2)^(1/2)
  double grad_u;    // ||grad(u - u0)||
  double phi;       // ||phi - grad u0||
  double gamma;     // ||gamma + f||
};

TripleError triple_error_mc(const Problem& problem, const LiftConfig& lift, const TripleNets& nets, int n,
                            std::uint64_t seed);
TripleError triple_error_on(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                            const Mat& points);

}  // namespace fosls
