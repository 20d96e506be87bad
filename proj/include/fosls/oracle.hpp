#pragma once

// Independent verification tools: projected SOR for 1D obstacle problems
// and central finite-difference gradients.

#include <functional>
#include <stdexcept>
#include <vector>

#include "fosls/netcore.hpp"

namespace fosls {

/// Uniform grid on [a, b] with n interior nodes and homogeneous Dirichlet
/// data at both endpoints.
struct Grid1D {
  double a = 0.0;
  double b = 1.0;
  int n = 3;

  double h() const { return (b - a) / (n + 1); }
  double node(int i) const { return a + (i + 1) * h(); }  // i = 0 .. n-1
  void validate() const;
};

struct PsorOptions {
  double omega = 1.5;
  double tol = 1e-10;
  long max_iter = 1'000'000;
  int energy_every = 100;  // record the discrete energy every k sweeps
};

struct PsorResult {
  Vec u;                        // interior nodal values
  long sweeps = 0;
  double last_change = 0.0;     // max-norm change of the final sweep
  std::vector<double> energy;   // discrete energy trace
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Solves min{-u'' - f, u - g} = 0 on the grid by projected SOR. Stops
/// once a sweep changes no value by more than tol and the discrete
/// complementarity conditions hold at tolerance 10 tol. Round-off alone
/// leaves a defect of about eps |u| / h^2, so tol must stay above that.
PsorResult psor_1d(const Grid1D& grid, const std::function<double(double)>& f,
                   const std::function<double(double)>& g, const PsorOptions& opts = {});

/// 0.5 sum (u_{i+1} - u_i)^2 / h - h sum f_i u_i with zero boundary values.
double discrete_energy(const Grid1D& grid, const Vec& u, const Vec& f);

/// Piecewise-linear interpolant of the nodal solution (zero at endpoints).
double interpolate(const Grid1D& grid, const Vec& u, double x);

/// Central differences (loss(theta + s e_i) - loss(theta - s e_i)) / 2s.
ParamVector fd_gradient(const std::function<double(const ParamVector&)>& loss, const ParamVector& theta,
                        double step);

}  // namespace fosls
