#include "fosls/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace fosls {

void Grid1D::validate() const {
  if (!(a < b)) throw std::invalid_argument("grid needs a < b");
  if (n < 3) throw std::invalid_argument("grid needs at least 3 interior nodes");
}

double discrete_energy(const Grid1D& grid, const Vec& u, const Vec& f) {
  const double h = grid.h();
  double grad = 0.0, load = 0.0, prev = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    grad += (u[i] - prev) * (u[i] - prev);
    load += f[i] * u[i];
    prev = u[i];
  }
  grad += prev * prev;
  return 0.5 * grad / h - h * load;
}

namespace {

// Discrete complementarity at tolerance tol: the defect of -u'' - f is at
// least -10 tol / h^2 and its product with u - g is at most 10 tol.
bool complementary(const Vec& u, const Vec& f, const Vec& g, double h2, double tol) {
  const auto n = u.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double left = i > 0 ? u[i - 1] : 0.0;
    const double right = i + 1 < n ? u[i + 1] : 0.0;
    const double defect = (2.0 * u[i] - left - right) / h2 - f[i];
    if (defect < -10.0 * tol / h2 || std::abs(defect * (u[i] - g[i])) > 10.0 * tol) return false;
  }
  return true;
}

}  // namespace

PsorResult psor_1d(const Grid1D& grid, const std::function<double(double)>& f,
                   const std::function<double(double)>& g, const PsorOptions& opts) {
  grid.validate();
  if (!(opts.omega > 0.0 && opts.omega < 2.0)) throw std::invalid_argument("omega must lie in (0, 2)");
  if (!(opts.tol > 0.0) || opts.max_iter < 1) throw std::invalid_argument("invalid PSOR tolerance or budget");

  const int n = grid.n;
  const double h2 = grid.h() * grid.h();
  Vec fv(n), gv(n);
  for (int i = 0; i < n; ++i) {
    fv[i] = f(grid.node(i));
    gv[i] = g(grid.node(i));
  }

  PsorResult res;
  res.u = gv.cwiseMax(0.0);
  res.energy.push_back(discrete_energy(grid, res.u, fv));
  for (long sweep = 1; sweep <= opts.max_iter; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      const double left = i > 0 ? res.u[i - 1] : 0.0;
      const double right = i + 1 < n ? res.u[i + 1] : 0.0;
      const double gs = 0.5 * (left + right + h2 * fv[i]);
      const double next = std::max(gv[i], res.u[i] + opts.omega * (gs - res.u[i]));
      change = std::max(change, std::abs(next - res.u[i]));
      res.u[i] = next;
    }
    res.sweeps = sweep;
    res.last_change = change;
    if (opts.energy_every > 0 && sweep % opts.energy_every == 0)
      res.energy.push_back(discrete_energy(grid, res.u, fv));
    // a small step alone does not bound the defect, which can be about
    // change / (omega h^2); stop only once complementarity holds as well
    if (change <= opts.tol && complementary(res.u, fv, gv, h2, opts.tol)) return res;
  }
  throw ConvergenceError("PSOR did not converge within " + std::to_string(opts.max_iter) +
                             " sweeps (last change " + std::to_string(res.last_change) + ")",
                         res.last_change);
}

double interpolate(const Grid1D& grid, const Vec& u, double x) {
  const double h = grid.h();
  const double s = (x - grid.a) / h;  // node index in the extended grid (0 = a)
  if (s <= 0.0 || s >= grid.n + 1) return 0.0;
  const int k = std::min(static_cast<int>(std::floor(s)), grid.n);
  const double t = s - k;
  auto at = [&](int j) { return (j <= 0 || j >= grid.n + 1) ? 0.0 : u[j - 1]; };
  return (1.0 - t) * at(k) + t * at(k + 1);
}

ParamVector fd_gradient(const std::function<double(const ParamVector&)>& loss, const ParamVector& theta,
                        double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  ParamVector grad(theta.size());
  ParamVector probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + step;
    const double up = loss(probe);
    probe[i] = theta[i] - step;
    const double down = loss(probe);
    probe[i] = theta[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace fosls
