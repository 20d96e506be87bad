#pragma once

// Lifted admissible triples and the least-squares losses built on them.
//
// Raw networks (v, psi, eta) are mapped to
//   u      = g + d * a(v)
//   phi    = psi
//   gamma  = div psi + a(eta),   lambda = a(eta)
// so that u >= g, u = g on the boundary and gamma - div phi >= 0 hold for
// every parameter value.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include "fosls/netcore.hpp"
#include "fosls/problem.hpp"

namespace fosls {

enum class AKind { ReLU, Square };
enum class LossKind { L, J };

struct LiftConfig {
  AKind a_kind = AKind::Square;
  LossKind loss_kind = LossKind::L;
  std::optional<double> radius_R;  // parameter ball for the regularized functional
};

/// a(t) and its first two derivatives; a'(0) = 0 for ReLU.
struct LiftFunction {
  double value;
  double d1;
  double d2;
};
LiftFunction lift_fn(AKind kind, double t);

struct TripleNets {
  Network v;    // R^d -> R
  Network psi;  // R^d -> R^d
  Network eta;  // R^d -> R, may contain a Heaviside layer
};

/// Checks output dimensions and that v/psi are free of step activations.
void validate(const TripleNets& nets, int dim);

struct AdmissiblePointEval {
  double u = 0.0;
  Vec grad_u;
  Vec phi;
  double div_phi = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  double d = 0.0;
  double a_v = 0.0;
};

/// Any admissible triple given pointwise, e.g. a closed-form solution.
using AdmissibleField = std::function<AdmissiblePointEval(const Vec&)>;

AdmissiblePointEval lift_point(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                               const Vec& x);

struct LossTerms {
  double g1;    // (gamma + f)^2
  double g2;    // |grad u - phi|^2
  double g3;    // gamma (u - g)
  double g4;    // phi . grad(u - g)
  double comp;  // lambda (u - g), the complementarity term of the J functional
};

LossTerms loss_terms(const Problem& problem, const AdmissiblePointEval& eval, const Vec& x);
LossTerms loss_terms(const Problem& problem, const LiftConfig& lift, const TripleNets& nets, const Vec& x);

/// Integrand of the selected functional at one point.
double pointwise_loss(const LossTerms& terms, LossKind kind);

/// Reduction in a fixed binary-tree order.
double pairwise_sum(std::span<const double> values);

struct BatchLoss {
  double value = 0.0;
  /// (|Omega|/N) * sum of each term: G1, G2, complementarity term
  /// (G3 for L, lambda(u-g) for J), flux term (G4 for L, zero for J).
  std::array<double, 4> terms{};
};

BatchLoss batch_loss_detail(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                            const Mat& points);
double batch_loss(const Problem& problem, const LiftConfig& lift, const TripleNets& nets, const Mat& points);

struct TripleGrad {
  BatchLoss loss;
  ParamVector v;
  ParamVector psi;
  ParamVector eta;
};

/// Exact parameter gradient of batch_loss (straight-through rule for step
/// layers of eta).
TripleGrad batch_loss_grad(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                           const Mat& points);

struct McEstimate {
  double mean;
  double std_error;
};

/// Monte-Carlo estimate of the continuous functional with its standard
/// error. Returns +inf when radius_R is set and the parameters leave the ball.
McEstimate continuous_loss_ref(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                               int quad_points, std::uint64_t seed);
McEstimate continuous_loss_ref(const Problem& problem, LossKind kind, const AdmissibleField& field,
                               int quad_points, std::uint64_t seed);

/// Same estimate on a caller-supplied point cloud.
McEstimate loss_estimate_on(const Problem& problem, LossKind kind, const AdmissibleField& field,
                            const Mat& points);

/// Lifted triple from networks as an AdmissibleField.
AdmissibleField as_field(const Problem& problem, const LiftConfig& lift, const TripleNets& nets);

/// Lifts a batch of points (one per column) through the networks.
std::vector<AdmissiblePointEval> lift_batch(const Problem& problem, const LiftConfig& lift,
                                            const TripleNets& nets, const Mat& points);

double param_norm(const TripleNets& nets);

}  // namespace fosls
