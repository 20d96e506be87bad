#include "fosls/admissible.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fosls {

namespace {

constexpr Eigen::Index kChunk = 256;

struct PointData {
  double d;
  Vec grad_d;
  double g;
  Vec grad_g;
  double f;
};

PointData point_data(const Problem& problem, const Vec& x) {
  auto dist = surrogate_dist_grad(problem.domain, x);
  auto obs = problem.obstacle(x);
  return {dist.d, std::move(dist.grad), obs.value, std::move(obs.grad), problem.f(x)};
}

// Row `row` of the Jacobian at point k, in the tape's dimension-major layout.
Vec jac_row(const Mat& J, Eigen::Index row, Eigen::Index k, Eigen::Index B, int dim) {
  Vec out(dim);
  for (int j = 0; j < dim; ++j) out[j] = J(row, j * B + k);
  return out;
}

// Forward state of one chunk: tapes plus lifted values.
struct ChunkEval {
  ForwardTape v, psi, eta;
  std::vector<PointData> data;
  std::vector<AdmissiblePointEval> evals;
};

void run_chunk(const Problem& problem, const LiftConfig& lift, const TripleNets& nets, const Mat& X,
               ChunkEval& ce) {
  const int dim = static_cast<int>(X.rows());
  const Eigen::Index B = X.cols();
  ce.v.run(nets.v.spec, nets.v.theta, X, true);
  ce.psi.run(nets.psi.spec, nets.psi.theta, X, true);
  ce.eta.run(nets.eta.spec, nets.eta.theta, X, false);
  ce.data.clear();
  ce.evals.clear();
  ce.data.reserve(static_cast<std::size_t>(B));
  ce.evals.reserve(static_cast<std::size_t>(B));
  const Mat& vy = ce.v.output();
  const Mat& vj = ce.v.output_jac();
  const Mat& py = ce.psi.output();
  const Mat& pj = ce.psi.output_jac();
  const Mat& ey = ce.eta.output();
  for (Eigen::Index k = 0; k < B; ++k) {
    PointData pd = point_data(problem, X.col(k));
    const auto av = lift_fn(lift.a_kind, vy(0, k));
    const auto ae = lift_fn(lift.a_kind, ey(0, k));
    AdmissiblePointEval e;
    e.d = pd.d;
    e.a_v = av.value;
    e.u = pd.g + pd.d * av.value;
    e.grad_u = pd.grad_g + pd.grad_d * av.value + (pd.d * av.d1) * jac_row(vj, 0, k, B, dim);
    e.phi = py.col(k);
    e.div_phi = 0.0;
    for (int j = 0; j < dim; ++j) e.div_phi += pj(j, j * B + k);
    e.lambda = ae.value;
    e.gamma = e.div_phi + e.lambda;
    ce.data.push_back(std::move(pd));
    ce.evals.push_back(std::move(e));
  }
}

LossTerms terms_from(const AdmissiblePointEval& e, double g, const Vec& grad_g, double f) {
  const double r = e.gamma + f;
  const double gap = e.u - g;
  return {r * r, (e.grad_u - e.phi).squaredNorm(), e.gamma * gap, e.phi.dot(e.grad_u - grad_g), e.lambda * gap};
}

std::array<double, 4> term_vector(const LossTerms& t, LossKind kind) {
  if (kind == LossKind::L) return {t.g1, t.g2, t.g3, t.g4};
  return {t.g1, t.g2, t.comp, 0.0};
}

Mat chunk_cols(const Mat& points, Eigen::Index start) {
  return points.middleCols(start, std::min(kChunk, points.cols() - start));
}

void check_points(const Problem& problem, const Mat& points) {
  if (points.cols() == 0) throw std::invalid_argument("empty collocation batch");
  if (points.rows() != dimension(problem.domain)) throw DimensionError("collocation points have wrong dimension");
}

ParamVector tree_sum(const std::vector<ParamVector>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return tree_sum(parts, lo, mid) + tree_sum(parts, mid, hi);
}

}  // namespace

LiftFunction lift_fn(AKind kind, double t) {
  if (kind == AKind::Square) return {t * t, 2.0 * t, 2.0};
  return {t > 0.0 ? t : 0.0, t > 0.0 ? 1.0 : 0.0, 0.0};
}

void validate(const TripleNets& nets, int dim) {
  auto check = [dim](const Network& net, int out, const char* name, bool allow_steps) {
    net.spec.validate();
    if (net.spec.input_dim != dim || net.spec.output_dim != out)
      throw DimensionError(std::string(name) + " network has the wrong input/output dimension");
    if (static_cast<std::size_t>(net.theta.size()) != net.spec.param_count())
      throw DimensionError(std::string(name) + " parameter vector length mismatch");
    if (!allow_steps)
      for (const auto& layer : net.spec.hidden)
        if (layer.act.kind == Activation::Kind::Heaviside)
          throw std::invalid_argument(std::string(name) + " network must not use step activations");
  };
  check(nets.v, 1, "v", false);
  check(nets.psi, dim, "psi", false);
  check(nets.eta, 1, "eta", true);
}

AdmissiblePointEval lift_point(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                               const Vec& x) {
  ChunkEval ce;
  run_chunk(problem, lift, nets, x, ce);
  return ce.evals.front();
}

std::vector<AdmissiblePointEval> lift_batch(const Problem& problem, const LiftConfig& lift,
                                            const TripleNets& nets, const Mat& points) {
  std::vector<AdmissiblePointEval> out;
  out.reserve(static_cast<std::size_t>(points.cols()));
  ChunkEval ce;
  for (Eigen::Index start = 0; start < points.cols(); start += kChunk) {
    run_chunk(problem, lift, nets, chunk_cols(points, start), ce);
    for (auto& e : ce.evals) out.push_back(std::move(e));
  }
  return out;
}

LossTerms loss_terms(const Problem& problem, const AdmissiblePointEval& eval, const Vec& x) {
  const auto obs = problem.obstacle(x);
  return terms_from(eval, obs.value, obs.grad, problem.f(x));
}

LossTerms loss_terms(const Problem& problem, const LiftConfig& lift, const TripleNets& nets, const Vec& x) {
  return loss_terms(problem, lift_point(problem, lift, nets, x), x);
}

double pointwise_loss(const LossTerms& t, LossKind kind) {
  if (kind == LossKind::L) return t.g1 + t.g2 + t.g3 + t.g4;
  return t.g1 + t.g2 + t.comp;
}

double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const auto mid = values.size() / 2;
  return pairwise_sum(values.first(mid)) + pairwise_sum(values.subspan(mid));
}

BatchLoss batch_loss_detail(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                            const Mat& points) {
  check_points(problem, points);
  const double w = volume(problem.domain) / static_cast<double>(points.cols());
  std::vector<double> total;
  std::array<std::vector<double>, 4> parts;
  total.reserve(static_cast<std::size_t>(points.cols()));
  ChunkEval ce;
  for (Eigen::Index start = 0; start < points.cols(); start += kChunk) {
    const Mat X = chunk_cols(points, start);
    run_chunk(problem, lift, nets, X, ce);
    for (std::size_t k = 0; k < ce.evals.size(); ++k) {
      const auto& pd = ce.data[k];
      const auto t = terms_from(ce.evals[k], pd.g, pd.grad_g, pd.f);
      total.push_back(pointwise_loss(t, lift.loss_kind));
      const auto tv = term_vector(t, lift.loss_kind);
      for (int i = 0; i < 4; ++i) parts[i].push_back(tv[i]);
    }
  }
  BatchLoss out;
  out.value = w * pairwise_sum(total);
  for (int i = 0; i < 4; ++i) out.terms[i] = w * pairwise_sum(parts[i]);
  return out;
}

double batch_loss(const Problem& problem, const LiftConfig& lift, const TripleNets& nets, const Mat& points) {
  return batch_loss_detail(problem, lift, nets, points).value;
}

TripleGrad batch_loss_grad(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                           const Mat& points) {
  check_points(problem, points);
  const int dim = static_cast<int>(points.rows());
  const double w = volume(problem.domain) / static_cast<double>(points.cols());
  const bool flux_form = lift.loss_kind == LossKind::L;

  std::vector<double> total;
  std::array<std::vector<double>, 4> parts;
  std::vector<ParamVector> gv, gpsi, geta;
  ChunkEval ce;
  for (Eigen::Index start = 0; start < points.cols(); start += kChunk) {
    const Mat X = chunk_cols(points, start);
    const Eigen::Index B = X.cols();
    run_chunk(problem, lift, nets, X, ce);

    Mat cot_v(1, B), cot_vjac(1, B * dim);
    Mat cot_psi(dim, B), cot_psijac = Mat::Zero(dim, B * dim);
    Mat cot_eta(1, B);
    const Mat& vy = ce.v.output();
    const Mat& vj = ce.v.output_jac();
    const Mat& ey = ce.eta.output();

    for (Eigen::Index k = 0; k < B; ++k) {
      const auto& pd = ce.data[static_cast<std::size_t>(k)];
      const auto& e = ce.evals[static_cast<std::size_t>(k)];
      const auto t = terms_from(e, pd.g, pd.grad_g, pd.f);
      total.push_back(pointwise_loss(t, lift.loss_kind));
      const auto tv = term_vector(t, lift.loss_kind);
      for (int i = 0; i < 4; ++i) parts[i].push_back(tv[i]);

      const auto av = lift_fn(lift.a_kind, vy(0, k));
      const auto ae = lift_fn(lift.a_kind, ey(0, k));
      const double gap = e.u - pd.g;
      const Vec err = e.grad_u - e.phi;
      const double rbar = 2.0 * (e.gamma + pd.f);

      double div_bar, lambda_bar, gap_bar;
      Vec grad_u_bar = 2.0 * err;
      Vec phi_bar = -2.0 * err;
      if (flux_form) {
        div_bar = rbar + gap;
        lambda_bar = rbar + gap;
        gap_bar = e.gamma;
        grad_u_bar += e.phi;
        phi_bar += e.grad_u - pd.grad_g;
      } else {
        div_bar = rbar;
        lambda_bar = rbar + gap;
        gap_bar = e.lambda;
      }

      const Vec grad_v = jac_row(vj, 0, k, B, dim);
      cot_v(0, k) = w * (gap_bar * pd.d * av.d1 + grad_u_bar.dot(pd.grad_d) * av.d1 +
                         grad_u_bar.dot(grad_v) * pd.d * av.d2);
      for (int j = 0; j < dim; ++j) {
        cot_vjac(0, j * B + k) = w * pd.d * av.d1 * grad_u_bar[j];
        cot_psijac(j, j * B + k) = w * div_bar;
      }
      cot_psi.col(k) = w * phi_bar;
      cot_eta(0, k) = w * lambda_bar * ae.d1;
    }

    gv.push_back(ParamVector::Zero(nets.v.theta.size()));
    gpsi.push_back(ParamVector::Zero(nets.psi.theta.size()));
    geta.push_back(ParamVector::Zero(nets.eta.theta.size()));
    ce.v.pullback(cot_v, cot_vjac, gv.back());
    ce.psi.pullback(cot_psi, cot_psijac, gpsi.back());
    ce.eta.pullback(cot_eta, Mat(), geta.back());
  }

  TripleGrad out;
  out.loss.value = w * pairwise_sum(total);
  for (int i = 0; i < 4; ++i) out.loss.terms[i] = w * pairwise_sum(parts[i]);
  out.v = tree_sum(gv, 0, gv.size());
  out.psi = tree_sum(gpsi, 0, gpsi.size());
  out.eta = tree_sum(geta, 0, geta.size());
  return out;
}

double param_norm(const TripleNets& nets) {
  return std::sqrt(nets.v.theta.squaredNorm() + nets.psi.theta.squaredNorm() + nets.eta.theta.squaredNorm());
}

AdmissibleField as_field(const Problem& problem, const LiftConfig& lift, const TripleNets& nets) {
  return [&problem, lift, nets](const Vec& x) { return lift_point(problem, lift, nets, x); };
}

namespace {

McEstimate estimate_from(const Problem& problem, LossKind kind,
                         const std::vector<AdmissiblePointEval>& evals, const Mat& points) {
  const auto n = evals.size();
  std::vector<double> vals(n), sq(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec x = points.col(static_cast<Eigen::Index>(k));
    vals[k] = pointwise_loss(loss_terms(problem, evals[k], x), kind);
  }
  const double mean = pairwise_sum(vals) / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) sq[k] = (vals[k] - mean) * (vals[k] - mean);
  const double var = n > 1 ? pairwise_sum(sq) / static_cast<double>(n - 1) : 0.0;
  const double vol = volume(problem.domain);
  return {vol * mean, vol * std::sqrt(var / static_cast<double>(n))};
}

}  // namespace

McEstimate loss_estimate_on(const Problem& problem, LossKind kind, const AdmissibleField& field,
                            const Mat& points) {
  check_points(problem, points);
  std::vector<AdmissiblePointEval> evals;
  evals.reserve(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index k = 0; k < points.cols(); ++k) evals.push_back(field(points.col(k)));
  return estimate_from(problem, kind, evals, points);
}

McEstimate continuous_loss_ref(const Problem& problem, LossKind kind, const AdmissibleField& field,
                               int quad_points, std::uint64_t seed) {
  if (quad_points < 10000) throw std::invalid_argument("continuous_loss_ref needs at least 1e4 points");
  Rng rng(seed);
  return loss_estimate_on(problem, kind, field, sample_uniform(problem.domain, rng, quad_points));
}

McEstimate continuous_loss_ref(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                               int quad_points, std::uint64_t seed) {
  if (lift.radius_R && param_norm(nets) > *lift.radius_R)
    return {std::numeric_limits<double>::infinity(), 0.0};
  if (quad_points < 10000) throw std::invalid_argument("continuous_loss_ref needs at least 1e4 points");
  Rng rng(seed);
  const Mat pts = sample_uniform(problem.domain, rng, quad_points);
  return estimate_from(problem, lift.loss_kind, lift_batch(problem, lift, nets, pts), pts);
}

}  // namespace fosls
