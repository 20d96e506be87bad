#include "fosls/optim.hpp"

#include <chrono>
#include <cmath>

#include "fosls/problems.hpp"

namespace fosls {

AdamState AdamState::zeros(Eigen::Index n) {
  AdamState s;
  s.m = Vec::Zero(n);
  s.v = Vec::Zero(n);
  return s;
}

void adam_step(AdamState& state, ParamVector& theta, const ParamVector& grad, double lr) {
  if (grad.size() != theta.size() || state.m.size() != theta.size() || state.v.size() != theta.size())
    throw DimensionError("adam_step: shape mismatch");
  if (!(lr >= 0.0)) throw std::invalid_argument("adam_step: learning rate must be non-negative");
  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  if (lr == 0.0) return;
  theta.array() -= lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + state.eps);
}

double lr_at(const Schedule& sched, std::int64_t t) {
  if (sched.total <= 0) throw std::invalid_argument("schedule needs a positive iteration budget");
  if (t < 0 || t > sched.total) throw std::out_of_range("lr_at: iteration outside [0, T]");
  return sched.l0 * (1.0 - static_cast<double>(t) / static_cast<double>(sched.total));
}

namespace {

constexpr const char* kTermNames[] = {"G1 (gamma + f)^2", "G2 |grad u - phi|^2", "complementarity term",
                                      "G4 phi . grad(u - g)"};

void check_finite(const TripleGrad& g, std::int64_t iter) {
  for (int i = 0; i < 4; ++i)
    if (!std::isfinite(g.loss.terms[i]))
      throw NumericError(iter, kTermNames[i],
                         "non-finite loss at iteration " + std::to_string(iter) + " in " + kTermNames[i]);
  if (!std::isfinite(g.loss.value))
    throw NumericError(iter, "total", "non-finite loss at iteration " + std::to_string(iter));
  const std::pair<const ParamVector*, const char*> grads[] = {{&g.v, "grad v"}, {&g.psi, "grad psi"},
                                                              {&g.eta, "grad eta"}};
  for (const auto& [vec, name] : grads)
    if (!vec->allFinite())
      throw NumericError(iter, name, "non-finite gradient at iteration " + std::to_string(iter) + " in " + name);
}

}  // namespace

TrainResult train(const Problem& problem, const LiftConfig& lift, TripleNets nets, const TrainSettings& cfg,
                  const TrainLogger& logger) {
  const int dim = dimension(problem.domain);
  validate(nets, dim);
  if (cfg.n_points < 1) throw std::invalid_argument("train: n_points must be positive");
  if (cfg.iterations < 0) throw std::invalid_argument("train: iterations must be non-negative");
  if (!(cfg.l0 > 0.0)) throw std::invalid_argument("train: l0 must be positive");

  TrainResult result;
  if (cfg.iterations == 0) {
    result.nets = std::move(nets);
    return result;
  }

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  Rng sample_rng(cfg.sample_seed);
  Mat points = sample_uniform(problem.domain, sample_rng, cfg.n_points);

  Mat eval_points;
  const bool do_eval = cfg.eval_every > 0 && problem.exact.has_value();
  if (do_eval) {
    Rng eval_rng(cfg.eval_seed);
    eval_points = sample_uniform(problem.domain, eval_rng, cfg.eval_points);
  }

  auto make_state = [&](const Network& net) {
    AdamState s = AdamState::zeros(net.theta.size());
    s.beta1 = cfg.beta1;
    s.beta2 = cfg.beta2;
    s.eps = cfg.eps;
    return s;
  };
  AdamState sv = make_state(nets.v), spsi = make_state(nets.psi), seta = make_state(nets.eta);
  const Schedule sched{cfg.l0, cfg.iterations};

  auto emit = [&](std::int64_t iter, double loss, double lr) {
    TrainRecord rec{iter, loss, lr, std::nullopt, std::nullopt, 0.0};
    if (do_eval && (iter % cfg.eval_every == 0 || iter == cfg.iterations)) {
      rec.l2_error = l2_error_on(problem, lift, nets, eval_points);
      rec.triple_error = triple_error_on(problem, lift, nets, eval_points).total;
    }
    rec.elapsed_s = elapsed();
    result.history.push_back(rec);
    if (logger) logger(rec);
  };

  for (std::int64_t it = 0; it < cfg.iterations; ++it) {
    if (it > 0 && cfg.resample) points = sample_uniform(problem.domain, sample_rng, cfg.n_points);
    const TripleGrad g = batch_loss_grad(problem, lift, nets, points);
    check_finite(g, it);
    const double lr = lr_at(sched, it);
    emit(it, g.loss.value, lr);
    adam_step(sv, nets.v.theta, g.v, lr);
    adam_step(spsi, nets.psi.theta, g.psi, lr);
    adam_step(seta, nets.eta.theta, g.eta, lr);
  }

  if (cfg.resample) points = sample_uniform(problem.domain, sample_rng, cfg.n_points);
  const BatchLoss final_loss = batch_loss_detail(problem, lift, nets, points);
  if (!std::isfinite(final_loss.value))
    throw NumericError(cfg.iterations, "total", "non-finite loss after the final update");
  emit(cfg.iterations, final_loss.value, lr_at(sched, cfg.iterations));

  result.nets = std::move(nets);
  return result;
}

}  // namespace fosls
