#pragma once

// ADAM with a linearly decaying learning rate, and the training driver.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fosls/admissible.hpp"

namespace fosls {

struct AdamState {
  Vec m;
  Vec v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(Eigen::Index n);
};

void adam_step(AdamState& state, ParamVector& theta, const ParamVector& grad, double lr);

struct Schedule {
  double l0 = 1e-3;
  std::int64_t total = 1;
};

/// l0 * (1 - t / T), for 0 <= t <= T.
double lr_at(const Schedule& sched, std::int64_t t);

class NumericError : public std::runtime_error {
 public:
  NumericError(std::int64_t iteration, std::string term, const std::string& what)
      : std::runtime_error(what), iteration_(iteration), term_(std::move(term)) {}
  std::int64_t iteration() const { return iteration_; }
  const std::string& term() const { return term_; }

 private:
  std::int64_t iteration_;
  std::string term_;
};

struct TrainSettings {
  int n_points = 1000;
  std::int64_t iterations = 1000;
  double l0 = 1e-3;
  std::uint64_t sample_seed = 1;
  std::uint64_t eval_seed = 2;
  std::int64_t eval_every = 0;  // 0 disables error evaluation during training
  int eval_points = 10000;
  bool resample = true;         // fresh collocation points every iteration
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainRecord {
  std::int64_t iter;
  double loss;
  double lr;
  std::optional<double> l2_error;
  std::optional<double> triple_error;
  double elapsed_s;
};

struct TrainResult {
  TripleNets nets;
  std::vector<TrainRecord> history;
};

using TrainLogger = std::function<void(const TrainRecord&)>;

/// Runs `iterations` ADAM steps on the three parameter vectors. Record i
/// holds the batch loss evaluated at the parameters before update i; a
/// final record with iter = iterations is appended when iterations > 0.
/// Throws NumericError on a non-finite loss or gradient.
TrainResult train(const Problem& problem, const LiftConfig& lift, TripleNets nets, const TrainSettings& settings,
                  const TrainLogger& logger = {});

}  // namespace fosls
