#pragma once

// Training configuration: a JSON document with every field spelled out.
// Only the ADAM constants may be omitted.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fosls/admissible.hpp"
#include "fosls/optim.hpp"

namespace fosls {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fully connected net of `depth` hidden layers of equal width. A
/// step_layer (eta only) turns that hidden layer into Heaviside with STE
/// window ste_c and forces ReLU everywhere else.
struct NetArch {
  int depth = 2;
  int width = 16;
  Activation::Kind activation = Activation::Kind::SoftPlus;
  double beta = 1.0;
  double ste_c = 0.5;
  std::optional<int> step_layer;

  bool operator==(const NetArch&) const = default;
};

struct Seeds {
  std::uint64_t init = 1;
  std::uint64_t sampling = 2;
  std::uint64_t eval = 3;

  bool operator==(const Seeds&) const = default;
};

/// u is sampled on origin + s e_i + t e_j over the domain's bounding box.
/// With one free index the slice is a line.
struct SliceSpec {
  std::vector<int> free;
  std::vector<double> origin;
  int resolution = 101;

  bool operator==(const SliceSpec&) const = default;
};

struct McCheckSpec {
  std::vector<int> sizes;
  int repeats = 50;
  std::uint64_t seed = 11;

  bool operator==(const McCheckSpec&) const = default;
};

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamConstants&) const = default;
};

struct TrainConfig {
  std::string benchmark;
  LossKind loss_kind = LossKind::L;
  AKind a_kind = AKind::Square;
  NetArch v, psi, eta;
  int collocation_points = 1000;
  std::int64_t iterations = 1000;
  double l0 = 1e-3;
  bool resample = true;  // fresh collocation points every iteration
  Seeds seeds;
  std::int64_t eval_every = 100;
  int eval_points = 10000;
  std::string output_dir;
  SliceSpec slice;
  McCheckSpec mccheck;
  AdamConstants adam;

  bool operator==(const TrainConfig&) const = default;
};

/// Throws ConfigError on missing, unknown or out-of-range fields.
TrainConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const TrainConfig& cfg);

TrainConfig parse_config(const std::string& text);
std::string serialize_config(const TrainConfig& cfg);
TrainConfig load_config(const std::filesystem::path& path);

/// Checks every invariant, including that the benchmark name exists and
/// the slice matches its dimension.
void validate(const TrainConfig& cfg);

/// Replaces the init and sampling seeds by s and s + 1. The eval seed is
/// kept so that runs with different seeds share their error sample.
void apply_seed_override(TrainConfig& cfg, std::uint64_t s);

NetworkSpec build_spec(const NetArch& arch, int input_dim, int output_dim);

/// Networks with Glorot-initialised weights; v, psi and eta use the seeds
/// init, init + 1 and init + 2.
TripleNets init_nets(const TrainConfig& cfg, int dim);

LiftConfig lift_config(const TrainConfig& cfg);
TrainSettings train_settings(const TrainConfig& cfg);

}  // namespace fosls
