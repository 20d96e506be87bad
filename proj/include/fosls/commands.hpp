#pragma once

// Command implementations behind the fosls executable. Each cmd_* returns
// the process exit status and writes its report to `out`, diagnostics to
// `err`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fosls/config.hpp"
#include "fosls/hnn.hpp"

namespace fosls {

namespace exit_code {
constexpr int ok = 0;
constexpr int config = 2;
constexpr int numeric = 3;
constexpr int check_failed = 4;
}  // namespace exit_code

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed_override;
  bool corrupt_gradient = false;  // gradcheck self-test hook
};

int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_mccheck(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_chidemo(int d, std::uint64_t seed, std::ostream& out, std::ostream& err);

/// Loads the config and applies --out / --seed-override.
TrainConfig resolve_config(const CommandOptions& opts);

// ---- reusable cores ----

constexpr int kGradcheckPoints = 32;
constexpr double kGradcheckStep = 1e-5;
constexpr double kGradcheckTolerance = 1e-4;

struct NetGradCheck {
  std::string name;
  std::optional<double> rel_error;  // empty when skipped
  std::string note;
};

/// Central differences against batch_loss_grad for each network. The error
/// is max|g - fd| / max(max|fd|, max|g|). Networks with a step layer are
/// skipped since their training gradient is a surrogate.
std::vector<NetGradCheck> gradient_check(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                                         const Mat& points, double step, bool corrupt = false);

struct McRow {
  int n;
  double mean;
  double std_dev;
};

struct McReport {
  std::vector<McRow> rows;
  std::optional<double> slope;  // log-log slope of std_dev against n
  bool exact = false;           // every repeat gave the same value
};

/// batch_loss over `repeats` fresh samples per size with fixed networks.
McReport mc_consistency(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                        const std::vector<int>& sizes, int repeats, std::uint64_t seed);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ChiDemoReport {
  int d = 0;
  int points = 0;
  int agree = 0;
  int mismatches_off_band = 0;  // disagreements farther than 1e-9 from every facet
  ChiNetSize built{};
  ChiNetSize expected{};
  double agreement() const { return points ? static_cast<double>(agree) / points : 0.0; }
};

constexpr double kFacetBand = 1e-9;

/// Random simplex (vertices uniform in [-1, 1]^d), its chi net, and a
/// comparison with in_simplex on n points drawn from a slightly enlarged
/// bounding box.
ChiDemoReport chi_demo(int d, std::uint64_t seed, int n);

/// u on the configured slice; writes a CSV with one row per grid node.
/// Nodes outside the domain get empty u fields.
void write_slice(const std::filesystem::path& path, const Problem& problem, const LiftConfig& lift,
                 const TripleNets& nets, const SliceSpec& slice);

/// Training log rows: iter, loss, lr, l2_error, triple_error (blank when
/// not evaluated at that iteration).
std::string train_log_header();
std::string train_log_row(const TrainRecord& rec);

}  // namespace fosls
