#include "fosls/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fosls/geometry.hpp"
#include "fosls/hnn.hpp"
#include "fosls/problems.hpp"

namespace fosls {

using nlohmann::json;

namespace {

// Field access that reports the dotted path of whatever is wrong.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) throw ConfigError("missing field " + where(key));
    return *it;
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  Reader child(const std::string& key) { return Reader(at(key), where(key)); }

  std::string str(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
    return v.get<std::string>();
  }

  double num(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
    return v.get<double>();
  }

  std::int64_t integer(const std::string& key) { return as_integer(at(key), where(key)); }

  std::uint64_t seed(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  // Rejects typos: every key present must have been read.
  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown field " + where(it.key()));
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  static std::int64_t as_integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
    return v.get<std::int64_t>();
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

int to_int(std::int64_t x, const std::string& where) {
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ConfigError(where + " is out of range");
  return static_cast<int>(x);
}

Activation::Kind activation_kind(const std::string& name, const std::string& where) {
  if (name == "softplus") return Activation::Kind::SoftPlus;
  if (name == "relu") return Activation::Kind::ReLU;
  throw ConfigError(where + ": activation must be softplus or relu, got '" + name + "'");
}

std::string activation_name(Activation::Kind kind) {
  return kind == Activation::Kind::SoftPlus ? "softplus" : "relu";
}

NetArch arch_from(Reader r) {
  NetArch a;
  a.depth = to_int(r.integer("depth"), r.where("depth"));
  a.width = to_int(r.integer("width"), r.where("width"));
  a.activation = activation_kind(r.str("activation"), r.where("activation"));
  a.beta = r.num("beta");
  a.ste_c = r.num("ste_c");
  const json& sl = r.at("step_layer");
  if (!sl.is_null()) a.step_layer = to_int(Reader::as_integer(sl, r.where("step_layer")), r.where("step_layer"));
  r.finish();
  return a;
}

json arch_to(const NetArch& a) {
  return json{{"depth", a.depth},
              {"width", a.width},
              {"activation", activation_name(a.activation)},
              {"beta", a.beta},
              {"ste_c", a.ste_c},
              {"step_layer", a.step_layer ? json(*a.step_layer) : json(nullptr)}};
}

void validate_arch(const NetArch& a, const std::string& name, bool steps_allowed) {
  const std::string p = "networks." + name;
  if (a.depth < 1) throw ConfigError(p + ".depth must be positive");
  if (a.width < 1) throw ConfigError(p + ".width must be positive");
  if (!(a.beta > 0.0)) throw ConfigError(p + ".beta must be positive");
  if (!(a.ste_c > 0.0)) throw ConfigError(p + ".ste_c must be positive");
  if (a.step_layer) {
    if (!steps_allowed) throw ConfigError(p + ": only eta may contain a step layer");
    if (*a.step_layer < 0 || *a.step_layer >= a.depth)
      throw ConfigError(p + ".step_layer must index a hidden layer");
    if (a.activation != Activation::Kind::ReLU)
      throw ConfigError(p + ": a step layer requires relu for the other layers");
  }
}

}  // namespace

TrainConfig config_from_json(const json& j) {
  try {
    Reader r(j, "");
    TrainConfig c;
    c.benchmark = r.str("benchmark");
    const std::string lk = r.str("loss_kind");
    if (lk == "L") c.loss_kind = LossKind::L;
    else if (lk == "J") c.loss_kind = LossKind::J;
    else throw ConfigError("loss_kind must be L or J, got '" + lk + "'");
    const std::string ak = r.str("a_kind");
    if (ak == "square") c.a_kind = AKind::Square;
    else if (ak == "relu") c.a_kind = AKind::ReLU;
    else throw ConfigError("a_kind must be square or relu, got '" + ak + "'");

    Reader nets = r.child("networks");
    c.v = arch_from(nets.child("v"));
    c.psi = arch_from(nets.child("psi"));
    c.eta = arch_from(nets.child("eta"));
    nets.finish();

    c.collocation_points = to_int(r.integer("collocation_points"), "collocation_points");
    c.iterations = r.integer("iterations");
    c.l0 = r.num("l0");
    {
      const json& rs = r.at("resample");
      if (!rs.is_boolean()) throw ConfigError("resample must be true or false");
      c.resample = rs.get<bool>();
    }

    Reader seeds = r.child("seeds");
    c.seeds.init = seeds.seed("init");
    c.seeds.sampling = seeds.seed("sampling");
    c.seeds.eval = seeds.seed("eval");
    seeds.finish();

    c.eval_every = r.integer("eval_every");
    c.eval_points = to_int(r.integer("eval_points"), "eval_points");
    c.output_dir = r.str("output_dir");

    Reader slice = r.child("slice");
    const json& fr = slice.at("free");
    if (!fr.is_array()) throw ConfigError("slice.free must be an array");
    for (const auto& x : fr) c.slice.free.push_back(to_int(Reader::as_integer(x, "slice.free"), "slice.free"));
    const json& org = slice.at("origin");
    if (!org.is_array()) throw ConfigError("slice.origin must be an array");
    for (const auto& x : org) {
      if (!x.is_number()) throw ConfigError("slice.origin entries must be numbers");
      c.slice.origin.push_back(x.get<double>());
    }
    c.slice.resolution = to_int(slice.integer("resolution"), "slice.resolution");
    slice.finish();

    Reader mc = r.child("mccheck");
    const json& sz = mc.at("sizes");
    if (!sz.is_array()) throw ConfigError("mccheck.sizes must be an array");
    for (const auto& x : sz) c.mccheck.sizes.push_back(to_int(Reader::as_integer(x, "mccheck.sizes"), "mccheck.sizes"));
    c.mccheck.repeats = to_int(mc.integer("repeats"), "mccheck.repeats");
    c.mccheck.seed = mc.seed("seed");
    mc.finish();

    if (r.has("adam")) {
      Reader ad = r.child("adam");
      c.adam.beta1 = ad.num("beta1");
      c.adam.beta2 = ad.num("beta2");
      c.adam.eps = ad.num("eps");
      ad.finish();
    }
    r.finish();
    validate(c);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

json config_to_json(const TrainConfig& c) {
  return json{{"benchmark", c.benchmark},
              {"loss_kind", c.loss_kind == LossKind::L ? "L" : "J"},
              {"a_kind", c.a_kind == AKind::Square ? "square" : "relu"},
              {"networks", {{"v", arch_to(c.v)}, {"psi", arch_to(c.psi)}, {"eta", arch_to(c.eta)}}},
              {"collocation_points", c.collocation_points},
              {"iterations", c.iterations},
              {"l0", c.l0},
              {"resample", c.resample},
              {"seeds", {{"init", c.seeds.init}, {"sampling", c.seeds.sampling}, {"eval", c.seeds.eval}}},
              {"eval_every", c.eval_every},
              {"eval_points", c.eval_points},
              {"output_dir", c.output_dir},
              {"slice", {{"free", c.slice.free}, {"origin", c.slice.origin}, {"resolution", c.slice.resolution}}},
              {"mccheck", {{"sizes", c.mccheck.sizes}, {"repeats", c.mccheck.repeats}, {"seed", c.mccheck.seed}}},
              {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}}};
}

TrainConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string serialize_config(const TrainConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const TrainConfig& c) {
  const auto names = benchmark_names();
  if (std::find(names.begin(), names.end(), c.benchmark) == names.end())
    throw ConfigError("unknown benchmark '" + c.benchmark + "'");
  const int dim = dimension(make_benchmark(c.benchmark).domain);

  validate_arch(c.v, "v", false);
  validate_arch(c.psi, "psi", false);
  validate_arch(c.eta, "eta", true);
  if (c.collocation_points < 1) throw ConfigError("collocation_points must be positive");
  if (c.iterations < 0) throw ConfigError("iterations must be non-negative");
  if (!(c.l0 > 0.0) || !std::isfinite(c.l0)) throw ConfigError("l0 must be positive");
  if (c.eval_every < 1) throw ConfigError("eval_every must be positive");
  if (c.eval_points < 1) throw ConfigError("eval_points must be positive");
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");

  const auto& s = c.slice;
  const std::size_t want_free = dim >= 2 ? 2 : 1;
  if (s.free.size() != want_free)
    throw ConfigError("slice.free needs " + std::to_string(want_free) + " index(es) for dimension " +
                      std::to_string(dim));
  for (int i : s.free)
    if (i < 0 || i >= dim) throw ConfigError("slice.free index out of range");
  if (want_free == 2 && s.free[0] == s.free[1]) throw ConfigError("slice.free indices must differ");
  if (s.origin.size() != static_cast<std::size_t>(dim))
    throw ConfigError("slice.origin must have one entry per coordinate");
  if (s.resolution < 2) throw ConfigError("slice.resolution must be at least 2");

  const auto& m = c.mccheck;
  if (m.sizes.size() < 3) throw ConfigError("mccheck needs at least 3 sample sizes");
  for (int n : m.sizes)
    if (n < 2) throw ConfigError("mccheck sizes must be at least 2");
  if (std::set<int>(m.sizes.begin(), m.sizes.end()).size() != m.sizes.size())
    throw ConfigError("mccheck sizes must be distinct");
  if (m.repeats < 2) throw ConfigError("mccheck.repeats must be at least 2");

  const auto& a = c.adam;
  if (!(a.beta1 >= 0.0 && a.beta1 < 1.0) || !(a.beta2 >= 0.0 && a.beta2 < 1.0) || !(a.eps > 0.0))
    throw ConfigError("adam constants out of range");
}

void apply_seed_override(TrainConfig& cfg, std::uint64_t s) {
  cfg.seeds.init = s;
  cfg.seeds.sampling = s + 1;
}

NetworkSpec build_spec(const NetArch& arch, int input_dim, int output_dim) {
  if (arch.step_layer) {
    NetworkSpec spec = make_hnn_spec(input_dim, std::vector<int>(static_cast<std::size_t>(arch.depth), arch.width),
                                     *arch.step_layer, arch.ste_c);
    spec.output_dim = output_dim;
    return spec;
  }
  NetworkSpec spec;
  spec.input_dim = input_dim;
  spec.output_dim = output_dim;
  const Activation act =
      arch.activation == Activation::Kind::SoftPlus ? Activation::softplus(arch.beta) : Activation::relu();
  spec.hidden.assign(static_cast<std::size_t>(arch.depth), Layer{arch.width, act});
  return spec;
}

TripleNets init_nets(const TrainConfig& cfg, int dim) {
  TripleNets nets;
  nets.v.spec = build_spec(cfg.v, dim, 1);
  nets.psi.spec = build_spec(cfg.psi, dim, dim);
  nets.eta.spec = build_spec(cfg.eta, dim, 1);
  nets.v.theta = init_params(nets.v.spec, cfg.seeds.init);
  nets.psi.theta = init_params(nets.psi.spec, cfg.seeds.init + 1);
  nets.eta.theta = init_params(nets.eta.spec, cfg.seeds.init + 2);
  return nets;
}

LiftConfig lift_config(const TrainConfig& cfg) {
  LiftConfig lift;
  lift.a_kind = cfg.a_kind;
  lift.loss_kind = cfg.loss_kind;
  return lift;
}

TrainSettings train_settings(const TrainConfig& cfg) {
  TrainSettings s;
  s.n_points = cfg.collocation_points;
  s.iterations = cfg.iterations;
  s.l0 = cfg.l0;
  s.resample = cfg.resample;
  s.sample_seed = cfg.seeds.sampling;
  s.eval_seed = cfg.seeds.eval;
  s.eval_every = cfg.eval_every;
  s.eval_points = cfg.eval_points;
  s.beta1 = cfg.adam.beta1;
  s.beta2 = cfg.adam.beta2;
  s.eps = cfg.adam.eps;
  return s;
}

}  // namespace fosls
