#include "fosls/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "fosls/checkpoint.hpp"
#include "fosls/geometry.hpp"
#include "fosls/oracle.hpp"
#include "fosls/problems.hpp"

namespace fosls {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  return f;
}

std::string opt_field(const std::optional<double>& x) { return x ? format_g17(*x) : std::string(); }

struct Box {
  double lo, hi;
};

// Coordinate range of the domain along any axis.
Box axis_range(const Domain& dom) {
  return std::visit(
      [](const auto& d) -> Box {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Ball>) return {-d.radius, d.radius};
        else if constexpr (std::is_same_v<T, Interval>) return {d.a, d.b};
        else return {-1.0, 1.0};
      },
      dom);
}

bool has_step_layer(const NetworkSpec& spec) {
  return std::any_of(spec.hidden.begin(), spec.hidden.end(),
                     [](const Layer& l) { return l.act.kind == Activation::Kind::Heaviside; });
}

double max_abs(const ParamVector& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

// Runs body and maps exceptions onto exit codes.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_code::config;
  } catch (const NumericError& e) {
    err << "numeric failure at iteration " << e.iteration() << " (" << e.term() << "): " << e.what() << "\n";
    return exit_code::numeric;
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << "\n";
    return exit_code::config;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return exit_code::config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

fs::path out_dir(const TrainConfig& cfg) { return fs::path(cfg.output_dir); }

}  // namespace

std::string train_log_header() { return "iter,loss,lr,l2_error,triple_error"; }

std::string train_log_row(const TrainRecord& r) {
  return std::to_string(r.iter) + "," + format_g17(r.loss) + "," + format_g17(r.lr) + "," + opt_field(r.l2_error) +
         "," + opt_field(r.triple_error);
}

TrainConfig resolve_config(const CommandOptions& opts) {
  TrainConfig cfg = load_config(opts.config);
  if (opts.out) cfg.output_dir = opts.out->string();
  if (opts.seed_override) apply_seed_override(cfg, *opts.seed_override);
  validate(cfg);
  return cfg;
}

void write_slice(const fs::path& path, const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                 const SliceSpec& slice) {
  const int dim = dimension(problem.domain);
  const Box box = axis_range(problem.domain);
  const int n = slice.resolution;
  auto coord = [&](int k) { return box.lo + (box.hi - box.lo) * static_cast<double>(k) / (n - 1); };

  std::ofstream f = open_out(path);
  const bool plane = slice.free.size() == 2;
  f << "x" << slice.free[0];
  if (plane) f << ",x" << slice.free[1];
  f << ",u,u_exact\n";

  Vec x(dim);
  for (int j = 0; j < dim; ++j) x[j] = slice.origin[static_cast<std::size_t>(j)];
  const int rows = plane ? n : 1;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < rows; ++b) {
      x[slice.free[0]] = coord(a);
      if (plane) x[slice.free[1]] = coord(b);
      f << format_g17(x[slice.free[0]]);
      if (plane) f << "," << format_g17(x[slice.free[1]]);
      if (contains(problem.domain, x)) {
        f << "," << format_g17(lift_point(problem, lift, nets, x).u) << ",";
        if (problem.exact) f << format_g17(problem.exact->u(x).value);
      } else {
        f << ",,";
      }
      f << "\n";
    }
  }
}

int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TrainConfig cfg = resolve_config(opts);
    const Problem problem = make_benchmark(cfg.benchmark);
    const int dim = dimension(problem.domain);
    const fs::path dir = out_dir(cfg);
    fs::create_directories(dir);
    {
      std::ofstream f = open_out(dir / "config_used.json");
      f << serialize_config(cfg);
    }

    std::ofstream log = open_out(dir / "train_log.csv");
    std::ofstream timing = open_out(dir / "timing.csv");
    log << train_log_header() << "\n";
    timing << "iter,elapsed_s\n";
    log.flush();
    timing.flush();

    const LiftConfig lift = lift_config(cfg);
    TrainResult res = train(problem, lift, init_nets(cfg, dim), train_settings(cfg), [&](const TrainRecord& r) {
      log << train_log_row(r) << "\n";
      timing << r.iter << "," << format_g17(r.elapsed_s) << "\n";
      if (r.l2_error) {
        log.flush();
        timing.flush();
      }
    });
    log.flush();
    timing.flush();

    save_checkpoint(res.nets.v, dir / "v.json");
    save_checkpoint(res.nets.psi, dir / "psi.json");
    save_checkpoint(res.nets.eta, dir / "eta.json");
    write_slice(dir / "slice_data.csv", problem, lift, res.nets, cfg.slice);

    out << "trained " << cfg.benchmark << " for " << cfg.iterations << " iterations\n";
    if (!res.history.empty()) {
      const TrainRecord& last = res.history.back();
      out << "final loss " << format_g17(last.loss) << "\n";
      if (last.l2_error) out << "final l2_error " << format_g17(*last.l2_error) << "\n";
      if (last.triple_error) out << "final triple_error " << format_g17(*last.triple_error) << "\n";
    }
    out << "artifacts in " << dir.string() << "\n";
    return exit_code::ok;
  });
}

int cmd_eval(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TrainConfig cfg = resolve_config(opts);
    const Problem problem = make_benchmark(cfg.benchmark);
    const int dim = dimension(problem.domain);
    const fs::path dir = out_dir(cfg);
    TripleNets nets;
    for (const auto& [net, name] : {std::pair{&nets.v, "v.json"}, {&nets.psi, "psi.json"}, {&nets.eta, "eta.json"}}) {
      if (!fs::exists(dir / name)) throw ConfigError("missing checkpoint " + (dir / name).string());
      *net = load_checkpoint(dir / name);
    }
    validate(nets, dim);
    const LiftConfig lift = lift_config(cfg);

    Rng rng(cfg.seeds.eval);
    const Mat pts = sample_uniform(problem.domain, rng, cfg.eval_points);
    const BatchLoss loss = batch_loss_detail(problem, lift, nets, pts);
    std::vector<std::pair<std::string, double>> metrics = {{"loss", loss.value},
                                                           {"term_residual", loss.terms[0]},
                                                           {"term_flux_mismatch", loss.terms[1]},
                                                           {"term_complementarity", loss.terms[2]},
                                                           {"term_flux_gap", loss.terms[3]}};
    if (problem.exact) {
      const double l2 = l2_error_on(problem, lift, nets, pts);
      const double norm = l2_norm_exact_on(problem, pts);
      const TripleError te = triple_error_on(problem, lift, nets, pts);
      metrics.insert(metrics.end(), {{"l2_error", l2},
                                     {"relative_l2_error", l2 / norm},
                                     {"triple_error", te.total},
                                     {"grad_u_error", te.grad_u},
                                     {"phi_error", te.phi},
                                     {"gamma_error", te.gamma}});
    }
    std::ofstream f = open_out(dir / "eval.csv");
    f << "metric,value\n";
    for (const auto& [name, value] : metrics) {
      f << name << "," << format_g17(value) << "\n";
      out << name << " " << format_g17(value) << "\n";
    }
    return exit_code::ok;
  });
}

std::vector<NetGradCheck> gradient_check(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                                         const Mat& points, double step, bool corrupt) {
  TripleGrad g = batch_loss_grad(problem, lift, nets, points);
  if (corrupt && g.v.size() > 0) g.v[0] += 1e-2 * (1.0 + std::abs(g.v[0]));

  std::vector<NetGradCheck> report;
  const std::tuple<const char*, Network TripleNets::*, const ParamVector*> entries[] = {
      {"v", &TripleNets::v, &g.v}, {"psi", &TripleNets::psi, &g.psi}, {"eta", &TripleNets::eta, &g.eta}};
  for (const auto& [name, member, analytic] : entries) {
    if (has_step_layer((nets.*member).spec)) {
      report.push_back({name, std::nullopt, "skipped (STE)"});
      continue;
    }
    const ParamVector fd = fd_gradient(
        [&, member = member](const ParamVector& theta) {
          TripleNets probe = nets;
          (probe.*member).theta = theta;
          return batch_loss(problem, lift, probe, points);
        },
        (nets.*member).theta, step);
    const double scale = std::max(max_abs(fd), max_abs(*analytic));
    const double rel = scale > 0.0 ? max_abs(*analytic - fd) / scale : 0.0;
    report.push_back({name, rel, ""});
  }
  return report;
}

int cmd_gradcheck(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TrainConfig cfg = resolve_config(opts);
    const Problem problem = make_benchmark(cfg.benchmark);
    const int dim = dimension(problem.domain);
    Rng rng(cfg.seeds.sampling);
    const Mat pts = sample_uniform(problem.domain, rng, kGradcheckPoints);
    const auto report =
        gradient_check(problem, lift_config(cfg), init_nets(cfg, dim), pts, kGradcheckStep, opts.corrupt_gradient);
    bool ok = true;
    for (const auto& r : report) {
      out << r.name << ": ";
      if (r.rel_error) {
        out << "max relative error " << format_g17(*r.rel_error) << "\n";
        if (!(*r.rel_error <= kGradcheckTolerance)) ok = false;
      } else {
        out << r.note << "\n";
      }
    }
    out << (ok ? "gradcheck passed" : "gradcheck FAILED") << " (tolerance " << kGradcheckTolerance << ")\n";
    return ok ? exit_code::ok : exit_code::check_failed;
  });
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope needs two or more pairs");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw std::invalid_argument("loglog_slope needs positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("loglog_slope needs distinct x values");
  return sxy / sxx;
}

McReport mc_consistency(const Problem& problem, const LiftConfig& lift, const TripleNets& nets,
                        const std::vector<int>& sizes, int repeats, std::uint64_t seed) {
  if (sizes.size() < 3) throw ConfigError("mccheck needs at least 3 sample sizes");
  if (repeats < 2) throw ConfigError("mccheck needs at least 2 repeats");
  Rng rng(seed);
  McReport rep;
  bool all_zero = true;
  for (int n : sizes) {
    std::vector<double> vals(static_cast<std::size_t>(repeats));
    for (auto& v : vals) v = batch_loss(problem, lift, nets, sample_uniform(problem.domain, rng, n));
    const double mean = pairwise_sum(vals) / repeats;
    std::vector<double> sq(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) sq[i] = (vals[i] - mean) * (vals[i] - mean);
    const double sd = std::sqrt(pairwise_sum(sq) / (repeats - 1));
    const bool constant = std::all_of(vals.begin(), vals.end(), [&](double v) { return v == vals.front(); });
    if (!constant) all_zero = false;
    rep.rows.push_back({n, mean, constant ? 0.0 : sd});
  }
  rep.exact = all_zero;
  const bool fit = std::all_of(rep.rows.begin(), rep.rows.end(), [](const McRow& r) { return r.std_dev > 0.0; });
  if (fit) {
    std::vector<double> xs, ys;
    for (const auto& r : rep.rows) {
      xs.push_back(r.n);
      ys.push_back(r.std_dev);
    }
    rep.slope = loglog_slope(xs, ys);
  }
  return rep;
}

int cmd_mccheck(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TrainConfig cfg = resolve_config(opts);
    const Problem problem = make_benchmark(cfg.benchmark);
    const int dim = dimension(problem.domain);
    const McReport rep = mc_consistency(problem, lift_config(cfg), init_nets(cfg, dim), cfg.mccheck.sizes,
                                        cfg.mccheck.repeats, cfg.mccheck.seed);
    const fs::path dir = out_dir(cfg);
    fs::create_directories(dir);
    std::ofstream f = open_out(dir / "mccheck.csv");
    f << "n,mean,std\n";
    for (const auto& r : rep.rows) {
      f << r.n << "," << format_g17(r.mean) << "," << format_g17(r.std_dev) << "\n";
      out << "N = " << r.n << ": mean " << format_g17(r.mean) << ", std " << format_g17(r.std_dev) << "\n";
    }
    if (rep.exact) {
      out << "zero variance: the estimator is exact for this integrand\n";
      return exit_code::ok;
    }
    if (!rep.slope) {
      out << "mccheck FAILED: some but not all sizes have zero spread\n";
      return exit_code::check_failed;
    }
    const bool ok = *rep.slope >= -0.6 && *rep.slope <= -0.4;
    out << "log-log slope " << format_g17(*rep.slope) << (ok ? " within" : " outside") << " [-0.6, -0.4]\n";
    return ok ? exit_code::ok : exit_code::check_failed;
  });
}

ChiDemoReport chi_demo(int d, std::uint64_t seed, int n) {
  if (d < 1) throw std::invalid_argument("chidemo needs d >= 1");
  if (n < 1) throw std::invalid_argument("chidemo needs a positive point count");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Simplex s;
  for (;;) {
    s.vertices.assign(static_cast<std::size_t>(d + 1), Vec(d));
    for (auto& v : s.vertices)
      for (int j = 0; j < d; ++j) v[j] = unit(rng);
    try {
      validate(s);
      break;
    } catch (const DegenerateSimplex&) {
    }
  }
  const Network net = simplex_chi_net(s);

  Vec lo = s.vertices.front(), hi = s.vertices.front();
  for (const auto& v : s.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec margin = 0.1 * (hi - lo);
  lo -= margin;
  hi += margin;

  Mat pts(d, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < d; ++j) pts(j, k) = lo[j] + (hi[j] - lo[j]) * 0.5 * (unit(rng) + 1.0);

  ForwardTape tape;
  tape.run(net.spec, net.theta, pts, false);
  const Mat& y = tape.output();

  ChiDemoReport rep;
  rep.d = d;
  rep.points = n;
  for (int k = 0; k < n; ++k) {
    const Vec x = pts.col(k);
    const double want = in_simplex(s, x) ? 1.0 : 0.0;
    if (y(0, k) == want) {
      ++rep.agree;
    } else if (facet_distance(s, x) > kFacetBand) {
      ++rep.mismatches_off_band;
    }
  }
  rep.built.hidden_layers = static_cast<int>(net.spec.hidden.size());
  rep.built.neurons = 0;
  for (const auto& l : net.spec.hidden) rep.built.neurons += l.width;
  rep.expected = chi_net_size(d);
  return rep;
}

int cmd_chidemo(int d, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (d < 1) throw ConfigError("chidemo needs d >= 1, got " + std::to_string(d));
    const ChiDemoReport rep = chi_demo(d, seed, 10000);
    const bool size_ok =
        rep.built.hidden_layers == rep.expected.hidden_layers && rep.built.neurons == rep.expected.neurons;
    const double scale = 2.0 * (d + 1);
    out << "d = " << d << ", seed = " << seed << "\n";
    out << "agreement " << rep.agree << " / " << rep.points << " = " << format_g17(rep.agreement()) << "\n";
    out << "disagreements off the facet band: " << rep.mismatches_off_band << "\n";
    out << "net: " << rep.built.hidden_layers << " hidden layers, " << rep.built.neurons << " hidden neurons ("
        << format_g17(rep.built.neurons / scale) << " x 2(d+1)); expected " << rep.expected.hidden_layers << " / "
        << rep.expected.neurons << "\n";
    const bool ok = rep.agreement() >= 0.999 && rep.mismatches_off_band == 0 && size_ok;
    out << (ok ? "chidemo passed" : "chidemo FAILED") << "\n";
    return ok ? exit_code::ok : exit_code::check_failed;
  });
}

}  // namespace fosls
