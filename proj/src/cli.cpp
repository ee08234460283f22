#include "goikit/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "goikit/detectors.hpp"
#include "goikit/errors.hpp"
#include "goikit/estimator.hpp"
#include "goikit/experiments.hpp"
#include "goikit/scene_io.hpp"
#include "goikit/sim.hpp"

#ifndef GOIKIT_VERSION
#define GOIKIT_VERSION "0.0.0"
#endif

namespace goikit::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

class OutputError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string scene;
  std::string out;
  std::string format = "csv";
  std::string g_metric;
  std::string init;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::optional<double> tau_goi;
  std::optional<double> tau_rho;
  std::optional<double> tau_lambda;
  std::vector<double> n_grid;
  std::vector<double> d_grid;
  std::optional<std::size_t> trials;

  // make-scene
  std::size_t points = 200;
  double depth_scale = 1.0;
  double sigma = 1e-3;
  double dynamic_fraction = 0.0;
  double bias = 0.0;
  std::string bias_mode = "random";
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("GOI_KIT_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || env[0] == '-') {
      throw ConfigError(std::string("GOI_KIT_SEED is not a non-negative integer: '") + env + "'");
    }
    return v;
  }
  return 1;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw OutputError("cannot write output '" + path + "'");
  f << text;
  f.close();
  if (!f) throw OutputError("cannot write output '" + path + "'");
}

std::vector<std::size_t> to_counts(const std::vector<double>& v, const char* flag) {
  std::vector<std::size_t> out;
  for (double x : v) {
    if (!(x >= 1.0) || x != std::floor(x) || x > 1e12) {
      throw ConfigError(std::string(flag) + " entries must be positive integers");
    }
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

Metric metric_of(const Options& o) {
  return o.g_metric.empty() ? Metric() : io::read_metric(o.g_metric);
}

DetectorConfig detector_of(const Options& o) {
  DetectorConfig cfg;
  cfg.tau_goi = o.tau_goi;
  if (o.tau_rho) cfg.tau_rho = *o.tau_rho;
  cfg.tau_lambda = o.tau_lambda;
  cfg.validate();
  return cfg;
}

std::string summary_line(const std::string& name, std::uint64_t seed,
                         const std::vector<std::pair<std::string, double>>& summary) {
  std::ostringstream ss;
  ss << name << " seed=" << seed;
  for (const auto& [k, v] : summary) ss << ' ' << k << '=' << num(v);
  ss << '\n';
  return ss.str();
}

ordered_json summary_json(const std::string& name, std::uint64_t seed,
                          const std::vector<std::pair<std::string, double>>& summary) {
  ordered_json j;
  j["experiment"] = name;
  j["version"] = version();
  j["seed"] = seed;
  ordered_json s = ordered_json::object();
  for (const auto& [k, v] : summary) s[k] = v;
  j["summary"] = s;
  return j;
}

// Experiments: CSV records plus <out>.summary.json, or one JSON document.
int emit_experiment(const sim::ExperimentResult& r, const Options& o, std::ostream& out,
                    std::ostream& err) {
  if (o.format == "json") {
    ordered_json j = summary_json(r.name, r.seed, r.summary);
    ordered_json recs = ordered_json::array();
    for (const auto& t : r.records) {
      recs.push_back({{"n", t.n}, {"d", t.d}, {"trial", t.trial}, {"statistic", t.statistic},
                      {"value", t.value}});
    }
    j["records"] = recs;
    write_text(o.out, j.dump(2) + "\n", out);
  } else {
    std::string csv = std::string(kRecordHeader) + "\n";
    for (const auto& t : r.records) {
      csv += t.experiment + ',' + std::to_string(t.n) + ',' + num(t.d) + ',' +
             std::to_string(t.trial) + ',' + t.statistic + ',' + num(t.value) + ',' +
             std::to_string(t.seed) + '\n';
    }
    write_text(o.out, csv, out);
    if (!o.out.empty()) {
      write_text(o.out + ".summary.json", summary_json(r.name, r.seed, r.summary).dump(2) + "\n",
                 out);
    }
  }
  (o.out.empty() ? err : out) << summary_line(r.name, r.seed, r.summary);
  return kExitOk;
}

ordered_json spectrum_json(const CurvatureSpectrum& s) {
  ordered_json j;
  j["lambda"] = std::vector<double>(s.eigenvalues().data(), s.eigenvalues().data() + 6);
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < 6; ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < 6; ++c) row.push_back(s.eigenvectors()(r, c));
    rows.push_back(row);
  }
  j["vectors"] = rows;
  j["observable"] = s.observable();
  j["rank_threshold"] = s.rank_threshold();
  return j;
}

sim::SceneSpec experiment_scene() {
  sim::SceneSpec spec;
  spec.pose_true = sim::default_pose();
  return spec;
}

// ---------------------------------------------------------------------------

int cmd_report(const Options& o, bool detector, std::ostream& out, std::ostream& err) {
  if (o.scene.empty()) throw ConfigError("--scene is required");
  const io::Scene scene = io::read_scene(o.scene);
  const DetectorConfig cfg = detector_of(o);
  const DynamicDetection det = detect_dynamic(scene.set, scene.pose, metric_of(o), cfg);
  const std::string name = detector ? "detect-dynamic" : "goi-report";

  if (o.format == "json") {
    ordered_json j;
    j["command"] = name;
    j["version"] = version();
    j["tau_goi"] = det.tau_goi;
    j["tau_rho"] = det.tau_rho;
    j["spectrum"] = spectrum_json(det.spectrum);
    if (det.warning) j["warning"] = *det.warning;
    ordered_json feats = ordered_json::array();
    for (std::size_t i = 0; i < det.reports.size(); ++i) {
      const auto& r = det.reports[i];
      ordered_json psi = ordered_json::array();
      for (int k = 0; k < 6; ++k) {
        psi.push_back(det.spectrum.is_observable(k) ? ordered_json(r.coefficients[k]) : ordered_json());
      }
      feats.push_back({{"feature_id", r.feature_id}, {"goi", r.goi}, {"rho1", r.rho1},
                       {"psi", psi}, {"flagged", static_cast<bool>(det.flags[i])}});
    }
    j["features"] = feats;
    write_text(o.out, j.dump(2) + "\n", out);
  } else {
    std::string csv = std::string(kReportHeader) + "\n";
    for (std::size_t i = 0; i < det.reports.size(); ++i) {
      const auto& r = det.reports[i];
      csv += std::to_string(r.feature_id) + ',' + num(r.goi) + ',' + num(r.rho1);
      for (int k = 0; k < 6; ++k) {
        csv += ',';
        if (det.spectrum.is_observable(k)) csv += num(r.coefficients[k]);
      }
      csv += det.flags[i] ? ",1\n" : ",0\n";
    }
    write_text(o.out, csv, out);
  }
  if (det.warning) err << "warning: " << *det.warning << '\n';
  (o.out.empty() ? err : out) << name << " features=" << det.reports.size()
                              << " flags=" << det.flag_count() << " tau_goi=" << num(det.tau_goi)
                              << " tau_rho=" << num(det.tau_rho) << '\n';
  if (detector && det.flag_count() > 0) return kExitFlags;
  return kExitOk;
}

int cmd_detect_degeneracy(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.scene.empty()) throw ConfigError("--scene is required");
  const io::Scene scene = io::read_scene(o.scene);
  const DegeneracyVerdict v = detect_degeneracy(scene.set, scene.pose, metric_of(o), detector_of(o));
  const bool degenerate = v.verdict == Verdict::kNearDegenerate;
  ordered_json j;
  j["command"] = "detect-degeneracy";
  j["version"] = version();
  j["verdict"] = degenerate ? "near-degenerate" : "healthy";
  j["lambda_min_n"] = v.lambda_min_n;
  j["tau_lambda"] = v.tau_lambda;
  j["spectrum"] = spectrum_json(v.spectrum_snapshot);
  write_text(o.out, j.dump(2) + "\n", out);
  (o.out.empty() ? err : out) << "detect-degeneracy verdict=" << j["verdict"].get<std::string>()
                              << " lambda_min_n=" << num(v.lambda_min_n)
                              << " tau_lambda=" << num(v.tau_lambda) << '\n';
  return degenerate ? kExitDegenerate : kExitOk;
}

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.scene.empty()) throw ConfigError("--scene is required");
  const io::Scene scene = io::read_scene(o.scene);
  const bool has_init = !o.init.empty();
  const Pose g0 = has_init ? io::read_pose(o.init) : scene.pose;
  SolverConfig cfg;
  const SolveResult r = gauss_newton(scene.set, g0, metric_of(o), cfg,
                                     has_init ? std::optional<Pose>(scene.pose) : std::nullopt);
  ordered_json j;
  j["command"] = "solve";
  j["version"] = version();
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["final_score_norm"] = r.final_score_norm;
  j["last_step_norm"] = r.last_step_norm;
  ordered_json R = ordered_json::array();
  for (int k = 0; k < 3; ++k) R.push_back({r.g_hat.R()(k, 0), r.g_hat.R()(k, 1), r.g_hat.R()(k, 2)});
  j["pose"] = {{"r", R}, {"t", {r.g_hat.t().x(), r.g_hat.t().y(), r.g_hat.t().z()}}};
  if (r.xi_error_O) {
    j["xi_error_O"] = std::vector<double>(r.xi_error_O->data(), r.xi_error_O->data() + 6);
  }
  j["score_norm_history"] = r.score_norm_history;
  write_text(o.out, j.dump(2) + "\n", out);
  (o.out.empty() ? err : out) << "solve converged=" << (r.converged ? "true" : "false")
                              << " iterations=" << r.iterations
                              << " final_score_norm=" << num(r.final_score_norm) << '\n';
  return kExitOk;
}

int cmd_make_scene(const Options& o, std::ostream& out, std::ostream& err) {
  sim::SceneSpec spec = experiment_scene();
  spec.n_points = o.points;
  spec.depth_scale = o.depth_scale;
  spec.sigma = o.sigma;
  spec.dynamic_fraction = o.dynamic_fraction;
  spec.bias_magnitude = o.bias;
  if (o.bias_mode == "weak-aligned") {
    spec.bias_mode = sim::BiasMode::kWeakAligned;
  } else if (o.bias_mode != "random") {
    throw ConfigError("--bias-mode must be 'random' or 'weak-aligned'");
  }
  const std::uint64_t seed = resolve_seed(o);
  RngStream rng(seed, stream_key(1, 0));
  const sim::GeneratedScene scene = sim::generate_scene(spec, rng, metric_of(o));
  write_text(o.out, io::scene_to_json(scene.set, spec.pose_true) + "\n", out);
  (o.out.empty() ? err : out) << "make-scene seed=" << seed << " points=" << spec.n_points
                              << " d=" << num(spec.depth_scale) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

void common_output(CLI::App* c, Options& o) {
  c->add_option("--seed", o.seed, "Base seed (falls back to GOI_KIT_SEED, then 1)");
  c->add_option("--out", o.out, "Output path (stdout when omitted)");
  c->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

void scene_input(CLI::App* c, Options& o) {
  c->add_option("--scene", o.scene, "Scene JSON file")->required();
  c->add_option("--g-metric", o.g_metric, "6x6 metric G: JSON file or inline array");
}

void thresholds(CLI::App* c, Options& o) {
  c->add_option("--tau-goi", o.tau_goi, "Absolute GOI threshold");
  c->add_option("--tau-rho", o.tau_rho, "Alignment threshold in (0, 1)");
  c->add_option("--tau-lambda", o.tau_lambda, "Absolute lambda_min threshold");
}

void trials(CLI::App* c, Options& o, const char* what) { c->add_option("--trials", o.trials, what); }

void threads(CLI::App* c, Options& o) {
  c->add_option("--threads", o.threads, "Worker cap")->check(CLI::Range(1u, 1024u));
}

void n_grid(CLI::App* c, Options& o) {
  c->add_option("--n-grid", o.n_grid, "Comma-separated sample sizes")->delimiter(',');
}

void d_grid(CLI::App* c, Options& o) {
  c->add_option("--d-grid", o.d_grid, "Comma-separated depth scales")->delimiter(',');
}

}  // namespace

std::string version() { return GOIKIT_VERSION; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geometric observability influence toolkit", "goi_kit"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  Options o;
  std::function<int()> action;

  auto experiment = [&](const char* name, const char* help, auto&& body) {
    CLI::App* c = app.add_subcommand(name, help);
    common_output(c, o);
    c->callback([&, body] {
      action = [&, body] {
        return emit_experiment(body(resolve_seed(o)), o, out, err);
      };
    });
    return c;
  };

  {
    auto* c = experiment("verify-jacobian", "Analytic Jacobian vs central differences",
                         [&](std::uint64_t seed) {
                           return sim::jacobian_experiment(o.trials.value_or(100), seed);
                         });
    trials(c, o, "Number of random (g, X) pairs");
  }
  {
    auto* c = experiment("goi-identity", "Direct vs spectral GOI on random features",
                         [&](std::uint64_t seed) {
                           return sim::goi_identity_experiment(o.trials.value_or(1000), seed);
                         });
    trials(c, o, "Number of random features");
  }
  {
    auto* c = experiment("influence-oracle", "Contamination quotient vs influence function",
                         [&](std::uint64_t seed) {
                           sim::InfluenceOracleConfig cfg;
                           cfg.features = o.trials.value_or(cfg.features);
                           return sim::influence_oracle_experiment(cfg, seed);
                         });
    trials(c, o, "Number of contaminating features");
  }
  {
    auto* c = experiment("fisher-check", "Monte Carlo E[psi psi^T] vs H", [&](std::uint64_t seed) {
      sim::SceneSpec spec = experiment_scene();
      spec.n_points = 20;
      const std::vector<std::size_t> grid =
          o.n_grid.empty() ? std::vector<std::size_t>{1000, 10000, 100000, 1000000}
                           : to_counts(o.n_grid, "--n-grid");
      return sim::fisher_experiment(spec, grid, seed, o.threads);
    });
    n_grid(c, o);
    threads(c, o);
  }
  {
    auto* c = experiment("concentration", "Quantiles of ||H_n - H||_op vs n",
                         [&](std::uint64_t seed) {
                           sim::ConcentrationConfig cfg;
                           if (!o.n_grid.empty()) cfg.n_grid = to_counts(o.n_grid, "--n-grid");
                           cfg.trials = o.trials.value_or(cfg.trials);
                           cfg.threads = o.threads;
                           return sim::concentration_experiment(experiment_scene(), cfg, seed);
                         });
    n_grid(c, o);
    trials(c, o, "Trials per n");
    threads(c, o);
  }
  {
    auto* c = experiment("degeneracy-sweep", "Spectrum vs depth scale", [&](std::uint64_t seed) {
      const std::vector<double> grid =
          o.d_grid.empty() ? std::vector<double>{1, 3, 10, 30, 100, 300, 1000} : o.d_grid;
      return sim::degeneracy_experiment(experiment_scene(), grid, seed, o.tau_lambda.value_or(0.0));
    });
    d_grid(c, o);
    c->add_option("--tau-lambda", o.tau_lambda, "Absolute lambda_min threshold");
  }
  {
    auto* c = experiment("stability", "Gauss-Newton error vs n and lambda_min",
                         [&](std::uint64_t seed) {
                           sim::StabilityConfig cfg;
                           if (!o.n_grid.empty()) cfg.n_grid = to_counts(o.n_grid, "--n-grid");
                           if (!o.d_grid.empty()) cfg.d_grid = o.d_grid;
                           cfg.trials = o.trials.value_or(cfg.trials);
                           cfg.threads = o.threads;
                           return sim::stability_experiment(experiment_scene(), cfg, seed);
                         });
    n_grid(c, o);
    d_grid(c, o);
    trials(c, o, "Trials per (n, d)");
    threads(c, o);
  }
  {
    auto* c = experiment("collapse-test", "Collapse-test implications under perturbations",
                         [&](std::uint64_t seed) {
                           return sim::collapse_experiment(o.trials.value_or(1000), seed);
                         });
    trials(c, o, "Number of perturbations");
  }
  {
    auto* c = experiment("dynamic-detector", "Detector on a scene with weak-aligned dynamics",
                         [&](std::uint64_t seed) {
                           DetectorConfig cfg;
                           cfg.tau_goi = o.tau_goi;
                           cfg.tau_rho = o.tau_rho.value_or(0.005);
                           return sim::dynamic_detector_experiment(sim::dynamic_scene_spec(), cfg,
                                                                   seed)
                               .result;
                         });
    c->add_option("--tau-goi", o.tau_goi, "Absolute GOI threshold");
    c->add_option("--tau-rho", o.tau_rho, "Alignment threshold (default 0.005)");
  }
  experiment("amplification", "GOI of dynamic vs static features after collapse",
             [&](std::uint64_t seed) {
               return sim::amplification_experiment({sim::dynamic_scene_spec(), 10.0}, seed);
             });

  {
    auto* c = app.add_subcommand("goi-report", "Per-feature influence report for a scene");
    scene_input(c, o);
    thresholds(c, o);
    common_output(c, o);
    c->callback([&] { action = [&] { return cmd_report(o, false, out, err); }; });
  }
  {
    auto* c = app.add_subcommand("detect-dynamic", "Flag dynamic features (exit 2 on flags)");
    scene_input(c, o);
    thresholds(c, o);
    common_output(c, o);
    c->callback([&] { action = [&] { return cmd_report(o, true, out, err); }; });
  }
  {
    auto* c = app.add_subcommand("detect-degeneracy", "Observability verdict (exit 3 when degenerate)");
    scene_input(c, o);
    thresholds(c, o);
    common_output(c, o);
    c->callback([&] { action = [&] { return cmd_detect_degeneracy(o, out, err); }; });
  }
  {
    auto* c = app.add_subcommand("solve", "Gauss-Newton pose estimate for a scene");
    scene_input(c, o);
    c->add_option("--init", o.init, "Initial pose JSON; the scene pose is then the reference");
    common_output(c, o);
    c->callback([&] { action = [&] { return cmd_solve(o, out, err); }; });
  }
  {
    auto* c = app.add_subcommand("make-scene", "Write a synthetic scene JSON");
    common_output(c, o);
    c->add_option("--points", o.points, "Number of landmarks");
    c->add_option("--depth-scale", o.depth_scale, "Depth multiplier d");
    c->add_option("--sigma", o.sigma, "Pixel noise std");
    c->add_option("--dynamic-fraction", o.dynamic_fraction, "Fraction of dynamic features");
    c->add_option("--bias", o.bias, "Dynamic bias magnitude");
    c->add_option("--bias-mode", o.bias_mode, "random or weak-aligned");
    c->add_option("--g-metric", o.g_metric, "6x6 metric G for weak-aligned bias");
    c->callback([&] { action = [&] { return cmd_make_scene(o, out, err); }; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: invalid arguments: " << e.what() << '\n';
    return kExitError;
  }

  try {
    return action();
  } catch (const OutputError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const BasinEscapeError& e) {
    err << "error: solver left the basin: " << e.what() << '\n';
  } catch (const DegeneracyError& e) {
    err << "error: degenerate problem: " << e.what() << '\n';
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: unexpected failure: " << e.what() << '\n';
  }
  return kExitError;
}

}  // namespace goikit::cli
