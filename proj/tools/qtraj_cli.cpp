#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "qtraj/assumptions.hpp"
#include "qtraj/csv.hpp"
#include "qtraj/estimators.hpp"
#include "qtraj/json_io.hpp"
#include "qtraj/kernel.hpp"
#include "qtraj/measures.hpp"
#include "qtraj/stats.hpp"
#include "qtraj/svg.hpp"
#include "qtraj/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qtraj;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitDomainFailure = 1;
constexpr int kExitInputError = 2;
constexpr int kExitAssumptionViolation = 3;

struct Flags {
  std::string config_path;
  std::string out_dir = "out";
  std::int64_t n = -1;
  int replicas = -1;
  std::int64_t burn_in = -1;
  std::int64_t seed = -1;
  double beta = -1.0;
  int threads = 0;
  bool plot = false;
  std::string observable;
  std::string measure_a, measure_b;  // wasserstein direct mode
};

struct Experiment {
  KrausFamily family;
  Observable observable;
  TrajectoryConfig base;  // family + initial + master seed
  std::uint64_t seed = 1;
  long n = 10000;
  int replicas = 200;
  long burn_in = 1000;
  double beta = 0.75;
  int threads = 1;
  double tol = 1e-6;
  std::vector<double> z_grid = {-1.0, -0.5, 0.5, 1.0};
  std::vector<int> n_grid = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::vector<double> times = {0.5, 1.0};
  std::string digest;
};

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Observable observable_by_name(const std::string& name, int dim, const json* section) {
  if (name.rfind("pop", 0) == 0 && name.size() > 3) {
    return Observable::population(dim, std::stoi(name.substr(3)));
  }
  if (name == "pop") {
    int index = section ? section->value("index", 0) : 0;
    return Observable::population(dim, index);
  }
  if (name == "overlap") {
    if (!section || !section->contains("direction")) {
      throw StructuralError("observable overlap: needs a direction vector");
    }
    return Observable::overlap(vector_from_json(section->at("direction")));
  }
  if (name == "const") {
    double value = section ? section->value("value", 0.0) : 0.0;
    return Observable::constant(dim, value);
  }
  throw StructuralError("unknown observable: " + name);
}

ProjectiveState parse_state(const json& j, int dim) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "plus") return uniform_superposition(dim);
    if (s.rfind("e", 0) == 0) return basis_state(dim, std::stoi(s.substr(1)));
    throw StructuralError("unknown initial state: " + s);
  }
  return ProjectiveState(vector_from_json(j));
}

Experiment load_experiment(const Flags& flags) {
  std::ifstream in(flags.config_path, std::ios::binary);
  if (!in) throw StructuralError("cannot open config: " + flags.config_path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string raw = buffer.str();

  json doc = json::parse(raw);  // parse errors map to exit 2 at the call site
  if (!doc.contains("model")) throw StructuralError("config: missing \"model\" section");

  Experiment exp;
  exp.digest = fnv1a_hex(raw);
  exp.family = family_from_json(doc.at("model"));

  const json obs_section = doc.value("observable", json::object());
  std::string obs_name = flags.observable.empty()
                             ? obs_section.value("name", std::string("pop"))
                             : flags.observable;
  exp.observable = observable_by_name(obs_name, exp.family.dim,
                                      obs_section.is_object() ? &obs_section : nullptr);

  const json e = doc.value("experiment", json::object());
  exp.seed = e.value("seed", 1ull);
  exp.n = e.value("n", 10000ll);
  exp.replicas = e.value("replicas", 200);
  exp.burn_in = e.value("burn_in", 1000ll);
  exp.beta = e.value("beta", 0.75);
  exp.threads = e.value("threads", 0);
  exp.tol = e.value("tol", 1e-6);
  if (e.contains("z_grid")) exp.z_grid = e.at("z_grid").get<std::vector<double>>();
  if (e.contains("n_grid")) exp.n_grid = e.at("n_grid").get<std::vector<int>>();
  if (e.contains("times")) exp.times = e.at("times").get<std::vector<double>>();

  if (flags.seed >= 0) exp.seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.n >= 0) exp.n = flags.n;
  if (flags.replicas >= 0) exp.replicas = flags.replicas;
  if (flags.burn_in >= 0) exp.burn_in = flags.burn_in;
  if (flags.beta > 0.0) exp.beta = flags.beta;
  if (flags.threads > 0) exp.threads = flags.threads;
  exp.threads = resolve_threads(exp.threads);

  exp.base.family = exp.family;
  exp.base.master_seed = exp.seed;
  if (e.contains("initial")) {
    const json& init = e.at("initial");
    if (init.is_object() && init.contains("measure")) {
      for (const json& atom : init.at("measure")) {
        exp.base.initial_measure.emplace_back(parse_state(atom.at("state"), exp.family.dim),
                                              atom.at("weight").get<double>());
      }
    } else if (init.is_object() && init.contains("state")) {
      exp.base.initial_state = parse_state(init.at("state"), exp.family.dim);
    } else {
      exp.base.initial_state = parse_state(init, exp.family.dim);
    }
  } else {
    exp.base.initial_state = uniform_superposition(exp.family.dim);
  }
  validate_config(exp.base);
  return exp;
}

struct Manifest {
  Experiment* exp;
  std::string command;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void finish(const fs::path& dir, const json& summary) {
    json j;
    j["tool"] = "qtraj";
    j["version"] = kVersion;
    j["command"] = command;
    j["config_digest"] = exp->digest;
    j["master_seed"] = exp->seed;
    j["threads"] = exp->threads;
    j["outputs"] = outputs;
    j["summary"] = summary;
    j["wall_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << j.dump(2) << '\n';
  }
};

fs::path ensure_out_dir(const Flags& flags) {
  fs::path dir(flags.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
}

// Shared front half of every limit-theorem command: assumption checks, the
// Poisson solution and the asymptotic variance. Exits with code 3 when the
// assumptions fail.
struct Analysis {
  AssumptionReport assumptions;
  std::optional<PoissonSolution> solution;
  double mean = 0.0;
  double gamma_sq = 0.0;
  double gamma_se = 0.0;
};

Analysis analyze(const Experiment& exp, const fs::path& dir) {
  Analysis a;
  a.assumptions = run_assumption_checks(exp.family);
  write_json_file(dir / "check.json", assumption_report_to_json(a.assumptions));
  if (!a.assumptions.all_hold()) {
    std::cerr << "assumption check failed:\n"
              << assumption_report_to_json(a.assumptions).dump(2) << "\n";
    std::exit(kExitAssumptionViolation);
  }

  const Matrix& rho = a.assumptions.rho_inv->matrix();
  if (exp.observable.quadratic_form) {
    a.mean = (*exp.observable.quadratic_form * rho).trace().real();
  } else {
    TrajectoryConfig cfg = exp.base;
    cfg.replica_index = 1u << 20;
    LlnReport lln = lln_check(cfg, exp.observable, 0.0, 500000);
    a.mean = lln.empirical_mean;
  }

  PoissonOptions opt;
  opt.tol = exp.tol;
  opt.probes = {*exp.base.initial_state};
  a.solution = solve_poisson(exp.family, exp.observable, a.mean, a.assumptions.period, opt);

  TrajectoryConfig cfg = exp.base;
  cfg.replica_index = 1u << 21;
  VarianceEstimate var = gamma_sq_ergodic(*a.solution, cfg, std::max<long>(200000, exp.n));
  a.gamma_sq = var.gamma_sq;
  a.gamma_se = var.std_error;
  return a;
}

int cmd_validate(const Flags& flags) {
  Experiment exp = load_experiment(flags);
  StochasticityReport report = validate_stochasticity(exp.family);
  json j{{"residual", report.residual}, {"pass", report.pass}, {"dim", exp.family.dim},
         {"operators", exp.family.operators.size()}};
  std::cout << j.dump(2) << "\n";
  return report.pass ? kExitOk : kExitDomainFailure;
}

int cmd_check(const Flags& flags) {
  Experiment exp = load_experiment(flags);
  fs::path dir = ensure_out_dir(flags);
  Manifest manifest{&exp, "check"};
  AssumptionReport report = run_assumption_checks(exp.family);
  json j = assumption_report_to_json(report);
  write_json_file(dir / "check.json", j);
  manifest.outputs.push_back((dir / "check.json").string());
  manifest.finish(dir, j);
  std::cout << j.dump(2) << "\n";
  return report.all_hold() ? kExitOk : kExitAssumptionViolation;
}

int cmd_simulate(const Flags& flags) {
  Experiment exp = load_experiment(flags);
  fs::path dir = ensure_out_dir(flags);
  Manifest manifest{&exp, "simulate"};

  TrajectoryConfig cfg = exp.base;
  cfg.n_steps = exp.n;
  TrajectoryPath path = sample_trajectory(cfg);
  std::vector<ProjectiveState> estimators = evolved_estimator(exp.family, path.word);

  std::vector<std::string> columns = {"step", "branch_index", "weight"};
  for (int i = 0; i < exp.family.dim; ++i) {
    columns.push_back("re" + std::to_string(i));
    columns.push_back("im" + std::to_string(i));
  }
  columns.push_back("distance_to_estimator");
  CsvWriter csv((dir / "trajectory.csv").string(), columns);
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    std::vector<double> row;
    row.push_back(static_cast<double>(k));
    row.push_back(k == 0 ? -1.0 : static_cast<double>(path.word.letters[k - 1]));
    row.push_back(k == 0 ? 1.0 : path.step_weights[k - 1]);
    for (int i = 0; i < exp.family.dim; ++i) {
      row.push_back(path.states[k].component(i).real());
      row.push_back(path.states[k].component(i).imag());
    }
    row.push_back(metric_distance(path.states[k], estimators[k]));
    csv.row(row);
  }
  manifest.outputs.push_back((dir / "trajectory.csv").string());

  if (flags.plot) {
    SvgSeries dist{"d(x_n, y_n)", "#1f6fb2", {}, {}};
    for (std::size_t k = 0; k < path.states.size(); ++k) {
      dist.x.push_back(static_cast<double>(k));
      dist.y.push_back(metric_distance(path.states[k], estimators[k]));
    }
    write_svg_lines((dir / "trajectory.svg").string(), "estimator distance along the path", {dist});
    manifest.outputs.push_back((dir / "trajectory.svg").string());
  }

  json summary{{"n", exp.n}, {"final_log_norm", path.log_norms.empty() ? 0.0 : path.log_norms.back()}};
  manifest.finish(dir, summary);
  return kExitOk;
}

int cmd_poisson(const Flags& flags) {
  Experiment exp = load_experiment(flags);
  fs::path dir = ensure_out_dir(flags);
  Manifest manifest{&exp, "poisson"};
  Analysis a = analyze(exp, dir);

  PoissonDiagnostics diag = a.solution->diagnostics();
  std::vector<ProjectiveState> probes = random_probe_states(exp.family.dim, 64, exp.seed ^ 0xabcdu);
  CsvWriter csv((dir / "poisson_probes.csv").string(), {"probe", "gtilde", "h"});
  for (std::size_t i = 0; i < probes.size(); ++i) {
    csv.row({static_cast<double>(i), a.solution->evaluate(probes[i]),
             a.solution->conditional_variance(probes[i])});
  }
  manifest.outputs.push_back((dir / "poisson_probes.csv").string());

  diag = a.solution->diagnostics();  // residual bound now covers the probes
  json j{{"invariant_mean", a.mean},
         {"gamma_sq_ergodic", a.gamma_sq},
         {"gamma_sq_std_error", a.gamma_se},
         {"blocks", diag.blocks},
         {"levels", diag.levels},
         {"period", diag.period},
         {"tol", diag.tol},
         {"gauge", diag.gauge},
         {"residual_bound", diag.residual_bound},
         {"block_ratio", diag.block_ratio},
         {"max_pruned_mass", diag.max_pruned_mass},
         {"exact_tail", diag.exact_tail}};
  write_json_file(dir / "poisson.json", j);
  manifest.outputs.push_back((dir / "poisson.json").string());
  manifest.finish(dir, j);
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_clt(const Flags& flags) {
  Experiment exp = load_experiment(flags);
  fs::path dir = ensure_out_dir(flags);
  Manifest manifest{&exp, "clt"};
  Analysis a = analyze(exp, dir);
  if (!(a.gamma_sq > 0.0)) {
    std::cerr << "gamma^2 is zero for this observable; the normalized sums are degenerate\n";
    return kExitDomainFailure;
  }

  CltReport report =
      clt_test(exp.base, exp.observable, a.mean, a.gamma_sq, exp.n, exp.replicas, exp.threads);

  CsvWriter values((dir / "clt_values.csv").string(), {"replica", "normalized_sum"});
  for (std::size_t r = 0; r < report.normalized.size(); ++r) {
    values.row({static_cast<double>(r), report.normalized[r]});
  }
  manifest.outputs.push_back((dir / "clt_values.csv").string());

  // Histogram against the standard normal density.
  const int bins = 24;
  const double lo = -4.0, hi = 4.0;
  std::vector<double> bin_lo(bins), bin_hi(bins), density(bins, 0.0), overlay(bins);
  for (int b = 0; b < bins; ++b) {
    bin_lo[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
    bin_hi[static_cast<std::size_t>(b)] = lo + (hi - lo) * (b + 1) / bins;
    double mid = 0.5 * (bin_lo[static_cast<std::size_t>(b)] + bin_hi[static_cast<std::size_t>(b)]);
    overlay[static_cast<std::size_t>(b)] =
        std::exp(-0.5 * mid * mid) / std::sqrt(2.0 * 3.14159265358979323846);
  }
  double bin_width = (hi - lo) / bins;
  for (double v : report.normalized) {
    int b = static_cast<int>((v - lo) / bin_width);
    if (b >= 0 && b < bins) {
      density[static_cast<std::size_t>(b)] += 1.0 / (bin_width * report.normalized.size());
    }
  }
  CsvWriter hist((dir / "clt_hist.csv").string(), {"bin_lo", "bin_hi", "density", "normal_density"});
  for (int b = 0; b < bins; ++b) {
    hist.row({bin_lo[static_cast<std::size_t>(b)], bin_hi[static_cast<std::size_t>(b)],
              density[static_cast<std::size_t>(b)], overlay[static_cast<std::size_t>(b)]});
  }
  manifest.outputs.push_back((dir / "clt_hist.csv").string());

  if (flags.plot) {
    write_svg_histogram((dir / "clt_hist.svg").string(), "normalized sums vs standard normal",
                        bin_lo, bin_hi, density, overlay);
    manifest.outputs.push_back((dir / "clt_hist.svg").string());
  }

  json j{{"replicas", report.replicas}, {"n", report.n},       {"ks_distance", report.ks_distance},
         {"p_value", report.p_value},   {"gamma_sq", a.gamma_sq}, {"invariant_mean", a.mean}};
  write_json_file(dir / "clt.json", j);
  manifest.outputs.push_back((dir / "clt.json").string());
  manifest.finish(dir, j);
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_lil(const Flags& flags) {
  Experiment exp = load_experiment(flags);
  fs::path dir = ensure_out_dir(flags);
  Manifest manifest{&exp, "lil"};
  Analysis a = analyze(exp, dir);

  long n_start = std::max<long>(1000, exp.burn_in);
  LilReport report = lil_scan(exp.base, exp.observable, a.mean, a.gamma_sq, n_start, exp.n,
                              exp.replicas, exp.threads);

  CsvWriter csv((dir / "lil_envelope.csv").string(), {"n", "pooled_abs_envelope"});
  for (const auto& [n, v] : report.envelope) csv.row({static_cast<double>(n), v});
  manifest.outputs.push_back((dir / "lil_envelope.csv").string());

  if (flags.plot) {
    SvgSeries env{"pooled |S_n| envelope", "#1f6fb2", {}, {}};
    for (const auto& [n, v] : report.envelope) {
      env.x.push_back(static_cast<double>(n));
      env.y.push_back(v);
    }
    write_svg_lines((dir / "lil_envelope.svg").string(), "law of iterated logarithm envelope",
                    {env});
    manifest.outputs.push_back((dir / "lil_envelope.svg").string());
  }

  json j{{"n_start", report.n_start},
         {"n_end", report.n_end},
         {"pooled_max_plus", report.pooled_max_plus},
         {"pooled_max_minus", report.pooled_max_minus},
         {"pooled_max_abs", report.pooled_max_abs},
         {"replica_max_plus", report.replica_max_plus},
         {"replica_max_minus", report.replica_max_minus},
         {"gamma_sq", a.gamma_sq},
         {"band_note", "finite-n probe of an asymptotic statement; the [0.6,1.4] gate is a "
                       "heuristic engineering band, not a theorem value"}};
  write_json_file(dir / "lil.json", j);
  manifest.outputs.push_back((dir / "lil.json").string());
  manifest.finish(dir, j);
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_mdp(const Flags& flags) {
  Experiment exp = load_experiment(flags);
  fs::path dir = ensure_out_dir(flags);
  Manifest manifest{&exp, "mdp"};
  Analysis a = analyze(exp, dir);

  MdpReport report = mdp_cumulant(exp.base, exp.observable, a.mean, a.gamma_sq, exp.n,
                                  exp.replicas, exp.beta, exp.z_grid, exp.threads);

  CsvWriter csv((dir / "mdp_cumulant.csv").string(),
                {"z", "lambda_hat", "jackknife_se", "target", "overflowed"});
  for (std::size_t i = 0; i < report.z.size(); ++i) {
    csv.row({report.z[i], report.lambda_hat[i], report.jackknife_se[i], report.target[i],
             report.overflowed[i] ? 1.0 : 0.0});
  }
  manifest.outputs.push_back((dir / "mdp_cumulant.csv").string());

  if (flags.plot) {
    SvgSeries lam{"lambda_hat(z)", "#1f6fb2", report.z, report.lambda_hat};
    SvgSeries tgt{"z^2 gamma^2 / 2", "#c0392b", report.z, report.target};
    write_svg_lines((dir / "mdp_cumulant.svg").string(), "moderate-deviation cumulants",
                    {lam, tgt});
    manifest.outputs.push_back((dir / "mdp_cumulant.svg").string());
  }

  json j{{"beta", report.beta},       {"a_n", report.a_n},
         {"n", report.n},             {"replicas", report.replicas},
         {"gamma_sq", report.gamma_sq}, {"z", report.z},
         {"lambda_hat", report.lambda_hat}, {"jackknife_se", report.jackknife_se},
         {"target", report.target}};
  write_json_file(dir / "mdp.json", j);
  manifest.outputs.push_back((dir / "mdp.json").string());
  manifest.finish(dir, j);
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_wasserstein(const Flags& flags) {
  // Direct mode: exact distance between two serialized measures.
  if (!flags.measure_a.empty() || !flags.measure_b.empty()) {
    if (flags.measure_a.empty() || flags.measure_b.empty()) {
      throw StructuralError("wasserstein: need both --measure-a and --measure-b");
    }
    std::ifstream fa(flags.measure_a), fb(flags.measure_b);
    if (!fa || !fb) throw StructuralError("wasserstein: cannot open measure file");
    DiscreteMeasure a = measure_from_json(json::parse(fa));
    DiscreteMeasure b = measure_from_json(json::parse(fb));
    json j{{"w1", wasserstein1(a, b)}, {"atoms_a", a.size()}, {"atoms_b", b.size()}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }

  // Decay mode: fit the geometric convergence rate towards the long-run
  // occupation measure.
  Experiment exp = load_experiment(flags);
  fs::path dir = ensure_out_dir(flags);
  Manifest manifest{&exp, "wasserstein"};
  Analysis a = analyze(exp, dir);

  TrajectoryConfig target_cfg = exp.base;
  target_cfg.replica_index = 1u << 22;
  DiscreteMeasure target = empirical_measure_streaming(target_cfg, std::max<long>(200000, exp.n),
                                                       exp.burn_in);
  LambdaFit fit = fit_lambda(exp.base, target, a.assumptions.period, exp.n_grid, exp.replicas,
                             exp.threads);

  CsvWriter csv((dir / "decay.csv").string(), {"n", "w1", "stderr", "used_in_fit"});
  for (const DecayPoint& p : fit.points) {
    csv.row({static_cast<double>(p.n), p.w1, p.stderr_floor, p.used_in_fit ? 1.0 : 0.0});
  }
  manifest.outputs.push_back((dir / "decay.csv").string());

  if (flags.plot) {
    SvgSeries w1{"W1 to target", "#1f6fb2", {}, {}};
    for (const DecayPoint& p : fit.points) {
      w1.x.push_back(static_cast<double>(p.n));
      w1.y.push_back(p.w1);
    }
    write_svg_lines((dir / "decay.svg").string(), "Wasserstein decay (log scale)", {w1},
                    /*log_y=*/true);
    manifest.outputs.push_back((dir / "decay.svg").string());
  }

  json j{{"slope", fit.slope},
         {"slope_se", fit.slope_se},
         {"lambda_hat", fit.lambda_hat},
         {"lambda_lower", fit.lambda_lower},
         {"lambda_upper", fit.lambda_upper},
         {"replicas", exp.replicas}};
  write_json_file(dir / "wasserstein.json", j);
  manifest.outputs.push_back((dir / "wasserstein.json").string());
  manifest.finish(dir, j);
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum trajectory simulation and limit-theorem verification"};
  app.require_subcommand(1);

  Flags flags;
  app.add_option("--threads", flags.threads, "worker threads (QTRAJ_THREADS as fallback)");

  auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    if (needs_config) {
      sub->add_option("config", flags.config_path, "JSON config with model/observable/experiment")
          ->required();
    }
    sub->add_option("--out", flags.out_dir, "output directory");
    sub->add_option("--seed", flags.seed, "master seed override");
    sub->add_option("--n", flags.n, "steps per trajectory");
    sub->add_option("--replicas", flags.replicas, "independent replicas");
    sub->add_option("--burn-in", flags.burn_in, "burn-in steps");
    sub->add_option("--beta", flags.beta, "moderate-deviation scaling exponent");
    sub->add_option("--observable", flags.observable, "observable name override (pop0, pop1, ...)");
    sub->add_flag("--plot", flags.plot, "emit SVG charts next to the CSV output");
  };

  CLI::App* validate = app.add_subcommand("validate", "check the model stochasticity condition");
  add_common(validate);
  CLI::App* check = app.add_subcommand("check", "run the purification/ergodicity checkers");
  add_common(check);
  CLI::App* simulate = app.add_subcommand("simulate", "sample one trajectory to CSV");
  add_common(simulate);
  CLI::App* poisson = app.add_subcommand("poisson", "solve the Poisson equation and report diagnostics");
  add_common(poisson);
  CLI::App* clt = app.add_subcommand("clt", "central limit theorem experiment");
  add_common(clt);
  CLI::App* lil = app.add_subcommand("lil", "law of iterated logarithm envelope scan");
  add_common(lil);
  CLI::App* mdp = app.add_subcommand("mdp", "moderate deviation cumulant estimates");
  add_common(mdp);
  CLI::App* wasserstein = app.add_subcommand("wasserstein", "exact W1 distances and decay fits");
  wasserstein->add_option("--measure-a", flags.measure_a, "first measure JSON (direct mode)");
  wasserstein->add_option("--measure-b", flags.measure_b, "second measure JSON (direct mode)");
  wasserstein->add_option("config", flags.config_path, "config (decay mode)");
  add_common(wasserstein, /*needs_config=*/false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(flags);
    if (check->parsed()) return cmd_check(flags);
    if (simulate->parsed()) return cmd_simulate(flags);
    if (poisson->parsed()) return cmd_poisson(flags);
    if (clt->parsed()) return cmd_clt(flags);
    if (lil->parsed()) return cmd_lil(flags);
    if (mdp->parsed()) return cmd_mdp(flags);
    if (wasserstein->parsed()) return cmd_wasserstein(flags);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const StructuralError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const NoConvergenceError& e) {
    std::cerr << "domain failure: " << e.what() << "\n";
    return kExitDomainFailure;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kExitDomainFailure;
  }
  return kExitOk;
}
