#include "pfc/experiments.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "pfc/error.hpp"
#include "pfc/kernels.hpp"
#include "pfc/rng.hpp"
#include "pfc/spectral.hpp"

namespace pfc {

namespace fs = std::filesystem;

Experiment parse_experiment(const std::string& name) {
  if (name == "kernels") return Experiment::Kernels;
  if (name == "convergence") return Experiment::Convergence;
  if (name == "compare") return Experiment::Compare;
  if (name == "polycrystal") return Experiment::Polycrystal;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Kernels: return "kernels";
    case Experiment::Convergence: return "convergence";
    case Experiment::Compare: return "compare";
    case Experiment::Polycrystal: return "polycrystal";
  }
  return "?";
}

std::vector<Patch> default_patches() {
  return {{128.0, 64.0, 10.0, 0.2}, {64.0, 196.0, 10.0, 0.3}, {196.0, 196.0, 10.0, 0.9}};
}

ExperimentConfig default_config(Experiment e) {
  ExperimentConfig cfg;
  cfg.experiment = e;
  switch (e) {
    case Experiment::Kernels:
      cfg.M = 32;
      cfg.L = 8.0;
      cfg.epsilon = 0.25;
      break;
    case Experiment::Convergence:
      break;
    case Experiment::Compare:
      cfg.M = 128;
      cfg.L = 64.0;
      cfg.epsilon = 0.2;
      break;
    case Experiment::Polycrystal:
      cfg.M = 256;
      cfg.L = 256.0;
      cfg.epsilon = 0.25;
      cfg.patches = default_patches();
      cfg.snapshot_times = {1.0, 100.0, 150.0, 400.0, 800.0, 1000.0};
      break;
  }
  return cfg;
}

// ---------------------------------------------------------------- config io

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': '" + v + "' is not a finite number");
}

long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(v, &pos);
    if (pos == v.size()) return n;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const std::string& item : split(v, ',')) out.push_back(to_double(key, item));
  return out;
}

std::vector<Patch> to_patches(const std::string& key, const std::string& v) {
  std::vector<Patch> out;
  for (const std::string& item : split(v, '|')) {
    std::istringstream in(item);
    std::vector<double> nums;
    std::string tok;
    while (in >> tok) nums.push_back(to_double(key, tok));
    if (nums.size() != 4) throw ConfigError("patch '" + item + "' needs 'cx cy side amp'");
    out.push_back({nums[0], nums[1], nums[2], nums[3]});
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + fmt(v[k]);
  return s;
}

void apply_solver_key(SolverOptions& s, const std::string& key, const std::string& v) {
  if (key == "tolerance") s.tolerance = to_double(key, v);
  else if (key == "max_iterations") s.max_iterations = static_cast<int>(to_integer(key, v));
  else if (key == "extrapolated_guess") s.extrapolated_guess = to_bool(key, v);
  else if (key == "cncs_extrapolation") {
    if (v == "literal") s.cncs_extrapolation = Extrapolation::Literal;
    else if (v == "halved") s.cncs_extrapolation = Extrapolation::Halved;
    else throw ConfigError("cncs_extrapolation must be literal or halved");
  } else {
    throw ConfigError("unknown key '" + key + "' in [solver]");
  }
}

void apply_adaptive_key(AdaptiveConfig& a, const std::string& key, const std::string& v) {
  if (key == "rho") a.rho = to_double(key, v);
  else if (key == "tol") a.tol = to_double(key, v);
  else if (key == "tau_max") a.tau_max = to_double(key, v);
  else if (key == "tau_min") a.tau_min = to_double(key, v);
  else if (key == "ratio_cap") a.ratio_cap = to_double(key, v);
  else if (key == "initial_tau") a.initial_tau = to_double(key, v);
  else if (key == "norm") {
    if (v == "l2") a.norm = ErrorNorm::L2;
    else if (v == "max") a.norm = ErrorNorm::Max;
    else throw ConfigError("adaptive norm must be l2 or max");
  } else {
    throw ConfigError("unknown key '" + key + "' in [adaptive]");
  }
}

void apply_experiment_key(ExperimentConfig& c, const std::string& key, const std::string& v) {
  const Experiment e = c.experiment;
  auto only = [&](std::initializer_list<Experiment> allowed) {
    if (std::find(allowed.begin(), allowed.end(), e) == allowed.end()) {
      throw ConfigError("key '" + key + "' does not apply to " + to_string(e));
    }
  };
  if (key == "M") c.M = static_cast<int>(to_integer(key, v));
  else if (key == "L") c.L = to_double(key, v);
  else if (key == "epsilon") c.epsilon = to_double(key, v);
  else if (key == "seed") {
    try {
      std::size_t pos = 0;
      c.seed = std::stoull(v, &pos);
      if (pos != v.size()) throw ConfigError("");
    } catch (const std::exception&) {
      throw ConfigError("seed '" + v + "' is not an unsigned 64-bit integer");
    }
  } else if (key == "scheme") {
    try {
      c.scheme = parse_scheme(v);
    } catch (const ArgumentError& err) {
      throw ConfigError(err.what());
    }
  } else if (key == "mesh") {
    c.mesh = v;
  } else if (key == "snapshot_times") {
    c.snapshot_times = to_doubles(key, v);
  } else if (key == "T") {
    only({Experiment::Convergence});
    c.T = to_double(key, v);
  } else if (key == "ladder") {
    only({Experiment::Convergence});
    c.ladder.clear();
    for (const std::string& s : split(v, ',')) c.ladder.push_back(static_cast<int>(to_integer(key, s)));
  } else if (key == "uniform_control") {
    only({Experiment::Convergence});
    c.uniform_control = to_bool(key, v);
  } else if (key == "mean" || key == "amp" || key == "profile_T" || key == "profile_taus" ||
             key == "reference_tau" || key == "energy_T" || key == "energy_taus") {
    only({Experiment::Compare});
    if (key == "mean") c.init_mean = to_double(key, v);
    else if (key == "amp") c.init_amp = to_double(key, v);
    else if (key == "profile_T") c.profile_T = to_double(key, v);
    else if (key == "profile_taus") c.profile_taus = to_doubles(key, v);
    else if (key == "reference_tau") c.reference_tau = to_double(key, v);
    else if (key == "energy_T") c.energy_T = to_double(key, v);
    else c.energy_taus = to_doubles(key, v);
  } else if (key == "base" || key == "patches" || key == "uniform_tau" || key == "compare_T" ||
             key == "long_T" || key == "long") {
    only({Experiment::Polycrystal});
    if (key == "base") c.base = to_double(key, v);
    else if (key == "patches") c.patches = to_patches(key, v);
    else if (key == "uniform_tau") c.uniform_tau = to_double(key, v);
    else if (key == "compare_T") c.compare_T = to_double(key, v);
    else if (key == "long_T") c.long_T = to_double(key, v);
    else c.long_run = to_bool(key, v);
  } else {
    throw ConfigError("unknown key '" + key + "' in [" + to_string(e) + "]");
  }
}

}  // namespace

ExperimentConfig load_config(Experiment e, std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& err) {
    throw ConfigError(std::string("malformed config: ") + err.what());
  }
  ExperimentConfig cfg = default_config(e);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' outside of any section");
    }
    for (const auto& [key, node] : body) {
      const std::string value = trim(node.data());
      if (section == "solver") apply_solver_key(cfg.solver, key, value);
      else if (section == "adaptive") apply_adaptive_key(cfg.adaptive, key, value);
      else if (section == to_string(e)) apply_experiment_key(cfg, key, value);
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(Experiment e, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return load_config(e, in);
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  out << "[" << to_string(c.experiment) << "]\n";
  out << "M = " << c.M << "\nL = " << fmt(c.L) << "\nepsilon = " << fmt(c.epsilon) << "\n";
  out << "seed = " << c.seed << "\n";
  if (c.scheme) out << "scheme = " << to_string(*c.scheme) << "\n";
  if (c.mesh) out << "mesh = " << *c.mesh << "\n";
  if (!c.snapshot_times.empty()) out << "snapshot_times = " << join(c.snapshot_times) << "\n";
  switch (c.experiment) {
    case Experiment::Kernels:
      break;
    case Experiment::Convergence: {
      out << "T = " << fmt(c.T) << "\nladder = ";
      for (std::size_t k = 0; k < c.ladder.size(); ++k) out << (k ? "," : "") << c.ladder[k];
      out << "\nuniform_control = " << (c.uniform_control ? "true" : "false") << "\n";
      break;
    }
    case Experiment::Compare:
      out << "mean = " << fmt(c.init_mean) << "\namp = " << fmt(c.init_amp)
          << "\nprofile_T = " << fmt(c.profile_T) << "\nprofile_taus = " << join(c.profile_taus)
          << "\nreference_tau = " << fmt(c.reference_tau) << "\nenergy_T = " << fmt(c.energy_T)
          << "\nenergy_taus = " << join(c.energy_taus) << "\n";
      break;
    case Experiment::Polycrystal: {
      out << "base = " << fmt(c.base) << "\npatches = ";
      for (std::size_t k = 0; k < c.patches.size(); ++k) {
        const Patch& p = c.patches[k];
        out << (k ? " | " : "") << fmt(p.cx) << ' ' << fmt(p.cy) << ' ' << fmt(p.side) << ' '
            << fmt(p.amp);
      }
      out << "\nuniform_tau = " << fmt(c.uniform_tau) << "\ncompare_T = " << fmt(c.compare_T)
          << "\nlong_T = " << fmt(c.long_T) << "\nlong = " << (c.long_run ? "true" : "false")
          << "\n";
      break;
    }
  }
  const SolverOptions& s = c.solver;
  out << "\n[solver]\ntolerance = " << fmt(s.tolerance) << "\nmax_iterations = " << s.max_iterations
      << "\nextrapolated_guess = " << (s.extrapolated_guess ? "true" : "false")
      << "\ncncs_extrapolation = "
      << (s.cncs_extrapolation == Extrapolation::Literal ? "literal" : "halved") << "\n";
  const AdaptiveConfig& a = c.adaptive;
  out << "\n[adaptive]\nrho = " << fmt(a.rho) << "\ntol = " << fmt(a.tol)
      << "\ntau_max = " << fmt(a.tau_max) << "\ntau_min = " << fmt(a.tau_min)
      << "\nratio_cap = " << fmt(a.ratio_cap)
      << "\nnorm = " << (a.norm == ErrorNorm::L2 ? "l2" : "max") << "\n";
  if (a.initial_tau) out << "initial_tau = " << fmt(*a.initial_tau) << "\n";
}

void validate(const ExperimentConfig& c) {
  if (c.M < 4 || c.M % 2 != 0) throw ConfigError("M must be even and at least 4");
  if (!(c.L > 0.0)) throw ConfigError("L must be positive");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(c.solver.tolerance > 0.0) || c.solver.max_iterations < 1) {
    throw ConfigError("solver needs tolerance > 0 and max_iterations >= 1");
  }
  c.adaptive.validate();
  auto positive = [](const std::vector<double>& v, const char* what) {
    for (double x : v) {
      if (!(x > 0.0)) throw ConfigError(std::string(what) + " must be positive");
    }
  };
  switch (c.experiment) {
    case Experiment::Kernels:
      break;
    case Experiment::Convergence:
      if (!(c.T > 0.0)) throw ConfigError("T must be positive");
      if (c.ladder.empty()) throw ConfigError("ladder must not be empty");
      for (int n : c.ladder) {
        if (n < 1) throw ConfigError("ladder entries must be positive");
      }
      break;
    case Experiment::Compare:
      if (c.init_amp < 0.0) throw ConfigError("amp must be non-negative");
      positive(c.profile_taus, "profile_taus");
      positive(c.energy_taus, "energy_taus");
      if (!(c.profile_T > 0.0 && c.energy_T > 0.0 && c.reference_tau > 0.0)) {
        throw ConfigError("compare horizons and reference_tau must be positive");
      }
      break;
    case Experiment::Polycrystal:
      if (!(c.uniform_tau > 0.0 && c.compare_T > 0.0 && c.long_T > 0.0)) {
        throw ConfigError("polycrystal steps and horizons must be positive");
      }
      for (const Patch& p : c.patches) {
        if (!(p.side > 0.0) || p.amp < 0.0) throw ConfigError("patch side > 0 and amp >= 0 required");
        if (p.cx - p.side / 2 < 0.0 || p.cx + p.side / 2 > c.L || p.cy - p.side / 2 < 0.0 ||
            p.cy + p.side / 2 > c.L) {
          throw ConfigError("patch leaves the domain");
        }
      }
      break;
  }
  positive(c.snapshot_times, "snapshot_times");
}

// ------------------------------------------------------------ initial data

Field random_initial(double mean, double amp, const Grid2D& grid, std::uint64_t seed) {
  if (amp < 0.0) throw ArgumentError("random_initial needs amp >= 0");
  Field out(grid, mean);
  SplitMix64 rng(seed);
  for (double& v : out.values()) v = mean + amp * rng.symmetric();
  return out;
}

Field patched_initial(const Grid2D& grid, const std::vector<Patch>& patches, double base,
                      std::uint64_t seed) {
  Field out(grid, base);
  for (std::size_t k = 0; k < patches.size(); ++k) {
    const Patch& p = patches[k];
    const double half = p.side / 2;
    if (!(p.side > 0.0) || p.cx - half < 0.0 || p.cx + half > grid.L() || p.cy - half < 0.0 ||
        p.cy + half > grid.L()) {
      throw ArgumentError("patch " + std::to_string(k) + " leaves the domain");
    }
    SplitMix64 rng(SplitMix64::derive(seed, k));
    for (int j = 0; j < grid.M(); ++j) {
      if (std::abs(grid.y(j) - p.cy) > half) continue;
      for (int i = 0; i < grid.M(); ++i) {
        if (std::abs(grid.x(i) - p.cx) > half) continue;
        out(i, j) += p.amp * rng.symmetric();
      }
    }
  }
  return out;
}

bool patches_overlap(const std::vector<Patch>& patches) {
  for (std::size_t a = 0; a < patches.size(); ++a) {
    for (std::size_t b = a + 1; b < patches.size(); ++b) {
      const double reach = (patches[a].side + patches[b].side) / 2;
      if (std::abs(patches[a].cx - patches[b].cx) <= reach &&
          std::abs(patches[a].cy - patches[b].cy) <= reach) {
        return true;
      }
    }
  }
  return false;
}

std::vector<double> midline(const Field& f) {
  const int M = f.grid().M();
  std::vector<double> out(M);
  for (int i = 0; i < M; ++i) out[i] = f(i, M / 2);
  return out;
}

int oscillation_indicator(const std::vector<double>& v) {
  int changes = 0;
  double last = 0.0;
  for (std::size_t k = 1; k + 1 < v.size(); ++k) {
    const double d2 = v[k + 1] - 2.0 * v[k] + v[k - 1];
    if (d2 == 0.0) continue;
    if (last != 0.0 && (d2 > 0.0) != (last > 0.0)) ++changes;
    last = d2;
  }
  return changes;
}

TimeMesh resolve_mesh(const std::string& spec) {
  if (spec.rfind("uniform:", 0) == 0 || spec.rfind("random:", 0) == 0) return parse_mesh_spec(spec);
  return read_mesh_file(spec);
}

// -------------------------------------------------------------- convergence

namespace {

void prepare_dir(const ExperimentConfig& cfg) {
  if (cfg.output_dir.empty()) return;
  fs::create_directories(cfg.output_dir);
  std::ofstream out(cfg.output_dir / "config.ini");
  if (!out) throw ConfigError("cannot write into " + cfg.output_dir.string());
  write_config(out, cfg);
}

std::string tau_tag(double tau) {
  std::ostringstream s;
  s << tau;
  return s.str();
}

std::vector<double> uniform_steps(double T, double tau) {
  const long n = std::lround(T / tau);
  if (n < 1 || std::abs(n * tau - T) > 1e-9 * T) {
    throw ConfigError("step " + fmt(tau) + " does not divide the horizon " + fmt(T));
  }
  return std::vector<double>(static_cast<std::size_t>(n), tau);
}

void write_convergence_csv(std::ostream& out, const char* kind,
                           const std::vector<ConvergenceRow>& rows) {
  for (const ConvergenceRow& r : rows) {
    out << kind << ',' << r.N << ',' << r.tau_max << ',' << r.error << ',';
    if (r.order) out << *r.order;
    out << ',' << r.max_ratio << ',' << r.n1 << ',' << r.failure << '\n';
  }
}

}  // namespace

std::uint64_t ladder_seed(std::uint64_t seed, int N) {
  return SplitMix64::derive(seed, static_cast<std::uint64_t>(N));
}

double manufactured_error(const PfcParams& p, const TimeMesh& mesh, const SolverOptions& opts) {
  RunOptions ro;
  ro.solver = opts;
  ro.record_energy = false;
  ro.forcing = [&p](double t) { return manufactured_forcing(t, p); };
  const Field phi0 = manufactured_solution(0.0, p.grid());
  const RunSummary run = run_steps(Scheme::Bdf2, p, phi0, mesh.steps(), ro);
  const Field err = run.final_state - manufactured_solution(mesh.horizon(), p.grid());
  return norms(err).l2;
}

std::vector<ConvergenceRow> convergence_rows(const ExperimentConfig& cfg,
                                             const std::vector<TimeMesh>& meshes) {
  const PfcParams p(cfg.epsilon, cfg.grid());
  std::vector<ConvergenceRow> rows;
  for (const TimeMesh& mesh : meshes) {
    ConvergenceRow row;
    row.N = mesh.size();
    row.tau_max = mesh.max_step();
    row.max_ratio = mesh.max_ratio();
    for (double r : mesh.ratios()) row.n1 += r >= kRatioSup ? 1 : 0;
    try {
      row.error = manufactured_error(p, mesh, cfg.solver);
    } catch (const SolverError& err) {
      row.error = std::nan("");
      row.failure = err.what();
    } catch (const ConditioningError& err) {
      row.error = std::nan("");
      row.failure = err.what();
    }
    if (!rows.empty() && rows.back().failure.empty() && row.failure.empty()) {
      const ConvergenceRow& prev = rows.back();
      row.order = std::log(prev.error / row.error) / std::log(prev.tau_max / row.tau_max);
    }
    rows.push_back(row);
  }
  return rows;
}

ConvergenceResult run_convergence(const ExperimentConfig& cfg) {
  validate(cfg);
  prepare_dir(cfg);
  const auto start = std::chrono::steady_clock::now();
  ConvergenceResult res;
  std::vector<TimeMesh> meshes;
  if (cfg.mesh) {
    meshes.push_back(resolve_mesh(*cfg.mesh));
  } else {
    for (int N : cfg.ladder) meshes.push_back(random_mesh(N, cfg.T, ladder_seed(cfg.seed, N)));
  }
  res.random = convergence_rows(cfg, meshes);
  if (cfg.uniform_control && !cfg.mesh) {
    std::vector<TimeMesh> uniform;
    for (int N : cfg.ladder) uniform.push_back(TimeMesh::uniform(N, cfg.T));
    res.uniform = convergence_rows(cfg, uniform);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!cfg.output_dir.empty()) {
    std::ofstream out(cfg.output_dir / "convergence.csv");
    out << std::setprecision(17) << "mesh,N,tau_max,error,order,max_ratio,n1,failure\n";
    write_convergence_csv(out, "random", res.random);
    write_convergence_csv(out, "uniform", res.uniform);
    fs::create_directories(cfg.output_dir / "meshes");
    for (const TimeMesh& m : meshes) {
      write_mesh_file(cfg.output_dir / "meshes" / ("random_" + std::to_string(m.size()) + ".txt"),
                      m.steps());
    }
  }
  return res;
}

// ------------------------------------------------------------------ compare

std::vector<Scheme> compare_schemes(const ExperimentConfig& cfg) {
  if (cfg.scheme) return {*cfg.scheme};
  return {Scheme::Bdf2, Scheme::CrankNicolson, Scheme::CrankNicolsonConvexSplitting};
}

CompareResult run_compare(const ExperimentConfig& cfg) {
  validate(cfg);
  prepare_dir(cfg);
  const PfcParams p(cfg.epsilon, cfg.grid());
  const Field phi0 = random_initial(cfg.init_mean, cfg.init_amp, p.grid(), cfg.seed);
  const auto schemes = compare_schemes(cfg);
  CompareResult res;
  RunOptions quiet;
  quiet.solver = cfg.solver;
  quiet.record_energy = false;

  const fs::path profile_dir = cfg.output_dir / "profiles";
  const fs::path energy_dir = cfg.output_dir / "energy";
  if (!cfg.output_dir.empty()) {
    fs::create_directories(profile_dir);
    fs::create_directories(energy_dir);
  }
  auto write_profile = [&](const std::string& name, const std::vector<double>& prof) {
    if (cfg.output_dir.empty()) return;
    std::ofstream out(profile_dir / (name + ".csv"));
    out << std::setprecision(17) << "x,phi\n";
    for (std::size_t i = 0; i < prof.size(); ++i) out << p.grid().x(static_cast<int>(i)) << ',' << prof[i] << '\n';
  };

  // A failing reference leaves nothing to compare against; let it propagate.
  const auto ref_steps = uniform_steps(cfg.profile_T, cfg.reference_tau);
  const RunSummary ref = run_steps(Scheme::Bdf2, p, phi0, ref_steps, quiet);
  res.reference_profile = midline(ref.final_state);
  res.reference_oscillations = oscillation_indicator(res.reference_profile);
  write_profile("reference", res.reference_profile);

  for (double tau : cfg.profile_taus) {
    const auto steps = uniform_steps(cfg.profile_T, tau);
    for (Scheme s : schemes) {
      ProfileRun run;
      run.scheme = s;
      run.tau = tau;
      try {
        const RunSummary out = run_steps(s, p, phi0, steps, quiet);
        run.profile = midline(out.final_state);
        for (std::size_t i = 0; i < run.profile.size(); ++i) {
          run.deviation = std::max(run.deviation, std::abs(run.profile[i] - res.reference_profile[i]));
        }
        run.oscillations = oscillation_indicator(run.profile);
        write_profile(to_string(s) + "_tau" + tau_tag(tau), run.profile);
      } catch (const std::runtime_error& err) {
        run.failure = err.what();
        ++res.failures;
        std::cerr << "compare: " << to_string(s) << " tau=" << tau << " failed: " << err.what() << '\n';
      }
      res.profiles.push_back(std::move(run));
    }
  }

  for (double tau : cfg.energy_taus) {
    const auto steps = uniform_steps(cfg.energy_T, tau);
    for (Scheme s : schemes) {
      EnergyRun run;
      run.scheme = s;
      run.tau = tau;
      try {
        RunOptions ro;
        ro.solver = cfg.solver;
        RunSummary out = run_steps(s, p, phi0, steps, ro);
        run.mean_iterations = out.mean_iterations;
        run.seconds = out.seconds;
        run.records = std::move(out.records);
        if (!cfg.output_dir.empty()) {
          write_energy_csv(energy_dir / (to_string(s) + "_tau" + tau_tag(tau) + ".csv"), run.records);
        }
      } catch (const std::runtime_error& err) {
        run.failure = err.what();
        ++res.failures;
        std::cerr << "compare: " << to_string(s) << " tau=" << tau << " failed: " << err.what() << '\n';
      }
      res.energies.push_back(std::move(run));
    }
  }

  if (!cfg.output_dir.empty()) {
    std::ofstream stats(cfg.output_dir / "profile_stats.csv");
    stats << std::setprecision(17) << "scheme,tau,deviation,oscillations,failure\n";
    stats << "reference," << cfg.reference_tau << ",0," << res.reference_oscillations << ",\n";
    for (const ProfileRun& r : res.profiles) {
      stats << to_string(r.scheme) << ',' << r.tau << ',' << r.deviation << ',' << r.oscillations
            << ',' << r.failure << '\n';
    }
    std::ofstream iters(cfg.output_dir / "iterations.csv");
    iters << std::setprecision(17) << "scheme,tau,mean_iterations,seconds_per_step,failure\n";
    for (const EnergyRun& r : res.energies) {
      const double steps = r.records.empty() ? 1.0 : static_cast<double>(r.records.size() - 1);
      iters << to_string(r.scheme) << ',' << r.tau << ',' << r.mean_iterations << ','
            << r.seconds / steps << ',' << r.failure << '\n';
    }
  }
  return res;
}

// -------------------------------------------------------------- polycrystal

namespace {

void write_steps(const fs::path& path, const std::vector<double>& steps) {
  write_mesh_file(path, steps);
}

}  // namespace

PolycrystalResult run_polycrystal(const ExperimentConfig& cfg) {
  validate(cfg);
  prepare_dir(cfg);
  if (patches_overlap(cfg.patches)) {
    std::cerr << "polycrystal: patches overlap; perturbations add up\n";
  }
  const PfcParams p(cfg.epsilon, cfg.grid());
  const Field phi0 = patched_initial(p.grid(), cfg.patches, cfg.base, cfg.seed);
  RunOptions ro;
  ro.solver = cfg.solver;
  RunSummary uniform = run_steps(cfg.scheme.value_or(Scheme::Bdf2), p, phi0,
                                 uniform_steps(cfg.compare_T, cfg.uniform_tau), ro);
  AdaptiveRunOptions ao;
  ao.solver = cfg.solver;
  AdaptiveRun adaptive = run_adaptive(p, phi0, cfg.compare_T, cfg.adaptive, ao);

  PolycrystalResult res{std::move(uniform), std::move(adaptive), 0.0, 0.0, std::nullopt, {}};
  res.uniform_final_energy = res.uniform.records.back().energy;
  res.adaptive_energy_at_T = energy_at(res.adaptive.records, cfg.compare_T);

  const fs::path& dir = cfg.output_dir;
  if (!dir.empty()) {
    write_energy_csv(dir / "energy_uniform.csv", res.uniform.records);
    write_energy_csv(dir / "energy_adaptive.csv", res.adaptive.records);
    write_trial_log(dir / "adaptive_log.csv", res.adaptive.trials);
    write_steps(dir / "adaptive_steps.txt", res.adaptive.steps);
    std::ofstream s(dir / "summary.csv");
    s << std::setprecision(17)
      << "leg,steps,rejections,final_t,energy_at_T,max_mass_drift,restriction_warnings,seconds\n"
      << "uniform," << res.uniform.steps.size() << ",0," << res.uniform.records.back().t << ','
      << res.uniform_final_energy << ',' << res.uniform.max_mass_drift << ",0,"
      << res.uniform.seconds << '\n'
      << "adaptive," << res.adaptive.steps.size() << ',' << res.adaptive.rejections << ','
      << res.adaptive.records.back().t << ',' << res.adaptive_energy_at_T << ','
      << res.adaptive.max_mass_drift << ',' << res.adaptive.restriction_warnings << ','
      << res.adaptive.seconds << '\n';
  }

  if (cfg.long_run) {
    std::vector<double> targets = cfg.snapshot_times;
    std::sort(targets.begin(), targets.end());
    std::size_t next = 0;
    if (!dir.empty()) fs::create_directories(dir / "snapshots");
    AdaptiveRunOptions lo;
    lo.solver = cfg.solver;
    lo.on_step = [&](const StepperState& st) {
      while (next < targets.size() && st.t >= targets[next]) {
        res.snapshot_times_hit.push_back(st.t);
        if (!dir.empty()) {
          write_snapshot(dir / "snapshots" / ("snapshot_t" + tau_tag(targets[next]) + ".txt"),
                         st.phi_prev, st.t);
        }
        ++next;
      }
    };
    res.long_run = run_adaptive(p, phi0, cfg.long_T, cfg.adaptive, lo);
    if (!dir.empty()) {
      write_energy_csv(dir / "energy_long.csv", res.long_run->records);
      write_trial_log(dir / "long_log.csv", res.long_run->trials);
      write_steps(dir / "long_steps.txt", res.long_run->steps);
    }
  }
  return res;
}

// ------------------------------------------------------------------ kernels

KernelReport run_kernels(const ExperimentConfig& cfg) {
  validate(cfg);
  prepare_dir(cfg);
  TimeMesh mesh = cfg.mesh ? resolve_mesh(*cfg.mesh) : random_mesh(200, 1.0, cfg.seed);
  MeshReport rep = analyze(mesh, cfg.epsilon);
  const EigenBounds bounds = eigen_bounds(mesh);
  const double orth = verify_orthogonality(mesh);
  return {std::move(mesh), std::move(rep), bounds, orth};
}

void write_kernel_report(const fs::path& path, const KernelReport& r, double epsilon) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  const TimeMesh& mesh = r.mesh;
  const Bdf2Coeffs b(mesh);
  const DocKernels theta = doc_kernels(mesh);
  out << std::setprecision(17) << "n,tau,ratio,b0,b1,theta_sum,orth_residual,restriction\n";
  for (int n = 1; n <= mesh.size(); ++n) {
    double sum = 0.0;
    for (double v : theta.row(n)) sum += v;
    const double r_next = n < mesh.size() ? mesh.ratio(n + 1) : 0.0;
    out << n << ',' << mesh.tau(n) << ',' << mesh.ratio(n) << ',' << b.b0(n) << ',' << b.b1(n)
        << ',' << sum << ',' << orthogonality_residual(theta, b, n) << ','
        << restriction_bound(mesh.ratio(n), r_next, epsilon) << '\n';
  }
  out << "# lambda_min_btilde=" << r.bounds.lambda_min_btilde
      << "\n# lambda_max_b2tb2=" << r.bounds.lambda_max_b2tb2 << "\n# mr=" << r.bounds.mr
      << "\n# s1_violations=" << r.mesh_report.s1_violations.size()
      << "\n# s2_count=" << r.mesh_report.s2_count
      << "\n# restriction_violations=" << r.mesh_report.restriction_violations.size()
      << "\n# max_orthogonality_residual=" << r.orthogonality << '\n';
}

}  // namespace pfc
