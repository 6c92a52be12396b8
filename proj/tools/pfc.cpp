// pfc: command line front end for the BDF2 phase field crystal experiments.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "pfc/error.hpp"
#include "pfc/experiments.hpp"

namespace {

constexpr int kExitSolver = 2;
constexpr int kExitConfig = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string mesh;
  std::string mesh_file;
  std::string scheme;
  bool long_run = false;
  std::string report;
};

pfc::ExperimentConfig resolve(pfc::Experiment e, const Options& o) {
  pfc::ExperimentConfig cfg =
      o.config.empty() ? pfc::default_config(e) : pfc::load_config(e, std::filesystem::path(o.config));
  if (o.seed) cfg.seed = *o.seed;
  if (!o.mesh.empty() && !o.mesh_file.empty()) {
    throw pfc::ConfigError("--mesh and --mesh-file are mutually exclusive");
  }
  if (!o.mesh.empty()) cfg.mesh = o.mesh;
  if (!o.mesh_file.empty()) cfg.mesh = o.mesh_file;
  if (!o.scheme.empty()) {
    try {
      cfg.scheme = pfc::parse_scheme(o.scheme);
    } catch (const pfc::ArgumentError& err) {
      throw pfc::ConfigError(err.what());
    }
  }
  if (o.long_run) cfg.long_run = true;
  cfg.output_dir = o.out.empty() ? std::filesystem::path("out") / pfc::to_string(e)
                                 : std::filesystem::path(o.out);
  pfc::validate(cfg);
  return cfg;
}

int kernels(const pfc::ExperimentConfig& cfg, const Options& o) {
  const pfc::KernelReport r = pfc::run_kernels(cfg);
  const std::filesystem::path path =
      o.report.empty() ? cfg.output_dir / "kernels.csv" : std::filesystem::path(o.report);
  pfc::write_kernel_report(path, r, cfg.epsilon);
  std::printf("levels %d  max ratio %.4g  S1 violations %zu\n", r.mesh.size(),
              r.mesh_report.max_ratio, r.mesh_report.s1_violations.size());
  std::printf("lambda_min(Btilde) %.6g  lambda_max(B2tB2) %.6g  Mr %.6g%s\n",
              r.bounds.lambda_min_btilde, r.bounds.lambda_max_b2tb2, r.bounds.mr,
              r.bounds.s1_warning ? "  (mesh outside S1)" : "");
  std::printf("orthogonality residual %.3e\nreport: %s\n", r.orthogonality, path.c_str());
  return 0;
}

int convergence(const pfc::ExperimentConfig& cfg) {
  const pfc::ConvergenceResult r = pfc::run_convergence(cfg);
  bool failed = false;
  auto print = [&](const char* kind, const std::vector<pfc::ConvergenceRow>& rows) {
    for (const auto& row : rows) {
      std::printf("%-8s N=%-4d tau=%.3e  e=%.3e  order=%s  max r=%.2f  N1=%d%s%s\n", kind, row.N,
                  row.tau_max, row.error,
                  row.order ? std::to_string(*row.order).c_str() : "--", row.max_ratio, row.n1,
                  row.failure.empty() ? "" : "  FAILED: ", row.failure.c_str());
      failed = failed || !row.failure.empty();
    }
  };
  print("random", r.random);
  print("uniform", r.uniform);
  std::printf("output: %s\n", cfg.output_dir.c_str());
  return failed ? kExitSolver : 0;
}

int compare(const pfc::ExperimentConfig& cfg) {
  const pfc::CompareResult r = pfc::run_compare(cfg);
  std::printf("reference oscillation indicator %d\n", r.reference_oscillations);
  for (const auto& p : r.profiles) {
    if (p.failure.empty()) {
      std::printf("%-5s tau=%-8g deviation %.3e  oscillations %d\n", pfc::to_string(p.scheme).c_str(),
                  p.tau, p.deviation, p.oscillations);
    }
  }
  for (const auto& e : r.energies) {
    if (e.failure.empty()) {
      std::printf("%-5s tau=%-8g mean iterations %.4f  E(T)=%.8g\n", pfc::to_string(e.scheme).c_str(),
                  e.tau, e.mean_iterations, e.records.back().energy);
    }
  }
  std::printf("output: %s\n", cfg.output_dir.c_str());
  return r.failures > 0 ? kExitSolver : 0;
}

int polycrystal(const pfc::ExperimentConfig& cfg) {
  const pfc::PolycrystalResult r = pfc::run_polycrystal(cfg);
  std::printf("uniform  steps %zu  E(T)=%.10g  mass drift %.3e\n", r.uniform.steps.size(),
              r.uniform_final_energy, r.uniform.max_mass_drift);
  std::printf("adaptive steps %zu  rejections %d  E(T)=%.10g  mass drift %.3e\n",
              r.adaptive.steps.size(), r.adaptive.rejections, r.adaptive_energy_at_T,
              r.adaptive.max_mass_drift);
  if (r.long_run) {
    std::printf("long     steps %zu  final t %.6g  E=%.10g  mass drift %.3e\n",
                r.long_run->steps.size(), r.long_run->records.back().t,
                r.long_run->records.back().energy, r.long_run->max_mass_drift);
  }
  std::printf("output: %s\n", cfg.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-step BDF2 solver for the phase field crystal equation"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "64-bit seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--mesh", o.mesh, "uniform:N,T | random:N,T,seed | mesh file");
    sub->add_option("--mesh-file", o.mesh_file, "one step size per line")->check(CLI::ExistingFile);
    sub->add_option("--scheme", o.scheme, "bdf2 | cn | cncs");
  };
  CLI::App* k = app.add_subcommand("kernels", "DOC kernel and eigenvalue report for a mesh");
  add_common(k);
  k->add_option("--report", o.report, "CSV path of the per-level report");
  CLI::App* c = app.add_subcommand("convergence", "temporal convergence on random meshes");
  add_common(c);
  CLI::App* m = app.add_subcommand("compare", "BDF2 / CN / CNCS comparison");
  add_common(m);
  CLI::App* p = app.add_subcommand("polycrystal", "uniform vs adaptive polycrystal growth");
  add_common(p);
  p->add_flag("--long", o.long_run, "also run the long adaptive leg with snapshots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (k->parsed()) return kernels(resolve(pfc::Experiment::Kernels, o), o);
    if (c->parsed()) return convergence(resolve(pfc::Experiment::Convergence, o));
    if (m->parsed()) return compare(resolve(pfc::Experiment::Compare, o));
    return polycrystal(resolve(pfc::Experiment::Polycrystal, o));
  } catch (const pfc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const pfc::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const pfc::ConditioningError& e) {
    std::cerr << "solver failure: " << e.what() << "; try a smaller time step\n";
    return kExitSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}
