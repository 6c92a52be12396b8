#include "pfc/time_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "pfc/error.hpp"
#include "pfc/rng.hpp"

namespace pfc {

TimeMesh::TimeMesh(std::vector<double> steps) : steps_(std::move(steps)) {
  if (steps_.empty()) throw ArgumentError("time mesh needs at least one step");
  times_.resize(steps_.size());
  ratios_.resize(steps_.size());
  double t = 0.0;
  for (std::size_t k = 0; k < steps_.size(); ++k) {
    if (!(steps_[k] > 0.0) || !std::isfinite(steps_[k])) {
      throw ArgumentError("time step " + std::to_string(k + 1) + " is not positive");
    }
    t += steps_[k];
    times_[k] = t;
    ratios_[k] = k == 0 ? 0.0 : steps_[k] / steps_[k - 1];
  }
}

TimeMesh TimeMesh::uniform(int N, double T) {
  if (N < 1 || !(T > 0.0)) throw ArgumentError("uniform mesh needs N >= 1 and T > 0");
  return TimeMesh(std::vector<double>(static_cast<std::size_t>(N), T / N));
}

TimeMesh TimeMesh::from_ratios(std::span<const double> ratios, double T) {
  if (!(T > 0.0)) throw ArgumentError("mesh horizon must be positive");
  std::vector<double> steps(ratios.size() + 1);
  steps[0] = 1.0;
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    if (!(ratios[k] > 0.0)) throw ArgumentError("step ratios must be positive");
    steps[k + 1] = steps[k] * ratios[k];
  }
  const double total = std::accumulate(steps.begin(), steps.end(), 0.0);
  for (double& s : steps) s *= T / total;
  return TimeMesh(std::move(steps));
}

double TimeMesh::max_step() const { return *std::max_element(steps_.begin(), steps_.end()); }
double TimeMesh::max_ratio() const { return *std::max_element(ratios_.begin(), ratios_.end()); }

TimeMesh random_mesh(int N, double T, std::uint64_t seed) {
  if (N < 1) throw ArgumentError("random mesh needs N >= 1");
  if (!(T > 0.0)) throw ArgumentError("random mesh needs T > 0");
  SplitMix64 rng(seed);
  std::vector<double> sigma(static_cast<std::size_t>(N));
  for (double& s : sigma) s = rng.uniform();
  const double S = std::accumulate(sigma.begin(), sigma.end(), 0.0);
  for (double& s : sigma) s = T * s / S;
  return TimeMesh(std::move(sigma));
}

TimeMesh random_ratio_mesh(int N, double T, double r_lo, double r_hi,
                           std::uint64_t seed) {
  if (N < 1) throw ArgumentError("random mesh needs N >= 1");
  if (!(r_lo > 0.0) || !(r_hi >= r_lo)) throw ArgumentError("invalid ratio range");
  SplitMix64 rng(seed);
  std::vector<double> ratios(static_cast<std::size_t>(N - 1));
  for (double& r : ratios) r = rng.uniform(r_lo, r_hi);
  return TimeMesh::from_ratios(ratios, T);
}

double ratio_function(double z, double s) {
  if (!(z >= 0.0 && z < kRatioSup && s >= 0.0 && s < kRatioSup)) {
    std::ostringstream os;
    os << "R(z, s) needs 0 <= z, s < (3+sqrt(17))/2, got z=" << z << " s=" << s;
    throw DomainError(os.str());
  }
  return (2.0 + 4.0 * z - z * z) / (1.0 + z) - s / (1.0 + s);
}

double restriction_bound(double r_n, double r_next, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError("restriction check needs 0 < epsilon < 1");
  }
  if (!(r_n >= 0.0 && r_n < kRatioSup && r_next >= 0.0 && r_next < kRatioSup)) {
    return 0.0;
  }
  const double solvable = (1.0 + 2.0 * r_n) / (1.0 + r_n);
  return 2.0 / (3.0 * epsilon) * std::min(solvable, ratio_function(r_n, r_next));
}

std::vector<int> check_restriction(const TimeMesh& mesh, double epsilon,
                                   double lookahead) {
  std::vector<int> flagged;
  const int N = mesh.size();
  for (int n = 1; n <= N; ++n) {
    const double next = n < N ? mesh.ratio(n + 1) : lookahead;
    if (mesh.tau(n) > restriction_bound(mesh.ratio(n), next, epsilon)) flagged.push_back(n);
  }
  return flagged;
}

MeshReport analyze(const TimeMesh& mesh, std::optional<double> epsilon) {
  MeshReport report;
  report.max_step = mesh.max_step();
  report.max_ratio = mesh.max_ratio();
  for (int k = 2; k <= mesh.size(); ++k) {
    const double r = mesh.ratio(k);
    if (r >= kRatioSup) {
      report.s1_violations.push_back(k);
    } else if (r >= kRatioZeroStable) {
      ++report.s2_count;
    }
  }
  if (epsilon) report.restriction_violations = check_restriction(mesh, *epsilon);
  return report;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

}  // namespace

TimeMesh parse_mesh_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("mesh spec must look like uniform:N,T or random:N,T,seed, got '" + spec + "'");
  }
  const std::string kind = spec.substr(0, colon);
  const auto args = split(spec.substr(colon + 1), ',');
  try {
    if (kind == "uniform" && args.size() == 2) {
      return TimeMesh::uniform(std::stoi(args[0]), std::stod(args[1]));
    }
    if (kind == "random" && args.size() == 3) {
      return random_mesh(std::stoi(args[0]), std::stod(args[1]), std::stoull(args[2]));
    }
  } catch (const std::logic_error& e) {
    throw ConfigError("bad mesh spec '" + spec + "': " + e.what());
  }
  throw ConfigError("unknown mesh spec '" + spec + "'");
}

TimeMesh read_mesh_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file: " + path.string());
  std::vector<double> steps;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      steps.push_back(std::stod(line));
    } catch (const std::logic_error&) {
      throw ConfigError("mesh file line is not a number: '" + line + "'");
    }
  }
  try {
    return TimeMesh(std::move(steps));
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("invalid mesh file: ") + e.what());
  }
}

void write_mesh_file(const std::filesystem::path& path, std::span<const double> steps) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write mesh file: " + path.string());
  out << std::setprecision(17);
  for (double s : steps) out << s << '\n';
}

}  // namespace pfc
