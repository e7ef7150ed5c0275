#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "decopt/algorithms.hpp"
#include "decopt/problems.hpp"

namespace decopt {

struct ProblemSpec {
  enum class Kind { synthetic, libsvm };
  Kind kind = Kind::synthetic;
  // synthetic quadratic
  int p = 0;
  double kappa = 1.0;
  // libsvm
  std::string path;
  Regularizer regularizer = Regularizer::L2;
  double lambda_hat = 1.0;

  bool operator==(const ProblemSpec&) const = default;
};

// Declarative description of one experiment. Parsed from a sectioned
// key-value text document; unknown keys are rejected.
struct ExperimentConfig {
  AlgorithmId algorithm = AlgorithmId::dgd;
  AlgoParams params;
  bool auto_alpha = false;            // derive the stepsize from the theoretical bound
  std::vector<double> alpha_grid;     // candidate stepsizes for `compare`

  ProblemSpec problem;

  int n = 0;
  double density = 1.0;

  std::uint64_t seed = 0;
  long max_iters = 0;
  std::optional<double> tol_optimality;
  std::optional<double> tol_relative;
  std::vector<std::string> metrics;   // resolved; defaults exclude wall_s
  std::string output;                 // empty: trace kept in memory only
  bool compute_z_star = false;
  bool check_theory = false;
  double x0 = 0.0;                    // constant fill for the initial block
};

ExperimentConfig load_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);

const std::vector<std::string>& known_metrics();

std::string algorithm_name(AlgorithmId id);

}  // namespace decopt
