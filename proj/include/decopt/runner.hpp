#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "decopt/analysis.hpp"
#include "decopt/config.hpp"

namespace decopt {

enum class Termination { budget, tolerance, divergence };

// Empirical verification of the theoretical quantities, collected while a
// run is in flight (check_theory flag). Fields are present only when the
// algorithm/problem combination defines them.
struct VerificationReport {
  std::optional<double> max_tracking_deviation;
  std::optional<double> potential_nonincreasing_fraction;
  std::optional<double> potential_max_increase;
  std::optional<double> min_stationarity;        // min over rounds of |vt|^2 + |x-Mx|^2
  std::optional<double> cone_fraction;           // descent-cone inequalities satisfied
  std::optional<double> xi_limit;                // bound c of the xi recursion
  std::optional<double> contraction_fraction;    // rounds with u_{t+1} <= J u_t
  std::optional<double> contraction_rho;
  std::optional<double> contraction_mean_decay;

  std::string to_text() const;
};

struct RunResult {
  MetricTrace trace;
  Termination termination = Termination::budget;
  long rounds = 0;
  double alpha_used = 0.0;
  double sigma = 0.0;
  long long edges = 0;
  double L = 0.0;
  double mu = 0.0;
  std::optional<VerificationReport> verification;
};

/// Build topology, problem and algorithm from a config, run synchronous
/// rounds to the budget or tolerance, flush the trace when an output path
/// is set. Deterministic for a fixed seed.
RunResult run(const ExperimentConfig& cfg);

struct ComparisonRow {
  std::string algorithm;
  double alpha = 0.0;
  long rounds = 0;
  double final_optimality = 0.0;
  double final_relative = std::numeric_limits<double>::quiet_NaN();
  long long comm_volume = 0;
  Termination termination = Termination::budget;
  bool selected = false;  // best stepsize among this config's grid
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::string to_text() const;
};

/// Run several configs that share the same problem, network and seed;
/// per-config stepsize grids are swept and the best final error marked.
ComparisonTable compare(const std::vector<ExperimentConfig>& configs);

std::string termination_name(Termination t);

}  // namespace decopt
