#include "decopt/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "decopt/datasets.hpp"
#include "decopt/topology.hpp"

namespace decopt {

namespace {

struct BuiltExperiment {
  Graph graph;
  MixingMatrix mixing;
  Problem problem;
  SmoothnessConstants constants;
  std::optional<SolutionCertificate> certificate;
};

BuiltExperiment build(const ExperimentConfig& cfg) {
  BuiltExperiment built;
  built.graph = generate_connected_graph(cfg.n, cfg.density, cfg.seed);
  built.mixing = metropolis_weights(built.graph);
  if (cfg.problem.kind == ProblemSpec::Kind::synthetic) {
    built.problem = synth_quadratic(cfg.problem.p, cfg.problem.kappa, cfg.n,
                                    derive_seed(cfg.seed, 1));
  } else {
    std::ifstream in(cfg.problem.path);
    if (!in) throw io_error("cannot open dataset " + cfg.problem.path);
    const SampleSet samples = parse_libsvm(in);
    built.problem = make_logistic_problem(partition(samples, cfg.n), cfg.problem.regularizer,
                                          cfg.problem.lambda_hat);
  }
  built.constants = smoothness_constants(built.problem);
  if (cfg.compute_z_star) {
    built.certificate = true_solution(built.problem);
  }
  return built;
}

double resolve_alpha(const ExperimentConfig& cfg, const BuiltExperiment& built) {
  if (!cfg.auto_alpha) {
    if (!(cfg.params.alpha > 0.0)) {
      throw config_error("run: algorithm.alpha is required (or set auto_alpha)");
    }
    return cfg.params.alpha;
  }
  if (cfg.algorithm == AlgorithmId::ndcg) {
    return ndcg_stepsize_bound(built.constants.L, built.mixing.sigma, cfg.n);
  }
  if (cfg.algorithm == AlgorithmId::dmbfgs) {
    if (!(built.constants.mu > 0.0)) {
      throw config_error("run: auto_alpha for dmbfgs requires a strongly convex problem");
    }
    return dmbfgs_stepsize_bound(built.constants.L, built.constants.mu, built.mixing.sigma,
                                 cfg.params.l, cfg.params.u);
  }
  throw config_error("run: auto_alpha is only available for ndcg and dmbfgs");
}

bool wants(const ExperimentConfig& cfg, const char* metric) {
  return std::find(cfg.metrics.begin(), cfg.metrics.end(), metric) != cfg.metrics.end();
}

std::string resolve_output_path(const std::string& output) {
  const char* dir = std::getenv("DECOPT_OUTPUT_DIR");
  if (dir && *dir && !output.empty() && output.front() != '/') {
    return std::string(dir) + "/" + output;
  }
  return output;
}

bool has_tracker(AlgorithmId id) {
  return id == AlgorithmId::gt || id == AlgorithmId::abm || id == AlgorithmId::ndcg ||
         id == AlgorithmId::dmbfgs;
}

// Accumulates the theory-verification quantities round by round.
class TheoryCollector {
 public:
  TheoryCollector(const ExperimentConfig& cfg, const BuiltExperiment& built, double alpha,
                  long max_iters)
      : cfg_(cfg), built_(built), alpha_(alpha) {
    if (!cfg.check_theory) return;
    enabled_ = true;
    if (cfg_.algorithm == AlgorithmId::ndcg &&
        4.0 * built_.constants.L * alpha_ <= 1.0 + 1e-12) {
      xi_ = xi_sequence(built_.constants.L, alpha_, max_iters);
    }
    if (cfg_.algorithm == AlgorithmId::dmbfgs && built_.certificate &&
        built_.constants.mu > 0.0) {
      const auto [psi, Psi] = quasi_newton_envelope(built_.constants.L, built_.constants.mu,
                                                    cfg_.params.l, cfg_.params.u);
      contraction_ = contraction_matrix(alpha_, built_.constants.L, built_.constants.mu,
                                        built_.mixing.sigma, psi, Psi);
    }
  }

  void observe(const NodeStates& s) {
    if (!enabled_) return;
    if (has_tracker(cfg_.algorithm)) {
      const Eigen::VectorXd mean_v = s.v.colwise().mean().transpose();
      const Eigen::VectorXd mean_g = s.g.colwise().mean().transpose();
      const double deviation = (mean_v - mean_g).norm() / (1.0 + mean_g.norm());
      max_tracking_ = std::max(max_tracking_, deviation);
      const double p = potential(s.x, s.v, alpha_, built_.problem, built_.mixing.W);
      if (have_potential_) {
        ++potential_rounds_;
        if (p <= last_potential_ + 1e-9 * (1.0 + std::abs(last_potential_))) {
          ++potential_ok_;
        }
        potential_max_increase_ = std::max(potential_max_increase_, p - last_potential_);
      }
      last_potential_ = p;
      have_potential_ = true;
    }
    if (cfg_.algorithm == AlgorithmId::ndcg) {
      const double stationarity =
          s.vt.squaredNorm() + (s.x - block_average(s.x)).squaredNorm();
      min_stationarity_ = std::min(min_stationarity_, stationarity);
      if (xi_ && s.t < static_cast<long>(xi_->xi.size())) {
        const double xi_t = xi_->xi[s.t];
        for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
          const double vt2 = s.vt.row(i).squaredNorm();
          const double vtd = -s.vt.row(i).dot(s.d.row(i));
          const double dn = s.d.row(i).norm();
          const double vtn = std::sqrt(vt2);
          const double slack = 1e-9 * (1.0 + vt2);
          ++cone_total_;
          if ((2.0 - xi_t) * vt2 <= vtd + slack && vtd <= xi_t * vt2 + slack &&
              (2.0 - xi_t) * vtn <= dn + slack && dn <= xi_t * vtn + slack) {
            ++cone_ok_;
          }
        }
      }
    }
    if (contraction_) {
      errors_.push_back(
          error_vector(s.x, s.v, built_.problem, built_.certificate->z_star));
    }
  }

  std::optional<VerificationReport> report() const {
    if (!enabled_) return std::nullopt;
    VerificationReport r;
    if (has_tracker(cfg_.algorithm)) {
      r.max_tracking_deviation = max_tracking_;
      if (potential_rounds_ > 0) {
        r.potential_nonincreasing_fraction =
            static_cast<double>(potential_ok_) / potential_rounds_;
        r.potential_max_increase = potential_max_increase_;
      }
    }
    if (cfg_.algorithm == AlgorithmId::ndcg) {
      r.min_stationarity = min_stationarity_;
      if (xi_) {
        r.xi_limit = xi_->c;
        if (cone_total_ > 0) {
          r.cone_fraction = static_cast<double>(cone_ok_) / cone_total_;
        }
      }
    }
    if (contraction_ && errors_.size() >= 2) {
      const ContractionReport cr = check_contraction(errors_, *contraction_);
      r.contraction_fraction = cr.fraction;
      r.contraction_rho = contraction_->rho;
      r.contraction_mean_decay = cr.mean_decay;
    }
    return r;
  }

 private:
  const ExperimentConfig& cfg_;
  const BuiltExperiment& built_;
  double alpha_ = 0.0;
  bool enabled_ = false;
  double max_tracking_ = 0.0;
  bool have_potential_ = false;
  double last_potential_ = 0.0;
  long potential_rounds_ = 0;
  long potential_ok_ = 0;
  double potential_max_increase_ = 0.0;
  double min_stationarity_ = std::numeric_limits<double>::infinity();
  std::optional<XiSequence> xi_;
  long cone_ok_ = 0;
  long cone_total_ = 0;
  std::optional<ContractionSpec> contraction_;
  std::vector<Eigen::Vector3d> errors_;
};

}  // namespace

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::budget: return "budget";
    case Termination::tolerance: return "tolerance";
    case Termination::divergence: return "divergence";
  }
  return "?";
}

RunResult run(const ExperimentConfig& cfg) {
  const BuiltExperiment built = build(cfg);
  const double alpha = resolve_alpha(cfg, built);
  AlgoParams params = cfg.params;
  params.alpha = alpha;

  const int p = dimension(built.problem);
  const int rounds_per_iter = communication_rounds_per_iteration(cfg.algorithm);
  const Eigen::MatrixXd x0 = Eigen::MatrixXd::Constant(cfg.n, p, cfg.x0);
  NodeStates states = init(cfg.algorithm, x0, built.problem, built.mixing.W, params);

  RunResult result;
  result.alpha_used = alpha;
  result.sigma = built.mixing.sigma;
  result.edges = static_cast<long long>(built.graph.edge_count());
  result.L = built.constants.L;
  result.mu = built.constants.mu;

  TheoryCollector theory(cfg, built, alpha, cfg.max_iters);
  const auto start = std::chrono::steady_clock::now();

  auto record = [&](const NodeStates& s) {
    MetricRow row;
    row.iter = s.t;
    row.comm_volume = communication_volume(s.t, rounds_per_iter, result.edges, p);
    if (wants(cfg, "optimality_error")) {
      row.optimality_error = optimality_error(s.x, built.problem);
    }
    if (wants(cfg, "consensus_error")) row.consensus_error = consensus_error(s.x);
    if (has_tracker(cfg.algorithm)) {
      if (wants(cfg, "tracking_error")) row.tracking_error = consensus_error(s.v);
      if (wants(cfg, "potential")) {
        row.potential = potential(s.x, s.v, alpha, built.problem, built.mixing.W);
      }
    }
    if (built.certificate) {
      if (wants(cfg, "relative_error")) {
        row.relative_error = relative_error(s.x, built.certificate->z_star);
      }
      if (wants(cfg, "objective_gap")) {
        const Eigen::VectorXd xbar = s.x.colwise().mean().transpose();
        row.objective_gap = cfg.n * (global_value(built.problem, xbar) -
                                     global_value(built.problem, built.certificate->z_star));
      }
    }
    if (wants(cfg, "wall_s")) {
      row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    result.trace.rows.push_back(row);
    return row;
  };

  auto hit_tolerance = [&](const MetricRow& row) {
    if (cfg.tol_optimality) {
      const double err = std::isnan(row.optimality_error)
                             ? optimality_error(states.x, built.problem)
                             : row.optimality_error;
      if (err <= *cfg.tol_optimality) return true;
    }
    if (cfg.tol_relative && built.certificate) {
      const double err = std::isnan(row.relative_error)
                             ? relative_error(states.x, built.certificate->z_star)
                             : row.relative_error;
      if (err <= *cfg.tol_relative) return true;
    }
    return false;
  };

  theory.observe(states);
  MetricRow row = record(states);
  result.termination = Termination::budget;
  if (hit_tolerance(row)) {
    result.termination = Termination::tolerance;
  } else {
    for (long t = 0; t < cfg.max_iters; ++t) {
      try {
        step(cfg.algorithm, states, built.problem, built.mixing.W, params);
      } catch (const divergence_error&) {
        result.termination = Termination::divergence;
        break;
      }
      theory.observe(states);
      row = record(states);
      if (hit_tolerance(row)) {
        result.termination = Termination::tolerance;
        break;
      }
    }
  }
  result.rounds = states.t;
  result.verification = theory.report();

  if (!cfg.output.empty()) {
    const std::string path = resolve_output_path(cfg.output);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open output file " + path);
    result.trace.write_csv(out);
    if (!out) throw io_error("failed writing trace to " + path);
  }
  return result;
}

ComparisonTable compare(const std::vector<ExperimentConfig>& configs) {
  if (configs.size() < 2) throw config_error("compare: need at least two configs");
  for (std::size_t k = 1; k < configs.size(); ++k) {
    if (!(configs[k].problem == configs[0].problem) || configs[k].n != configs[0].n ||
        configs[k].density != configs[0].density || configs[k].seed != configs[0].seed) {
      throw config_error("compare: configs must share problem, network and seed");
    }
  }
  ComparisonTable table;
  for (const ExperimentConfig& cfg : configs) {
    std::vector<double> grid = cfg.alpha_grid;
    if (grid.empty()) grid.push_back(cfg.params.alpha);  // may be 0 with auto_alpha
    double best_error = std::numeric_limits<double>::infinity();
    std::size_t best_index = table.rows.size();
    for (double alpha : grid) {
      ExperimentConfig single = cfg;
      single.alpha_grid.clear();
      if (alpha > 0.0) {
        single.params.alpha = alpha;
        single.auto_alpha = false;
      }
      const RunResult r = run(single);
      ComparisonRow row;
      row.algorithm = algorithm_name(cfg.algorithm);
      row.alpha = r.alpha_used;
      row.rounds = r.rounds;
      row.termination = r.termination;
      const MetricRow& last = r.trace.rows.back();
      row.final_optimality = std::isnan(last.optimality_error) ? 0.0 : last.optimality_error;
      row.final_relative = last.relative_error;
      row.comm_volume = last.comm_volume;
      const double score = r.termination == Termination::divergence
                               ? std::numeric_limits<double>::infinity()
                               : (std::isnan(row.final_relative) ? row.final_optimality
                                                                 : row.final_relative);
      if (score < best_error) {
        best_error = score;
        best_index = table.rows.size();
      }
      table.rows.push_back(row);
    }
    table.rows[best_index].selected = true;
  }
  return table;
}

std::string VerificationReport::to_text() const {
  std::ostringstream os;
  auto line = [&](const char* name, const std::optional<double>& value) {
    if (value) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.12g", *value);
      os << name << ": " << buf << '\n';
    }
  };
  line("max_tracking_deviation", max_tracking_deviation);
  line("potential_nonincreasing_fraction", potential_nonincreasing_fraction);
  line("potential_max_increase", potential_max_increase);
  line("min_stationarity", min_stationarity);
  line("cone_fraction", cone_fraction);
  line("xi_limit", xi_limit);
  line("contraction_fraction", contraction_fraction);
  line("contraction_rho", contraction_rho);
  line("contraction_mean_decay", contraction_mean_decay);
  return os.str();
}

std::string ComparisonTable::to_text() const {
  std::ostringstream os;
  os << "algorithm      alpha        rounds   final_optimality  final_relative    comm_volume  termination  selected\n";
  for (const ComparisonRow& r : rows) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-12s %12.6g %8ld %17.8g %15.8g %14lld  %-11s %s\n",
                  r.algorithm.c_str(), r.alpha, r.rounds, r.final_optimality,
                  r.final_relative, r.comm_volume, termination_name(r.termination).c_str(),
                  r.selected ? "*" : "");
    os << buf;
  }
  return os.str();
}

}  // namespace decopt
