// Experiment driver: run, compare and validate declarative experiment
// configs, and print the theoretical stepsize bounds.
//
// Exit codes: 0 success or tolerance reached, 2 divergence, 3 config error,
// 4 I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "decopt/config.hpp"
#include "decopt/errors.hpp"
#include "decopt/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDivergence = 2;
constexpr int kExitConfig = 3;
constexpr int kExitIo = 4;

void print_summary(const decopt::RunResult& r) {
  const decopt::MetricRow& last = r.trace.rows.back();
  std::printf("termination: %s\n", decopt::termination_name(r.termination).c_str());
  std::printf("rounds: %ld\n", r.rounds);
  std::printf("alpha: %.12g\n", r.alpha_used);
  std::printf("sigma: %.12g  edges: %lld  L: %.12g  mu: %.12g\n", r.sigma, r.edges, r.L, r.mu);
  if (!std::isnan(last.optimality_error)) {
    std::printf("final optimality_error: %.12g\n", last.optimality_error);
  }
  if (!std::isnan(last.relative_error)) {
    std::printf("final relative_error: %.12g\n", last.relative_error);
  }
  std::printf("communication volume: %lld\n", last.comm_volume);
  if (r.verification) {
    std::printf("--- verification ---\n%s", r.verification->to_text().c_str());
  }
}

int run_command(const std::string& config_path) {
  const decopt::ExperimentConfig cfg = decopt::load_config_file(config_path);
  const decopt::RunResult result = decopt::run(cfg);
  print_summary(result);
  return result.termination == decopt::Termination::divergence ? kExitDivergence : kExitOk;
}

int compare_command(const std::vector<std::string>& config_paths) {
  std::vector<decopt::ExperimentConfig> configs;
  configs.reserve(config_paths.size());
  for (const std::string& path : config_paths) {
    configs.push_back(decopt::load_config_file(path));
  }
  const decopt::ComparisonTable table = decopt::compare(configs);
  std::fputs(table.to_text().c_str(), stdout);
  return kExitOk;
}

int validate_command(const std::string& config_path) {
  decopt::load_config_file(config_path);
  std::printf("%s: ok\n", config_path.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized consensus optimization simulator"};
  app.require_subcommand(1);

  std::string run_config;
  CLI::App* run_cmd = app.add_subcommand("run", "execute one experiment config");
  run_cmd->add_option("config", run_config, "config file")->required();

  std::vector<std::string> compare_configs;
  CLI::App* compare_cmd = app.add_subcommand("compare", "run several configs on one problem");
  compare_cmd->add_option("configs", compare_configs, "config files")->required()->expected(-2);

  std::string validate_config;
  CLI::App* validate_cmd = app.add_subcommand("validate", "check a config file");
  validate_cmd->add_option("config", validate_config, "config file")->required();

  std::string bound_algo;
  double bound_L = 0.0, bound_mu = 0.0, bound_sigma = 0.0, bound_l = 1e-4, bound_u = 1e4;
  int bound_n = 1;
  CLI::App* bound_cmd = app.add_subcommand("bound", "print the theoretical stepsize bound");
  bound_cmd->add_option("algo", bound_algo, "ndcg or dmbfgs")->required();
  bound_cmd->add_option("--L", bound_L, "Lipschitz gradient constant")->required();
  bound_cmd->add_option("--mu", bound_mu, "strong convexity modulus (dmbfgs)");
  bound_cmd->add_option("--sigma", bound_sigma, "mixing matrix spectral gap")->required();
  bound_cmd->add_option("--n", bound_n, "node count (ndcg)");
  bound_cmd->add_option("--l", bound_l, "eigenvalue window lower bound (dmbfgs)");
  bound_cmd->add_option("--u", bound_u, "eigenvalue window upper bound (dmbfgs)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run_cmd) return run_command(run_config);
    if (*compare_cmd) return compare_command(compare_configs);
    if (*validate_cmd) return validate_command(validate_config);
    if (*bound_cmd) {
      double bound = 0.0;
      if (bound_algo == "ndcg") {
        bound = decopt::ndcg_stepsize_bound(bound_L, bound_sigma, bound_n);
      } else if (bound_algo == "dmbfgs") {
        bound = decopt::dmbfgs_stepsize_bound(bound_L, bound_mu, bound_sigma, bound_l, bound_u);
      } else {
        throw decopt::config_error("bound: algorithm must be ndcg or dmbfgs");
      }
      std::printf("%.12g\n", bound);
      return kExitOk;
    }
  } catch (const decopt::io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const decopt::parse_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const decopt::config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
