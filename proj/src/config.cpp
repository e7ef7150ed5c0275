#include "decopt/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "decopt/errors.hpp"

namespace decopt {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

struct RawConfig {
  // section -> key -> value, plus the line each key appeared on
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::map<std::string, std::size_t> key_lines;
};

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"algorithm",
       {"id", "alpha", "auto_alpha", "alpha_grid", "beta_fixed", "cg_variant", "l", "u",
        "gt_flavor"}},
      {"problem", {"kind", "p", "kappa", "path", "regularizer", "lambda_hat"}},
      {"network", {"n", "density"}},
      {"run",
       {"seed", "max_iters", "tol_optimality", "tol_relative", "metrics", "output",
        "compute_z_star", "check_theory", "x0"}},
  };
  return keys;
}

RawConfig read_raw(std::istream& in) {
  RawConfig raw;
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw parse_error(line_no, "unterminated section header");
      section = trim(text.substr(1, text.size() - 2));
      if (!known_keys().count(section)) {
        throw parse_error(line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos) throw parse_error(line_no, "expected key = value");
    if (section.empty()) throw parse_error(line_no, "key outside of any section");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw parse_error(line_no, "empty key");
    const std::string path = section + "." + key;
    if (!known_keys().at(section).count(key)) {
      throw config_error("unknown key " + path);
    }
    if (raw.sections[section].count(key)) {
      throw parse_error(line_no, "duplicate key " + path);
    }
    raw.sections[section][key] = value;
    raw.key_lines[path] = line_no;
  }
  return raw;
}

// Typed accessors over one section; unknown keys were already rejected
// while reading.
class SectionReader {
 public:
  SectionReader(const RawConfig& raw, std::string section)
      : raw_(raw), section_(std::move(section)) {
    auto it = raw_.sections.find(section_);
    if (it != raw_.sections.end()) entries_ = &it->second;
  }

  bool has(const std::string& key) const { return entries_ && entries_->count(key); }

  std::string require(const std::string& key) {
    if (!has(key)) throw config_error("missing required key " + path(key));
    return entries_->at(key);
  }

  std::optional<std::string> optional(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return entries_->at(key);
  }

  double require_double(const std::string& key) { return to_double(key, require(key)); }

  std::optional<double> optional_double(const std::string& key) {
    auto v = optional(key);
    if (!v) return std::nullopt;
    return to_double(key, *v);
  }

  long require_long(const std::string& key) { return to_long(key, require(key)); }

  std::optional<long> optional_long(const std::string& key) {
    auto v = optional(key);
    if (!v) return std::nullopt;
    return to_long(key, *v);
  }

  std::optional<bool> optional_bool(const std::string& key) {
    auto v = optional(key);
    if (!v) return std::nullopt;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw config_error("key " + path(key) + ": expected true or false, got \"" + *v + "\"");
  }

  std::string path(const std::string& key) const { return section_ + "." + key; }

  double to_double(const std::string& key, const std::string& value) const {
    try {
      std::size_t used = 0;
      const double parsed = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return parsed;
    } catch (const std::exception&) {
      throw config_error("key " + path(key) + ": expected a number, got \"" + value + "\"");
    }
  }

  long to_long(const std::string& key, const std::string& value) const {
    try {
      std::size_t used = 0;
      const long parsed = std::stol(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return parsed;
    } catch (const std::exception&) {
      throw config_error("key " + path(key) + ": expected an integer, got \"" + value + "\"");
    }
  }

 private:
  const RawConfig& raw_;
  std::string section_;
  const std::map<std::string, std::string>* entries_ = nullptr;
};

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::istringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

AlgorithmId parse_algorithm(const std::string& name, const std::string& key_path) {
  if (name == "dgd") return AlgorithmId::dgd;
  if (name == "gt") return AlgorithmId::gt;
  if (name == "abm") return AlgorithmId::abm;
  if (name == "sdcg") return AlgorithmId::sdcg;
  if (name == "ndcg") return AlgorithmId::ndcg;
  if (name == "dmbfgs") return AlgorithmId::dmbfgs;
  throw config_error("key " + key_path + ": unknown algorithm \"" + name + "\"");
}

}  // namespace

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> metrics = {
      "optimality_error", "relative_error", "consensus_error", "tracking_error",
      "potential",        "objective_gap",  "wall_s"};
  return metrics;
}

std::string algorithm_name(AlgorithmId id) {
  switch (id) {
    case AlgorithmId::dgd: return "dgd";
    case AlgorithmId::gt: return "gt";
    case AlgorithmId::abm: return "abm";
    case AlgorithmId::sdcg: return "sdcg";
    case AlgorithmId::ndcg: return "ndcg";
    case AlgorithmId::dmbfgs: return "dmbfgs";
  }
  return "?";
}

ExperimentConfig load_config(std::istream& in) {
  const RawConfig raw = read_raw(in);
  ExperimentConfig cfg;

  SectionReader algorithm(raw, "algorithm");
  cfg.algorithm = parse_algorithm(algorithm.require("id"), "algorithm.id");
  cfg.auto_alpha = algorithm.optional_bool("auto_alpha").value_or(false);
  if (auto alpha = algorithm.optional_double("alpha")) {
    if (!(*alpha > 0.0)) throw config_error("key algorithm.alpha: must be positive");
    cfg.params.alpha = *alpha;
  }
  if (auto grid = algorithm.optional("alpha_grid")) {
    for (const std::string& item : split_list(*grid)) {
      const double a = algorithm.to_double("alpha_grid", item);
      if (!(a > 0.0)) throw config_error("key algorithm.alpha_grid: entries must be positive");
      cfg.alpha_grid.push_back(a);
    }
    if (cfg.alpha_grid.empty()) throw config_error("key algorithm.alpha_grid: empty list");
  }
  if (cfg.params.alpha == 0.0 && !cfg.auto_alpha && cfg.alpha_grid.empty()) {
    throw config_error("algorithm.alpha is required unless auto_alpha or alpha_grid is set");
  }
  if (auto beta = algorithm.optional_double("beta_fixed")) {
    if (cfg.algorithm != AlgorithmId::abm) {
      throw config_error("key algorithm.beta_fixed: only valid for abm");
    }
    cfg.params.beta_fixed = *beta;
  }
  if (auto variant = algorithm.optional("cg_variant")) {
    if (cfg.algorithm != AlgorithmId::sdcg) {
      throw config_error("key algorithm.cg_variant: only valid for sdcg");
    }
    if (*variant == "FR") cfg.params.cg_variant = CgVariant::FR;
    else if (*variant == "PRP") cfg.params.cg_variant = CgVariant::PRP;
    else if (*variant == "HS") cfg.params.cg_variant = CgVariant::HS;
    else if (*variant == "DY") cfg.params.cg_variant = CgVariant::DY;
    else throw config_error("key algorithm.cg_variant: expected FR, PRP, HS or DY");
  }
  if (auto l = algorithm.optional_double("l")) cfg.params.l = *l;
  if (auto u = algorithm.optional_double("u")) cfg.params.u = *u;
  if (!(cfg.params.l > 0.0) || !(cfg.params.l < cfg.params.u)) {
    throw config_error("algorithm.l and algorithm.u must satisfy 0 < l < u");
  }
  if (auto flavor = algorithm.optional("gt_flavor")) {
    if (cfg.algorithm != AlgorithmId::gt) {
      throw config_error("key algorithm.gt_flavor: only valid for gt");
    }
    if (*flavor == "ATC") cfg.params.gt_flavor = GtFlavor::ATC;
    else if (*flavor == "SEMI_ATC") cfg.params.gt_flavor = GtFlavor::SEMI_ATC;
    else throw config_error("key algorithm.gt_flavor: expected ATC or SEMI_ATC");
  }

  SectionReader problem(raw, "problem");
  const std::string kind = problem.require("kind");
  if (kind == "synthetic") {
    cfg.problem.kind = ProblemSpec::Kind::synthetic;
    const long p = problem.require_long("p");
    if (p < 2) throw config_error("key problem.p: must be >= 2");
    cfg.problem.p = static_cast<int>(p);
    cfg.problem.kappa = problem.require_double("kappa");
    if (!(cfg.problem.kappa >= 1.0)) throw config_error("key problem.kappa: must be >= 1");
    if (problem.has("path") || problem.has("regularizer") || problem.has("lambda_hat")) {
      throw config_error("problem: libsvm keys are not valid for kind = synthetic");
    }
  } else if (kind == "libsvm") {
    cfg.problem.kind = ProblemSpec::Kind::libsvm;
    cfg.problem.path = problem.require("path");
    const std::string reg = problem.require("regularizer");
    if (reg == "l2") cfg.problem.regularizer = Regularizer::L2;
    else if (reg == "nonconvex") cfg.problem.regularizer = Regularizer::Nonconvex;
    else throw config_error("key problem.regularizer: expected l2 or nonconvex");
    cfg.problem.lambda_hat = problem.require_double("lambda_hat");
    if (!(cfg.problem.lambda_hat > 0.0)) {
      throw config_error("key problem.lambda_hat: must be positive");
    }
    if (problem.has("p") || problem.has("kappa")) {
      throw config_error("problem: synthetic keys are not valid for kind = libsvm");
    }
  } else {
    throw config_error("key problem.kind: expected synthetic or libsvm");
  }

  SectionReader network(raw, "network");
  const long n = network.require_long("n");
  if (n < 1) throw config_error("key network.n: must be >= 1");
  cfg.n = static_cast<int>(n);
  cfg.density = network.require_double("density");
  if (!(cfg.density > 0.0) || cfg.density > 1.0) {
    throw config_error("key network.density: must lie in (0, 1]");
  }

  SectionReader run(raw, "run");
  const long seed = run.require_long("seed");
  if (seed < 0) throw config_error("key run.seed: must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.max_iters = run.require_long("max_iters");
  if (cfg.max_iters < 1) throw config_error("key run.max_iters: must be >= 1");
  cfg.tol_optimality = run.optional_double("tol_optimality");
  if (cfg.tol_optimality && !(*cfg.tol_optimality > 0.0)) {
    throw config_error("key run.tol_optimality: must be positive");
  }
  cfg.tol_relative = run.optional_double("tol_relative");
  if (cfg.tol_relative && !(*cfg.tol_relative > 0.0)) {
    throw config_error("key run.tol_relative: must be positive");
  }
  if (auto metrics = run.optional("metrics")) {
    cfg.metrics = split_list(*metrics);
    for (const std::string& name : cfg.metrics) {
      const auto& known = known_metrics();
      if (std::find(known.begin(), known.end(), name) == known.end()) {
        throw config_error("key run.metrics: unknown metric \"" + name + "\"");
      }
    }
  } else {
    // wall-clock is opt-in so that default traces stay byte-reproducible
    for (const std::string& name : known_metrics()) {
      if (name != "wall_s") cfg.metrics.push_back(name);
    }
  }
  cfg.output = run.optional("output").value_or("");
  cfg.compute_z_star = run.optional_bool("compute_z_star").value_or(false);
  cfg.check_theory = run.optional_bool("check_theory").value_or(false);
  cfg.x0 = run.optional_double("x0").value_or(0.0);

  if (cfg.tol_relative && !cfg.compute_z_star) {
    throw config_error("run.tol_relative requires run.compute_z_star = true");
  }
  if (cfg.auto_alpha && cfg.algorithm != AlgorithmId::ndcg &&
      cfg.algorithm != AlgorithmId::dmbfgs) {
    throw config_error("run: auto_alpha is only available for ndcg and dmbfgs");
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file " + path);
  return load_config(in);
}

}  // namespace decopt
