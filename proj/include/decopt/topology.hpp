#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "decopt/errors.hpp"
#include "decopt/rng.hpp"

namespace decopt {

// Undirected connected network. Edges are unordered pairs stored as (i, j)
// with i < j, 0-based and sorted; a node is implicitly its own neighbor.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  double density = 0.0;  // realized |E| / (n(n-1)/2)

  std::size_t edge_count() const { return edges.size(); }

  std::vector<int> degrees() const {
    std::vector<int> deg(n, 0);
    for (const auto& [i, j] : edges) {
      ++deg[i];
      ++deg[j];
    }
    return deg;
  }

  bool is_connected() const {
    if (n <= 1) return true;
    std::vector<std::vector<int>> adj(n);
    for (const auto& [i, j] : edges) {
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
    std::vector<char> seen(n, 0);
    std::deque<int> frontier{0};
    seen[0] = 1;
    int visited = 1;
    while (!frontier.empty()) {
      const int node = frontier.front();
      frontier.pop_front();
      for (int next : adj[node]) {
        if (!seen[next]) {
          seen[next] = 1;
          ++visited;
          frontier.push_back(next);
        }
      }
    }
    return visited == n;
  }
};

// Symmetric doubly stochastic weight matrix together with its
// second-largest magnitude eigenvalue sigma.
struct MixingMatrix {
  Eigen::MatrixXd W;
  double sigma = 0.0;
};

/// Second-largest magnitude eigenvalue of a symmetric weight matrix,
/// i.e. max{|lambda_2|, |lambda_n|} with eigenvalues sorted descending.
inline double spectral_gap(const Eigen::MatrixXd& W) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(W, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("spectral_gap: eigensolver did not converge; weight matrix is ill-formed");
  }
  const auto& ev = solver.eigenvalues();  // ascending order
  const Eigen::Index n = ev.size();
  if (n == 1) return 0.0;
  return std::max(std::abs(ev(n - 2)), std::abs(ev(0)));
}

inline double spectral_gap(MixingMatrix& m) {
  m.sigma = spectral_gap(m.W);
  return m.sigma;
}

/// Connected graph with edge count max(n-1, round(density * n(n-1)/2)):
/// a random spanning tree first, then uniformly sampled extra edges.
/// Deterministic for a fixed seed.
inline Graph generate_connected_graph(int n, double density, std::uint64_t seed) {
  if (n < 1) throw config_error("generate_connected_graph: node count must be >= 1");
  if (!(density > 0.0) || density > 1.0) {
    throw config_error("generate_connected_graph: density must lie in (0, 1]");
  }
  Graph g;
  g.n = n;
  if (n == 1) {
    g.density = 1.0;
    return g;
  }
  const std::int64_t max_edges = static_cast<std::int64_t>(n) * (n - 1) / 2;
  std::int64_t target = std::llround(density * static_cast<double>(max_edges));
  target = std::clamp<std::int64_t>(target, n - 1, max_edges);

  Rng rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  std::vector<char> present(static_cast<std::size_t>(n) * n, 0);
  auto add_edge = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    g.edges.emplace_back(a, b);
    present[static_cast<std::size_t>(a) * n + b] = 1;
  };
  // spanning tree: attach each node, in shuffled order, to a uniformly
  // chosen earlier node
  for (int k = 1; k < n; ++k) {
    add_edge(order[k], order[rng.uniform_index(k)]);
  }
  // extra edges sampled uniformly among the remaining pairs
  std::vector<std::pair<int, int>> rest;
  rest.reserve(max_edges - (n - 1));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!present[static_cast<std::size_t>(i) * n + j]) rest.emplace_back(i, j);
    }
  }
  rng.shuffle(rest);
  for (std::int64_t k = 0; k < target - (n - 1); ++k) {
    g.edges.push_back(rest[k]);
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.density = static_cast<double>(g.edges.size()) / static_cast<double>(max_edges);
  return g;
}

/// Metropolis constant edge weights: W_ij = 1/(max(deg i, deg j) + 1) on
/// edges, zero otherwise, diagonal filled to make every row sum to one.
inline MixingMatrix metropolis_weights(const Graph& g) {
  if (!g.is_connected()) throw config_error("metropolis_weights: graph must be connected");
  const int n = g.n;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  const std::vector<int> deg = g.degrees();
  for (const auto& [i, j] : g.edges) {
    const double w = 1.0 / (std::max(deg[i], deg[j]) + 1);
    W(i, j) = w;
    W(j, i) = w;
  }
  for (int i = 0; i < n; ++i) {
    W(i, i) = 1.0 - W.row(i).sum();
  }
  MixingMatrix m{std::move(W), 0.0};
  spectral_gap(m);
  return m;
}

struct MixingValidation {
  bool nonnegative = false;
  bool symmetric = false;
  bool doubly_stochastic = false;
  bool pattern_matches = false;  // W_ij > 0 iff j is a neighbor of i (diagonal included)
  bool sigma_ok = false;
  double sigma = 0.0;
  double min_entry = 0.0;
  double max_asymmetry = 0.0;
  double max_row_sum_error = 0.0;

  bool pass() const {
    return nonnegative && symmetric && doubly_stochastic && pattern_matches && sigma_ok;
  }
};

/// Report-only check of the mixing-matrix contract against a graph.
/// Entry tolerances 1e-12; sigma must stay below 1 - 1e-9.
inline MixingValidation validate_mixing_matrix(const Eigen::MatrixXd& W, const Graph& g) {
  constexpr double tol = 1e-12;
  MixingValidation r;
  if (W.rows() != W.cols() || W.rows() != g.n) {
    throw config_error("validate_mixing_matrix: matrix shape does not match graph");
  }
  const int n = g.n;
  r.min_entry = W.minCoeff();
  r.nonnegative = r.min_entry >= -tol;
  r.max_asymmetry = (W - W.transpose()).cwiseAbs().maxCoeff();
  r.symmetric = r.max_asymmetry <= tol;
  r.max_row_sum_error = (W.rowwise().sum() - Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff();
  r.doubly_stochastic = r.max_row_sum_error <= tol;

  std::vector<char> adjacent(static_cast<std::size_t>(n) * n, 0);
  for (const auto& [i, j] : g.edges) {
    adjacent[static_cast<std::size_t>(i) * n + j] = 1;
    adjacent[static_cast<std::size_t>(j) * n + i] = 1;
  }
  r.pattern_matches = true;
  for (int i = 0; i < n && r.pattern_matches; ++i) {
    for (int j = 0; j < n; ++j) {
      const bool neighbor = (i == j) || adjacent[static_cast<std::size_t>(i) * n + j];
      const bool positive = W(i, j) > tol;
      const bool zero = std::abs(W(i, j)) <= tol;
      if ((neighbor && !positive) || (!neighbor && !zero)) {
        r.pattern_matches = false;
        break;
      }
    }
  }
  r.sigma = spectral_gap(W);
  r.sigma_ok = r.sigma < 1.0 - 1e-9;
  return r;
}

/// Edge-list text format: first line "n m", then m lines "i j", 1-based.
inline void write_edge_list(const Graph& g, std::ostream& os) {
  os << g.n << ' ' << g.edges.size() << '\n';
  for (const auto& [i, j] : g.edges) {
    os << i + 1 << ' ' << j + 1 << '\n';
  }
}

inline Graph read_edge_list(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) throw parse_error(1, "expected header \"n m\"");
  ++line_no;
  std::istringstream head(line);
  int n = 0;
  std::size_t m = 0;
  if (!(head >> n >> m) || n < 1) throw parse_error(line_no, "malformed header \"n m\"");
  Graph g;
  g.n = n;
  for (std::size_t k = 0; k < m; ++k) {
    if (!std::getline(is, line)) throw parse_error(line_no + 1, "unexpected end of edge list");
    ++line_no;
    std::istringstream edge(line);
    int i = 0, j = 0;
    if (!(edge >> i >> j) || i < 1 || j < 1 || i > n || j > n || i == j) {
      throw parse_error(line_no, "malformed edge \"" + line + "\"");
    }
    g.edges.emplace_back(std::min(i, j) - 1, std::max(i, j) - 1);
  }
  std::sort(g.edges.begin(), g.edges.end());
  if (std::adjacent_find(g.edges.begin(), g.edges.end()) != g.edges.end()) {
    throw parse_error(line_no, "duplicate edge in edge list");
  }
  const std::int64_t max_edges = static_cast<std::int64_t>(n) * (n - 1) / 2;
  g.density = max_edges > 0 ? static_cast<double>(g.edges.size()) / max_edges : 1.0;
  return g;
}

/// Plain CSV dump of a dense matrix (17 significant digits, round-trip safe).
inline void write_matrix_csv(const Eigen::MatrixXd& m, std::ostream& os) {
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      os << (j ? "," : "") << buf;
    }
    os << '\n';
  }
}

}  // namespace decopt
