#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include "decopt/errors.hpp"

namespace decopt {

// One sparse sample row; indices follow the 1-based LIBSVM convention.
struct SparseRow {
  std::vector<int> idx;
  std::vector<double> val;
};

enum class Regularizer { L2, Nonconvex };

// Per-node quadratic objective f_i(z) = z'A_i z / 2 + b_i'z with
// symmetric positive definite A_i.
struct QuadraticProblem {
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::VectorXd> b;

  int nodes() const { return static_cast<int>(A.size()); }
  int dim() const { return A.empty() ? 0 : static_cast<int>(A.front().rows()); }
};

struct LogisticNodeData {
  std::vector<SparseRow> rows;
  std::vector<double> labels;  // +1 / -1
};

// Per-node binary logistic loss plus a 1/n share of the global regularizer,
// so that the node sum reproduces the full regularized objective.
struct LogisticProblem {
  std::vector<LogisticNodeData> data;
  Regularizer reg = Regularizer::L2;
  double lambda_hat = 0.0;  // experiment configs require > 0; the oracle accepts 0
  int dimension = 0;

  int nodes() const { return static_cast<int>(data.size()); }
  int dim() const { return dimension; }
};

using Problem = std::variant<QuadraticProblem, LogisticProblem>;

inline int node_count(const Problem& p) {
  return std::visit([](const auto& q) { return q.nodes(); }, p);
}

inline int dimension(const Problem& p) {
  return std::visit([](const auto& q) { return q.dim(); }, p);
}

struct SmoothnessConstants {
  double L = 0.0;
  double mu = 0.0;
  double kappa_f = std::numeric_limits<double>::infinity();  // L/mu when mu > 0
};

/// Overflow-free log(1 + exp(t)).
inline double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

/// 1 / (1 + exp(t)) without overflow for any t.
inline double logistic_weight(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

namespace detail {

inline double logistic_local_value(const LogisticProblem& p, int node, const Eigen::VectorXd& z) {
  const LogisticNodeData& nd = p.data[node];
  double value = 0.0;
  for (std::size_t r = 0; r < nd.rows.size(); ++r) {
    const SparseRow& row = nd.rows[r];
    double dot = 0.0;
    for (std::size_t k = 0; k < row.idx.size(); ++k) {
      dot += row.val[k] * z(row.idx[k] - 1);
    }
    value += softplus(-nd.labels[r] * dot);
  }
  const double share = p.lambda_hat / p.nodes();
  if (p.reg == Regularizer::L2) {
    value += 0.5 * share * z.squaredNorm();
  } else {
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      const double zk2 = z(k) * z(k);
      value += share * zk2 / (1.0 + zk2);
    }
  }
  return value;
}

inline Eigen::VectorXd logistic_local_gradient(const LogisticProblem& p, int node,
                                               const Eigen::VectorXd& z) {
  const LogisticNodeData& nd = p.data[node];
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(z.size());
  for (std::size_t r = 0; r < nd.rows.size(); ++r) {
    const SparseRow& row = nd.rows[r];
    double dot = 0.0;
    for (std::size_t k = 0; k < row.idx.size(); ++k) {
      dot += row.val[k] * z(row.idx[k] - 1);
    }
    const double b = nd.labels[r];
    const double coeff = -b * logistic_weight(b * dot);
    for (std::size_t k = 0; k < row.idx.size(); ++k) {
      grad(row.idx[k] - 1) += coeff * row.val[k];
    }
  }
  const double share = p.lambda_hat / p.nodes();
  if (p.reg == Regularizer::L2) {
    grad += share * z;
  } else {
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      const double d = 1.0 + z(k) * z(k);
      grad(k) += share * 2.0 * z(k) / (d * d);
    }
  }
  return grad;
}

}  // namespace detail

inline double local_value(const Problem& prob, int node, const Eigen::VectorXd& z) {
  if (const auto* q = std::get_if<QuadraticProblem>(&prob)) {
    return 0.5 * z.dot(q->A[node] * z) + q->b[node].dot(z);
  }
  return detail::logistic_local_value(std::get<LogisticProblem>(prob), node, z);
}

inline Eigen::VectorXd local_gradient(const Problem& prob, int node, const Eigen::VectorXd& z) {
  if (const auto* q = std::get_if<QuadraticProblem>(&prob)) {
    return q->A[node] * z + q->b[node];
  }
  return detail::logistic_local_gradient(std::get<LogisticProblem>(prob), node, z);
}

/// Objective of the consensus problem, F(z) = (1/n) sum_i f_i(z).
inline double global_value(const Problem& prob, const Eigen::VectorXd& z) {
  const int n = node_count(prob);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += local_value(prob, i, z);
  return acc / n;
}

inline Eigen::VectorXd global_gradient(const Problem& prob, const Eigen::VectorXd& z) {
  const int n = node_count(prob);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(z.size());
  for (int i = 0; i < n; ++i) acc += local_gradient(prob, i, z);
  return acc / n;
}

/// Lipschitz/strong-convexity envelope across nodes. Quadratics use the
/// exact per-node spectra; logistic losses use the 1/4-curvature bound of
/// the sigmoid plus the regularizer share (2x the share bounds the
/// nonconvex term's curvature).
inline SmoothnessConstants smoothness_constants(const Problem& prob) {
  SmoothnessConstants c;
  if (const auto* q = std::get_if<QuadraticProblem>(&prob)) {
    double lmax = 0.0;
    double lmin = std::numeric_limits<double>::infinity();
    for (const Eigen::MatrixXd& A : q->A) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
      lmax = std::max(lmax, es.eigenvalues().maxCoeff());
      lmin = std::min(lmin, es.eigenvalues().minCoeff());
    }
    c.L = lmax;
    c.mu = lmin;
  } else {
    const auto& p = std::get<LogisticProblem>(prob);
    const double share = p.lambda_hat / p.nodes();
    double gram_max = 0.0;
    for (const LogisticNodeData& nd : p.data) {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p.dimension, p.dimension);
      for (const SparseRow& row : nd.rows) {
        for (std::size_t a = 0; a < row.idx.size(); ++a) {
          for (std::size_t b = 0; b < row.idx.size(); ++b) {
            gram(row.idx[a] - 1, row.idx[b] - 1) += row.val[a] * row.val[b];
          }
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
      gram_max = std::max(gram_max, es.eigenvalues().maxCoeff());
    }
    if (p.reg == Regularizer::L2) {
      c.L = 0.25 * gram_max + share;
      c.mu = share;
    } else {
      c.L = 0.25 * gram_max + 2.0 * share;
      c.mu = 0.0;
    }
  }
  c.kappa_f = c.mu > 0.0 ? c.L / c.mu : std::numeric_limits<double>::infinity();
  return c;
}

/// Max relative deviation between the analytic gradient and a central
/// finite difference of the local value, over all coordinates.
inline double finite_difference_check(const Problem& prob, int node, const Eigen::VectorXd& z,
                                      double h = 1e-6) {
  if (!(h > 0.0)) throw config_error("finite_difference_check: step must be positive");
  const Eigen::VectorXd grad = local_gradient(prob, node, z);
  double worst = 0.0;
  Eigen::VectorXd probe = z;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    probe(k) = z(k) + h;
    const double up = local_value(prob, node, probe);
    probe(k) = z(k) - h;
    const double down = local_value(prob, node, probe);
    probe(k) = z(k);
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad(k)) / (1.0 + std::abs(grad(k))));
  }
  return worst;
}

}  // namespace decopt
