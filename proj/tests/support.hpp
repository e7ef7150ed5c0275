#pragma once

// Helpers shared by the test binaries: instance builders and independent
// reference implementations used as oracles.

#include <Eigen/Dense>

#include <cstdint>

#include "decopt/datasets.hpp"
#include "decopt/problems.hpp"
#include "decopt/rng.hpp"

namespace testsupport {

inline decopt::SparseRow dense_row(const Eigen::VectorXd& a) {
  decopt::SparseRow row;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a(k) != 0.0) {
      row.idx.push_back(static_cast<int>(k) + 1);
      row.val.push_back(a(k));
    }
  }
  return row;
}

/// Random binary classification sample set: Gaussian features scaled by
/// `scale`, labels from a noisy random hyperplane.
inline decopt::SampleSet synth_logistic_samples(int m, int p, double scale, std::uint64_t seed) {
  decopt::Rng rng(seed);
  decopt::SampleSet samples;
  samples.dimension = p;
  Eigen::VectorXd truth(p);
  for (int k = 0; k < p; ++k) truth(k) = rng.normal();
  for (int s = 0; s < m; ++s) {
    Eigen::VectorXd a(p);
    for (int k = 0; k < p; ++k) a(k) = scale * rng.normal();
    samples.rows.push_back(dense_row(a));
    samples.labels.push_back(a.dot(truth) + 0.1 * scale * rng.normal() > 0.0 ? 1.0 : -1.0);
  }
  return samples;
}

/// Explicit rank-two quasi-Newton matrix tau I - (s y' + y s')/|y|^2
/// + 2 s s'/(s'y); the matrix oracle for the three-term direction.
inline Eigen::MatrixXd explicit_qn_matrix(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
  const double yy = y.squaredNorm();
  const double sy = s.dot(y);
  const Eigen::Index p = s.size();
  return (sy / yy) * Eigen::MatrixXd::Identity(p, p) -
         (s * y.transpose() + y * s.transpose()) / yy + 2.0 * (s * s.transpose()) / sy;
}

// Centralized nonlinear CG with the gradient-variation conjugate parameter
// and constant stepsize. Written against the oracle only; serves as the
// independent reference for single-node tracked CG runs.
struct CentralizedPrp {
  Eigen::VectorXd x, g, d;

  void init(const decopt::Problem& prob, const Eigen::VectorXd& x0) {
    x = x0;
    g = decopt::local_gradient(prob, 0, x);
    d = -g;
  }

  void step(const decopt::Problem& prob, double alpha) {
    x += alpha * d;
    const Eigen::VectorXd g_new = decopt::local_gradient(prob, 0, x);
    const double den = g.squaredNorm();
    const double beta = den > 0.0 ? g_new.dot(g_new - g) / den : 0.0;
    d = -g_new + beta * d;
    g = g_new;
  }
};

/// Max relative deviation of the tracker mean from the gradient mean.
inline double tracking_deviation(const Eigen::MatrixXd& v, const Eigen::MatrixXd& g) {
  const Eigen::VectorXd mean_v = v.colwise().mean().transpose();
  const Eigen::VectorXd mean_g = g.colwise().mean().transpose();
  return (mean_v - mean_g).norm() / (1.0 + mean_g.norm());
}

}  // namespace testsupport
