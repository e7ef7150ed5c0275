#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <vector>

#include "decopt/errors.hpp"
#include "decopt/problems.hpp"

namespace decopt {

inline Eigen::MatrixXd block_average(const Eigen::MatrixXd& x) {
  return x.colwise().mean().replicate(x.rows(), 1);
}

/// Frobenius distance of the node block from its average replica, |x - Mx|.
inline double consensus_error(const Eigen::MatrixXd& x) {
  return (x - block_average(x)).norm();
}

/// |avg_i grad f_i(x_i)| + |x - Mx|; zero exactly at consensual
/// stationary points.
inline double optimality_error(const Eigen::MatrixXd& x, const Problem& prob) {
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    avg += local_gradient(prob, static_cast<int>(i), x.row(i).transpose());
  }
  avg /= static_cast<double>(x.rows());
  return avg.norm() + consensus_error(x);
}

/// (1/n) sum_i |x_i - z*| / (|z*| + 1).
inline double relative_error(const Eigen::MatrixXd& x, const Eigen::VectorXd& z_star) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    acc += (x.row(i).transpose() - z_star).norm();
  }
  return acc / (static_cast<double>(x.rows()) * (z_star.norm() + 1.0));
}

/// Lyapunov value F(xbar) + x'(I-W)x / (2 alpha n) + |x-Mx|^2 + |v-Mv|^2.
inline double potential(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v, double alpha,
                        const Problem& prob, const Eigen::MatrixXd& W) {
  if (!(alpha > 0.0)) throw config_error("potential: stepsize must be positive");
  const Eigen::VectorXd xbar = x.colwise().mean().transpose();
  const double laplacian_term = ((x - W * x).cwiseProduct(x)).sum();
  return global_value(prob, xbar) + laplacian_term / (2.0 * alpha * x.rows()) +
         (x - block_average(x)).squaredNorm() + (v - block_average(v)).squaredNorm();
}

/// Stacked error vector [|x-Mx|^2; n(F(xbar)-F(z*)); |v-Mv|^2].
inline Eigen::Vector3d error_vector(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                                    const Problem& prob, const Eigen::VectorXd& z_star) {
  const Eigen::VectorXd xbar = x.colwise().mean().transpose();
  Eigen::Vector3d u;
  u(0) = (x - block_average(x)).squaredNorm();
  u(1) = x.rows() * (global_value(prob, xbar) - global_value(prob, z_star));
  u(2) = (v - block_average(v)).squaredNorm();
  return u;
}

// 3x3 nonnegative matrix governing the per-round evolution of the error
// vector, together with its spectral radius and the parameters it was
// built from.
struct ContractionSpec {
  Eigen::Matrix3d J;
  double rho = 0.0;
  double alpha = 0.0, L = 0.0, mu = 0.0, sigma = 0.0, psi = 0.0, Psi = 0.0;
  double kappa_g = 0.0;  // network condition number 1/(1-sigma^2)
};

inline ContractionSpec contraction_matrix(double alpha, double L, double mu, double sigma,
                                          double psi, double Psi) {
  if (!(alpha >= 0.0) || !(L > 0.0) || !(mu > 0.0) || !(psi > 0.0) || !(Psi > 0.0)) {
    throw config_error("contraction_matrix: parameters must be positive");
  }
  if (!(sigma >= 0.0 && sigma < 1.0)) {
    throw config_error("contraction_matrix: sigma must lie in [0,1)");
  }
  const double s2 = sigma * sigma;
  const double oms = 1.0 - s2;
  const double a2 = alpha * alpha;
  const double P2 = Psi * Psi;
  ContractionSpec spec;
  spec.alpha = alpha;
  spec.L = L;
  spec.mu = mu;
  spec.sigma = sigma;
  spec.psi = psi;
  spec.Psi = Psi;
  spec.kappa_g = 1.0 / oms;
  Eigen::Matrix3d& J = spec.J;
  J(0, 0) = (1.0 + s2) / 2.0 + 6.0 * s2 * P2 * a2 * L * L / oms;
  J(0, 1) = 12.0 * s2 * P2 * a2 * L / oms;
  J(0, 2) = 6.0 * s2 * P2 * a2 / oms;
  J(1, 0) = alpha * L * L * P2 / psi + 1.5 * L * L * L * P2 * a2;
  J(1, 1) = 1.0 - (psi * alpha - 3.0 * a2 * L * P2) * mu;
  J(1, 2) = alpha * P2 / psi + 1.5 * L * P2 * a2;
  J(2, 0) = 2.0 * L * L * s2 / oms * (8.0 + 6.0 * a2 * L * L * P2);
  J(2, 1) = 24.0 * a2 * L * L * L * P2 * s2 / oms;
  J(2, 2) = 12.0 * a2 * L * L * P2 * s2 / oms + (1.0 + s2) / 2.0;
  Eigen::EigenSolver<Eigen::Matrix3d> es(J);
  spec.rho = es.eigenvalues().cwiseAbs().maxCoeff();
  return spec;
}

struct ContractionReport {
  double fraction = 0.0;         // rounds with u_{t+1} <= J u_t componentwise
  std::size_t rounds_checked = 0;
  double mean_decay = 1.0;       // geometric mean of |u_{t+1}| / |u_t|
};

/// Componentwise check of u_{t+1} <= J u_t with 1e-9 absolute plus 1e-9
/// relative slack per component.
inline ContractionReport check_contraction(const std::vector<Eigen::Vector3d>& u,
                                           const ContractionSpec& spec) {
  if (u.size() < 2) throw config_error("check_contraction: need at least two error vectors");
  ContractionReport report;
  report.rounds_checked = u.size() - 1;
  std::size_t satisfied = 0;
  double log_decay = 0.0;
  std::size_t decay_count = 0;
  for (std::size_t t = 0; t + 1 < u.size(); ++t) {
    const Eigen::Vector3d bound = spec.J * u[t];
    bool ok = true;
    for (int k = 0; k < 3; ++k) {
      if (u[t + 1](k) > bound(k) + 1e-9 + 1e-9 * std::abs(bound(k))) {
        ok = false;
        break;
      }
    }
    satisfied += ok;
    const double from = u[t].norm();
    const double to = u[t + 1].norm();
    if (from > 0.0 && to > 0.0) {
      log_decay += std::log(to / from);
      ++decay_count;
    }
  }
  report.fraction = static_cast<double>(satisfied) / report.rounds_checked;
  report.mean_decay = decay_count ? std::exp(log_decay / decay_count) : 1.0;
  return report;
}

/// iterations x rounds-per-iteration x realized edges x transmitted
/// vector dimension.
inline long long communication_volume(long iterations, int rounds_per_iteration,
                                      long long edge_count, int p) {
  if (iterations < 0 || rounds_per_iteration < 0 || edge_count < 0 || p < 0) {
    throw config_error("communication_volume: arguments must be nonnegative");
  }
  return static_cast<long long>(iterations) * rounds_per_iteration * edge_count * p;
}

struct XiSequence {
  std::vector<double> xi;  // xi^0 .. xi^T
  double c = 0.0;          // limit bound 2 / (1 + sqrt(1 - 4 L alpha))
};

/// xi^0 = 1, xi^{t+1} = 1 + L alpha (xi^t)^2; defined for alpha <= 1/(4L),
/// where the whole sequence stays inside [1, c) with c <= 2.
inline XiSequence xi_sequence(double L, double alpha, long T) {
  if (!(L > 0.0) || !(alpha > 0.0)) throw config_error("xi_sequence: L and alpha must be positive");
  if (4.0 * L * alpha > 1.0 + 1e-12) {
    throw config_error("xi_sequence: requires alpha <= 1/(4L)");
  }
  if (T < 0) throw config_error("xi_sequence: T must be nonnegative");
  XiSequence out;
  out.c = 2.0 / (1.0 + std::sqrt(std::max(0.0, 1.0 - 4.0 * L * alpha)));
  out.xi.reserve(T + 1);
  double xi = 1.0;
  for (long t = 0; t <= T; ++t) {
    if (xi < 1.0 || xi > out.c + 1e-12 || out.c > 2.0 + 1e-12) {
      throw std::logic_error("xi_sequence: bound 1 <= xi < c <= 2 violated");
    }
    out.xi.push_back(xi);
    xi = 1.0 + L * alpha * xi * xi;
  }
  return out;
}

// ---------------------------------------------------------------------------
// metric trace

// One recorded iteration; unavailable quantities stay NaN and serialize as
// empty CSV fields.
struct MetricRow {
  long iter = 0;
  long long comm_volume = 0;
  double optimality_error = std::numeric_limits<double>::quiet_NaN();
  double relative_error = std::numeric_limits<double>::quiet_NaN();
  double consensus_error = std::numeric_limits<double>::quiet_NaN();
  double tracking_error = std::numeric_limits<double>::quiet_NaN();
  double potential = std::numeric_limits<double>::quiet_NaN();
  double objective_gap = std::numeric_limits<double>::quiet_NaN();
  double wall_s = std::numeric_limits<double>::quiet_NaN();
};

struct MetricTrace {
  static constexpr const char* csv_header =
      "iter,comm_volume,optimality_error,relative_error,consensus_error,"
      "tracking_error,potential,objective_gap,wall_s";

  std::vector<MetricRow> rows;

  void write_csv(std::ostream& os) const {
    os << csv_header << '\n';
    char buf[40];
    auto field = [&](double v) {
      os << ',';
      if (!std::isnan(v)) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << buf;
      }
    };
    for (const MetricRow& r : rows) {
      os << r.iter << ',' << r.comm_volume;
      field(r.optimality_error);
      field(r.relative_error);
      field(r.consensus_error);
      field(r.tracking_error);
      field(r.potential);
      field(r.objective_gap);
      field(r.wall_s);
      os << '\n';
    }
  }
};

}  // namespace decopt
