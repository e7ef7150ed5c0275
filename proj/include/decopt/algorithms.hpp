#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "decopt/errors.hpp"
#include "decopt/problems.hpp"

namespace decopt {

enum class AlgorithmId { dgd, gt, abm, sdcg, ndcg, dmbfgs };
enum class CgVariant { FR, PRP, HS, DY };
enum class GtFlavor { ATC, SEMI_ATC };

struct AlgoParams {
  double alpha = 0.0;
  double beta_fixed = 0.0;                    // heavy-ball momentum (abm)
  CgVariant cg_variant = CgVariant::PRP;      // sdcg
  double l = 1e-4;                            // quasi-Newton eigenvalue window (dmbfgs)
  double u = 1e4;
  GtFlavor gt_flavor = GtFlavor::SEMI_ATC;    // gt
};

// Denominators at or below this floor zero out the associated coefficient;
// they arise only at exact stationarity.
inline constexpr double kDenominatorFloor = std::numeric_limits<double>::min();

// Per-node state blocks, one row per node. Auxiliary blocks are sized only
// by the algorithm that needs them.
struct NodeStates {
  Eigen::MatrixXd x, v, g, g_prev, d;
  Eigen::MatrixXd vt, vt_prev;       // tracked pseudo-gradient (ndcg)
  Eigen::MatrixXd x_prev, v_prev;    // history (abm, dmbfgs)
  Eigen::VectorXd beta;              // last per-node conjugate/momentum coefficient
  Eigen::VectorXd h_eig_min, h_eig_max, h_tau;  // implicit quasi-Newton spectrum (dmbfgs)
  std::vector<int> y_choice;         // 0: tracker diff, 1: gradient diff, 2: degenerate
  long t = 0;
};

inline int communication_rounds_per_iteration(AlgorithmId id) {
  return (id == AlgorithmId::dgd || id == AlgorithmId::sdcg) ? 1 : 2;
}

inline Eigen::MatrixXd stack_gradients(const Problem& prob, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    g.row(i) = local_gradient(prob, static_cast<int>(i), x.row(i).transpose()).transpose();
  }
  return g;
}

inline void ensure_finite(const NodeStates& s) {
  if (!s.x.allFinite() || s.x.norm() > 1e12) {
    throw divergence_error(s.t, "iterate left the finite range");
  }
}

// ---------------------------------------------------------------------------
// initializers

inline NodeStates dgd_init(const Eigen::MatrixXd& x0, const Problem& prob) {
  NodeStates s;
  s.x = x0;
  s.g = stack_gradients(prob, x0);
  s.g_prev = s.g;
  return s;
}

inline NodeStates sdcg_init(const Eigen::MatrixXd& x0, const Problem& prob) {
  NodeStates s = dgd_init(x0, prob);
  s.d = -s.g;
  s.beta = Eigen::VectorXd::Zero(x0.rows());
  return s;
}

inline NodeStates gt_init(const Eigen::MatrixXd& x0, const Problem& prob) {
  NodeStates s = dgd_init(x0, prob);
  s.v = s.g;
  return s;
}

inline NodeStates abm_init(const Eigen::MatrixXd& x0, const Problem& prob) {
  NodeStates s = gt_init(x0, prob);
  s.x_prev = x0;  // first momentum term vanishes
  return s;
}

inline NodeStates dmbfgs_init(const Eigen::MatrixXd& x0, const Problem& prob) {
  NodeStates s = gt_init(x0, prob);
  s.d = -s.g;
  s.v_prev = s.v;
  s.x_prev = x0;
  const Eigen::Index n = x0.rows();
  s.beta = Eigen::VectorXd::Zero(n);
  s.h_eig_min = Eigen::VectorXd::Constant(n, 1.0);
  s.h_eig_max = Eigen::VectorXd::Constant(n, 1.0);
  s.h_tau = Eigen::VectorXd::Constant(n, 1.0);
  s.y_choice.assign(n, 2);
  return s;
}

inline NodeStates ndcg_init(const Eigen::MatrixXd& x0, const Problem& prob,
                            const Eigen::MatrixXd& W, double alpha) {
  if (!(alpha > 0.0)) throw config_error("ndcg_init: stepsize must be positive");
  NodeStates s = gt_init(x0, prob);
  s.vt = s.v + (1.0 / alpha) * (s.x - W * s.x);
  s.vt_prev = s.vt;
  s.d = -s.vt;
  s.beta = Eigen::VectorXd::Zero(x0.rows());
  return s;
}

// ---------------------------------------------------------------------------
// baseline steppers

inline void dgd_step(NodeStates& s, const Problem& prob, const Eigen::MatrixXd& W, double alpha) {
  s.x = W * s.x - alpha * s.g;  // 1 communication round
  s.g_prev = s.g;
  s.g = stack_gradients(prob, s.x);
  ++s.t;
  ensure_finite(s);
}

inline void gt_step(NodeStates& s, const Problem& prob, const Eigen::MatrixXd& W, double alpha,
                    GtFlavor flavor) {
  if (flavor == GtFlavor::SEMI_ATC) {
    s.x = W * s.x - alpha * s.v;  // round 1
  } else {
    s.x = W * (s.x - alpha * s.v);  // round 1
  }
  Eigen::MatrixXd g_new = stack_gradients(prob, s.x);
  s.v = W * (s.v + g_new - s.g);  // round 2
  s.g_prev = std::move(s.g);
  s.g = std::move(g_new);
  ++s.t;
  ensure_finite(s);
}

inline void abm_step(NodeStates& s, const Problem& prob, const Eigen::MatrixXd& W, double alpha,
                     double beta_fixed) {
  Eigen::MatrixXd x_new = W * s.x - alpha * s.v + beta_fixed * (s.x - s.x_prev);  // round 1
  s.x_prev = std::move(s.x);
  s.x = std::move(x_new);
  Eigen::MatrixXd g_new = stack_gradients(prob, s.x);
  s.v = W * (s.v + g_new - s.g);  // round 2
  s.g_prev = std::move(s.g);
  s.g = std::move(g_new);
  ++s.t;
  ensure_finite(s);
}

// ---------------------------------------------------------------------------
// simple decentralized CG

inline double cg_beta(CgVariant variant, const Eigen::VectorXd& g_new,
                      const Eigen::VectorXd& g_old, const Eigen::VectorXd& d_old) {
  const Eigen::VectorXd y = g_new - g_old;
  double num = 0.0, den = 0.0;
  switch (variant) {
    case CgVariant::FR:
      num = g_new.squaredNorm();
      den = g_old.squaredNorm();
      break;
    case CgVariant::PRP:
      num = g_new.dot(y);
      den = g_old.squaredNorm();
      break;
    case CgVariant::HS:
      num = g_new.dot(y);
      den = d_old.dot(y);
      break;
    case CgVariant::DY:
      num = g_new.squaredNorm();
      den = d_old.dot(y);
      break;
  }
  return std::abs(den) > kDenominatorFloor ? num / den : 0.0;
}

inline void sdcg_step(NodeStates& s, const Problem& prob, const Eigen::MatrixXd& W, double alpha,
                      CgVariant variant) {
  s.x = W * s.x + alpha * s.d;  // 1 communication round
  Eigen::MatrixXd g_new = stack_gradients(prob, s.x);
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
    s.beta(i) = cg_beta(variant, g_new.row(i).transpose(), s.g.row(i).transpose(),
                        s.d.row(i).transpose());
  }
  Eigen::MatrixXd d_new = -g_new + s.beta.asDiagonal() * s.d;
  s.d = std::move(d_new);
  s.g_prev = std::move(s.g);
  s.g = std::move(g_new);
  ++s.t;
  ensure_finite(s);
}

// ---------------------------------------------------------------------------
// tracked conjugate gradient (ndcg)

/// Stepsize range guaranteeing the potential decrease of the tracked CG
/// iteration: min of the three closed-form terms in L, sigma and n.
inline double ndcg_stepsize_bound(double L, double sigma, int n) {
  if (!(L > 0.0)) throw config_error("ndcg_stepsize_bound: L must be positive");
  if (!(sigma >= 0.0 && sigma < 1.0)) throw config_error("ndcg_stepsize_bound: sigma must lie in [0,1)");
  if (n < 1) throw config_error("ndcg_stepsize_bound: n must be >= 1");
  const double s2 = sigma * sigma;
  const double sqrt5 = std::sqrt(5.0);
  const double t1 = (1.0 - s2) * n / (32.0 * L * L);
  const double t2 = 2.0 * (5.0 - 2.0 * sqrt5) * (1.0 - s2) /
                    (4.0 * n * (5.0 * s2 * L * L + 18.0 - 8.0 * sqrt5) + 5.0 * L);
  const double t3 = (2.0 * sqrt5 - 4.0) / (5.0 * L);
  return std::min({t1, t2, t3});
}

inline void ndcg_step(NodeStates& s, const Problem& prob, const Eigen::MatrixXd& W, double alpha) {
  if (!(alpha > 0.0)) throw config_error("ndcg_step: stepsize must be positive");
  s.x += alpha * s.d;  // local move, no communication
  Eigen::MatrixXd g_new = stack_gradients(prob, s.x);
  s.v = W * (s.v + g_new - s.g);                              // round 1
  Eigen::MatrixXd vt_new = s.v + (1.0 / alpha) * (s.x - W * s.x);  // round 2
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
    const double den = s.vt.row(i).squaredNorm();
    const double num = vt_new.row(i).dot(g_new.row(i) - s.g.row(i));
    s.beta(i) = den > kDenominatorFloor ? num / den : 0.0;
  }
  Eigen::MatrixXd d_new = -vt_new + s.beta.asDiagonal() * s.d;
  s.d = std::move(d_new);
  s.vt_prev = std::move(s.vt);
  s.vt = std::move(vt_new);
  s.g_prev = std::move(s.g);
  s.g = std::move(g_new);
  ++s.t;
  ensure_finite(s);
}

// ---------------------------------------------------------------------------
// memoryless quasi-Newton (dmbfgs)

struct YSelect {
  Eigen::VectorXd y;
  double lambda_min = 0.0;   // smallest eigenvalue of the implicit matrix
  double lambda_max = 0.0;   // largest eigenvalue
  double tau = 0.0;          // BB scaling factor s'y / |y|^2
  bool used_tracker = false; // true when the tracker difference was accepted
};

namespace detail {

// The rank-two update of tau*I leaves p-2 eigenvalues at tau; the remaining
// pair solves lambda*Lambda = |s|^2/|y|^2, lambda+Lambda = 2|s|^2/(s'y).
inline std::pair<double, double> rank_two_eigen_pair(double ss, double sy, double yy) {
  const double ratio = ss / sy;
  const double q = std::min(1.0, (sy * sy) / (ss * yy));
  const double root = std::sqrt(std::max(0.0, 1.0 - q));
  return {ratio * (1.0 - root), ratio * (1.0 + root)};
}

}  // namespace detail

/// Gatekeeper for the curvature vector: accept the tracker difference when
/// it keeps the implicit matrix spectrum inside [l, u], otherwise fall back
/// to the raw gradient difference.
inline YSelect dmbfgs_y_select(const Eigen::VectorXd& s, const Eigen::VectorXd& y_check,
                               const Eigen::VectorXd& y_hat, double l, double u) {
  if (!(l > 0.0) || !(l < u)) throw config_error("dmbfgs_y_select: need 0 < l < u");
  const double ss = s.squaredNorm();
  if (ss <= kDenominatorFloor) {
    throw degenerate_step_error("dmbfgs_y_select: zero displacement");
  }
  auto finish = [&](const Eigen::VectorXd& y, bool tracker) {
    YSelect pick;
    pick.y = y;
    pick.used_tracker = tracker;
    const double sy = s.dot(y);
    const double yy = y.squaredNorm();
    if (sy > 0.0 && yy > kDenominatorFloor) {
      pick.tau = sy / yy;
      const auto [lam, Lam] = detail::rank_two_eigen_pair(ss, sy, yy);
      pick.lambda_min = lam;
      pick.lambda_max = Lam;
      // lambda <= tau <= Lambda always; a violation means broken algebra
      const double slack = 1e-9 * pick.tau + 1e-12;
      if (lam > pick.tau + slack || Lam < pick.tau - slack) {
        throw std::logic_error("dmbfgs_y_select: eigenvalue interlacing violated");
      }
    } else {
      pick.tau = pick.lambda_min = pick.lambda_max =
          std::numeric_limits<double>::quiet_NaN();
    }
    return pick;
  };
  const double sy_check = s.dot(y_check);
  const double yy_check = y_check.squaredNorm();
  if (sy_check > 0.0 && yy_check > kDenominatorFloor) {
    const auto [lam, Lam] = detail::rank_two_eigen_pair(ss, sy_check, yy_check);
    if (lam >= l && Lam <= u) {
      return finish(y_check, true);
    }
  }
  return finish(y_hat, false);
}

/// Three-term direction -tau v + beta s + theta y; equals the product of
/// v with the negated rank-two quasi-Newton matrix. Caller guarantees
/// s'y > 0 and y != 0.
inline Eigen::VectorXd dmbfgs_direction(const Eigen::VectorXd& v_next, const Eigen::VectorXd& s,
                                        const Eigen::VectorXd& y) {
  const double yy = y.squaredNorm();
  const double sy = s.dot(y);
  const double tau = sy / yy;
  const double theta = v_next.dot(s) / yy;
  const double beta = v_next.dot(y) / yy - 2.0 * v_next.dot(s) / sy;
  return -tau * v_next + beta * s + theta * y;
}

inline void dmbfgs_step(NodeStates& st, const Problem& prob, const Eigen::MatrixXd& W,
                        double alpha, double l, double u) {
  if (!(alpha > 0.0)) throw config_error("dmbfgs_step: stepsize must be positive");
  Eigen::MatrixXd x_new = W * (st.x + alpha * st.d);  // round 1
  Eigen::MatrixXd g_new = stack_gradients(prob, x_new);
  Eigen::MatrixXd v_new = W * (st.v + g_new - st.g);  // round 2
  Eigen::MatrixXd d_new(st.d.rows(), st.d.cols());
  for (Eigen::Index i = 0; i < st.x.rows(); ++i) {
    const Eigen::VectorXd s = (x_new.row(i) - st.x.row(i)).transpose();
    const Eigen::VectorXd vn = v_new.row(i).transpose();
    if (s.squaredNorm() <= kDenominatorFloor) {
      // node repeated its iterate exactly: keep an identity-scaled direction
      d_new.row(i) = -vn.transpose();
      st.y_choice[i] = 2;
      st.h_eig_min(i) = st.h_eig_max(i) = st.h_tau(i) = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const Eigen::VectorXd y_check = (v_new.row(i) - st.v.row(i)).transpose();
    const Eigen::VectorXd y_hat = (g_new.row(i) - st.g.row(i)).transpose();
    const YSelect pick = dmbfgs_y_select(s, y_check, y_hat, l, u);
    const double sy = s.dot(pick.y);
    if (!(sy > kDenominatorFloor) || pick.y.squaredNorm() <= kDenominatorFloor) {
      d_new.row(i) = -vn.transpose();
      st.y_choice[i] = 2;
      st.h_eig_min(i) = st.h_eig_max(i) = st.h_tau(i) = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    d_new.row(i) = dmbfgs_direction(vn, s, pick.y).transpose();
    st.y_choice[i] = pick.used_tracker ? 0 : 1;
    st.h_eig_min(i) = pick.lambda_min;
    st.h_eig_max(i) = pick.lambda_max;
    st.h_tau(i) = pick.tau;
  }
  st.x_prev = std::move(st.x);
  st.x = std::move(x_new);
  st.v_prev = std::move(st.v);
  st.v = std::move(v_new);
  st.g_prev = std::move(st.g);
  st.g = std::move(g_new);
  st.d = std::move(d_new);
  ++st.t;
  ensure_finite(st);
}

/// Spectrum envelope [psi, Psi] realized by the gated quasi-Newton update
/// under the smoothness pair (L, mu) and window [l, u].
inline std::pair<double, double> quasi_newton_envelope(double L, double mu, double l, double u) {
  if (!(mu > 0.0) || !(L >= mu)) throw config_error("quasi_newton_envelope: need 0 < mu <= L");
  if (!(l > 0.0) || !(l < u)) throw config_error("quasi_newton_envelope: need 0 < l < u");
  return {std::min(l, 1.0 / (2.0 * L)), std::max(u, 2.0 / mu)};
}

/// Stepsize guaranteeing the linear contraction of the stacked error
/// recursion; closed form in L, mu, sigma and the spectrum envelope.
inline double dmbfgs_stepsize_bound(double L, double mu, double sigma, double l, double u) {
  if (!(sigma >= 0.0 && sigma < 1.0)) {
    throw config_error("dmbfgs_stepsize_bound: sigma must lie in [0,1)");
  }
  const auto [psi, Psi] = quasi_newton_envelope(L, mu, l, u);
  const double kappa_H = Psi / psi;
  const double kappa_f = L / mu;
  if (sigma == 0.0) {
    return 1.0 / (15.0 * L * Psi * kappa_H);
  }
  const double oms = 1.0 - sigma * sigma;
  return std::sqrt(1.0 / 3916.0) * oms * oms / (L * Psi * kappa_H) * std::sqrt(1.0 / kappa_f);
}

/// Single dispatcher used by the experiment runner.
inline void step(AlgorithmId id, NodeStates& s, const Problem& prob, const Eigen::MatrixXd& W,
                 const AlgoParams& p) {
  switch (id) {
    case AlgorithmId::dgd:
      dgd_step(s, prob, W, p.alpha);
      break;
    case AlgorithmId::gt:
      gt_step(s, prob, W, p.alpha, p.gt_flavor);
      break;
    case AlgorithmId::abm:
      abm_step(s, prob, W, p.alpha, p.beta_fixed);
      break;
    case AlgorithmId::sdcg:
      sdcg_step(s, prob, W, p.alpha, p.cg_variant);
      break;
    case AlgorithmId::ndcg:
      ndcg_step(s, prob, W, p.alpha);
      break;
    case AlgorithmId::dmbfgs:
      dmbfgs_step(s, prob, W, p.alpha, p.l, p.u);
      break;
  }
}

inline NodeStates init(AlgorithmId id, const Eigen::MatrixXd& x0, const Problem& prob,
                       const Eigen::MatrixXd& W, const AlgoParams& p) {
  switch (id) {
    case AlgorithmId::dgd:
      return dgd_init(x0, prob);
    case AlgorithmId::gt:
      return gt_init(x0, prob);
    case AlgorithmId::abm:
      return abm_init(x0, prob);
    case AlgorithmId::sdcg:
      return sdcg_init(x0, prob);
    case AlgorithmId::ndcg:
      return ndcg_init(x0, prob, W, p.alpha);
    case AlgorithmId::dmbfgs:
      return dmbfgs_init(x0, prob);
  }
  throw config_error("init: unknown algorithm");
}

}  // namespace decopt
