#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "decopt/algorithms.hpp"
#include "decopt/analysis.hpp"
#include "decopt/datasets.hpp"
#include "decopt/topology.hpp"
#include "support.hpp"

using namespace decopt;

namespace {

Problem zero_gradient_problem(int nodes, int p) {
  // no samples and no regularizer: value and gradient vanish identically
  LogisticProblem prob;
  prob.reg = Regularizer::L2;
  prob.lambda_hat = 0.0;
  prob.dimension = p;
  prob.data.resize(nodes);
  return prob;
}

Problem homogeneous_quadratic(int nodes, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  QuadraticProblem q;
  for (int i = 0; i < nodes; ++i) {
    q.A.push_back(A);
    q.b.push_back(b);
  }
  return q;
}

}  // namespace

TEST_CASE("optimality error") {
  SUBCASE("zero at a consensual stationary point") {
    const QuadraticProblem q = synth_quadratic(4, 10.0, 3, 17);
    const SolutionCertificate cert = true_solution(q);
    const Eigen::MatrixXd x = cert.z_star.transpose().replicate(3, 1);
    CHECK(optimality_error(x, q) <= 1e-10);
  }
  SUBCASE("consensual block reduces to the mean-gradient norm") {
    const Problem prob = homogeneous_quadratic(2, 2.0 * Eigen::Matrix2d::Identity(),
                                               Eigen::Vector2d(1.0, 0.0));
    Eigen::MatrixXd x(2, 2);
    x << 0.5, 1.0, 0.5, 1.0;
    const Eigen::Vector2d mean_grad = 2.0 * Eigen::Vector2d(0.5, 1.0) + Eigen::Vector2d(1.0, 0.0);
    CHECK(optimality_error(x, prob) == doctest::Approx(mean_grad.norm()));
  }
  SUBCASE("pure consensus violation") {
    const Problem prob = zero_gradient_problem(2, 2);
    Eigen::MatrixXd x(2, 2);
    x << 1.0, 0.0, -1.0, 0.0;
    CHECK(optimality_error(x, prob) == doctest::Approx(std::sqrt(2.0)));
  }
}

TEST_CASE("relative error") {
  SUBCASE("zero at the solution") {
    const Eigen::Vector2d z(0.3, -0.4);
    const Eigen::MatrixXd x = z.transpose().replicate(4, 1);
    CHECK(relative_error(x, z) == 0.0);
  }
  SUBCASE("unit vectors around a zero solution") {
    Eigen::MatrixXd x(3, 2);
    x << 1.0, 0.0, 0.0, 1.0, -1.0, 0.0;
    CHECK(relative_error(x, Eigen::Vector2d::Zero()) == doctest::Approx(1.0));
  }
  SUBCASE("worked two-node example") {
    const Eigen::Vector2d z(3.0, 4.0);
    Eigen::MatrixXd x(2, 2);
    x.row(0) = z.transpose();
    x.row(1) = (z + Eigen::Vector2d(6.0, 8.0)).transpose();
    CHECK(relative_error(x, z) == doctest::Approx(5.0 / 6.0));
  }
}

TEST_CASE("potential function") {
  const Graph g = generate_connected_graph(4, 0.8, 8);
  const MixingMatrix m = metropolis_weights(g);
  SUBCASE("consensual blocks collapse to the objective value") {
    const Problem prob = homogeneous_quadratic(4, Eigen::Matrix2d::Identity(),
                                               Eigen::Vector2d(0.5, -0.5));
    const Eigen::Vector2d z(0.2, 0.7);
    const Eigen::MatrixXd x = z.transpose().replicate(4, 1);
    const Eigen::MatrixXd v = stack_gradients(prob, x);  // consensual: equal rows
    CHECK(potential(x, v, 0.1, prob, m.W) ==
          doctest::Approx(global_value(prob, z)).epsilon(1e-12));
  }
  SUBCASE("decomposes into objective plus penalties, and consensus terms scale quadratically") {
    const Problem prob = synth_quadratic(3, 5.0, 4, 9);
    Rng rng(12);
    Eigen::MatrixXd x(4, 3), v(4, 3);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 3; ++j) {
        x(i, j) = rng.normal();
        v(i, j) = rng.normal();
      }
    const double alpha = 0.05;
    const Eigen::VectorXd xbar = x.colwise().mean().transpose();
    const double laplacian = ((x - m.W * x).cwiseProduct(x)).sum();
    const double expected = global_value(prob, xbar) + laplacian / (2.0 * alpha * 4) +
                            (x - block_average(x)).squaredNorm() +
                            (v - block_average(v)).squaredNorm();
    CHECK(potential(x, v, alpha, prob, m.W) == doctest::Approx(expected).epsilon(1e-13));

    // doubling the consensus violation (same mean) quadruples both
    // consensus-dependent terms
    const Eigen::MatrixXd x2 = block_average(x) + 2.0 * (x - block_average(x));
    const double base = potential(x, v, alpha, prob, m.W) - global_value(prob, xbar) -
                        (v - block_average(v)).squaredNorm();
    const double scaled = potential(x2, v, alpha, prob, m.W) - global_value(prob, xbar) -
                          (v - block_average(v)).squaredNorm();
    CHECK(scaled == doctest::Approx(4.0 * base).epsilon(1e-10));
  }
  SUBCASE("nonincreasing along a tracked CG run with the guaranteed stepsize") {
    const Problem prob = synth_quadratic(4, 8.0, 5, 33);
    const SmoothnessConstants c = smoothness_constants(prob);
    const Graph g5 = generate_connected_graph(5, 0.6, 34);
    const MixingMatrix m5 = metropolis_weights(g5);
    const double alpha = ndcg_stepsize_bound(c.L, m5.sigma, 5);
    NodeStates s = ndcg_init(Eigen::MatrixXd::Zero(5, 4), prob, m5.W, alpha);
    double last = potential(s.x, s.v, alpha, prob, m5.W);
    for (int t = 0; t < 300; ++t) {
      ndcg_step(s, prob, m5.W, alpha);
      const double now = potential(s.x, s.v, alpha, prob, m5.W);
      CHECK(now <= last + 1e-9 * (1.0 + std::abs(last)));
      last = now;
    }
  }
}

TEST_CASE("error vector") {
  const Problem prob = synth_quadratic(3, 6.0, 4, 51);
  const SolutionCertificate cert = true_solution(prob);
  SUBCASE("zero at the consensual optimum") {
    const Eigen::MatrixXd x = cert.z_star.transpose().replicate(4, 1);
    const Eigen::MatrixXd v = Eigen::MatrixXd::Ones(4, 3);
    const Eigen::Vector3d u = error_vector(x, v, prob, cert.z_star);
    CHECK(u(0) <= 1e-20);
    CHECK(std::abs(u(1)) <= 1e-10);
    CHECK(u(2) <= 1e-20);
  }
  SUBCASE("objective gap is nonnegative and the components match the metric ops") {
    Rng rng(4);
    Eigen::MatrixXd x(4, 3), v(4, 3);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 3; ++j) {
        x(i, j) = rng.normal();
        v(i, j) = rng.normal();
      }
    const Eigen::Vector3d u = error_vector(x, v, prob, cert.z_star);
    CHECK(u(1) > 0.0);  // random mean differs from the minimizer
    CHECK(u(0) == doctest::Approx(consensus_error(x) * consensus_error(x)));
    CHECK(u(2) == doctest::Approx(consensus_error(v) * consensus_error(v)));
    const Eigen::VectorXd xbar = x.colwise().mean().transpose();
    CHECK(u(1) == doctest::Approx(4.0 * (global_value(prob, xbar) -
                                         global_value(prob, cert.z_star))));
  }
}

TEST_CASE("contraction matrix") {
  SUBCASE("fully connected case zeroes every sigma-coupled entry") {
    const ContractionSpec spec = contraction_matrix(0.01, 2.0, 0.5, 0.0, 0.2, 3.0);
    CHECK(spec.J(0, 0) == doctest::Approx(0.5));
    CHECK(spec.J(0, 1) == 0.0);
    CHECK(spec.J(0, 2) == 0.0);
    CHECK(spec.J(2, 0) == 0.0);
    CHECK(spec.J(2, 1) == 0.0);
    CHECK(spec.J(2, 2) == doctest::Approx(0.5));
    CHECK(spec.kappa_g == doctest::Approx(1.0));
  }
  SUBCASE("zero stepsize pins the spectral radius at one") {
    const ContractionSpec spec = contraction_matrix(0.0, 1.0, 1.0, 0.5, 1.0, 1.0);
    CHECK(spec.rho == doctest::Approx(1.0));
    CHECK(spec.J(1, 1) == doctest::Approx(1.0));
    CHECK(spec.J(0, 0) == doctest::Approx(0.625));
  }
  SUBCASE("entries pinned against independently coded expressions") {
    const double a = 0.01, L = 3.0, mu = 0.5, sg = 0.4, psi = 0.2, Psi = 5.0;
    const ContractionSpec spec = contraction_matrix(a, L, mu, sg, psi, Psi);
    const double s2 = sg * sg;
    CHECK(spec.J(0, 0) ==
          doctest::Approx((1 + s2) / 2 + 6 * s2 * Psi * Psi * a * a * L * L / (1 - s2)));
    CHECK(spec.J(0, 1) == doctest::Approx(12 * s2 * Psi * Psi * a * a * L / (1 - s2)));
    CHECK(spec.J(0, 2) == doctest::Approx(6 * s2 * Psi * Psi * a * a / (1 - s2)));
    CHECK(spec.J(1, 0) ==
          doctest::Approx(a * L * L * Psi * Psi / psi + 3 * L * L * L * Psi * Psi * a * a / 2));
    CHECK(spec.J(1, 1) == doctest::Approx(1 - (psi * a - 3 * a * a * L * Psi * Psi) * mu));
    CHECK(spec.J(1, 2) == doctest::Approx(a * Psi * Psi / psi + 3 * L * Psi * Psi * a * a / 2));
    CHECK(spec.J(2, 0) ==
          doctest::Approx(2 * L * L * s2 / (1 - s2) * (8 + 6 * a * a * L * L * Psi * Psi)));
    CHECK(spec.J(2, 1) == doctest::Approx(24 * a * a * L * L * L * Psi * Psi * s2 / (1 - s2)));
    CHECK(spec.J(2, 2) ==
          doctest::Approx(12 * a * a * L * L * Psi * Psi * s2 / (1 - s2) + (1 + s2) / 2));
    CHECK(spec.kappa_g == doctest::Approx(1.0 / (1.0 - s2)));
  }
  SUBCASE("guaranteed stepsize keeps the spectral radius strictly below one") {
    const double L = 1.0, mu = 1.0, sg = 0.5, psi = 1.0, Psi = 1.0;
    const double kappa_f = L / mu, kappa_H = Psi / psi;
    const double oms = 1.0 - sg * sg;
    const double alpha = std::sqrt(1.0 / 3916.0) * oms * oms / (L * Psi * kappa_H) *
                         std::sqrt(1.0 / kappa_f);
    const ContractionSpec spec = contraction_matrix(alpha, L, mu, sg, psi, Psi);
    CHECK(spec.rho < 1.0);
    const double guarantee =
        1.0 - (1.0 / 3916.0) * oms * oms / (kappa_f * kappa_f * kappa_H * kappa_H);
    CHECK(spec.rho <= guarantee + 1e-12);
  }
}

TEST_CASE("contraction check on trajectories") {
  const Problem prob = synth_quadratic(8, 20.0, 5, 71);
  const SmoothnessConstants c = smoothness_constants(prob);
  const Graph g = generate_connected_graph(5, 0.7, 72);
  const MixingMatrix m = metropolis_weights(g);
  const SolutionCertificate cert = true_solution(prob);
  const double l = 1.0 / (2.0 * c.L);
  const double u = 2.0 / c.mu;
  const auto [psi, Psi] = quasi_newton_envelope(c.L, c.mu, l, u);

  SUBCASE("identically zero errors satisfy the recursion trivially") {
    const ContractionSpec spec = contraction_matrix(0.01, c.L, c.mu, m.sigma, psi, Psi);
    const std::vector<Eigen::Vector3d> zeros(5, Eigen::Vector3d::Zero());
    const ContractionReport report = check_contraction(zeros, spec);
    CHECK(report.fraction == 1.0);
  }
  SUBCASE("the guaranteed stepsize contracts every round") {
    const double alpha = dmbfgs_stepsize_bound(c.L, c.mu, m.sigma, l, u);
    const ContractionSpec spec = contraction_matrix(alpha, c.L, c.mu, m.sigma, psi, Psi);
    NodeStates s = dmbfgs_init(Eigen::MatrixXd::Zero(5, 8), prob);
    std::vector<Eigen::Vector3d> errors;
    errors.push_back(error_vector(s.x, s.v, prob, cert.z_star));
    for (int t = 0; t < 300; ++t) {
      dmbfgs_step(s, prob, m.W, alpha, l, u);
      errors.push_back(error_vector(s.x, s.v, prob, cert.z_star));
    }
    const ContractionReport report = check_contraction(errors, spec);
    CHECK(report.fraction == 1.0);
  }
  SUBCASE("grossly exceeding the bound breaks contraction or diverges") {
    // the closed-form bound is conservative by orders of magnitude, so
    // "grossly" here means enough to leave the practical stability region
    const double alpha =
        std::max(1000.0 * dmbfgs_stepsize_bound(c.L, c.mu, m.sigma, l, u), 10.0);
    const ContractionSpec spec = contraction_matrix(alpha, c.L, c.mu, m.sigma, psi, Psi);
    NodeStates s = dmbfgs_init(Eigen::MatrixXd::Zero(5, 8), prob);
    std::vector<Eigen::Vector3d> errors;
    errors.push_back(error_vector(s.x, s.v, prob, cert.z_star));
    bool diverged = false;
    try {
      for (int t = 0; t < 300; ++t) {
        dmbfgs_step(s, prob, m.W, alpha, l, u);
        errors.push_back(error_vector(s.x, s.v, prob, cert.z_star));
      }
    } catch (const divergence_error&) {
      diverged = true;
    }
    const ContractionReport report = check_contraction(errors, spec);
    CHECK((diverged || report.fraction < 1.0));
  }
}

TEST_CASE("communication volume") {
  CHECK(communication_volume(100, 2, 25, 22) == 110000);
  CHECK(communication_volume(0, 2, 25, 22) == 0);
  // one round per iteration is exactly half of two
  CHECK(communication_volume(500, 1, 25, 22) * 2 == communication_volume(500, 2, 25, 22));
  CHECK_THROWS_AS(communication_volume(-1, 2, 25, 22), config_error);
}

TEST_CASE("xi recursion") {
  SUBCASE("boundary stepsize") {
    const XiSequence xs = xi_sequence(1.0, 0.25, 2);
    CHECK(xs.c == doctest::Approx(2.0));
    CHECK(xs.xi[0] == 1.0);
    CHECK(xs.xi[1] == doctest::Approx(1.25));
    CHECK(xs.xi[2] == doctest::Approx(1.390625));
  }
  SUBCASE("vanishing stepsize degenerates to the constant sequence") {
    const XiSequence xs = xi_sequence(1.0, 1e-300, 5);
    CHECK(xs.c == doctest::Approx(1.0));
    for (double v : xs.xi) CHECK(v == doctest::Approx(1.0));
  }
  SUBCASE("monotone, bounded by c over a long horizon") {
    const XiSequence xs = xi_sequence(2.0, 0.125, 10000);
    for (std::size_t t = 1; t < xs.xi.size(); ++t) {
      CHECK(xs.xi[t] >= xs.xi[t - 1]);
      CHECK(xs.xi[t] < xs.c + 1e-12);
    }
  }
  SUBCASE("rejects stepsizes above 1/(4L)") {
    CHECK_THROWS_AS(xi_sequence(1.0, 0.26, 10), config_error);
  }
}

TEST_CASE("metric trace serialization") {
  MetricTrace trace;
  MetricRow row;
  row.iter = 0;
  row.comm_volume = 0;
  row.optimality_error = 0.5;
  trace.rows.push_back(row);
  row.iter = 1;
  row.comm_volume = 1100;
  row.optimality_error = 0.25;
  row.consensus_error = 0.125;
  trace.rows.push_back(row);
  std::ostringstream out;
  trace.write_csv(out);
  CHECK(out.str() ==
        "iter,comm_volume,optimality_error,relative_error,consensus_error,"
        "tracking_error,potential,objective_gap,wall_s\n"
        "0,0,0.5,,,,,,\n"
        "1,1100,0.25,,0.125,,,,\n");
}
