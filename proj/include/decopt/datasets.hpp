#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "decopt/problems.hpp"

namespace decopt {

// Parsed LIBSVM-style sample collection. Labels are already mapped to +1/-1;
// feature indices stay 1-based as in the text format.
struct SampleSet {
  std::vector<SparseRow> rows;
  std::vector<double> labels;
  int dimension = 0;

  std::size_t size() const { return rows.size(); }
};

/// Parse LIBSVM text: "label idx:val idx:val ..." per line, strictly
/// increasing indices, blank lines and '#' comment lines skipped.
/// Raw label sets {-1,+1} are kept, {0,1} map to {-1,+1} and {1,2} map to
/// {+1,-1}. The dimension is the largest index seen unless overridden.
SampleSet parse_libsvm(std::istream& in, int dimension_override = 0);

/// Inverse of parse_libsvm; 17 significant digits so values round-trip.
void write_libsvm(const SampleSet& samples, std::ostream& out);

/// Contiguous blocks in file order with sizes differing by at most one;
/// the union reproduces the input exactly.
std::vector<SampleSet> partition(const SampleSet& samples, int n);

LogisticProblem make_logistic_problem(std::vector<SampleSet> per_node, Regularizer reg,
                                      double lambda_hat);

/// Per-node A_i = Q' diag(a) Q with a fresh random orthogonal Q per node,
/// a_1 = 1, a_p = kappa and the interior entries uniform on (1, 2);
/// b_i standard Gaussian. Deterministic for a fixed seed.
QuadraticProblem synth_quadratic(int p, double kappa, int n, std::uint64_t seed);

struct SolutionCertificate {
  enum class Method { analytic, iterative };
  Eigen::VectorXd z_star;
  double residual = 0.0;  // norm of the global gradient at z_star
  Method method = Method::analytic;
};

/// Minimizer of the global objective. Quadratics are solved exactly via a
/// dense symmetric factorization; L2 logistic problems run centralized
/// accelerated gradient descent to residual 1e-12 (cap 10^6 iterations).
SolutionCertificate true_solution(const Problem& prob);

/// Matrix dump of a synthetic quadratic instance: header "n p", then per
/// node p CSV rows of A_i followed by one row of b_i.
void save_quadratic_csv(const QuadraticProblem& prob, std::ostream& out);
QuadraticProblem load_quadratic_csv(std::istream& in);

}  // namespace decopt
