#include "decopt/datasets.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "decopt/rng.hpp"

namespace decopt {

namespace {

bool is_blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

// The three admissible raw label alphabets, checked in order.
enum class LabelScheme { pm_one, zero_one, one_two, unmapped };

LabelScheme classify_labels(const std::set<double>& raw) {
  auto subset_of = [&](std::initializer_list<double> set) {
    return std::all_of(raw.begin(), raw.end(), [&](double v) {
      return std::any_of(set.begin(), set.end(), [&](double s) { return s == v; });
    });
  };
  if (subset_of({-1.0, 1.0})) return LabelScheme::pm_one;
  if (subset_of({0.0, 1.0})) return LabelScheme::zero_one;
  if (subset_of({1.0, 2.0})) return LabelScheme::one_two;
  return LabelScheme::unmapped;
}

double parse_double_token(const std::string& token, std::size_t line_no, const char* what) {
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &consumed);
  } catch (const std::exception&) {
    throw parse_error(line_no, std::string("malformed ") + what + " \"" + token + "\"");
  }
  if (consumed != token.size()) {
    throw parse_error(line_no, std::string("malformed ") + what + " \"" + token + "\"");
  }
  return value;
}

}  // namespace

SampleSet parse_libsvm(std::istream& in, int dimension_override) {
  SampleSet out;
  std::vector<double> raw_labels;
  std::set<double> raw_set;
  std::string line;
  std::size_t line_no = 0;
  int max_index = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) continue;
    std::istringstream tokens(line);
    std::string token;
    tokens >> token;
    const double raw = parse_double_token(token, line_no, "label");
    raw_set.insert(raw);
    if (classify_labels(raw_set) == LabelScheme::unmapped) {
      throw parse_error(line_no, "label set is not mappable to {-1,+1}");
    }
    raw_labels.push_back(raw);

    SparseRow row;
    int prev_index = 0;
    while (tokens >> token) {
      const std::size_t colon = token.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == token.size()) {
        throw parse_error(line_no, "malformed feature token \"" + token + "\"");
      }
      std::size_t consumed = 0;
      int index = 0;
      try {
        index = std::stoi(token.substr(0, colon), &consumed);
      } catch (const std::exception&) {
        throw parse_error(line_no, "malformed feature index in \"" + token + "\"");
      }
      if (consumed != colon || index < 1) {
        throw parse_error(line_no, "malformed feature index in \"" + token + "\"");
      }
      if (index <= prev_index) {
        throw parse_error(line_no, "feature indices must be strictly increasing");
      }
      if (dimension_override > 0 && index > dimension_override) {
        throw parse_error(line_no, "feature index exceeds the dimension override");
      }
      const double value = parse_double_token(token.substr(colon + 1), line_no, "feature value");
      row.idx.push_back(index);
      row.val.push_back(value);
      prev_index = index;
    }
    max_index = std::max(max_index, prev_index);
    out.rows.push_back(std::move(row));
  }

  const LabelScheme scheme = classify_labels(raw_set);
  out.labels.reserve(raw_labels.size());
  for (double raw : raw_labels) {
    switch (scheme) {
      case LabelScheme::pm_one:
        out.labels.push_back(raw);
        break;
      case LabelScheme::zero_one:
        out.labels.push_back(raw == 0.0 ? -1.0 : 1.0);
        break;
      case LabelScheme::one_two:
        out.labels.push_back(raw == 1.0 ? 1.0 : -1.0);
        break;
      case LabelScheme::unmapped:
        break;  // unreachable: rejected while reading
    }
  }
  out.dimension = dimension_override > 0 ? dimension_override : max_index;
  return out;
}

void write_libsvm(const SampleSet& samples, std::ostream& out) {
  char buf[40];
  for (std::size_t r = 0; r < samples.rows.size(); ++r) {
    out << (samples.labels[r] > 0 ? "+1" : "-1");
    const SparseRow& row = samples.rows[r];
    for (std::size_t k = 0; k < row.idx.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", row.val[k]);
      out << ' ' << row.idx[k] << ':' << buf;
    }
    out << '\n';
  }
}

std::vector<SampleSet> partition(const SampleSet& samples, int n) {
  if (n < 1) throw config_error("partition: node count must be >= 1");
  const std::size_t m = samples.size();
  if (static_cast<std::size_t>(n) > m) {
    throw config_error("partition: more nodes than samples");
  }
  std::vector<SampleSet> parts(n);
  const std::size_t base = m / n;
  const std::size_t remainder = m % n;
  std::size_t next = 0;
  for (int i = 0; i < n; ++i) {
    const std::size_t size = base + (static_cast<std::size_t>(i) < remainder ? 1 : 0);
    parts[i].dimension = samples.dimension;
    parts[i].rows.assign(samples.rows.begin() + next, samples.rows.begin() + next + size);
    parts[i].labels.assign(samples.labels.begin() + next, samples.labels.begin() + next + size);
    next += size;
  }
  return parts;
}

LogisticProblem make_logistic_problem(std::vector<SampleSet> per_node, Regularizer reg,
                                      double lambda_hat) {
  if (per_node.empty()) throw config_error("make_logistic_problem: need at least one node");
  LogisticProblem p;
  p.reg = reg;
  p.lambda_hat = lambda_hat;
  p.dimension = 0;
  for (const SampleSet& s : per_node) p.dimension = std::max(p.dimension, s.dimension);
  p.data.reserve(per_node.size());
  for (SampleSet& s : per_node) {
    LogisticNodeData nd;
    nd.rows = std::move(s.rows);
    nd.labels = std::move(s.labels);
    p.data.push_back(std::move(nd));
  }
  return p;
}

QuadraticProblem synth_quadratic(int p, double kappa, int n, std::uint64_t seed) {
  if (p < 2) throw config_error("synth_quadratic: dimension must be >= 2");
  if (!(kappa >= 1.0)) throw config_error("synth_quadratic: condition number must be >= 1");
  if (n < 1) throw config_error("synth_quadratic: node count must be >= 1");
  Rng rng(seed);
  QuadraticProblem prob;
  prob.A.reserve(n);
  prob.b.reserve(n);
  for (int node = 0; node < n; ++node) {
    Eigen::MatrixXd gauss(p, p);
    for (int c = 0; c < p; ++c) {
      for (int r = 0; r < p; ++r) gauss(r, c) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    // fix the sign convention so Q is unique given the Gaussian draw
    for (int k = 0; k < p; ++k) {
      if (R(k, k) < 0.0) Q.col(k) = -Q.col(k);
    }
    Eigen::VectorXd spectrum(p);
    spectrum(0) = 1.0;
    for (int k = 1; k + 1 < p; ++k) spectrum(k) = rng.uniform(1.0, 2.0);
    spectrum(p - 1) = kappa;

    Eigen::MatrixXd A = Q.transpose() * spectrum.asDiagonal() * Q;
    A = 0.5 * (A + A.transpose());  // exact symmetry against rounding
    prob.A.push_back(std::move(A));

    Eigen::VectorXd b(p);
    for (int k = 0; k < p; ++k) b(k) = rng.normal();
    prob.b.push_back(std::move(b));
  }
  return prob;
}

namespace {

SolutionCertificate solve_quadratic(const QuadraticProblem& q) {
  const int p = q.dim();
  Eigen::MatrixXd sum_A = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd sum_b = Eigen::VectorXd::Zero(p);
  for (int i = 0; i < q.nodes(); ++i) {
    sum_A += q.A[i];
    sum_b += q.b[i];
  }
  SolutionCertificate cert;
  cert.method = SolutionCertificate::Method::analytic;
  cert.z_star = sum_A.ldlt().solve(-sum_b);
  cert.residual = ((sum_A * cert.z_star + sum_b) / q.nodes()).norm();
  return cert;
}

SolutionCertificate solve_logistic_l2(const Problem& prob) {
  const auto& p = std::get<LogisticProblem>(prob);
  const int dim = p.dim();
  const int n = p.nodes();
  // smoothness of F = (1/n) sum f_i via the pooled Gram matrix
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  for (const LogisticNodeData& nd : p.data) {
    for (const SparseRow& row : nd.rows) {
      for (std::size_t a = 0; a < row.idx.size(); ++a) {
        for (std::size_t b = 0; b < row.idx.size(); ++b) {
          gram(row.idx[a] - 1, row.idx[b] - 1) += row.val[a] * row.val[b];
        }
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const double L = 0.25 * es.eigenvalues().maxCoeff() / n + p.lambda_hat / n;
  const double mu = p.lambda_hat / n;
  const double momentum = (std::sqrt(L) - std::sqrt(mu)) / (std::sqrt(L) + std::sqrt(mu));

  constexpr double tol = 1e-12;
  constexpr long cap = 1'000'000;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd lookahead = z;
  SolutionCertificate cert;
  cert.method = SolutionCertificate::Method::iterative;
  for (long it = 0; it < cap; ++it) {
    const Eigen::VectorXd step = lookahead - global_gradient(prob, lookahead) / L;
    lookahead = step + momentum * (step - z);
    z = step;
    cert.residual = global_gradient(prob, z).norm();
    if (cert.residual <= tol) {
      cert.z_star = z;
      return cert;
    }
  }
  throw std::runtime_error("true_solution: accelerated gradient did not reach residual 1e-12 within 10^6 iterations");
}

}  // namespace

SolutionCertificate true_solution(const Problem& prob) {
  if (const auto* q = std::get_if<QuadraticProblem>(&prob)) {
    return solve_quadratic(*q);
  }
  const auto& p = std::get<LogisticProblem>(prob);
  if (p.reg != Regularizer::L2 || !(p.lambda_hat > 0.0)) {
    throw config_error("true_solution: requires a strongly convex problem (quadratic or L2 logistic)");
  }
  return solve_logistic_l2(prob);
}

namespace {

void dump_csv_rows(const Eigen::MatrixXd& m, std::ostream& out) {
  char buf[40];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace

void save_quadratic_csv(const QuadraticProblem& prob, std::ostream& out) {
  out << prob.nodes() << ' ' << prob.dim() << '\n';
  for (int i = 0; i < prob.nodes(); ++i) {
    dump_csv_rows(prob.A[i], out);
    dump_csv_rows(prob.b[i].transpose(), out);
  }
}

QuadraticProblem load_quadratic_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw parse_error(1, "expected header \"n p\"");
  std::istringstream head(line);
  int n = 0, p = 0;
  if (!(head >> n >> p) || n < 1 || p < 1) throw parse_error(1, "malformed header \"n p\"");
  std::size_t line_no = 1;
  auto read_row = [&](Eigen::Index len) {
    if (!std::getline(in, line)) throw parse_error(line_no + 1, "unexpected end of matrix dump");
    ++line_no;
    Eigen::VectorXd row(len);
    std::istringstream fields(line);
    std::string field;
    for (Eigen::Index k = 0; k < len; ++k) {
      if (!std::getline(fields, field, ',')) {
        throw parse_error(line_no, "expected " + std::to_string(len) + " fields");
      }
      row(k) = parse_double_token(field, line_no, "matrix entry");
    }
    return row;
  };
  QuadraticProblem prob;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd A(p, p);
    for (int r = 0; r < p; ++r) A.row(r) = read_row(p).transpose();
    prob.A.push_back(std::move(A));
    prob.b.push_back(read_row(p));
  }
  return prob;
}

}  // namespace decopt
