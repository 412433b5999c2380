#pragma once

// Offline policy iteration for the coupled HJB equations. Each evaluation step
// fits critic weights by least-squares collocation of the Hamiltonian residual;
// each improvement step takes the greedy control of the fitted critic.
//
// riccati_oracle() is an independent dense solver for the linear-quadratic
// reduction, used to check what policy iteration converges to.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "etform/critic.hpp"
#include "etform/dynamics.hpp"
#include "etform/random.hpp"
#include "etform/topology.hpp"

namespace etform {

/// Feedback on the agent's own formation error.
using Policy = std::function<VectorXd(const VectorXd& e)>;

/// Extra error-space drift F_i + C_i as a function of all agents' errors.
/// Empty means the linear reduction (f = 0, zero offsets, leader at rest).
using ErrorDrift = std::function<VectorXd(std::size_t i, const std::vector<VectorXd>& errors)>;

struct PiConfig {
  std::size_t n_collocation_points = 400;
  /// Per-dimension [lo, hi] bounds for sampled errors.
  std::vector<std::pair<double, double>> sampling_box = {{-5.0, 5.0}, {-5.0, 5.0}};
  std::size_t max_iterations = 50;
  double tolerance = 1e-9;
  std::uint64_t seed = 1;
};

struct PiProblem {
  SystemMatrices system;
  Topology topology;
  Basis basis;
  CostWeights costs;
  ErrorDrift drift;
};

struct PiIteration {
  std::size_t index = 0;
  std::vector<VectorXd> weights;
  std::vector<double> residual_norms;
  double weight_change = 0.0;
};

struct PiResult {
  std::vector<VectorXd> weights;
  std::size_t iterations = 0;
  std::vector<double> residual_norms;
  bool converged = false;
  std::vector<PiIteration> trace;
};

struct PolicyEvaluation {
  std::vector<VectorXd> weights;
  std::vector<double> residual_norms;     // RMS Hamiltonian residual per agent
  std::vector<double> condition_numbers;  // of the collocation matrix
};

/// The collocation matrix did not have full column rank (too few distinct,
/// insufficiently exciting samples).
class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(std::size_t agent, double condition)
      : std::runtime_error("collocation matrix for agent " + std::to_string(agent + 1) +
                           " is rank deficient (condition number " +
                           std::to_string(condition) + "); samples lack excitation"),
        agent_(agent),
        condition_(condition) {}
  std::size_t agent() const { return agent_; }
  double condition_number() const { return condition_; }

 private:
  std::size_t agent_;
  double condition_;
};

class RiccatiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One collocation point holds a sampled error for every agent.
using CollocationPoint = std::vector<VectorXd>;

inline std::vector<CollocationPoint> collocation_points(const PiProblem& problem,
                                                        const PiConfig& config) {
  const Eigen::Index dim = problem.system.state_dim();
  if (static_cast<Eigen::Index>(config.sampling_box.size()) != dim)
    throw std::invalid_argument("sampling box needs one [lo, hi] pair per state dimension");
  std::mt19937_64 rng(config.seed);
  std::vector<CollocationPoint> points(config.n_collocation_points);
  for (auto& point : points) {
    point.resize(problem.topology.size());
    for (auto& e : point) {
      e.resize(dim);
      for (Eigen::Index k = 0; k < dim; ++k) {
        const auto [lo, hi] = config.sampling_box[static_cast<std::size_t>(k)];
        e(k) = uniform(rng, lo, hi);
      }
    }
  }
  return points;
}

/// e_i' under the given controls, in error coordinates.
inline VectorXd error_space_deriv(const PiProblem& problem, const CollocationPoint& errors,
                                  const std::vector<VectorXd>& controls, std::size_t i) {
  const Topology& topo = problem.topology;
  const MatrixXd& b = problem.system.b_in;
  VectorXd neighbor_input = VectorXd::Zero(b.cols());
  for (std::size_t j = 0; j < topo.size(); ++j)
    if (topo.weight(i, j) != 0.0) neighbor_input += topo.weight(i, j) * controls[j];
  VectorXd out = problem.system.a_sys * errors[i] +
                 (degree(topo, i) + topo.pin(i)) * (b * controls[i]) - b * neighbor_input;
  if (problem.drift) out += problem.drift(i, errors);
  return out;
}

/// Fits each agent's critic so the Hamiltonian residual of the current
/// policies vanishes in the least-squares sense over the points. All agents
/// are evaluated against the same (previous) policies.
inline PolicyEvaluation policy_evaluation(const PiProblem& problem,
                                          const std::vector<Policy>& policies,
                                          const std::vector<CollocationPoint>& points) {
  const Topology& topo = problem.topology;
  const std::size_t n = topo.size();
  if (policies.size() != n) throw std::invalid_argument("one policy per agent required");
  const Eigen::Index size = problem.basis.size();
  const auto n_pts = static_cast<Eigen::Index>(points.size());

  PolicyEvaluation out;
  std::vector<MatrixXd> regressors(n, MatrixXd(n_pts, size));
  std::vector<VectorXd> targets(n, VectorXd(n_pts));
  std::vector<VectorXd> controls(n);
  std::vector<VectorXd> neighbor_u;

  for (Eigen::Index p = 0; p < n_pts; ++p) {
    const CollocationPoint& errors = points[static_cast<std::size_t>(p)];
    for (std::size_t j = 0; j < n; ++j) controls[j] = policies[j](errors[j]);
    for (std::size_t i = 0; i < n; ++i) {
      const VectorXd e_dot = error_space_deriv(problem, errors, controls, i);
      regressors[i].row(p) = critic_regressor(problem.basis, errors[i], e_dot).transpose();
      neighbor_u.clear();
      for (std::size_t j : neighbors(topo, i)) neighbor_u.push_back(controls[j]);
      targets[i](p) = -cost_rate(errors[i], controls[i], neighbor_u, problem.costs);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::JacobiSVD<MatrixXd> svd(regressors[i]);
    const VectorXd& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                                : std::numeric_limits<double>::infinity();
    Eigen::ColPivHouseholderQR<MatrixXd> qr(regressors[i]);
    if (n_pts < size || qr.rank() < size || !(cond < 1e12)) throw RankDeficientError(i, cond);
    VectorXd w = qr.solve(targets[i]);
    out.residual_norms.push_back((regressors[i] * w - targets[i]).norm() /
                                 std::sqrt(static_cast<double>(n_pts)));
    out.condition_numbers.push_back(cond);
    out.weights.push_back(std::move(w));
  }
  return out;
}

/// Greedy policies of the given critics.
inline std::vector<Policy> policy_improvement(const PiProblem& problem,
                                              const std::vector<VectorXd>& weights) {
  const Topology& topo = problem.topology;
  if (weights.size() != topo.size()) throw std::invalid_argument("one weight vector per agent");
  if (!Eigen::FullPivLU<MatrixXd>(problem.costs.r_ii()).isInvertible())
    throw std::invalid_argument("R_ii is singular");
  std::vector<Policy> out;
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const double gain = degree(topo, i) + topo.pin(i);
    out.push_back([basis = problem.basis, w = weights[i], gain, b = problem.system.b_in,
                   r = problem.costs.r_ii()](const VectorXd& e) {
      return control_law(basis, w, e, gain, b, r);
    });
  }
  return out;
}

inline bool is_hurwitz(const MatrixXd& m) {
  return Eigen::EigenSolver<MatrixXd>(m, false).eigenvalues().real().maxCoeff() < 0.0;
}

/// Smallest k in {0.1, 0.2, 0.4, ...} for which u_i = -k B^T e_i stabilizes
/// the stacked linear error dynamics (I x A) - k (L+B) x (B B^T).
inline double admissible_feedback_gain(const PiProblem& problem) {
  const MatrixXd h = pinned_laplacian(problem.topology);
  const MatrixXd& a = problem.system.a_sys;
  const MatrixXd bbt = problem.system.b_in * problem.system.b_in.transpose();
  const Eigen::Index n = h.rows();
  const Eigen::Index d = a.rows();
  MatrixXd drift = MatrixXd::Zero(n * d, n * d);
  MatrixXd coupling = MatrixXd::Zero(n * d, n * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    drift.block(i * d, i * d, d, d) = a;
    for (Eigen::Index j = 0; j < n; ++j) coupling.block(i * d, j * d, d, d) = h(i, j) * bbt;
  }
  double k = 0.1;
  for (int attempt = 0; attempt < 60; ++attempt, k *= 2.0)
    if (is_hurwitz(drift - k * coupling)) return k;
  throw std::runtime_error("no stabilizing linear feedback found for the initial policy");
}

inline std::vector<Policy> default_admissible_policies(const PiProblem& problem) {
  const double k = admissible_feedback_gain(problem);
  std::vector<Policy> out(problem.topology.size(),
                          [k, bt = MatrixXd(problem.system.b_in.transpose())](
                              const VectorXd& e) -> VectorXd { return -k * (bt * e); });
  return out;
}

/// Alternates evaluation and improvement until the largest per-agent weight
/// change drops below the tolerance. The first change is measured against
/// `initial_weights` (zeros when omitted).
inline PiResult run_pi(const PiProblem& problem, std::vector<Policy> initial_policies,
                       const PiConfig& config,
                       std::optional<std::vector<VectorXd>> initial_weights = std::nullopt) {
  if (!(config.tolerance > 0.0)) throw std::invalid_argument("PI tolerance must be positive");
  if (config.n_collocation_points < static_cast<std::size_t>(problem.basis.size()))
    throw std::invalid_argument("need at least as many collocation points as basis functions");
  const std::size_t n = problem.topology.size();
  const auto points = collocation_points(problem, config);

  std::vector<VectorXd> previous =
      initial_weights ? *initial_weights
                      : std::vector<VectorXd>(n, VectorXd::Zero(problem.basis.size()));
  std::vector<Policy> policies = std::move(initial_policies);

  PiResult result;
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    PolicyEvaluation eval = policy_evaluation(problem, policies, points);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      change = std::max(change, (eval.weights[i] - previous[i]).norm());

    result.trace.push_back({it, eval.weights, eval.residual_norms, change});
    result.iterations = it;
    result.weights = eval.weights;
    result.residual_norms = eval.residual_norms;
    previous = std::move(eval.weights);
    if (change < config.tolerance) {
      result.converged = true;
      break;
    }
    policies = policy_improvement(problem, previous);
  }
  return result;
}

// Riccati oracle ----------------------------------------------------------------

/// X with A^T X + X A + Q = 0, by dense Kronecker vectorization.
inline MatrixXd solve_lyapunov(const MatrixXd& a, const MatrixXd& q) {
  const Eigen::Index n = a.rows();
  MatrixXd big = MatrixXd::Zero(n * n, n * n);
  // vec(A^T X) = (I x A^T) vec X, vec(X A) = (A^T x I) vec X, column-major vec.
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) {
      const Eigen::Index row = c * n + r;
      for (Eigen::Index k = 0; k < n; ++k) {
        big(row, c * n + k) += a(k, r);  // (A^T X)(r,c) = sum_k A(k,r) X(k,c)
        big(row, k * n + r) += a(k, c);  // (X A)(r,c)   = sum_k X(r,k) A(k,c)
      }
    }
  const Eigen::FullPivLU<MatrixXd> lu(big);
  if (!lu.isInvertible()) throw RiccatiError("Lyapunov operator is singular");
  const VectorXd rhs = -Eigen::Map<const VectorXd>(q.data(), n * n);
  VectorXd x = lu.solve(rhs);
  MatrixXd out = Eigen::Map<MatrixXd>(x.data(), n, n);
  return 0.5 * (out + out.transpose());
}

inline double care_residual(const MatrixXd& a, const MatrixXd& b, const MatrixXd& q,
                            const MatrixXd& r, const MatrixXd& p) {
  const MatrixXd res =
      a.transpose() * p + p * a - p * b * r.ldlt().solve(b.transpose()) * p + q;
  return res.norm();
}

/// Stabilizing solution of A^T P + P A - P B R^{-1} B^T P + Q = 0 by
/// Newton-Kleinman iteration. The seed gain comes from Bass's method when A is
/// not already Hurwitz.
inline MatrixXd riccati_oracle(const MatrixXd& a, const MatrixXd& b, const MatrixXd& q,
                               const MatrixXd& r, double residual_tolerance = 1e-10) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n ||
      r.rows() != b.cols() || r.cols() != b.cols())
    throw std::invalid_argument("dimension mismatch in Riccati data");
  const Eigen::LDLT<MatrixXd> r_fact(r);
  if (r_fact.info() != Eigen::Success || !r_fact.isPositive() ||
      r_fact.vectorD().minCoeff() <= 0.0)
    throw std::invalid_argument("R must be positive definite");

  MatrixXd k = MatrixXd::Zero(b.cols(), n);
  if (!is_hurwitz(a)) {
    const double shift = a.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
    const MatrixXd as = -(a + shift * MatrixXd::Identity(n, n)).transpose();
    // (A + sI) Z + Z (A + sI)^T = 2 B B^T
    const MatrixXd z = solve_lyapunov(as, 2.0 * b * b.transpose());
    const Eigen::LDLT<MatrixXd> z_fact(z);
    if (z_fact.info() != Eigen::Success || z_fact.vectorD().minCoeff() <= 0.0)
      throw RiccatiError("(A, B) is not controllable; no stabilizing seed");
    k = b.transpose() * z_fact.solve(MatrixXd::Identity(n, n));
    if (!is_hurwitz(a - b * k)) throw RiccatiError("seed gain is not stabilizing");
  }

  MatrixXd p = MatrixXd::Zero(n, n);
  for (int it = 0; it < 200; ++it) {
    const MatrixXd closed = a - b * k;
    const MatrixXd next = solve_lyapunov(closed, q + k.transpose() * r * k);
    const double step = (next - p).norm();
    p = next;
    k = r_fact.solve(b.transpose() * p);
    if (step <= 1e-15 * (1.0 + p.norm())) break;
  }
  if (!is_hurwitz(a - b * k)) throw RiccatiError("Newton iteration lost stability");
  const double res = care_residual(a, b, q, r, p);
  if (!(res < residual_tolerance * (1.0 + p.norm())))
    throw RiccatiError("Riccati residual " + std::to_string(res) + " above tolerance");
  return p;
}

}  // namespace etform
