#pragma once

// Single-network critic: V_i(e) ~ w^T phi(e), the greedy control it induces,
// the Hamiltonian residual used as its training signal, and the event-trigger
// test that decides when the held control and weights are refreshed.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "etform/dynamics.hpp"
#include "etform/random.hpp"

namespace etform {

enum class BasisKind {
  /// [e_a e_b for a <= b (row-major upper triangle), then e_a]. For two
  /// inputs: [e1^2, e1 e2, e2^2, e1, e2].
  kQuadratic,
  /// [e_a^2, then e_a e_b for a < b, then e_a]. For two inputs:
  /// [e1^2, e2^2, e1 e2, e1, e2].
  kQuadraticSquaresFirst,
  /// tanh(W e) with a fixed, seeded hidden layer W.
  kTanh,
};

inline const char* to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::kQuadratic: return "quadratic";
    case BasisKind::kQuadraticSquaresFirst: return "quadratic-squares-first";
    case BasisKind::kTanh: return "tanh";
  }
  return "?";
}

inline BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "quadratic") return BasisKind::kQuadratic;
  if (s == "quadratic-squares-first") return BasisKind::kQuadraticSquaresFirst;
  if (s == "tanh") return BasisKind::kTanh;
  throw std::invalid_argument("unknown basis kind '" + s + "'");
}

/// Critic activation phi: R^d -> R^size with an analytic Jacobian.
class Basis {
 public:
  static Basis Quadratic(Eigen::Index input_dim,
                         BasisKind ordering = BasisKind::kQuadratic) {
    Basis b;
    b.kind_ = ordering;
    b.input_dim_ = input_dim;
    if (ordering == BasisKind::kQuadratic) {
      for (Eigen::Index a = 0; a < input_dim; ++a)
        for (Eigen::Index c = a; c < input_dim; ++c) b.terms_.push_back({a, c});
    } else if (ordering == BasisKind::kQuadraticSquaresFirst) {
      for (Eigen::Index a = 0; a < input_dim; ++a) b.terms_.push_back({a, a});
      for (Eigen::Index a = 0; a < input_dim; ++a)
        for (Eigen::Index c = a + 1; c < input_dim; ++c) b.terms_.push_back({a, c});
    } else {
      throw std::invalid_argument("Quadratic() needs a quadratic ordering");
    }
    for (Eigen::Index a = 0; a < input_dim; ++a) b.terms_.push_back({a, -1});
    return b;
  }

  /// Hidden weights drawn uniformly from [-scale, scale].
  static Basis Tanh(Eigen::Index input_dim, Eigen::Index size, std::uint64_t seed,
                    double scale = 1.0) {
    Basis b;
    b.kind_ = BasisKind::kTanh;
    b.input_dim_ = input_dim;
    b.seed_ = seed;
    b.hidden_.resize(size, input_dim);
    std::mt19937_64 rng(seed);
    for (Eigen::Index r = 0; r < size; ++r)
      for (Eigen::Index c = 0; c < input_dim; ++c) b.hidden_(r, c) = uniform(rng, -scale, scale);
    return b;
  }

  BasisKind kind() const { return kind_; }
  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index size() const {
    return kind_ == BasisKind::kTanh ? hidden_.rows()
                                     : static_cast<Eigen::Index>(terms_.size());
  }
  std::uint64_t seed() const { return seed_; }
  const MatrixXd& hidden() const { return hidden_; }

  VectorXd features(const VectorXd& e) const {
    require_dim(e, input_dim_, "critic input");
    if (kind_ == BasisKind::kTanh) return (hidden_ * e).array().tanh().matrix();
    VectorXd phi(size());
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto [a, c] = terms_[k];
      phi(static_cast<Eigen::Index>(k)) = c < 0 ? e(a) : e(a) * e(c);
    }
    return phi;
  }

  /// d phi / d e, size x input_dim.
  MatrixXd jacobian(const VectorXd& e) const {
    require_dim(e, input_dim_, "critic input");
    if (kind_ == BasisKind::kTanh) {
      const VectorXd t = (hidden_ * e).array().tanh().matrix();
      return (1.0 - t.array().square()).matrix().asDiagonal() * hidden_;
    }
    MatrixXd jac = MatrixXd::Zero(size(), input_dim_);
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      const auto [a, c] = terms_[k];
      if (c < 0) {
        jac(row, a) = 1.0;
      } else if (a == c) {
        jac(row, a) = 2.0 * e(a);
      } else {
        jac(row, a) = e(c);
        jac(row, c) = e(a);
      }
    }
    return jac;
  }

  /// Weights reproducing e^T P e exactly (quadratic kinds only).
  VectorXd weights_for_quadratic_form(const MatrixXd& p) const {
    if (kind_ == BasisKind::kTanh)
      throw std::logic_error("a tanh basis cannot represent a quadratic form exactly");
    VectorXd w = VectorXd::Zero(size());
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto [a, c] = terms_[k];
      if (c < 0) continue;
      w(static_cast<Eigen::Index>(k)) = a == c ? p(a, a) : p(a, c) + p(c, a);
    }
    return w;
  }

 private:
  struct Term {
    Eigen::Index a;
    Eigen::Index c;  // -1 for the linear term e_a
  };

  BasisKind kind_ = BasisKind::kQuadratic;
  Eigen::Index input_dim_ = 0;
  std::vector<Term> terms_;
  MatrixXd hidden_;
  std::uint64_t seed_ = 0;
};

/// Quadratic cost weights; extreme eigenvalues are computed once here.
class CostWeights {
 public:
  CostWeights() = default;
  CostWeights(MatrixXd q_ii, MatrixXd r_ii, MatrixXd r_ij)
      : q_ii_(std::move(q_ii)), r_ii_(std::move(r_ii)), r_ij_(std::move(r_ij)) {
    if (q_ii_.rows() != q_ii_.cols() || r_ii_.rows() != r_ii_.cols() ||
        r_ij_.rows() != r_ij_.cols() || r_ii_.rows() != r_ij_.rows())
      throw std::invalid_argument("cost weight matrices must be square and R_ii, R_ij alike");
    const auto eig = [](const MatrixXd& m) {
      return Eigen::SelfAdjointEigenSolver<MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
    };
    const VectorXd q = eig(q_ii_);
    const VectorXd ri = eig(r_ii_);
    const VectorXd rj = eig(r_ij_);
    lambda_min_q_ = q.minCoeff();
    lambda_min_r_ii_ = ri.minCoeff();
    lambda_max_r_ii_ = ri.maxCoeff();
    lambda_min_r_ij_ = rj.minCoeff();
  }

  const MatrixXd& q_ii() const { return q_ii_; }
  const MatrixXd& r_ii() const { return r_ii_; }
  const MatrixXd& r_ij() const { return r_ij_; }
  double lambda_min_q() const { return lambda_min_q_; }
  double lambda_min_r_ii() const { return lambda_min_r_ii_; }
  double lambda_max_r_ii() const { return lambda_max_r_ii_; }
  double lambda_min_r_ij() const { return lambda_min_r_ij_; }

  /// Symmetry plus Q > 0, R_ii > 0, R_ij >= 0. Returns a list of problems.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    const auto sym = [](const MatrixXd& m) {
      return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12;
    };
    if (!sym(q_ii_) || !sym(r_ii_) || !sym(r_ij_)) out.emplace_back("cost weights must be symmetric");
    if (!(lambda_min_q_ > 0.0)) out.emplace_back("q_ii must be positive definite");
    if (!(lambda_min_r_ii_ > 0.0)) out.emplace_back("r_ii must be positive definite");
    if (lambda_min_r_ij_ < 0.0) out.emplace_back("r_ij must be positive semidefinite");
    return out;
  }

 private:
  MatrixXd q_ii_, r_ii_, r_ij_;
  double lambda_min_q_ = 0.0;
  double lambda_min_r_ii_ = 0.0;
  double lambda_max_r_ii_ = 0.0;
  double lambda_min_r_ij_ = 0.0;
};

inline CostWeights baseline_cost_weights() {
  return {0.4 * MatrixXd::Identity(2, 2), 0.1 * MatrixXd::Identity(2, 2),
          0.01 * MatrixXd::Identity(2, 2)};
}

struct TriggerParams {
  double lipschitz_m = 1.0;  // M: ||u* - u*(t_k)|| <= M ||delta||
  double check_period = 0.0;  // 0 means every integration step
};

/// What an agent remembers from its latest trigger instant.
struct HeldSample {
  double time = 0.0;
  VectorXd error;
  VectorXd control;
};

struct CriticState {
  VectorXd weights;
  double learning_rate = 0.1;
  HeldSample held;
};

// Value function -------------------------------------------------------------

/// w^T phi(e).
inline double value_estimate(const Basis& basis, const VectorXd& weights, const VectorXd& e) {
  require_dim(weights, basis.size(), "critic weights");
  return weights.dot(basis.features(e));
}

/// (d phi/d e)^T w.
inline VectorXd value_gradient(const Basis& basis, const VectorXd& weights,
                               const VectorXd& e) {
  require_dim(weights, basis.size(), "critic weights");
  return basis.jacobian(e).transpose() * weights;
}

/// u = -1/2 (d_i + b_i) R_ii^{-1} B^T grad V(e). Evaluate at the held error
/// to get the zero-order-hold control.
inline VectorXd control_law(const Basis& basis, const VectorXd& weights, const VectorXd& e,
                            double coupling_gain, const MatrixXd& b_in, const MatrixXd& r_ii) {
  const Eigen::FullPivLU<MatrixXd> lu(r_ii);
  if (!lu.isInvertible()) throw std::invalid_argument("R_ii is singular");
  const VectorXd grad = value_gradient(basis, weights, e);
  if (b_in.rows() != grad.size())
    throw std::invalid_argument("dimension mismatch: b_in rows vs critic input");
  return -0.5 * coupling_gain * lu.solve(b_in.transpose() * grad);
}

// Cost and Hamiltonian ---------------------------------------------------------

/// e^T Q e + u^T R_ii u + sum_j u_j^T R_ij u_j.
inline double cost_rate(const VectorXd& e, const VectorXd& u,
                        const std::vector<VectorXd>& neighbor_controls,
                        const CostWeights& costs) {
  require_dim(e, costs.q_ii().rows(), "error");
  require_dim(u, costs.r_ii().rows(), "control");
  double c = e.dot(costs.q_ii() * e) + u.dot(costs.r_ii() * u);
  for (const auto& uj : neighbor_controls) {
    require_dim(uj, costs.r_ij().rows(), "neighbor control");
    c += uj.dot(costs.r_ij() * uj);
  }
  return c;
}

/// sigma = (d phi/d e) e'. The critic regressor.
inline VectorXd critic_regressor(const Basis& basis, const VectorXd& e, const VectorXd& e_dot) {
  require_dim(e_dot, basis.input_dim(), "error derivative");
  return basis.jacobian(e) * e_dot;
}

/// cost_rate + grad V^T e'.
inline double hamiltonian_residual(const Basis& basis, const VectorXd& weights,
                                   const VectorXd& e, const VectorXd& u,
                                   const std::vector<VectorXd>& neighbor_controls,
                                   const VectorXd& e_dot, const CostWeights& costs) {
  require_dim(e_dot, e.size(), "error derivative");
  return cost_rate(e, u, neighbor_controls, costs) +
         value_gradient(basis, weights, e).dot(e_dot);
}

// Weight update -----------------------------------------------------------------

enum class UpdateRule {
  /// w+ = w - alpha sigma (sigma^T w + r).
  kGradient,
  /// w+ = w - alpha sigma (sigma^T w + r) / (1 + sigma^T sigma)^2.
  kNormalizedGradient,
};

inline const char* to_string(UpdateRule rule) {
  return rule == UpdateRule::kGradient ? "gradient" : "normalized";
}

inline UpdateRule update_rule_from_string(const std::string& s) {
  if (s == "gradient") return UpdateRule::kGradient;
  if (s == "normalized") return UpdateRule::kNormalizedGradient;
  throw std::invalid_argument("unknown update rule '" + s + "'");
}

/// Jump applied at a trigger instant; between triggers the weights are left
/// untouched by the caller.
inline VectorXd weight_update(const VectorXd& weights, double learning_rate,
                              const VectorXd& regressor, double cost,
                              UpdateRule rule = UpdateRule::kGradient) {
  require_dim(regressor, weights.size(), "critic regressor");
  const double residual = regressor.dot(weights) + cost;
  double step = learning_rate * residual;
  if (rule == UpdateRule::kNormalizedGradient) {
    const double n = 1.0 + regressor.squaredNorm();
    step /= n * n;
  }
  return weights - step * regressor;
}

// Event trigger ------------------------------------------------------------------

/// delta_i = e_i(t_k) - e_i(t).
inline VectorXd measurement_error(const VectorXd& e_held, const VectorXd& e_now) {
  require_dim(e_now, e_held.size(), "current error");
  return e_held - e_now;
}

/// g = ||delta||^2 - [sum_j lmin(R_ij) ||u_j||^2 + lmin(R_ii) ||u_i(t_k)||^2]
///                   / (lmax(R_ii)^2 M^2).
/// The agent triggers once g >= 0.
inline double trigger_function(const VectorXd& delta, const VectorXd& u_held,
                               const std::vector<VectorXd>& neighbor_controls,
                               const CostWeights& costs, const TriggerParams& params) {
  if (!(params.lipschitz_m > 0.0)) throw std::invalid_argument("M must be positive");
  double budget = costs.lambda_min_r_ii() * u_held.squaredNorm();
  for (const auto& uj : neighbor_controls) budget += costs.lambda_min_r_ij() * uj.squaredNorm();
  const double lmax = costs.lambda_max_r_ii();
  return delta.squaredNorm() - budget / (lmax * lmax * params.lipschitz_m * params.lipschitz_m);
}

}  // namespace etform
