#pragma once

// Leader/follower plant models and the local neighborhood formation error.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "etform/random.hpp"
#include "etform/topology.hpp"

namespace etform {

/// Linear part of the follower model x' = A_sys x + B_in u + f(x).
struct SystemMatrices {
  MatrixXd a_sys;
  MatrixXd b_in;

  Eigen::Index state_dim() const { return a_sys.rows(); }
  Eigen::Index input_dim() const { return b_in.cols(); }

  void check() const {
    if (a_sys.rows() != a_sys.cols())
      throw std::invalid_argument("a_sys must be square");
    if (b_in.rows() != a_sys.rows())
      throw std::invalid_argument("b_in must have as many rows as a_sys");
  }
};

using StateMap = std::function<VectorXd(const VectorXd&)>;

/// Unknown drift terms. `follower` is shared by all followers (the models used
/// here are homogeneous); `lipschitz` is the assumed global constant gamma.
struct Nonlinearity {
  StateMap follower;
  StateMap leader;
  double lipschitz = 0.0;
};

struct MasState {
  VectorXd leader;
  std::vector<VectorXd> followers;
  double time = 0.0;
};

/// Everything needed to evaluate e_i and its time derivative.
struct MasModel {
  SystemMatrices system;
  Nonlinearity nonlinearity;
  Topology topology;
  FormationSpec formation;
};

inline void require_dim(const VectorXd& v, Eigen::Index n, const char* what) {
  if (v.size() != n)
    throw std::invalid_argument(std::string("dimension mismatch: ") + what + " has size " +
                                std::to_string(v.size()) + ", expected " +
                                std::to_string(n));
}

// Baseline plant ----------------------------------------------------------

inline SystemMatrices baseline_system() {
  return {MatrixXd::Identity(2, 2), 0.9 * MatrixXd::Identity(2, 2)};
}

/// f(x) = amplitude * sin(frequency * x), elementwise.
inline StateMap sine_drift(double amplitude, double frequency) {
  return [amplitude, frequency](const VectorXd& x) -> VectorXd {
    return amplitude * (frequency * x.array()).sin().matrix();
  };
}

/// f0(x0) = [0.7, 0.35 cos(x0_1) + 0.2 sin(0.1 x0_1)].
inline VectorXd baseline_leader_drift(const VectorXd& x0) {
  require_dim(x0, 2, "leader state");
  VectorXd out(2);
  out << 0.7, 0.35 * std::cos(x0(0)) + 0.2 * std::sin(0.1 * x0(0));
  return out;
}

inline Nonlinearity baseline_nonlinearity() {
  // |d/dx 0.4 sin(0.1 x)| <= 0.04
  return {sine_drift(0.4, 0.1), baseline_leader_drift, 0.04};
}

inline Nonlinearity zero_nonlinearity(Eigen::Index dim) {
  auto zero = [dim](const VectorXd&) -> VectorXd { return VectorXd::Zero(dim); };
  return {zero, zero, 0.0};
}

// Derivatives ----------------------------------------------------------------

/// A_sys x_i + B_in u_i + f(x_i).
inline VectorXd follower_deriv(const SystemMatrices& sys, const Nonlinearity& nl,
                               const VectorXd& x, const VectorXd& u) {
  require_dim(x, sys.state_dim(), "follower state");
  require_dim(u, sys.input_dim(), "follower input");
  VectorXd fx = nl.follower(x);
  require_dim(fx, sys.state_dim(), "follower nonlinearity output");
  return sys.a_sys * x + sys.b_in * u + fx;
}

inline VectorXd leader_deriv(const Nonlinearity& nl, const VectorXd& x0) {
  VectorXd out = nl.leader(x0);
  require_dim(out, x0.size(), "leader nonlinearity output");
  return out;
}

/// e_i = sum_j a_ij (x_i - iota_i - x_j + iota_j) + b_i (x_i - x_0 - iota_i).
inline VectorXd formation_error(const Topology& topology, const FormationSpec& formation,
                                const MasState& state, std::size_t i) {
  check_index(topology, i);
  const Eigen::Index d = state.leader.size();
  if (state.followers.size() != topology.size() || formation.size() != topology.size())
    throw std::invalid_argument("dimension mismatch: follower count differs from topology");
  const VectorXd& xi = state.followers[i];
  const VectorXd& ii = formation[i];
  require_dim(xi, d, "follower state");
  require_dim(ii, d, "formation offset");

  VectorXd e = VectorXd::Zero(d);
  for (std::size_t j = 0; j < topology.size(); ++j) {
    const double a = topology.weight(i, j);
    if (a == 0.0) continue;
    e += a * (xi - ii - state.followers[j] + formation[j]);
  }
  e += topology.pin(i) * (xi - state.leader - ii);
  return e;
}

inline std::vector<VectorXd> formation_errors(const Topology& topology,
                                              const FormationSpec& formation,
                                              const MasState& state) {
  std::vector<VectorXd> out;
  out.reserve(topology.size());
  for (std::size_t i = 0; i < topology.size(); ++i)
    out.push_back(formation_error(topology, formation, state, i));
  return out;
}

/// F_i = sum_j a_ij (f(x_i) - f(x_j)) + b_i (f(x_i) - f0(x_0)).
inline VectorXd nonlinear_mismatch(const MasModel& model, const MasState& state,
                                   std::size_t i) {
  const Topology& topo = model.topology;
  const VectorXd fi = model.nonlinearity.follower(state.followers[i]);
  VectorXd out = VectorXd::Zero(fi.size());
  for (std::size_t j = 0; j < topo.size(); ++j) {
    const double a = topo.weight(i, j);
    if (a == 0.0) continue;
    out += a * (fi - model.nonlinearity.follower(state.followers[j]));
  }
  out += topo.pin(i) * (fi - model.nonlinearity.leader(state.leader));
  return out;
}

/// C_i = A_sys [ sum_j a_ij (iota_i - iota_j) + b_i (iota_i + x_0) ].
///
/// The b_i A_sys x_0 part is what makes e_i' agree with the time derivative of
/// e_i; it vanishes only when the leader sits at the origin.
inline VectorXd offset_drift(const MasModel& model, const MasState& state, std::size_t i) {
  const Topology& topo = model.topology;
  const FormationSpec& form = model.formation;
  VectorXd acc = VectorXd::Zero(state.leader.size());
  for (std::size_t j = 0; j < topo.size(); ++j) {
    const double a = topo.weight(i, j);
    if (a == 0.0) continue;
    acc += a * (form[i] - form[j]);
  }
  acc += topo.pin(i) * (form[i] + state.leader);
  return model.system.a_sys * acc;
}

/// e_i' = A e_i + B (d_i + b_i) u_i - B sum_j a_ij u_j + F_i + C_i.
inline VectorXd error_deriv(const MasModel& model, const MasState& state,
                            const std::vector<VectorXd>& controls, std::size_t i) {
  const Topology& topo = model.topology;
  check_index(topo, i);
  if (controls.size() != topo.size())
    throw std::invalid_argument("dimension mismatch: one control per follower required");
  const SystemMatrices& sys = model.system;
  for (const auto& u : controls) require_dim(u, sys.input_dim(), "control");

  const VectorXd e = formation_error(topo, model.formation, state, i);
  VectorXd neighbor_input = VectorXd::Zero(sys.input_dim());
  for (std::size_t j = 0; j < topo.size(); ++j) {
    const double a = topo.weight(i, j);
    if (a != 0.0) neighbor_input += a * controls[j];
  }
  const double gain = degree(topo, i) + topo.pin(i);
  return sys.a_sys * e + gain * (sys.b_in * controls[i]) - sys.b_in * neighbor_input +
         nonlinear_mismatch(model, state, i) + offset_drift(model, state, i);
}

/// Largest observed ||f(p) - f(q)|| / ||p - q|| over random pairs drawn from
/// [-box, box]^dim. Used to audit a declared Lipschitz constant.
inline double lipschitz_audit(const StateMap& f, Eigen::Index dim, std::size_t samples,
                              std::uint64_t seed, double box = 100.0) {
  std::mt19937_64 rng(seed);
  auto draw = [&] {
    VectorXd v(dim);
    for (Eigen::Index k = 0; k < dim; ++k)
      v(k) = uniform(rng, -box, box);
    return v;
  };
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const VectorXd p = draw();
    const VectorXd q = draw();
    const double gap = (p - q).norm();
    if (gap == 0.0) continue;
    worst = std::max(worst, (f(p) - f(q)).norm() / gap);
  }
  return worst;
}

}  // namespace etform
