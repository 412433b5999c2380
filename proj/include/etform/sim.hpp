#pragma once

// Fixed-step closed-loop simulation of the event-triggered critic controller
// under DoS attacks.
//
// Each grid step k (t = k dt):
//   1. attacked steps apply u = 0 to every follower; nothing is sampled,
//      triggered, or learned;
//   2. otherwise each agent compares its trigger function against the last
//      broadcast controls of the previous step; triggered agents update their
//      critic weights and refresh the held error and control;
//   3. the running cost is accumulated (trapezoid) and the row is logged;
//   4. leader and followers advance one RK4 step with controls held.
// The first step and the first attack-free step after each attack force a
// trigger for every agent.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "etform/critic.hpp"
#include "etform/dos.hpp"
#include "etform/dynamics.hpp"
#include "etform/topology.hpp"

namespace etform {

// Integrator ---------------------------------------------------------------------

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(double x) { return std::isfinite(x); }
inline bool all_finite(const VectorXd& x) { return x.allFinite(); }

/// One classical Runge-Kutta step of x' = deriv(t, x). Any input held
/// inside `deriv` stays constant across the step.
template <class State, class Deriv>
State rk4_step(Deriv&& deriv, const State& x, double t, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step needs dt > 0");
  const State k1 = deriv(t, x);
  const State k2 = deriv(t + 0.5 * dt, State(x + (0.5 * dt) * k1));
  const State k3 = deriv(t + 0.5 * dt, State(x + (0.5 * dt) * k2));
  const State k4 = deriv(t + dt, State(x + dt * k3));
  if (!all_finite(k1) || !all_finite(k2) || !all_finite(k3) || !all_finite(k4))
    throw NonFiniteError("non-finite derivative at t = " + std::to_string(t));
  return State(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

// Configuration --------------------------------------------------------------------

struct CriticConfig {
  Basis basis = Basis::Quadratic(2);
  VectorXd initial_weights;  // shared by every agent
  double learning_rate = 0.1;
  UpdateRule rule = UpdateRule::kGradient;
};

struct SimConfig {
  MasModel model;
  CostWeights costs;
  TriggerParams trigger;
  CriticConfig critic;
  DosSchedule dos;
  StabilityConstants stability;
  MasState initial;
  double dt = 1e-3;
  double t_final = 10.0;
  std::uint64_t seed = 0;
  bool retrigger_after_attack = true;
  /// A state component beyond this magnitude counts as divergence.
  double divergence_bound = 1e9;

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(t_final / dt)); }

  /// Every problem found, empty when the config can be simulated.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (!(dt > 0.0)) out.emplace_back("dt must be positive");
    if (!(t_final >= dt)) out.emplace_back("t_final must be at least dt");
    const auto topo = validate(model.topology);
    for (const auto& v : topo.violations) out.push_back("topology: " + v.code);
    const std::size_t n = model.topology.size();
    const Eigen::Index d = model.system.state_dim();
    if (model.system.a_sys.rows() != model.system.a_sys.cols())
      out.emplace_back("a_sys must be square");
    if (model.system.b_in.rows() != d) out.emplace_back("b_in rows must equal state dimension");
    if (model.formation.size() != n) out.emplace_back("formation needs one offset per follower");
    for (const auto& o : model.formation.offsets)
      if (o.size() != d) out.emplace_back("formation offset dimension differs from state");
    if (initial.followers.size() != n)
      out.emplace_back("initial state needs one vector per follower");
    if (initial.leader.size() != d) out.emplace_back("leader initial state dimension mismatch");
    for (const auto& x : initial.followers)
      if (x.size() != d) out.emplace_back("follower initial state dimension mismatch");
    for (auto& p : costs.problems()) out.push_back(std::move(p));
    if (costs.q_ii().rows() != d) out.emplace_back("q_ii dimension differs from state");
    if (costs.r_ii().rows() != model.system.input_dim())
      out.emplace_back("r_ii dimension differs from input");
    if (critic.basis.input_dim() != d) out.emplace_back("critic input dimension differs from state");
    if (critic.initial_weights.size() != critic.basis.size())
      out.emplace_back("initial weights must have one entry per basis function");
    if (!(critic.learning_rate > 0.0 && critic.learning_rate < 1.0))
      out.emplace_back("learning rate must lie in (0, 1)");
    if (!(trigger.lipschitz_m > 0.0)) out.emplace_back("trigger M must be positive");
    if (trigger.check_period < 0.0 || (trigger.check_period > 0.0 && trigger.check_period < dt))
      out.emplace_back("trigger check period must be 0 or at least dt");
    return out;
  }
};

// Log ------------------------------------------------------------------------------

struct TriggerEvent {
  std::size_t step = 0;
  double time = 0.0;
  std::size_t agent = 0;
  bool forced = false;
};

struct LogRow {
  double time = 0.0;
  bool dos_active = false;
  VectorXd leader;
  std::vector<VectorXd> states;
  std::vector<VectorXd> errors;
  std::vector<VectorXd> controls;  // applied over [t, t + dt)
  std::vector<VectorXd> weights;   // after any update at this step
  std::vector<double> delta_norms;
  std::vector<double> cost_rates;
  std::vector<double> cumulative_costs;
};

struct TrajectoryLog {
  std::size_t n_followers = 0;
  Eigen::Index state_dim = 0;
  Eigen::Index input_dim = 0;
  Eigen::Index basis_size = 0;
  double dt = 0.0;
  std::vector<LogRow> rows;
  std::vector<TriggerEvent> triggers;
};

struct SimResult {
  TrajectoryLog log;
  bool diverged = false;
  std::string diagnostic;
};

// Simulation -------------------------------------------------------------------------

namespace detail {

inline VectorXd pack(const MasState& s) {
  const Eigen::Index d = s.leader.size();
  VectorXd out(d * static_cast<Eigen::Index>(s.followers.size() + 1));
  out.head(d) = s.leader;
  for (std::size_t i = 0; i < s.followers.size(); ++i)
    out.segment(d * static_cast<Eigen::Index>(i + 1), d) = s.followers[i];
  return out;
}

inline void unpack(const VectorXd& v, MasState& s) {
  const Eigen::Index d = s.leader.size();
  s.leader = v.head(d);
  for (std::size_t i = 0; i < s.followers.size(); ++i)
    s.followers[i] = v.segment(d * static_cast<Eigen::Index>(i + 1), d);
}

}  // namespace detail

inline SimResult run(const SimConfig& config) {
  const auto problems = config.problems();
  if (!problems.empty()) {
    std::string msg = "invalid simulation config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw std::invalid_argument(msg);
  }

  const MasModel& model = config.model;
  const Topology& topo = model.topology;
  const std::size_t n = topo.size();
  const Eigen::Index d = model.system.state_dim();
  const Eigen::Index m = model.system.input_dim();
  const Basis& basis = config.critic.basis;
  const std::size_t n_steps = config.steps();
  const GridSchedule attacks(config.dos, config.dt);
  const std::size_t check_every =
      config.trigger.check_period > 0.0
          ? std::max<std::size_t>(1, static_cast<std::size_t>(
                                         std::llround(config.trigger.check_period / config.dt)))
          : 1;

  std::vector<std::vector<std::size_t>> nbrs(n);
  std::vector<double> coupling(n);
  for (std::size_t i = 0; i < n; ++i) {
    nbrs[i] = neighbors(topo, i);
    coupling[i] = degree(topo, i) + topo.pin(i);
  }

  SimResult result;
  TrajectoryLog& log = result.log;
  log.n_followers = n;
  log.state_dim = d;
  log.input_dim = m;
  log.basis_size = basis.size();
  log.dt = config.dt;
  log.rows.reserve(n_steps + 1);

  MasState state = config.initial;
  std::vector<CriticState> critics(n);
  for (auto& c : critics) {
    c.weights = config.critic.initial_weights;
    c.learning_rate = config.critic.learning_rate;
    c.held = {0.0, VectorXd::Zero(d), VectorXd::Zero(m)};
  }

  const std::vector<VectorXd> zero_controls(n, VectorXd::Zero(m));
  std::vector<double> cumulative(n, 0.0);
  std::vector<double> previous_rates(n, 0.0);
  bool previous_active = false;
  std::vector<VectorXd> neighbor_u;

  for (std::size_t k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * config.dt;
    state.time = t;
    const bool active = attacks.active(static_cast<long long>(k));
    const std::vector<VectorXd> errors = formation_errors(topo, model.formation, state);

    if (!active) {
      // Neighbors are read from the previous step's broadcasts so the result
      // does not depend on agent order.
      std::vector<VectorXd> broadcast(n);
      for (std::size_t i = 0; i < n; ++i) broadcast[i] = critics[i].held.control;
      const bool forced = k == 0 || (config.retrigger_after_attack && previous_active);
      const bool check = forced || k % check_every == 0;

      std::vector<HeldSample> refreshed(n);
      std::vector<bool> fired(n, false);
      for (std::size_t i = 0; i < n && check; ++i) {
        CriticState& critic = critics[i];
        bool fire = forced;
        if (!fire) {
          const VectorXd delta = measurement_error(critic.held.error, errors[i]);
          neighbor_u.clear();
          for (std::size_t j : nbrs[i]) neighbor_u.push_back(broadcast[j]);
          const double g = trigger_function(delta, critic.held.control, neighbor_u,
                                            config.costs, config.trigger);
          // A zero measurement error has nothing to refresh.
          fire = g >= 0.0 && delta.squaredNorm() > 0.0;
        }
        if (!fire) continue;

        const VectorXd u_now = control_law(basis, critic.weights, errors[i], coupling[i],
                                           model.system.b_in, config.costs.r_ii());
        std::vector<VectorXd> trial = broadcast;
        trial[i] = u_now;
        const VectorXd e_dot = error_deriv(model, state, trial, i);
        neighbor_u.clear();
        for (std::size_t j : nbrs[i]) neighbor_u.push_back(broadcast[j]);
        const double cost = cost_rate(errors[i], u_now, neighbor_u, config.costs);
        critic.weights = weight_update(critic.weights, critic.learning_rate,
                                       critic_regressor(basis, errors[i], e_dot), cost,
                                       config.critic.rule);
        refreshed[i] = {t, errors[i],
                        control_law(basis, critic.weights, errors[i], coupling[i],
                                    model.system.b_in, config.costs.r_ii())};
        fired[i] = true;
        log.triggers.push_back({k, t, i, forced});
      }
      for (std::size_t i = 0; i < n; ++i)
        if (fired[i]) critics[i].held = std::move(refreshed[i]);
    }

    std::vector<VectorXd> applied(n);
    for (std::size_t i = 0; i < n; ++i)
      applied[i] = active ? zero_controls[i] : critics[i].held.control;

    LogRow row;
    row.time = t;
    row.dos_active = active;
    row.leader = state.leader;
    row.states = state.followers;
    row.errors = errors;
    row.controls = applied;
    for (std::size_t i = 0; i < n; ++i) {
      row.weights.push_back(critics[i].weights);
      row.delta_norms.push_back(measurement_error(critics[i].held.error, errors[i]).norm());
      neighbor_u.clear();
      for (std::size_t j : nbrs[i]) neighbor_u.push_back(applied[j]);
      const double rate = cost_rate(errors[i], applied[i], neighbor_u, config.costs);
      if (k > 0) cumulative[i] += 0.5 * config.dt * (previous_rates[i] + rate);
      previous_rates[i] = rate;
      row.cost_rates.push_back(rate);
      row.cumulative_costs.push_back(cumulative[i]);
    }
    log.rows.push_back(std::move(row));
    previous_active = active;

    if (k == n_steps) break;

    auto deriv = [&](double, const VectorXd& packed) -> VectorXd {
      MasState s = state;
      detail::unpack(packed, s);
      VectorXd out(packed.size());
      out.head(d) = leader_deriv(model.nonlinearity, s.leader);
      for (std::size_t i = 0; i < n; ++i)
        out.segment(d * static_cast<Eigen::Index>(i + 1), d) =
            follower_deriv(model.system, model.nonlinearity, s.followers[i], applied[i]);
      return out;
    };
    try {
      const VectorXd next = rk4_step(deriv, detail::pack(state), t, config.dt);
      if (!next.allFinite() || next.cwiseAbs().maxCoeff() > config.divergence_bound) {
        result.diverged = true;
        result.diagnostic = "state left the divergence bound after t = " + std::to_string(t);
        break;
      }
      detail::unpack(next, state);
    } catch (const NonFiniteError& err) {
      result.diverged = true;
      result.diagnostic = err.what();
      break;
    }
  }
  return result;
}

}  // namespace etform
