#pragma once

// Post-run measurements over a TrajectoryLog.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "etform/critic.hpp"
#include "etform/sim.hpp"

namespace etform {

/// Trapezoidal integral of agent i's cost rate over the logged horizon.
inline double cumulative_cost(const TrajectoryLog& log, std::size_t i) {
  if (i >= log.n_followers) throw std::out_of_range("agent index out of range");
  return log.rows.empty() ? 0.0 : log.rows.back().cumulative_costs[i];
}

struct InterEventStats {
  std::vector<double> min_interval;  // +inf for agents with fewer than two events
  std::vector<std::size_t> counts;
  std::vector<double> fraction;  // counts / attack-free steps
  std::size_t attack_free_steps = 0;

  bool empty() const { return counts.empty(); }
};

/// Empty stats (no error) when the log holds no trigger events.
inline InterEventStats inter_event_stats(const TrajectoryLog& log) {
  InterEventStats s;
  if (log.triggers.empty()) return s;
  const std::size_t n = log.n_followers;
  s.min_interval.assign(n, std::numeric_limits<double>::infinity());
  s.counts.assign(n, 0);
  s.fraction.assign(n, 0.0);
  for (const auto& row : log.rows)
    if (!row.dos_active) ++s.attack_free_steps;

  std::vector<std::size_t> last(n, 0);
  std::vector<bool> seen(n, false);
  for (const auto& ev : log.triggers) {
    if (seen[ev.agent])
      s.min_interval[ev.agent] = std::min(
          s.min_interval[ev.agent], static_cast<double>(ev.step - last[ev.agent]) * log.dt);
    seen[ev.agent] = true;
    last[ev.agent] = ev.step;
    ++s.counts[ev.agent];
  }
  for (std::size_t i = 0; i < n; ++i)
    s.fraction[i] = s.attack_free_steps == 0
                        ? 0.0
                        : static_cast<double>(s.counts[i]) / static_cast<double>(s.attack_free_steps);
  return s;
}

/// V1(t) = 1/2 sum_i e_i^T Q e_i at every logged step.
inline std::vector<double> lyapunov_series(const TrajectoryLog& log, const CostWeights& costs) {
  std::vector<double> v;
  v.reserve(log.rows.size());
  for (const auto& row : log.rows) {
    double acc = 0.0;
    for (const auto& e : row.errors) acc += e.dot(costs.q_ii() * e);
    v.push_back(0.5 * acc);
  }
  return v;
}

/// Least-squares slope of log V1 against t over the attack-free segments
/// starting at or after `t_start`, with one intercept per segment so the
/// jumps accumulated during attacks do not bias the rate. NaN when no segment
/// has two usable samples.
inline double attack_free_log_slope(const TrajectoryLog& log, const CostWeights& costs,
                                    double t_start) {
  const std::vector<double> v = lyapunov_series(log, costs);
  double sxy = 0.0, sxx = 0.0;
  std::size_t usable = 0;
  std::size_t k = 0;
  while (k < log.rows.size()) {
    if (log.rows[k].dos_active || log.rows[k].time < t_start) {
      ++k;
      continue;
    }
    std::vector<double> ts, ys;
    for (; k < log.rows.size() && !log.rows[k].dos_active; ++k) {
      if (!(v[k] > 0.0)) continue;
      ts.push_back(log.rows[k].time);
      ys.push_back(std::log(v[k]));
    }
    if (ts.size() < 2) continue;
    double tm = 0.0, ym = 0.0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      tm += ts[j];
      ym += ys[j];
    }
    tm /= static_cast<double>(ts.size());
    ym /= static_cast<double>(ts.size());
    for (std::size_t j = 0; j < ts.size(); ++j) {
      sxy += (ts[j] - tm) * (ys[j] - ym);
      sxx += (ts[j] - tm) * (ts[j] - tm);
    }
    ++usable;
  }
  if (usable == 0 || sxx == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / sxx;
}

/// Share of consecutive attack-free step pairs, within the final half of all
/// such pairs, on which V1 increases.
inline double lyapunov_increase_fraction(const TrajectoryLog& log, const CostWeights& costs) {
  const std::vector<double> v = lyapunov_series(log, costs);
  std::vector<std::size_t> pairs;
  for (std::size_t k = 0; k + 1 < log.rows.size(); ++k)
    if (!log.rows[k].dos_active && !log.rows[k + 1].dos_active) pairs.push_back(k);
  if (pairs.empty()) return 0.0;
  const std::size_t from = pairs.size() / 2;
  std::size_t up = 0;
  for (std::size_t p = from; p < pairs.size(); ++p)
    if (v[pairs[p] + 1] > v[pairs[p]]) ++up;
  return static_cast<double>(up) / static_cast<double>(pairs.size() - from);
}

/// True when every weight change in the log coincides with a trigger of that
/// agent at the same step (compared bit for bit).
inline bool weights_piecewise_constant(const TrajectoryLog& log) {
  std::vector<std::vector<bool>> fired(log.rows.size(), std::vector<bool>(log.n_followers, false));
  for (const auto& ev : log.triggers)
    if (ev.step < fired.size()) fired[ev.step][ev.agent] = true;
  for (std::size_t k = 1; k < log.rows.size(); ++k)
    for (std::size_t i = 0; i < log.n_followers; ++i) {
      const VectorXd& a = log.rows[k - 1].weights[i];
      const VectorXd& b = log.rows[k].weights[i];
      bool same = a.size() == b.size();
      for (Eigen::Index c = 0; same && c < a.size(); ++c) same = a(c) == b(c);
      if (!same && !fired[k][i]) return false;
    }
  return true;
}

/// Every applied control is exactly zero on attacked steps.
inline bool controls_zero_under_attack(const TrajectoryLog& log) {
  for (const auto& row : log.rows) {
    if (!row.dos_active) continue;
    for (const auto& u : row.controls)
      for (Eigen::Index c = 0; c < u.size(); ++c)
        if (u(c) != 0.0) return false;
  }
  return true;
}

/// Fraction of (agent, attack-free step) pairs after the agent's first
/// trigger whose applied control is nonzero. 1 when there are none.
inline double nonzero_control_fraction(const TrajectoryLog& log) {
  std::vector<std::size_t> first(log.n_followers, std::numeric_limits<std::size_t>::max());
  for (const auto& ev : log.triggers) first[ev.agent] = std::min(first[ev.agent], ev.step);
  std::size_t total = 0, nonzero = 0;
  for (std::size_t k = 0; k < log.rows.size(); ++k) {
    const auto& row = log.rows[k];
    if (row.dos_active) continue;
    for (std::size_t i = 0; i < log.n_followers; ++i) {
      if (k < first[i]) continue;
      ++total;
      if (row.controls[i].squaredNorm() > 0.0) ++nonzero;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(nonzero) / static_cast<double>(total);
}

/// Row index whose time is closest to t.
inline std::size_t row_at(const TrajectoryLog& log, double t) {
  if (log.rows.empty()) throw std::out_of_range("empty log");
  const double k = std::round(t / log.dt);
  return std::min(log.rows.size() - 1, static_cast<std::size_t>(std::max(0.0, k)));
}

}  // namespace etform
