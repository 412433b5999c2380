#pragma once

// CSV serialization of trajectories, policy-iteration traces and run
// summaries. Numbers use 9 significant digits; every file starts with a
// header row.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "etform/config.hpp"
#include "etform/dos.hpp"
#include "etform/metrics.hpp"
#include "etform/pi_solver.hpp"
#include "etform/sim.hpp"

namespace etform {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// "a b; c d" for matrices, "a b c" for vectors.
inline std::string fmt(const MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r > 0) out += "; ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ' ';
      out += fmt(m(r, c));
    }
  }
  return out;
}

inline std::string fmt(const VectorXd& v) { return fmt(MatrixXd(v.transpose())); }

/// Column suffixes for one vector: x, y, z up to three entries, else 1..d.
inline std::vector<std::string> component_names(Eigen::Index dim) {
  static const char* xyz[] = {"x", "y", "z"};
  std::vector<std::string> out;
  for (Eigen::Index k = 0; k < dim; ++k)
    out.push_back(dim <= 3 ? xyz[k] : "_" + std::to_string(k + 1));
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
  }

  CsvWriter& cell(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  CsvWriter& cell(double v) { return cell(fmt(v)); }
  CsvWriter& cells(const VectorXd& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) cell(v(k));
    return *this;
  }

  void end_row() {
    out_ << '\n';
    first_ = true;
    if (!out_) throw std::runtime_error("write failed on " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  bool first_ = true;
};

inline const std::vector<std::string>& trajectory_files() {
  static const std::vector<std::string> files = {"states.csv",  "errors.csv",   "controls.csv",
                                                 "weights.csv", "costs.csv",    "triggers.csv",
                                                 "summary.csv"};
  return files;
}

/// Writes states, errors, controls, weights, costs and triggers CSVs.
inline void emit_csv(const TrajectoryLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::size_t n = log.n_followers;
  const auto xs = component_names(log.state_dim);
  const auto us = component_names(log.input_dim);

  CsvWriter states(dir / "states.csv");
  CsvWriter errors(dir / "errors.csv");
  CsvWriter controls(dir / "controls.csv");
  CsvWriter weights(dir / "weights.csv");
  CsvWriter costs(dir / "costs.csv");

  states.cell("t");
  for (const auto& c : xs) states.cell("x0" + c);
  for (std::size_t i = 1; i <= n; ++i)
    for (const auto& c : xs) states.cell("x" + std::to_string(i) + c);
  states.cell("dos_active").end_row();

  errors.cell("t");
  for (std::size_t i = 1; i <= n; ++i)
    for (const auto& c : xs) errors.cell("e" + std::to_string(i) + c);
  errors.cell("dos_active").end_row();

  controls.cell("t");
  for (std::size_t i = 1; i <= n; ++i)
    for (const auto& c : us) controls.cell("u" + std::to_string(i) + c);
  for (std::size_t i = 1; i <= n; ++i) controls.cell("delta" + std::to_string(i));
  controls.cell("dos_active").end_row();

  weights.cell("t");
  for (std::size_t i = 1; i <= n; ++i)
    for (Eigen::Index k = 1; k <= log.basis_size; ++k)
      weights.cell("w" + std::to_string(i) + "_" + std::to_string(k));
  weights.end_row();

  costs.cell("t");
  for (std::size_t i = 1; i <= n; ++i) costs.cell("r" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i) costs.cell("J" + std::to_string(i));
  costs.end_row();

  for (const auto& row : log.rows) {
    const char* flag = row.dos_active ? "1" : "0";
    states.cell(row.time).cells(row.leader);
    for (const auto& x : row.states) states.cells(x);
    states.cell(flag).end_row();

    errors.cell(row.time);
    for (const auto& e : row.errors) errors.cells(e);
    errors.cell(flag).end_row();

    controls.cell(row.time);
    for (const auto& u : row.controls) controls.cells(u);
    for (double d : row.delta_norms) controls.cell(d);
    controls.cell(flag).end_row();

    weights.cell(row.time);
    for (const auto& w : row.weights) weights.cells(w);
    weights.end_row();

    costs.cell(row.time);
    for (double r : row.cost_rates) costs.cell(r);
    for (double j : row.cumulative_costs) costs.cell(j);
    costs.end_row();
  }

  CsvWriter triggers(dir / "triggers.csv");
  triggers.cell("step").cell("t").cell("agent").cell("forced").end_row();
  for (const auto& ev : log.triggers)
    triggers.cell(std::to_string(ev.step))
        .cell(ev.time)
        .cell(std::to_string(ev.agent + 1))
        .cell(ev.forced ? "1" : "0")
        .end_row();
}

/// One row per (iteration, agent).
inline void emit_csv(const PiResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  CsvWriter out(dir / "pi.csv");
  const Eigen::Index size = result.weights.empty() ? 0 : result.weights.front().size();
  out.cell("iteration").cell("agent");
  for (Eigen::Index k = 1; k <= size; ++k) out.cell("w" + std::to_string(k));
  out.cell("residual").cell("weight_change").end_row();
  for (const auto& it : result.trace)
    for (std::size_t i = 0; i < it.weights.size(); ++i)
      out.cell(std::to_string(it.index))
          .cell(std::to_string(i + 1))
          .cells(it.weights[i])
          .cell(it.residual_norms[i])
          .cell(it.weight_change)
          .end_row();
}

// Summary --------------------------------------------------------------------------

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Every resolved config value, keyed by its config path.
inline KeyValues config_echo(const ExperimentConfig& c) {
  KeyValues kv;
  auto add = [&kv](std::string k, std::string v) { kv.emplace_back(std::move(k), std::move(v)); };
  add("mode", to_string(c.mode));
  add("seed", std::to_string(c.seed));
  add("sim.dt", fmt(c.dt));
  add("sim.t_final", fmt(c.t_final));
  add("sim.retrigger_after_attack", c.retrigger_after_attack ? "true" : "false");
  add("sim.divergence_bound", fmt(c.divergence_bound));
  add("topology.followers", std::to_string(c.n_followers));
  add("topology.adjacency", fmt(c.topology.adjacency()));
  add("topology.pinning", fmt(c.topology.pinning()));
  add("formation.kind", c.formation_kind);
  add("formation.radius", fmt(c.formation_radius));
  for (std::size_t i = 0; i < c.formation.size(); ++i)
    add("formation.offset" + std::to_string(i + 1), fmt(c.formation[i]));
  add("dynamics.a_sys", fmt(c.system.a_sys));
  add("dynamics.b_in", fmt(c.system.b_in));
  add("dynamics.follower_drift.kind", c.follower_drift.kind);
  if (c.follower_drift.kind == "sine") {
    add("dynamics.follower_drift.amplitude", fmt(c.follower_drift.amplitude));
    add("dynamics.follower_drift.frequency", fmt(c.follower_drift.frequency));
  }
  add("dynamics.leader_drift.kind", c.leader_drift.kind);
  if (c.leader_drift.kind == "constant")
    add("dynamics.leader_drift.value", fmt(c.leader_drift.value));
  add("dynamics.lipschitz", fmt(c.lipschitz));
  add("initial_state.leader", fmt(c.initial.leader));
  for (std::size_t i = 0; i < c.initial.followers.size(); ++i)
    add("initial_state.follower" + std::to_string(i + 1), fmt(c.initial.followers[i]));
  add("costs.q_ii", fmt(c.costs.q_ii()));
  add("costs.r_ii", fmt(c.costs.r_ii()));
  add("costs.r_ij", fmt(c.costs.r_ij()));
  add("critic.basis", to_string(c.basis_kind));
  if (c.basis_kind == BasisKind::kTanh) {
    add("critic.tanh_size", std::to_string(c.tanh_size));
    add("critic.tanh_scale", fmt(c.tanh_scale));
  }
  add("critic.initial_weights", fmt(c.initial_weights));
  add("critic.learning_rate", fmt(c.learning_rate));
  add("critic.update_rule", to_string(c.update_rule));
  add("trigger.lipschitz_m", fmt(c.trigger.lipschitz_m));
  add("trigger.check_period", fmt(c.trigger.check_period));
  std::string windows;
  for (const auto& [a, b] : c.dos_windows)
    windows += (windows.empty() ? "" : "; ") + fmt(a) + " " + fmt(b);
  add("dos.windows", windows);
  const auto& k = c.stability;
  add("stability.c1", fmt(k.c1));
  add("stability.c2", fmt(k.c2));
  add("stability.c3", fmt(k.c3));
  add("stability.c4", fmt(k.c4));
  add("stability.c5", fmt(k.c5));
  add("stability.zeta", fmt(k.zeta));
  add("stability.k_star", fmt(k.k_star));
  add("stability.lambda_max_p", fmt(k.lambda_max_p));
  add("stability.lambda_min_p", fmt(k.lambda_min_p));
  add("pi.collocation_points", std::to_string(c.pi.n_collocation_points));
  std::string box;
  for (const auto& [lo, hi] : c.pi.sampling_box)
    box += (box.empty() ? "" : "; ") + fmt(lo) + " " + fmt(hi);
  add("pi.sampling_box", box);
  add("pi.max_iterations", std::to_string(c.pi.max_iterations));
  add("pi.tolerance", fmt(c.pi.tolerance));
  return kv;
}

struct RunSummary {
  std::string config_hash;
  AdmissibilityReport admissibility;
  bool simulated = false;
  bool diverged = false;
  std::string diagnostic;
  std::vector<double> final_error_norms;
  std::vector<std::size_t> trigger_counts;
  std::vector<double> cumulative_costs;
  bool policy_iterated = false;
  std::size_t pi_iterations = 0;
  bool pi_converged = false;
  double wall_clock_seconds = 0.0;  // printed, never written
};

inline RunSummary summarize(const TrajectoryLog& log, RunSummary base) {
  base.simulated = true;
  const std::size_t n = log.n_followers;
  base.final_error_norms.assign(n, 0.0);
  base.trigger_counts.assign(n, 0);
  base.cumulative_costs.assign(n, 0.0);
  if (!log.rows.empty())
    for (std::size_t i = 0; i < n; ++i) {
      base.final_error_norms[i] = log.rows.back().errors[i].norm();
      base.cumulative_costs[i] = cumulative_cost(log, i);
    }
  for (const auto& ev : log.triggers) ++base.trigger_counts[ev.agent];
  return base;
}

/// key,value rows: the config echo (prefixed "config.") followed by results.
/// Wall-clock time is left out so repeated runs produce identical files.
inline void emit_summary(const RunSummary& s, const KeyValues& echo,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  CsvWriter out(dir / "summary.csv");
  out.cell("key").cell("value").end_row();
  auto row = [&out](const std::string& k, const std::string& v) { out.cell(k).cell(v).end_row(); };
  row("config_hash", s.config_hash);
  for (const auto& [k, v] : echo) row("config." + k, v);
  const auto& a = s.admissibility;
  row("dos.frequency", fmt(a.frequency));
  row("dos.length_rate", fmt(a.length_rate));
  row("dos.max_frequency", fmt(a.bounds.max_frequency));
  row("dos.max_length_rate", fmt(a.bounds.max_length_rate));
  row("dos.frequency_ok", a.frequency_ok ? "true" : "false");
  row("dos.length_ok", a.length_ok ? "true" : "false");
  if (s.simulated) {
    row("sim.diverged", s.diverged ? "true" : "false");
    if (s.diverged) row("sim.diagnostic", s.diagnostic);
    for (std::size_t i = 0; i < s.final_error_norms.size(); ++i) {
      const std::string tag = std::to_string(i + 1);
      row("final_error_norm." + tag, fmt(s.final_error_norms[i]));
      row("triggers." + tag, std::to_string(s.trigger_counts[i]));
      row("cumulative_cost." + tag, fmt(s.cumulative_costs[i]));
    }
  }
  if (s.policy_iterated) {
    row("pi.iterations", std::to_string(s.pi_iterations));
    row("pi.converged", s.pi_converged ? "true" : "false");
  }
}

/// Reads a CSV written by this module back into a header and numeric rows.
inline std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_numeric_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> out(1);
    for (char ch : line) {
      if (ch == ',') out.emplace_back();
      else out.back() += ch;
    }
    return out;
  };
  std::string line;
  std::pair<std::vector<std::string>, std::vector<std::vector<double>>> out;
  if (!std::getline(in, line)) return out;
  out.first = split(line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    for (const auto& cell : split(line)) row.push_back(std::stod(cell));
    out.second.push_back(std::move(row));
  }
  return out;
}

}  // namespace etform
