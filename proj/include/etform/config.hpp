#pragma once

// Experiment configuration: YAML file -> validated ExperimentConfig.
//
// Every section except `topology` is optional. Matrices are row-major nested
// lists; a bare number k stands for k times the identity of the natural size.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <yaml-cpp/yaml.h>

#include "etform/critic.hpp"
#include "etform/dos.hpp"
#include "etform/dynamics.hpp"
#include "etform/pi_solver.hpp"
#include "etform/sim.hpp"
#include "etform/topology.hpp"

namespace etform {

enum class RunMode { kSimulate, kPolicyIterate, kBoth, kValidateConfig };

inline const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kSimulate: return "simulate";
    case RunMode::kPolicyIterate: return "policy-iterate";
    case RunMode::kBoth: return "both";
    case RunMode::kValidateConfig: return "validate-config";
  }
  return "?";
}

inline RunMode run_mode_from_string(const std::string& s) {
  if (s == "simulate") return RunMode::kSimulate;
  if (s == "policy-iterate") return RunMode::kPolicyIterate;
  if (s == "both") return RunMode::kBoth;
  if (s == "validate-config") return RunMode::kValidateConfig;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

/// Holds every violation found, one per line of what().
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid config:";
    for (const auto& s : v) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

/// Named drift maps selectable from a config file.
struct DriftSpec {
  std::string kind;  // follower: sine | zero; leader: baseline | zero | constant
  double amplitude = 0.4;
  double frequency = 0.1;
  VectorXd value;
};

struct ExperimentConfig {
  RunMode mode = RunMode::kSimulate;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  double dt = 1e-3;
  double t_final = 10.0;
  bool retrigger_after_attack = true;
  double divergence_bound = 1e9;

  std::size_t n_followers = 0;
  std::vector<std::pair<int, int>> edges;  // 1-based
  Topology topology;
  std::string formation_kind = "zero";  // zero | polygon | explicit
  double formation_radius = 0.0;
  FormationSpec formation;

  SystemMatrices system = baseline_system();
  DriftSpec follower_drift{"sine", 0.4, 0.1, {}};
  DriftSpec leader_drift{"baseline", 0.0, 0.0, {}};
  double lipschitz = 0.04;

  MasState initial;
  CostWeights costs = baseline_cost_weights();

  BasisKind basis_kind = BasisKind::kQuadratic;
  Eigen::Index tanh_size = 8;
  double tanh_scale = 1.0;
  VectorXd initial_weights = (VectorXd(5) << 0.2, 0.46, 0.1, 0.32, 0.61).finished();
  double learning_rate = 0.1;
  UpdateRule update_rule = UpdateRule::kGradient;

  TriggerParams trigger;
  std::vector<std::pair<double, double>> dos_windows;
  StabilityConstants stability = baseline_stability_constants();
  PiConfig pi;

  Basis basis() const {
    if (basis_kind == BasisKind::kTanh)
      return Basis::Tanh(system.state_dim(), tanh_size, seed, tanh_scale);
    return Basis::Quadratic(system.state_dim(), basis_kind);
  }
};

// Building the runtime objects -------------------------------------------------

inline StateMap make_follower_drift(const DriftSpec& s, Eigen::Index dim) {
  if (s.kind == "sine") return sine_drift(s.amplitude, s.frequency);
  if (s.kind == "zero") return zero_nonlinearity(dim).follower;
  throw std::invalid_argument("unknown follower drift '" + s.kind + "'");
}

inline StateMap make_leader_drift(const DriftSpec& s, Eigen::Index dim) {
  if (s.kind == "baseline") return baseline_leader_drift;
  if (s.kind == "zero") return zero_nonlinearity(dim).leader;
  if (s.kind == "constant")
    return [v = s.value](const VectorXd&) -> VectorXd { return v; };
  throw std::invalid_argument("unknown leader drift '" + s.kind + "'");
}

inline SimConfig make_sim_config(const ExperimentConfig& c) {
  const Eigen::Index d = c.system.state_dim();
  SimConfig s;
  s.model.system = c.system;
  s.model.nonlinearity = {make_follower_drift(c.follower_drift, d),
                          make_leader_drift(c.leader_drift, d), c.lipschitz};
  s.model.topology = c.topology;
  s.model.formation = c.formation;
  s.costs = c.costs;
  s.trigger = c.trigger;
  s.critic = {c.basis(), c.initial_weights, c.learning_rate, c.update_rule};
  s.dos = DosSchedule::FromWindows(c.dos_windows);
  s.stability = c.stability;
  s.initial = c.initial;
  s.dt = c.dt;
  s.t_final = c.t_final;
  s.seed = c.seed;
  s.retrigger_after_attack = c.retrigger_after_attack;
  s.divergence_bound = c.divergence_bound;
  return s;
}

inline PiProblem make_pi_problem(const ExperimentConfig& c) {
  return {c.system, c.topology, c.basis(), c.costs, {}};
}

/// Semantic checks on a fully populated config. Empty means valid.
inline std::vector<std::string> config_problems(const ExperimentConfig& c) {
  std::vector<std::string> out;
  if (c.n_followers == 0) {
    out.emplace_back("topology: missing (the topology section is mandatory)");
    return out;
  }
  try {
    DosSchedule::FromWindows(c.dos_windows);
  } catch (const std::invalid_argument& e) {
    out.push_back(std::string("dos: ") + e.what());
  }
  if (!(c.stability.zeta * c.stability.c4 > 1.0))
    out.emplace_back("stability: zeta * c4 must exceed 1");
  if (!(c.stability.k_star > 0.0 && c.stability.k_star < c.stability.c1))
    out.emplace_back("stability: k_star must lie in (0, c1)");
  if (c.basis_kind == BasisKind::kTanh && c.tanh_size <= 0)
    out.emplace_back("critic: tanh_size must be positive");
  if (c.pi.n_collocation_points == 0) out.emplace_back("pi: collocation_points must be positive");
  if (c.pi.max_iterations == 0) out.emplace_back("pi: max_iterations must be positive");
  if (!(c.pi.tolerance > 0.0)) out.emplace_back("pi: tolerance must be positive");
  if (static_cast<Eigen::Index>(c.pi.sampling_box.size()) != c.system.state_dim())
    out.emplace_back("pi: sampling_box needs one [lo, hi] pair per state dimension");
  for (const auto& [lo, hi] : c.pi.sampling_box)
    if (!(lo < hi)) out.emplace_back("pi: sampling_box bounds must satisfy lo < hi");
  if (!out.empty()) return out;
  try {
    for (auto& p : make_sim_config(c).problems()) out.push_back(std::move(p));
  } catch (const std::exception& e) {
    out.emplace_back(e.what());
  }
  return out;
}

inline void check_config(const ExperimentConfig& c) {
  auto problems = config_problems(c);
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

// Parsing ------------------------------------------------------------------------

namespace detail {

/// Walks a YAML tree, recording problems instead of stopping at the first.
class ConfigReader {
 public:
  std::vector<std::string> errors;

  static std::string where(const YAML::Node& n) {
    if (!n.IsDefined()) return "";
    const auto mark = n.Mark();
    return mark.line >= 0 ? "line " + std::to_string(mark.line + 1) + ": " : "";
  }

  void fail(const YAML::Node& n, const std::string& field, const std::string& msg) {
    errors.push_back(where(n) + "field '" + field + "': " + msg);
  }

  void known_keys(const YAML::Node& map, const std::string& section,
                  std::initializer_list<const char*> keys) {
    if (!map.IsMap()) return;
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      bool ok = false;
      for (const char* k : keys) ok = ok || key == k;
      if (!ok) fail(kv.first, section.empty() ? key : section + "." + key, "unknown key");
    }
  }

  /// The named mapping, or an undefined node when absent or malformed.
  YAML::Node section(const YAML::Node& root, const char* name) {
    const YAML::Node out = root[name];
    if (!out) return YAML::Node(YAML::NodeType::Undefined);
    if (!out.IsMap()) {
      fail(out, name, "expected a mapping");
      return YAML::Node(YAML::NodeType::Undefined);
    }
    return out;
  }

  template <class T>
  void scalar(const YAML::Node& map, const std::string& section, const char* key, T& out) {
    const YAML::Node n = map[key];
    if (!n) return;
    const std::string field = section + "." + key;
    if (!n.IsScalar()) {
      fail(n, field, "expected a scalar");
      return;
    }
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, field, std::string("cannot read '") + n.Scalar() + "' as " + type_name<T>());
    }
  }

  bool vector(const YAML::Node& n, const std::string& field, VectorXd& out) {
    if (!n.IsSequence()) {
      fail(n, field, "expected a list of numbers");
      return false;
    }
    VectorXd v(static_cast<Eigen::Index>(n.size()));
    for (std::size_t k = 0; k < n.size(); ++k) {
      try {
        v(static_cast<Eigen::Index>(k)) = n[k].as<double>();
      } catch (const YAML::Exception&) {
        fail(n[k], field, "entries must be numbers");
        return false;
      }
    }
    out = std::move(v);
    return true;
  }

  bool vector_list(const YAML::Node& n, const std::string& field, std::vector<VectorXd>& out) {
    if (!n.IsSequence()) {
      fail(n, field, "expected a list of lists");
      return false;
    }
    std::vector<VectorXd> rows(n.size());
    for (std::size_t k = 0; k < n.size(); ++k)
      if (!vector(n[k], field, rows[k])) return false;
    out = std::move(rows);
    return true;
  }

  /// Nested row-major list, or a scalar k meaning k * I(identity_dim).
  bool matrix(const YAML::Node& n, const std::string& field, Eigen::Index identity_dim,
              MatrixXd& out) {
    if (n.IsScalar()) {
      try {
        out = n.as<double>() * MatrixXd::Identity(identity_dim, identity_dim);
        return true;
      } catch (const YAML::Exception&) {
        fail(n, field, "expected a number or a list of rows");
        return false;
      }
    }
    std::vector<VectorXd> rows;
    if (!vector_list(n, field, rows)) return false;
    if (rows.empty()) {
      fail(n, field, "matrix has no rows");
      return false;
    }
    const Eigen::Index cols = rows.front().size();
    MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) {
        fail(n, field, "rows have different lengths");
        return false;
      }
      m.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    }
    out = std::move(m);
    return true;
  }

  bool pairs(const YAML::Node& n, const std::string& field,
             std::vector<std::pair<double, double>>& out) {
    std::vector<VectorXd> rows;
    if (!vector_list(n, field, rows)) return false;
    std::vector<std::pair<double, double>> v;
    for (const auto& r : rows) {
      if (r.size() != 2) {
        fail(n, field, "each entry must be a [start, end] pair");
        return false;
      }
      v.emplace_back(r(0), r(1));
    }
    out = std::move(v);
    return true;
  }

 private:
  template <class T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else return "a string";
  }
};

}  // namespace detail

/// Parses YAML text. `source` names the origin in diagnostics.
inline ExperimentConfig parse_config_text(const std::string& text,
                                          const std::string& source = "<config>") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError({source + ": line " + std::to_string(e.mark.line + 1) + ", column " +
                       std::to_string(e.mark.column + 1) + ": " + e.msg});
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  detail::ConfigReader rd;
  ExperimentConfig c;
  if (!root.IsMap()) throw ConfigError({source + ": top level must be a mapping"});

  rd.known_keys(root, "", {"mode", "seed", "output", "sim", "topology", "formation", "dynamics",
                           "initial_state", "costs", "critic", "trigger", "dos", "stability",
                           "pi"});

  if (root["mode"]) {
    std::string mode;
    rd.scalar(root, "", "mode", mode);
    try {
      c.mode = run_mode_from_string(mode);
    } catch (const std::invalid_argument& e) {
      rd.fail(root["mode"], "mode", e.what());
    }
  }
  rd.scalar(root, "", "seed", c.seed);
  rd.scalar(root, "", "output", c.output_dir);

  YAML::Node dt_node(YAML::NodeType::Undefined);
  if (const YAML::Node s = rd.section(root, "sim"); s) {
    if (s["dt"]) dt_node.reset(s["dt"]);
    rd.known_keys(s, "sim", {"dt", "t_final", "retrigger_after_attack", "divergence_bound"});
    rd.scalar(s, "sim", "dt", c.dt);
    rd.scalar(s, "sim", "t_final", c.t_final);
    rd.scalar(s, "sim", "retrigger_after_attack", c.retrigger_after_attack);
    rd.scalar(s, "sim", "divergence_bound", c.divergence_bound);
  }
  if (!(c.dt > 0.0)) rd.fail(dt_node ? dt_node : root, "sim.dt", "dt must be positive");

  // Dynamics first: its dimensions size the identity shorthands below.
  if (const YAML::Node s = rd.section(root, "dynamics"); s) {
    rd.known_keys(s, "dynamics", {"a_sys", "b_in", "follower_drift", "leader_drift", "lipschitz"});
    if (s["a_sys"]) rd.matrix(s["a_sys"], "dynamics.a_sys", 2, c.system.a_sys);
    if (s["b_in"]) rd.matrix(s["b_in"], "dynamics.b_in", c.system.state_dim(), c.system.b_in);
    for (auto [key, spec] : {std::pair{"follower_drift", &c.follower_drift},
                             std::pair{"leader_drift", &c.leader_drift}}) {
      YAML::Node dn = s[key];
      if (!dn) continue;
      const std::string field = std::string("dynamics.") + key;
      if (!dn.IsMap()) {
        rd.fail(dn, field, "expected a mapping");
        continue;
      }
      rd.known_keys(dn, field, {"kind", "amplitude", "frequency", "value"});
      rd.scalar(dn, field, "kind", spec->kind);
      rd.scalar(dn, field, "amplitude", spec->amplitude);
      rd.scalar(dn, field, "frequency", spec->frequency);
      if (dn["value"]) rd.vector(dn["value"], field + ".value", spec->value);
    }
    if (c.follower_drift.kind != "sine" && c.follower_drift.kind != "zero")
      rd.fail(s["follower_drift"], "dynamics.follower_drift.kind",
              "expected sine or zero, got '" + c.follower_drift.kind + "'");
    if (c.leader_drift.kind != "baseline" && c.leader_drift.kind != "zero" &&
        c.leader_drift.kind != "constant")
      rd.fail(s["leader_drift"], "dynamics.leader_drift.kind",
              "expected baseline, zero or constant, got '" + c.leader_drift.kind + "'");
    if (c.leader_drift.kind == "constant" &&
        c.leader_drift.value.size() != c.system.state_dim())
      rd.fail(s["leader_drift"], "dynamics.leader_drift.value",
              "constant drift needs one entry per state dimension");
    rd.scalar(s, "dynamics", "lipschitz", c.lipschitz);
    if (c.system.b_in.rows() != c.system.a_sys.rows())
      rd.fail(s, "dynamics.b_in", "b_in must have as many rows as a_sys");
    if (c.system.a_sys.rows() != c.system.a_sys.cols())
      rd.fail(s, "dynamics.a_sys", "a_sys must be square");
  }
  const Eigen::Index d = c.system.state_dim();
  const Eigen::Index m = c.system.input_dim();

  if (const YAML::Node s = rd.section(root, "topology"); s) {
    rd.known_keys(s, "topology", {"followers", "edges", "adjacency", "pinning"});
    rd.scalar(s, "topology", "followers", c.n_followers);
    MatrixXd adjacency;
    bool have_adjacency = false;
    if (s["adjacency"]) {
      have_adjacency = rd.matrix(s["adjacency"], "topology.adjacency", 0, adjacency);
      if (have_adjacency && !s["followers"]) c.n_followers = static_cast<std::size_t>(adjacency.rows());
    }
    if (s["edges"]) {
      std::vector<VectorXd> rows;
      if (rd.vector_list(s["edges"], "topology.edges", rows)) {
        for (const auto& r : rows) {
          if (r.size() != 2 || r(0) < 1 || r(1) < 1 || r(0) != std::floor(r(0)) ||
              r(1) != std::floor(r(1)) || r(0) > static_cast<double>(c.n_followers) ||
              r(1) > static_cast<double>(c.n_followers)) {
            rd.fail(s["edges"], "topology.edges",
                    "edges are [i, j] pairs of follower numbers in 1..followers");
            break;
          }
          c.edges.emplace_back(static_cast<int>(r(0)), static_cast<int>(r(1)));
        }
      }
    }
    if (c.n_followers == 0) rd.fail(s, "topology.followers", "at least one follower required");
    VectorXd pinning = VectorXd::Zero(static_cast<Eigen::Index>(c.n_followers));
    if (s["pinning"] && rd.vector(s["pinning"], "topology.pinning", pinning) &&
        pinning.size() != static_cast<Eigen::Index>(c.n_followers))
      rd.fail(s["pinning"], "topology.pinning", "needs one entry per follower");
    if (have_adjacency && s["edges"])
      rd.fail(s, "topology", "give either edges or adjacency, not both");
    if (have_adjacency && adjacency.rows() != static_cast<Eigen::Index>(c.n_followers))
      rd.fail(s["adjacency"], "topology.adjacency", "must be followers x followers");
    if (rd.errors.empty() && c.n_followers > 0) {
      try {
        if (have_adjacency)
          c.topology = Topology(adjacency, pinning);
        else
          c.topology = Topology::FromEdges(c.n_followers, c.edges, pinning);
        for (const auto& v : validate(c.topology).violations)
          rd.fail(s, "topology", v.code + (v.detail.empty() ? "" : " (" + v.detail + ")"));
      } catch (const std::exception& e) {
        rd.fail(s, "topology", e.what());
      }
    }
  } else if (!root["topology"]) {
    rd.errors.emplace_back("field 'topology': missing (the topology section is mandatory)");
  }
  const auto n = c.n_followers;

  c.formation = FormationSpec::Zero(n, d);
  if (const YAML::Node s = rd.section(root, "formation"); s) {
    rd.known_keys(s, "formation", {"kind", "radius", "offsets"});
    rd.scalar(s, "formation", "kind", c.formation_kind);
    rd.scalar(s, "formation", "radius", c.formation_radius);
    if (c.formation_kind == "polygon") {
      if (d != 2) rd.fail(s, "formation.kind", "polygon offsets need a 2-dimensional state");
      else c.formation = FormationSpec::RegularPolygon(n, c.formation_radius);
    } else if (c.formation_kind == "explicit") {
      std::vector<VectorXd> offsets;
      if (!s["offsets"])
        rd.fail(s, "formation.offsets", "explicit formation needs offsets");
      else if (rd.vector_list(s["offsets"], "formation.offsets", offsets))
        c.formation.offsets = std::move(offsets);
    } else if (c.formation_kind != "zero") {
      rd.fail(s["kind"], "formation.kind", "expected zero, polygon or explicit");
    }
  }

  c.initial.leader = VectorXd::Zero(d);
  c.initial.followers.assign(n, VectorXd::Zero(d));
  if (const YAML::Node s = rd.section(root, "initial_state"); s) {
    rd.known_keys(s, "initial_state", {"leader", "followers"});
    if (s["leader"]) rd.vector(s["leader"], "initial_state.leader", c.initial.leader);
    if (s["followers"])
      rd.vector_list(s["followers"], "initial_state.followers", c.initial.followers);
  }

  if (const YAML::Node s = rd.section(root, "costs"); s) {
    rd.known_keys(s, "costs", {"q_ii", "r_ii", "r_ij"});
    MatrixXd q = c.costs.q_ii(), ri = c.costs.r_ii(), rj = c.costs.r_ij();
    bool ok = true;
    if (s["q_ii"]) ok = rd.matrix(s["q_ii"], "costs.q_ii", d, q) && ok;
    if (s["r_ii"]) ok = rd.matrix(s["r_ii"], "costs.r_ii", m, ri) && ok;
    if (s["r_ij"]) ok = rd.matrix(s["r_ij"], "costs.r_ij", m, rj) && ok;
    if (ok) {
      try {
        c.costs = CostWeights(q, ri, rj);
      } catch (const std::invalid_argument& e) {
        rd.fail(s, "costs", e.what());
      }
    }
  }

  if (const YAML::Node s = rd.section(root, "critic"); s) {
    rd.known_keys(s, "critic", {"basis", "tanh_size", "tanh_scale", "initial_weights",
                                "learning_rate", "update_rule"});
    if (s["basis"]) {
      std::string kind;
      rd.scalar(s, "critic", "basis", kind);
      try {
        c.basis_kind = basis_kind_from_string(kind);
      } catch (const std::invalid_argument& e) {
        rd.fail(s["basis"], "critic.basis", e.what());
      }
    }
    rd.scalar(s, "critic", "tanh_size", c.tanh_size);
    rd.scalar(s, "critic", "tanh_scale", c.tanh_scale);
    if (s["initial_weights"])
      rd.vector(s["initial_weights"], "critic.initial_weights", c.initial_weights);
    rd.scalar(s, "critic", "learning_rate", c.learning_rate);
    if (s["update_rule"]) {
      std::string rule;
      rd.scalar(s, "critic", "update_rule", rule);
      try {
        c.update_rule = update_rule_from_string(rule);
      } catch (const std::invalid_argument& e) {
        rd.fail(s["update_rule"], "critic.update_rule", e.what());
      }
    }
  }

  if (const YAML::Node s = rd.section(root, "trigger"); s) {
    rd.known_keys(s, "trigger", {"lipschitz_m", "check_period"});
    rd.scalar(s, "trigger", "lipschitz_m", c.trigger.lipschitz_m);
    rd.scalar(s, "trigger", "check_period", c.trigger.check_period);
  }

  if (const YAML::Node s = rd.section(root, "dos"); s) {
    rd.known_keys(s, "dos", {"windows"});
    if (s["windows"]) rd.pairs(s["windows"], "dos.windows", c.dos_windows);
  }

  if (const YAML::Node s = rd.section(root, "stability"); s) {
    rd.known_keys(s, "stability", {"c1", "c2", "c3", "c4", "c5", "zeta", "k_star",
                                   "lambda_max_p", "lambda_min_p"});
    auto& k = c.stability;
    rd.scalar(s, "stability", "c1", k.c1);
    rd.scalar(s, "stability", "c2", k.c2);
    rd.scalar(s, "stability", "c3", k.c3);
    rd.scalar(s, "stability", "c4", k.c4);
    rd.scalar(s, "stability", "c5", k.c5);
    rd.scalar(s, "stability", "zeta", k.zeta);
    rd.scalar(s, "stability", "k_star", k.k_star);
    rd.scalar(s, "stability", "lambda_max_p", k.lambda_max_p);
    rd.scalar(s, "stability", "lambda_min_p", k.lambda_min_p);
  }

  c.pi.seed = c.seed;
  if (const YAML::Node s = rd.section(root, "pi"); s) {
    rd.known_keys(s, "pi", {"collocation_points", "sampling_box", "max_iterations", "tolerance"});
    rd.scalar(s, "pi", "collocation_points", c.pi.n_collocation_points);
    if (s["sampling_box"]) rd.pairs(s["sampling_box"], "pi.sampling_box", c.pi.sampling_box);
    rd.scalar(s, "pi", "max_iterations", c.pi.max_iterations);
    rd.scalar(s, "pi", "tolerance", c.pi.tolerance);
  }

  if (rd.errors.empty()) {
    for (auto& p : config_problems(c)) {
      // dt is already reported with its line.
      if (p == "dt must be positive") continue;
      rd.errors.push_back(std::move(p));
    }
  }
  if (!rd.errors.empty()) {
    for (auto& e : rd.errors) e = source + ": " + e;
    throw ConfigError(std::move(rd.errors));
  }
  return c;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path + ": cannot open file"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ExperimentConfig parse_config(const std::string& path) {
  return parse_config_text(read_file(path), path);
}

/// 64-bit FNV-1a of the raw file bytes, as 16 hex digits.
inline std::string config_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace etform
