#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <yaml-cpp/yaml.h>

#include "etform/config.hpp"
#include "etform/csv_io.hpp"
#include "etform/sim.hpp"

namespace fs = std::filesystem;
using namespace etform;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh scratch directory per test.
fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("etform_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome run_cli(const std::string& args) {
  const std::string cmd = std::string(ETFORM_RUN_BINARY) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return o;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) o.output += buf.data();
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string baseline_text() { return slurp(ETFORM_BASELINE_CONFIG); }

std::string with_replaced(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  if (pos != std::string::npos) text.replace(pos, from.size(), to);
  return text;
}

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(ParseConfig, BaselineConfigEchoesExperimentValues) {
  const ExperimentConfig c = parse_config(ETFORM_BASELINE_CONFIG);
  EXPECT_EQ(c.costs.q_ii(), 0.4 * MatrixXd::Identity(2, 2));
  EXPECT_EQ(c.costs.r_ii(), 0.1 * MatrixXd::Identity(2, 2));
  EXPECT_EQ(c.costs.r_ij(), 0.01 * MatrixXd::Identity(2, 2));
  EXPECT_EQ(c.learning_rate, 0.1);
  VectorXd w(5);
  w << 0.2, 0.46, 0.1, 0.32, 0.61;
  EXPECT_EQ(c.initial_weights, w);
  EXPECT_EQ(c.system.b_in, 0.9 * MatrixXd::Identity(2, 2));
  EXPECT_EQ(c.n_followers, 5u);
  EXPECT_EQ(c.dos_windows.size(), 3u);
  EXPECT_EQ(c.dt, 1e-3);
  EXPECT_EQ(c.t_final, 10.0);
  EXPECT_EQ(c.initial.followers[2](1), 5.0);
  EXPECT_TRUE(validate(c.topology).ok());
}

TEST(ParseConfig, EmptyFileMissesTopology) {
  const auto v = violations_of("");
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(any_contains(v, "topology"));
}

TEST(ParseConfig, ZeroDtIsRejected) {
  const auto v = violations_of(with_replaced(baseline_text(), "dt: 0.001", "dt: 0"));
  EXPECT_TRUE(any_contains(v, "dt must be positive"));
  EXPECT_TRUE(any_contains(v, "line "));
}

TEST(ParseConfig, SyntaxErrorNamesLine) {
  try {
    parse_config_text("sim:\n  dt: [1, 2\n", "broken.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("broken.cfg: line"), std::string::npos);
  }
}

TEST(ParseConfig, BadFieldsAreAllListedWithLines) {
  std::string text = with_replaced(baseline_text(), "learning_rate: 0.1", "learning_rate: fast");
  text = with_replaced(text, "basis: quadratic-squares-first", "basis: cubic");
  text = with_replaced(text, "lipschitz_m: 100", "lipschitz_m: 100\n  typo_key: 3");
  const auto v = violations_of(text);
  EXPECT_TRUE(any_contains(v, "critic.learning_rate"));
  EXPECT_TRUE(any_contains(v, "critic.basis"));
  EXPECT_TRUE(any_contains(v, "trigger.typo_key"));
  for (const auto& s : v) EXPECT_NE(s.find("line "), std::string::npos) << s;
}

TEST(ParseConfig, SemanticViolationsAreReported) {
  EXPECT_TRUE(any_contains(
      violations_of(with_replaced(baseline_text(), "pinning: [1, 1, 0, 0, 0]", "pinning: [0, 0, 0, 0, 0]")),
      "leader not reachable"));
  EXPECT_TRUE(any_contains(
      violations_of(with_replaced(baseline_text(), "[[0.1, 2], [4, 6], [8, 9]]", "[[0.1, 2], [1, 6]]")),
      "overlap"));
  EXPECT_TRUE(any_contains(
      violations_of(with_replaced(baseline_text(), "initial_weights: [0.2, 0.46, 0.1, 0.32, 0.61]",
                                  "initial_weights: [0.2, 0.46]")),
      "one entry per basis function"));
}

TEST(ParseConfig, ScalarShorthandMeansIdentity) {
  const ExperimentConfig c = parse_config_text(
      "topology:\n  followers: 2\n  edges: [[1, 2]]\n  pinning: [1, 0]\ncosts:\n  q_ii: 2\n");
  EXPECT_EQ(c.costs.q_ii(), 2.0 * MatrixXd::Identity(2, 2));
  EXPECT_EQ(c.mode, RunMode::kSimulate);
}

TEST(ConfigHash, StableAndSensitive) {
  const std::string text = baseline_text();
  EXPECT_EQ(config_hash(text), config_hash(text));
  EXPECT_NE(config_hash(text), config_hash(text + " "));
  EXPECT_EQ(config_hash(""), "cbf29ce484222325");
}

TEST(EmitCsv, ZeroLengthLogWritesHeadersOnly) {
  const fs::path dir = scratch("empty");
  TrajectoryLog log;
  log.n_followers = 2;
  log.state_dim = 2;
  log.input_dim = 2;
  log.basis_size = 5;
  log.dt = 0.1;
  emit_csv(log, dir);
  for (const char* f : {"states.csv", "errors.csv", "controls.csv", "weights.csv", "costs.csv",
                        "triggers.csv"}) {
    const std::string body = slurp(dir / f);
    EXPECT_EQ(std::count(body.begin(), body.end(), '\n'), 1) << f;
  }
  EXPECT_EQ(slurp(dir / "errors.csv"), "t,e1x,e1y,e2x,e2y,dos_active\n");
}

TEST(EmitCsv, BaselineErrorsSchemaAndRoundTrip) {
  const fs::path dir = scratch("schema");
  SimConfig c = make_sim_config(parse_config(ETFORM_BASELINE_CONFIG));
  c.t_final = 0.5;
  const SimResult r = run(c);
  emit_csv(r.log, dir);
  const auto [header, rows] = read_numeric_csv(dir / "errors.csv");
  const std::vector<std::string> expected = {"t",   "e1x", "e1y", "e2x", "e2y", "e3x",
                                             "e3y", "e4x", "e4y", "e5x", "e5y", "dos_active"};
  EXPECT_EQ(header, expected);
  ASSERT_EQ(rows.size(), r.log.rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& row = r.log.rows[k];
    EXPECT_EQ(rows[k][0], std::stod(fmt(row.time)));
    for (std::size_t i = 0; i < 5; ++i)
      for (int d = 0; d < 2; ++d) {
        const double logged = row.errors[i](d);
        EXPECT_NEAR(rows[k][1 + 2 * i + d], logged, 5e-9 * std::max(1.0, std::abs(logged)));
      }
    EXPECT_EQ(rows[k][11], row.dos_active ? 1.0 : 0.0);
  }
}

TEST(Cli, ValidateConfigReportsViolatedBoundsAndWritesNothing) {
  const fs::path dir = scratch("validate");
  const Outcome o = run_cli(std::string("--config ") + ETFORM_BASELINE_CONFIG +
                            " --mode validate-config --out " + (dir / "out").string());
  EXPECT_EQ(o.code, 0) << o.output;
  EXPECT_NE(o.output.find("F = 0.3"), std::string::npos) << o.output;
  EXPECT_NE(o.output.find("T = 0.49"), std::string::npos) << o.output;
  EXPECT_EQ(std::count(o.output.begin(), o.output.end(), 'V'), 2) << o.output;  // two VIOLATED
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, MissingConfigIsUsageError) {
  const Outcome o = run_cli("--mode simulate");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.output.find("--config"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) {
  const Outcome o = run_cli(std::string("--config ") + ETFORM_BASELINE_CONFIG + " --bogus 3");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.output.find("Usage"), std::string::npos);
}

TEST(Cli, InvalidConfigExitsOne) {
  const fs::path dir = scratch("invalid");
  std::ofstream(dir / "bad.cfg") << with_replaced(baseline_text(), "dt: 0.001", "dt: -1");
  const Outcome o = run_cli("--config " + (dir / "bad.cfg").string());
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.output.find("dt must be positive"), std::string::npos);
  EXPECT_EQ(run_cli(std::string("--config ") + ETFORM_BASELINE_CONFIG + " --dt 0").code, 1);
}

TEST(Cli, SimulateWritesSevenCsvsDeterministically) {
  const fs::path dir = scratch("simulate");
  const std::string base = std::string("--config ") + ETFORM_BASELINE_CONFIG + " --mode simulate --out ";
  ASSERT_EQ(run_cli(base + (dir / "a").string()).code, 0);
  ASSERT_EQ(run_cli(base + (dir / "b").string()).code, 0);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    ++files;
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / entry.path().filename()))
        << entry.path().filename();
  }
  EXPECT_EQ(files, 7u);
  for (const auto& f : trajectory_files()) EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
}

TEST(Cli, SummaryEchoMatchesConfigFile) {
  const fs::path dir = scratch("echo");
  ASSERT_EQ(run_cli(std::string("--config ") + ETFORM_BASELINE_CONFIG + " --t-final 0.2 --out " +
                    dir.string())
                .code,
            0);
  std::map<std::string, std::string> summary;
  std::istringstream in(slurp(dir / "summary.csv"));
  std::string line;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    summary[line.substr(0, comma)] = line.substr(comma + 1);
  }
  EXPECT_EQ(summary["config_hash"], config_hash(baseline_text()));
  EXPECT_EQ(summary["config.sim.t_final"], "0.2");  // the flag wins over the file

  // Every scalar leaf in the file appears verbatim (as a number) in the echo.
  const YAML::Node root = YAML::Load(baseline_text());
  std::size_t checked = 0;
  for (const auto& section : root) {
    if (!section.second.IsMap()) continue;
    const std::string name = section.first.as<std::string>();
    for (const auto& kv : section.second) {
      if (!kv.second.IsScalar()) continue;
      const std::string key = "config." + name + "." + kv.first.as<std::string>();
      if (key == "config.sim.t_final") continue;
      ASSERT_TRUE(summary.count(key)) << key;
      const std::string raw = kv.second.Scalar();
      const std::string echoed = summary[key];
      char* end = nullptr;
      const double num = std::strtod(raw.c_str(), &end);
      if (*end == '\0')
        EXPECT_EQ(std::stod(echoed), num) << key;
      else
        EXPECT_EQ(echoed, raw) << key;
      ++checked;
    }
  }
  EXPECT_GT(checked, 20u);
  EXPECT_EQ(summary["config.critic.initial_weights"], "0.2 0.46 0.1 0.32 0.61");
  EXPECT_EQ(summary["config.costs.q_ii"], "0.4 0; 0 0.4");
  EXPECT_EQ(summary["config.dos.windows"], "0.1 2; 4 6; 8 9");
  EXPECT_EQ(summary["dos.frequency_ok"], "false");
  EXPECT_EQ(summary["dos.length_ok"], "false");
}

TEST(Cli, DivergenceExitsTwo) {
  const fs::path dir = scratch("diverge");
  std::string text = with_replaced(baseline_text(), "a_sys: [[1, 0], [0, 1]]", "a_sys: [[40, 0], [0, 40]]");
  text = with_replaced(text, "retrigger_after_attack: true",
                       "retrigger_after_attack: true\n  divergence_bound: 1.0e6");
  std::ofstream(dir / "wild.cfg") << text;
  const Outcome o = run_cli("--config " + (dir / "wild.cfg").string() + " --out " +
                            (dir / "out").string());
  EXPECT_EQ(o.code, 2) << o.output;
  EXPECT_NE(slurp(dir / "out" / "summary.csv").find("sim.diverged,true"), std::string::npos);
}

TEST(Cli, BothModeAddsPolicyIterationTrace) {
  const fs::path dir = scratch("both");
  const Outcome o = run_cli(std::string("--config ") + ETFORM_BASELINE_CONFIG +
                            " --mode both --t-final 0.2 --out " + dir.string());
  EXPECT_EQ(o.code, 0) << o.output;
  const auto [header, rows] = read_numeric_csv(dir / "pi.csv");
  EXPECT_EQ(header.front(), "iteration");
  EXPECT_FALSE(rows.empty());
}
