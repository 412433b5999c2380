// etform_run: runs one formation-control experiment from a config file.
//
//   etform_run --config configs/baseline.cfg --out out --mode simulate
//
// Exit codes: 0 success, 1 usage or validation error, 2 runtime failure
// (divergence, rank-deficient policy evaluation).

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "etform/config.hpp"
#include "etform/csv_io.hpp"
#include "etform/dos.hpp"
#include "etform/metrics.hpp"
#include "etform/pi_solver.hpp"
#include "etform/sim.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

void print_admissibility(const etform::AdmissibilityReport& r, double horizon) {
  std::printf("DoS admissibility over [0, %g]:\n", horizon);
  std::printf("  attack frequency  F = %.6g  (bound %.6g)  %s\n", r.frequency,
              r.bounds.max_frequency, r.frequency_ok ? "ok" : "VIOLATED");
  std::printf("  attack length rate T = %.6g  (bound %.6g)  %s\n", r.length_rate,
              r.bounds.max_length_rate, r.length_ok ? "ok" : "VIOLATED");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-triggered leader-follower formation control under DoS attacks"};
  std::string config_path;
  std::string out_dir;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::optional<double> t_final;
  std::optional<double> dt;
  app.add_option("--config", config_path, "Experiment config file")->required();
  app.add_option("--out", out_dir, "Output directory (default ./out)");
  app.add_option("--mode", mode, "Run mode")
      ->check(CLI::IsMember({"simulate", "policy-iterate", "both", "validate-config"}));
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--t-final", t_final, "Override the simulated horizon [s]");
  app.add_option("--dt", dt, "Override the integration step [s]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kInvalid;
  }

  etform::ExperimentConfig cfg;
  std::string hash;
  try {
    const std::string bytes = etform::read_file(config_path);
    hash = etform::config_hash(bytes);
    cfg = etform::parse_config_text(bytes, config_path);
    if (!mode.empty()) cfg.mode = etform::run_mode_from_string(mode);
    if (seed) cfg.seed = cfg.pi.seed = *seed;
    if (t_final) cfg.t_final = *t_final;
    if (dt) cfg.dt = *dt;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    etform::check_config(cfg);
  } catch (const etform::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  }

  etform::RunSummary summary;
  summary.config_hash = hash;
  summary.admissibility = etform::admissible(etform::DosSchedule::FromWindows(cfg.dos_windows),
                                             cfg.t_final, cfg.stability);

  std::printf("config %s (hash %s), mode %s\n", config_path.c_str(), hash.c_str(),
              etform::to_string(cfg.mode));
  print_admissibility(summary.admissibility, cfg.t_final);
  if (cfg.mode == etform::RunMode::kValidateConfig) {
    std::printf("config is valid\n");
    return kOk;
  }

  const auto started = std::chrono::steady_clock::now();
  int status = kOk;
  try {
    if (cfg.mode == etform::RunMode::kPolicyIterate || cfg.mode == etform::RunMode::kBoth) {
      const etform::PiProblem problem = etform::make_pi_problem(cfg);
      const etform::PiResult pi =
          etform::run_pi(problem, etform::default_admissible_policies(problem), cfg.pi);
      etform::emit_csv(pi, cfg.output_dir);
      summary.policy_iterated = true;
      summary.pi_iterations = pi.iterations;
      summary.pi_converged = pi.converged;
      std::printf("policy iteration: %zu iterations, %s\n", pi.iterations,
                  pi.converged ? "converged" : "not converged");
    }
    if (cfg.mode == etform::RunMode::kSimulate || cfg.mode == etform::RunMode::kBoth) {
      const etform::SimResult sim = etform::run(etform::make_sim_config(cfg));
      etform::emit_csv(sim.log, cfg.output_dir);
      summary = etform::summarize(sim.log, summary);
      summary.diverged = sim.diverged;
      summary.diagnostic = sim.diagnostic;
      for (std::size_t i = 0; i < summary.final_error_norms.size(); ++i)
        std::printf("  agent %zu: |e(T)| = %.6g, triggers = %zu, J = %.6g\n", i + 1,
                    summary.final_error_norms[i], summary.trigger_counts[i],
                    summary.cumulative_costs[i]);
      if (sim.diverged) {
        std::fprintf(stderr, "simulation diverged: %s\n", sim.diagnostic.c_str());
        status = kRuntime;
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failed: %s\n", e.what());
    status = kRuntime;
  }
  summary.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  etform::emit_summary(summary, etform::config_echo(cfg), cfg.output_dir);
  std::printf("wrote %s (%.3f s)\n", cfg.output_dir.c_str(), summary.wall_clock_seconds);
  return status;
}
