#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "mrbear/adversarial.hpp"
#include "mrbear/errors.hpp"
#include "mrbear/game_io.hpp"
#include "mrbear/harness.hpp"
#include "mrbear/learner.hpp"
#include "mrbear/oracles.hpp"
#include "mrbear/planning.hpp"
#include "mrbear/selector.hpp"

namespace fs = std::filesystem;
using namespace mrbear;

namespace {

int cmd_validate(const fs::path& config_path) {
  const auto config = harness::load_config(config_path);
  std::vector<learner::GuaranteeSpec> specs;
  for (std::size_t i = 0; i < config.num_classes; ++i) {
    specs.push_back(learner::make_guarantee_spec(i, config.stage.num_learner_actions(),
                                                 config.stage.num_opponent_actions(),
                                                 config.universal_constant, config.c_h));
  }
  const auto sel = selector::derive_constants(config.num_classes, config.horizon, config.delta, config.c_h, specs);
  const auto best = oracles::exact_best_response(config.opponent, config.stage);
  std::printf("config ok: T=%zu M=%zu delta=%g c_h=%g\n", config.horizon, config.num_classes, config.delta,
              config.c_h);
  std::printf("warmup_steps=%zu alpha=%.6f beta=%.6f\n", sel.warmup_steps, sel.alpha, sel.beta);
  for (const auto& s : specs) std::printf("class %zu: C=%.6f\n", s.class_order, s.coefficient);
  std::printf("opponent order=%zu g*=%.9f sp(h*)=%.9f\n", config.opponent.order(), best.g_star, best.sp_h);
  std::printf("output_dir=%s\n", harness::resolve_output_dir(config.output_dir).string().c_str());
  return 0;
}

int cmd_run(const fs::path& config_path) {
  const auto config = harness::load_config(config_path);
  const auto logs = harness::run_experiment(config);
  int failures = 0;
  for (const auto& log : logs) {
    if (log.ok) {
      std::printf("%-16s seed %-6llu regret %12.3f  (%.1fs)\n", log.baseline.c_str(),
                  static_cast<unsigned long long>(log.seed), log.meta["regret"]["total"].get<double>(),
                  log.meta["wall_time_s"].get<double>());
    } else {
      ++failures;
      std::printf("%-16s seed %-6llu FAILED: %s\n", log.baseline.c_str(),
                  static_cast<unsigned long long>(log.seed), log.error.c_str());
    }
  }
  const fs::path dir = harness::resolve_output_dir(config.output_dir);
  harness::write_summary_csv(harness::summarize(logs), dir / "summary.csv");
  std::printf("wrote %s\n", (dir / "summary.csv").string().c_str());
  return failures == 0 ? 0 : 1;
}

int cmd_summarize(const fs::path& dir) {
  const auto summary = harness::summarize(harness::load_run_logs(dir));
  harness::write_summary_csv(summary, dir / "summary.csv");
  for (const auto& s : summary) {
    std::printf("%-16s runs %zu failed %zu median regret %.3f IQR [%.3f, %.3f]\n", s.baseline.c_str(), s.runs,
                s.failed, s.median_regret, s.q1_regret, s.q3_regret);
  }
  std::printf("wrote %s\n", (dir / "summary.csv").string().c_str());
  return 0;
}

int cmd_plot(const fs::path& dir, const fs::path& out) {
  const auto written = harness::emit_plots(harness::load_run_logs(dir), out.empty() ? dir : out);
  for (const auto& p : written) std::printf("wrote %s\n", p.string().c_str());
  return 0;
}

int cmd_lower_bound(std::size_t a, std::size_t b, std::size_t m, double eps, const fs::path& out_arg) {
  char name[96];
  std::snprintf(name, sizeof name, "lower_bound_A%zu_B%zu_m%zu_eps%g", a, b, m, eps);
  const fs::path dir = harness::resolve_output_dir(out_arg.empty() ? fs::path(name) : out_arg);
  fs::create_directories(dir);

  auto plan = [](const adversarial::LowerBoundInstance& inst) {
    const auto model = game::induced_mdp(inst.stage, inst.psi, inst.memory);
    return mdp::solve_optimal(model).gain_bias.gain;
  };
  nlohmann::json sidecar = {{"epsilon", eps}, {"m", m}, {"A", a}, {"B", b}};
  try {
    const auto pair = adversarial::build_lower_bound_pair(a, b, m, eps);
    game::write_json_file(game::to_json(pair.inst.stage), dir / "stage.json");
    game::write_json_file(game::to_json(pair.inst.psi), dir / "psi.json");
    game::write_json_file(game::to_json(pair.inst_prime.psi), dir / "psi_prime.json");
    sidecar["special_state"] = pair.inst.special_state;
    sidecar["s_prime"] = pair.s_prime;
    sidecar["g_star"] = plan(pair.inst);
    sidecar["g_star_prime"] = plan(pair.inst_prime);
  } catch (const InvalidParams& e) {
    // Too few clean windows for the perturbed twin; emit the base instance.
    const auto inst = adversarial::build_lower_bound_instance(a, b, m, eps);
    game::write_json_file(game::to_json(inst.stage), dir / "stage.json");
    game::write_json_file(game::to_json(inst.psi), dir / "psi.json");
    sidecar["special_state"] = inst.special_state;
    sidecar["s_prime"] = nullptr;
    sidecar["g_star"] = plan(inst);
    std::fprintf(stderr, "note: %s; wrote the base instance only\n", e.what());
  }
  sidecar["predicted_g_star"] = adversarial::predicted_gain(m, eps);
  sidecar["predicted_g_star_prime"] = adversarial::predicted_gain_prime(m, eps);
  game::write_json_file(sidecar, dir / "instance.json");
  std::printf("g*=%.9f (predicted %.9f)\nwrote %s\n", sidecar["g_star"].get<double>(),
              adversarial::predicted_gain(m, eps), dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mrbear: memory-order model selection for repeated games"};
  app.require_subcommand(1);

  fs::path config_path, dir, plot_out, lb_out;
  std::size_t lb_a = 0, lb_b = 0, lb_m = 0;
  double lb_eps = 0.0;

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  auto* validate = app.add_subcommand("validate", "check a config and print derived constants");
  validate->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  auto* summarize = app.add_subcommand("summarize", "write summary.csv for a run directory");
  summarize->add_option("dir", dir, "run directory")->required()->check(CLI::ExistingDirectory);
  auto* plot = app.add_subcommand("plot", "write SVG regret charts for a run directory");
  plot->add_option("dir", dir, "run directory")->required()->check(CLI::ExistingDirectory);
  plot->add_option("--out", plot_out, "output directory (defaults to the run directory)");
  auto* lower = app.add_subcommand("lower-bound", "emit a lower-bound instance pair as JSON fixtures");
  lower->add_option("A", lb_a, "learner actions")->required();
  lower->add_option("B", lb_b, "opponent actions")->required();
  lower->add_option("m", lb_m, "opponent memory")->required();
  lower->add_option("eps", lb_eps, "bias epsilon in (0, 1/4)")->required();
  lower->add_option("--out", lb_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path);
    if (*validate) return cmd_validate(config_path);
    if (*summarize) return cmd_summarize(dir);
    if (*plot) return cmd_plot(dir, plot_out);
    if (*lower) return cmd_lower_bound(lb_a, lb_b, lb_m, lb_eps, lb_out);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid config (field '%s'): %s\n", e.field().c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
