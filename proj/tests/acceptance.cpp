// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Tolerances are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mrbear/adversarial.hpp"
#include "mrbear/game.hpp"
#include "mrbear/harness.hpp"
#include "mrbear/learner.hpp"
#include "mrbear/mdp.hpp"
#include "mrbear/oracles.hpp"
#include "mrbear/planning.hpp"
#include "mrbear/rng.hpp"
#include "mrbear/selector.hpp"

using namespace mrbear;

namespace {

constexpr double kPlannerAgreementTol = 1e-6;   // 1
constexpr double kResidualTol = 1e-9;           // 2
constexpr double kGapSlackPerStep = 1e-9;       // 3, value-iteration rounding
constexpr double kSpanTol = 1e-9;               // 4
constexpr double kLowerBoundGainTol = 1e-6;     // 6
constexpr double kKlTol = 1e-12;                // 7
constexpr double kOrderReductionTol = 1e-12;    // 8
constexpr double kOrderInvarianceTol = 1e-6;    // 9
constexpr double kSurvivalShare = 0.95;         // 11
constexpr double kSlopeLow = 0.4;               // 12
constexpr double kSlopeHigh = 0.75;             // 12
constexpr double kPlannerTol = 1e-11;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double gain_of(const mdp::TabularMdp& m) { return mdp::solve_optimal(m, kPlannerTol).gain_bias.gain; }

// max_s |h(s) + g - r(s) - (P h)(s)|, computed here rather than trusted.
double poisson_residual(const mdp::TabularMdp& m, const mdp::StationaryPolicy& pi,
                        const mdp::GainBias& gb) {
  const auto chain = mdp::induced_chain(m, pi);
  const auto r = mdp::induced_reward(m, pi);
  double worst = 0.0;
  for (std::size_t s = 0; s < chain.n; ++s) {
    double ph = 0.0;
    for (std::size_t j = 0; j < chain.n; ++j) ph += chain(s, j) * gb.bias[j];
    worst = std::max(worst, std::abs(gb.bias[s] + gb.gain - r[s] - ph));
  }
  return worst;
}

double inf_norm(const std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n = std::max(n, std::abs(x));
  return n;
}

Outcome c1_planner_vs_enumeration() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const std::size_t s = 1 + i % 6;
    const std::size_t a = 1 + (i / 6) % 3;
    const auto m = mdp::random_ergodic_mdp(s, a, 1000 + i);
    worst = std::max(worst, std::abs(gain_of(m) - oracles::brute_force_gain(m).best_gain));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= kPlannerAgreementTol && secs <= 60.0,
          "50 MDPs, max |g - g_enum| = " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome c2_poisson_residual() {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const std::size_t s = 2 + i % 9;
    const std::size_t a = 1 + i % 4;
    const auto m = mdp::random_ergodic_mdp(s, a, 2000 + i);
    const auto pi = mdp::random_policy(s, a, 3000 + i);
    worst = std::max(worst, poisson_residual(m, pi, mdp::evaluate_policy(m, pi)));
  }
  return {worst <= kResidualTol, "200 evaluations, max residual " + fmt("%.3g", worst)};
}

Outcome c3_finite_horizon_gap() {
  int violations = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::size_t s = 4 + i % 5;
    const std::size_t a = 2 + i % 2;
    const auto m = mdp::random_weakly_communicating_mdp(s, a, 1 + i % 2, 4000 + i);
    const auto opt = mdp::solve_optimal(m, kPlannerTol);
    const double h_norm = inf_norm(opt.gain_bias.bias);
    for (std::size_t horizon : {1, 10, 100, 1000}) {
      auto v = mdp::finite_horizon_value(m, horizon);
      for (double& x : v) x -= static_cast<double>(horizon) * opt.gain_bias.gain;
      const double lhs = inf_norm(v);
      const double rhs = 2.0 * h_norm + kGapSlackPerStep * static_cast<double>(horizon);
      violations += lhs > rhs;
      if (h_norm > 0.0) worst_ratio = std::max(worst_ratio, lhs / (2.0 * h_norm));
    }
  }
  return {violations == 0, "80 checks, " + std::to_string(violations) +
                               " violations, max lhs/(2||h*||) = " + fmt("%.4f", worst_ratio)};
}

Outcome c4_span_bounds() {
  int violations = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const std::size_t s = 2 + i % 7;
    const std::size_t a = 1 + i % 3;
    const auto m = mdp::random_ergodic_mdp(s, a, 5000 + i);
    const auto pi = mdp::random_policy(s, a, 6000 + i);
    const auto check = mdp::verify_span_bound(m, pi);
    violations += check.lhs > check.rhs + kSpanTol;
  }
  int so_violations = 0;
  for (std::uint64_t i = 0; i < 30; ++i) {
    const std::size_t order = 1 + i % 3;
    const std::size_t na = 2 + (i / 3) % 2;
    const std::size_t nb = 2 + (i / 6) % 2;
    const auto stage = game::random_stage_game(na, nb, 7000 + i);
    const auto psi = game::random_opponent(na, nb, order, game::OpponentKind::SelfOblivious, 8000 + i);
    const double m = static_cast<double>(order);
    so_violations += mdp::diameter(game::learner_action_mdp(stage, psi, order)) > m + kSpanTol;
    const auto br = oracles::exact_best_response(psi, stage);
    const auto r_star = mdp::induced_reward(game::induced_mdp(stage, psi, order), br.policy);
    so_violations += br.sp_h > m * mdp::span(r_star) + kSpanTol;
  }
  return {violations == 0 && so_violations == 0,
          "Kemeny bound: 100 pairs, " + std::to_string(violations) +
              " violations; self-oblivious: 30 instances, " + std::to_string(so_violations) +
              " violations"};
}

// Every cyclic window of length n occurs exactly once.
bool windows_unique(const adversarial::DeBruijnSeq& seq) {
  const std::size_t len = seq.symbols.size();
  std::vector<bool> seen(len, false);
  for (std::size_t start = 0; start < len; ++start) {
    std::size_t code = 0;
    for (std::size_t j = 0; j < seq.order; ++j) {
      const std::size_t x = seq.symbols[(start + j) % len];
      if (x >= seq.alphabet_size) return false;
      code = code * seq.alphabet_size + x;
    }
    if (code >= len || seen[code]) return false;
    seen[code] = true;
  }
  return true;
}

Outcome c5_de_bruijn() {
  constexpr std::size_t kMaxLen = 100'000;
  constexpr std::size_t kMaxOrbitLen = 4096;  // the successor lookup is a linear scan
  std::size_t cases = 0;
  std::size_t orbits = 0;
  std::vector<std::string> bad;
  for (std::size_t b = 2; b <= kMaxLen; ++b) {
    std::size_t len = 1;
    for (std::size_t n = 1;; ++n) {
      len *= b;
      if (len > kMaxLen) break;
      const auto seq = adversarial::de_bruijn(b, n);
      ++cases;
      if (seq.symbols.size() != len || !windows_unique(seq)) {
        bad.push_back("B=" + std::to_string(b) + " n=" + std::to_string(n));
        continue;
      }
      if (len > kMaxOrbitLen) continue;
      Rng rng(b * 131 + n);
      std::vector<std::size_t> w(n);
      for (auto& x : w) x = rng.below(b);
      std::set<std::vector<std::size_t>> visited;
      for (std::size_t step = 0; step < len; ++step) {
        visited.insert(w);
        const std::size_t next = adversarial::db_successor(seq, w);
        w.erase(w.begin());
        w.push_back(next);
      }
      ++orbits;
      if (visited.size() != len) bad.push_back("orbit B=" + std::to_string(b) + " n=" + std::to_string(n));
    }
  }
  std::string detail = std::to_string(cases) + " (B, n) cases, " + std::to_string(orbits) +
                       " orbits, " + std::to_string(bad.size()) + " failures";
  if (!bad.empty()) detail += " (first: " + bad.front() + ")";
  return {bad.empty(), detail};
}

Outcome c6_lower_bound_gain() {
  double worst = 0.0;
  std::size_t instances = 0;
  std::size_t pairs = 0;
  for (std::size_t na : {2, 3}) {
    for (std::size_t nb : {3, 4}) {
      for (std::size_t m : {2, 3}) {
        for (double eps : {0.05, 0.1}) {
          const auto inst = adversarial::build_lower_bound_instance(na, nb, m, eps);
          worst = std::max(worst, std::abs(gain_of(game::induced_mdp(inst.stage, inst.psi, m)) -
                                           (0.5 + eps) / static_cast<double>(m)));
          ++instances;
          if (std::pow(static_cast<double>((na - 1) * (nb - 2)), static_cast<double>(m - 1)) < 2.0) continue;
          const auto pair = adversarial::build_lower_bound_pair(na, nb, m, eps);
          worst = std::max(worst, std::abs(gain_of(game::induced_mdp(pair.inst_prime.stage,
                                                                     pair.inst_prime.psi, m)) -
                                           (0.5 + 2.0 * eps) / static_cast<double>(m)));
          ++pairs;
        }
      }
    }
  }
  return {worst <= kLowerBoundGainTol && pairs > 0,
          std::to_string(instances) + " instances, " + std::to_string(pairs) +
              " perturbed variants, max |g* - predicted| = " + fmt("%.3g", worst)};
}

// Learners used by the enumeration criteria.
std::vector<oracles::HistoryPolicy> test_learners(std::uint64_t seed) {
  std::vector<oracles::HistoryPolicy> out;
  out.push_back(oracles::as_history_policy(mdp::random_policy(4, 2, seed), 1, 2, 2));
  out.push_back([](std::span<const game::Pair> h, std::size_t t) {
    std::size_t zeros = 0;
    for (const auto& p : h) zeros += p.b == 0;
    std::vector<double> d(2, 0.0);
    d[(zeros + t) % 2] = 0.7;
    d[(zeros + t + 1) % 2] += 0.3;
    return d;
  });
  out.push_back([](std::span<const game::Pair>, std::size_t t) {
    return t % 3 == 1 ? std::vector<double>{0.2, 0.8} : std::vector<double>{0.9, 0.1};
  });
  return out;
}

Outcome c7_kl_decomposition() {
  double worst = 0.0;
  std::size_t checks = 0;
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto stage = game::random_stage_game(2, 2, 9000 + i);
    const auto psi = game::random_opponent(2, 2, 1, game::OpponentKind::General, 9100 + i);
    const auto psi_prime = game::random_opponent(2, 2, 1, game::OpponentKind::General, 9200 + i);
    for (const auto& learner : test_learners(9300 + i)) {
      for (std::size_t horizon = 1; horizon <= 4; ++horizon) {
        const oracles::EnumerationSetup setup{&stage, &psi, learner, horizon, 1};
        const double trajectory = oracles::trajectory_kl(setup, psi_prime);
        const double decomposed =
            adversarial::kl_decomposition(psi, psi_prime, oracles::expected_occupancy(setup, 1));
        worst = std::max(worst, std::abs(trajectory - decomposed));
        ++checks;
      }
    }
  }
  return {worst <= kKlTol, std::to_string(checks) + " checks, max |KL_traj - sum lambda KL| = " +
                               fmt("%.3g", worst)};
}

game::OpponentPolicy copycat() {
  std::vector<double> rows(8, 0.0);
  for (std::size_t ctx = 0; ctx < 4; ++ctx) rows[ctx * 2 + ctx / 2] = 1.0;
  return game::OpponentPolicy(1, game::OpponentKind::General, 2, 2, rows);
}

Outcome c8_order_reduction() {
  double worst = 0.0;
  double worst_stationary = 0.0;
  std::size_t checks = 0;
  auto check = [&](const game::StageGame& stage, const game::OpponentPolicy& psi,
                   const oracles::HistoryPolicy& learner, std::size_t horizon, bool stationary) {
    const oracles::EnumerationSetup setup{&stage, &psi, learner, horizon, 1};
    const auto reduced = oracles::reduce_policy_order(setup, 1);
    const oracles::EnumerationSetup reduced_setup{&stage, &psi,
                                                  oracles::as_history_policy(reduced, 1, 2, 2), horizon, 1};
    const double gap = std::abs(oracles::expected_value(setup) - oracles::expected_value(reduced_setup));
    worst = std::max(worst, gap);
    if (stationary) worst_stationary = std::max(worst_stationary, gap);
    ++checks;
  };
  for (std::uint64_t i = 0; i < 4; ++i) {
    const auto stage = game::random_stage_game(2, 2, 9400 + i);
    const auto psi = game::random_opponent(2, 2, 1, game::OpponentKind::General, 9500 + i);
    const auto learners = test_learners(9600 + i);
    for (std::size_t horizon = 1; horizon <= 6; ++horizon) {
      for (std::size_t k = 0; k < learners.size(); ++k) check(stage, psi, learners[k], horizon, k == 0);
    }
  }
  const game::StageGame identity(2, 2, {1, 0, 0, 1});
  const oracles::HistoryPolicy one_then_zero = [](std::span<const game::Pair>, std::size_t t) {
    return t == 1 ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0};
  };
  check(identity, copycat(), one_then_zero, 2, false);
  return {worst <= kOrderReductionTol,
          std::to_string(checks) + " instances, max |V(pi) - V(pi')| = " + fmt("%.3g", worst) +
              " (stationary learners only: " + fmt("%.3g", worst_stationary) + ")"};
}

Outcome c9_order_invariance() {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::size_t order = i % 3;
    const std::size_t na = order == 2 ? 2 : 2 + i % 2;
    const std::size_t nb = order == 2 ? 2 : 2 + (i / 2) % 2;
    const auto kind = i % 4 < 2 ? game::OpponentKind::General : game::OpponentKind::SelfOblivious;
    const auto stage = game::random_stage_game(na, nb, 10'000 + i);
    const auto psi = game::random_opponent(na, nb, order, kind, 11'000 + i);
    double lo = 1e300;
    double hi = -1e300;
    for (std::size_t extra = 0; extra <= 2; ++extra) {
      const double g = gain_of(game::induced_mdp(stage, psi, order + extra));
      lo = std::min(lo, g);
      hi = std::max(hi, g);
    }
    worst = std::max(worst, hi - lo);
  }
  return {worst <= kOrderInvarianceTol, "20 opponents, max gain spread " + fmt("%.3g", worst)};
}

Outcome c10_epoch_bound() {
  const auto stage = game::random_stage_game(2, 2, 12'000);
  const auto psi = game::random_opponent(2, 2, 1, game::OpponentKind::General, 12'001);
  std::size_t runs = 0;
  int violations = 0;
  double tightest = 0.0;
  for (std::size_t horizon : {1'000, 10'000, 100'000, 1'000'000}) {
    for (std::size_t order = 0; order <= 2; ++order) {
      for (std::uint64_t seed = 1; seed <= 2; ++seed) {
        game::GameEnv env(stage, psi, 2, 12'100 + seed);
        selector::RunOptions opts;
        opts.record_steps = false;
        const auto trace = selector::run_single_class(env, order, horizon, 0.01, opts);
        const std::size_t s = game::state_count(4, order);
        const auto check = oracles::epoch_bound_check(trace.classes[0].learner_epochs, s, 2, horizon);
        violations += !check.holds;
        tightest = std::max(tightest, static_cast<double>(check.observed) / check.bound);
        ++runs;
      }
    }
  }
  return {violations == 0, std::to_string(runs) + " runs up to T = 1e6, " + std::to_string(violations) +
                               " violations, max epochs/bound = " + fmt("%.3f", tightest)};
}

std::vector<learner::GuaranteeSpec> specs_for(std::size_t num_classes) {
  std::vector<learner::GuaranteeSpec> out;
  for (std::size_t i = 0; i < num_classes; ++i) out.push_back(learner::make_guarantee_spec(i, 2, 2, 1.0, 1.0));
  return out;
}

Outcome c11_selector_safety() {
  constexpr std::size_t kRuns = 40;
  constexpr std::size_t kHorizon = 200'000;
  constexpr std::size_t kOrder = 1;  // m*
  const auto specs = specs_for(3);
  const auto cfg = selector::derive_constants(3, kHorizon, 0.01, 1.0, specs);
  std::size_t survived = 0;
  std::size_t checks = 0;
  std::size_t failures = 0;
  for (std::uint64_t seed = 0; seed < kRuns; ++seed) {
    const auto stage = game::random_stage_game(2, 2, 13'000 + seed);
    const auto psi = game::random_opponent(2, 2, kOrder, game::OpponentKind::General, 14'000 + seed);
    game::GameEnv env(stage, psi, 2, 15'000 + seed);
    selector::RunOptions opts;
    opts.record_steps = false;
    opts.check_balance = true;
    const auto trace = selector::run_mrbear(cfg, env, specs, opts);
    bool ok = true;
    for (std::size_t j = kOrder; j < 3; ++j) ok = ok && trace.classes[j].active;
    survived += ok;
    checks += trace.balance_checks;
    failures += trace.balance_failures.size();
  }
  const double share = static_cast<double>(survived) / kRuns;
  return {share >= kSurvivalShare && failures == 0 && checks > 0,
          "classes j >= 1 survived in " + std::to_string(survived) + "/40 runs; " +
              std::to_string(failures) + " of " + std::to_string(checks) + " balance checks failed"};
}

Outcome c12_headline() {
  const auto start = std::chrono::steady_clock::now();
  const auto out_dir = std::filesystem::temp_directory_path() / "mrbear_acceptance_headline";
  nlohmann::json doc = {
      {"horizon", 500'000},
      {"num_classes", 3},
      {"delta", 0.01},
      {"stage_game", {{"random", {{"A", 2}, {"B", 2}, {"seed", 1}}}}},
      {"opponent", {{"generator", {{"order", 1}, {"kind", "general"}, {"seed", 1}}}}},
      {"baselines", {harness::kMrbear, harness::kNaiveTopClass}},
      {"seeds", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20}},
      {"write_steps", false},
      {"output_dir", out_dir.string()}};
  const auto logs = harness::run_experiment(harness::parse_config(doc));
  std::filesystem::remove_all(out_dir);

  std::vector<const std::vector<harness::CurvePoint>*> mrbear_curves;
  for (const auto& log : logs) {
    if (!log.ok) return {false, "run failed: " + log.baseline + " seed " + std::to_string(log.seed) + ": " + log.error};
    if (log.baseline == harness::kMrbear) mrbear_curves.push_back(&log.curve);
  }
  const double slope = harness::log_log_slope(harness::median_curve(mrbear_curves), 50'000, 500'000);
  double mrbear_median = 0.0;
  double naive_median = 0.0;
  for (const auto& row : harness::summarize(logs)) {
    if (row.baseline == harness::kMrbear) mrbear_median = row.median_regret;
    if (row.baseline == harness::kNaiveTopClass) naive_median = row.median_regret;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool sublinear = slope >= kSlopeLow && slope <= kSlopeHigh;
  return {sublinear && mrbear_median < naive_median && secs <= 1200.0,
          "slope " + fmt("%.3f", slope) + " over [5e4, 5e5]; median regret mrbear " +
              fmt("%.1f", mrbear_median) + " vs naive " + fmt("%.1f", naive_median) + ", " +
              fmt("%.1f", secs) + " s"};
}

Outcome c13_degenerate_equivalence() {
  std::size_t mismatches = 0;
  std::size_t steps = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t horizon = 20'000;
    const auto stage = game::random_stage_game(2, 2, 16'000 + seed);
    const auto psi = game::random_opponent(2, 2, seed % 2, game::OpponentKind::General, 17'000 + seed);
    const auto specs = specs_for(1);
    const auto cfg = selector::derive_constants(1, horizon, 0.01, 1.0, specs);
    game::GameEnv env_a(stage, psi, 1, 18'000 + seed);
    game::GameEnv env_b(stage, psi, 1, 18'000 + seed);
    const auto a = selector::run_mrbear(cfg, env_a, specs);
    const auto b = selector::run_single_class(env_b, 0, horizon, 0.01);
    if (a.steps.size() != b.steps.size() || a.total_reward != b.total_reward) {
      ++mismatches;
      continue;
    }
    for (std::size_t t = 0; t < a.steps.size(); ++t) mismatches += !selector::same_interaction(a.steps[t], b.steps[t]);
    steps += a.steps.size();
  }
  return {mismatches == 0, "5 seeds, " + std::to_string(steps) + " steps compared, " +
                               std::to_string(mismatches) + " mismatches"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"planner agrees with policy enumeration", c1_planner_vs_enumeration},
      {"Poisson residual", c2_poisson_residual},
      {"finite-horizon gap", c3_finite_horizon_gap},
      {"span bounds", c4_span_bounds},
      {"de Bruijn windows and successor orbit", c5_de_bruijn},
      {"lower-bound instance gains", c6_lower_bound_gain},
      {"KL divergence decomposition", c7_kl_decomposition},
      {"order reduction preserves value", c8_order_reduction},
      {"gain invariance across orders", c9_order_invariance},
      {"epoch-count bound", c10_epoch_bound},
      {"selector safety", c11_selector_safety},
      {"headline experiment", c12_headline},
      {"M = 1 equals the bare learner", c13_degenerate_equivalence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failed += !out.pass;
    std::printf("criterion %2zu %s: %s  [%s]\n", i + 1, out.pass ? "PASS" : "FAIL", criteria[i].first,
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
