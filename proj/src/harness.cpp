#include "mrbear/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "mrbear/errors.hpp"
#include "mrbear/game_io.hpp"
#include "mrbear/learner.hpp"
#include "mrbear/numeric.hpp"
#include "mrbear/oracles.hpp"
#include "mrbear/selector.hpp"

namespace mrbear::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T field(const json& doc, const char* name) {
  if (!doc.contains(name)) throw ValidationError(name, std::string("missing field '") + name + "'");
  try {
    return doc.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(name, std::string("field '") + name + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& doc, const char* name, T fallback) {
  return doc.contains(name) ? field<T>(doc, name) : fallback;
}

fs::path resolve(const fs::path& base, const std::string& file) {
  const fs::path p(file);
  return p.is_absolute() || base.empty() ? p : base / p;
}

game::StageGame parse_stage(const json& spec, const fs::path& base) {
  if (!spec.is_object()) throw ValidationError("stage_game", "stage_game must be an object");
  try {
    if (spec.contains("inline")) return game::stage_from_json(spec.at("inline"));
    if (spec.contains("file")) {
      return game::stage_from_json(game::read_json_file(resolve(base, spec.at("file").get<std::string>())));
    }
    if (spec.contains("random")) {
      const json& r = spec.at("random");
      return game::random_stage_game(field<std::size_t>(r, "A"), field<std::size_t>(r, "B"),
                                     field<std::uint64_t>(r, "seed"));
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError("stage_game", e.what());
  } catch (const json::exception& e) {
    throw ValidationError("stage_game", e.what());
  }
  throw ValidationError("stage_game", "stage_game needs one of 'inline', 'file' or 'random'");
}

game::OpponentPolicy parse_opponent(const json& spec, const fs::path& base,
                                    const game::StageGame& stage) {
  if (!spec.is_object()) throw ValidationError("opponent", "opponent must be an object");
  try {
    if (spec.contains("inline")) return game::opponent_from_json(spec.at("inline"));
    if (spec.contains("file")) {
      return game::opponent_from_json(game::read_json_file(resolve(base, spec.at("file").get<std::string>())));
    }
    if (spec.contains("generator")) {
      const json& g = spec.at("generator");
      return game::random_opponent(stage.num_learner_actions(), stage.num_opponent_actions(),
                                   field<std::size_t>(g, "order"),
                                   game::parse_kind(field_or<std::string>(g, "kind", "general")),
                                   field<std::uint64_t>(g, "seed"),
                                   field_or<double>(g, "mixing_floor", 0.05));
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError("opponent", e.what());
  } catch (const json::exception& e) {
    throw ValidationError("opponent", e.what());
  }
  throw ValidationError("opponent", "opponent needs one of 'inline', 'file' or 'generator'");
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_steps_csv(const selector::RunTrace& trace, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "# schema_version=" << kSchemaVersion << '\n';
  out << "t,epoch,class,state,action,opp_action,reward\n";
  for (const auto& s : trace.steps) {
    out << s.t << ',' << s.epoch << ',' << unsigned(s.cls) << ',' << s.state << ','
        << unsigned(s.action) << ',' << unsigned(s.opponent_action) << ',' << fmt(s.reward) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_epochs_csv(const selector::RunTrace& trace, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "# schema_version=" << kSchemaVersion << '\n';
  out << "k,class,length,active,eliminated\n";
  for (const auto& e : trace.epochs) {
    out << e.k << ',' << e.cls << ',' << e.length << ',';
    for (std::size_t i = 0; i < e.active.size(); ++i) out << (i ? ";" : "") << (e.active[i] ? 1 : 0);
    out << ',';
    for (std::size_t i = 0; i < e.eliminated.size(); ++i) out << (i ? ";" : "") << e.eliminated[i];
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<CurvePoint> regret_curve(const selector::RunTrace& trace, double g_star) {
  std::vector<CurvePoint> curve;
  const std::size_t stride = std::max<std::size_t>(1, (trace.horizon + kMaxCurvePoints - 1) / kMaxCurvePoints);
  CompensatedSum reward;
  for (const auto& s : trace.steps) {
    reward.add(s.reward);
    if (s.t % stride == 0 || s.t == trace.horizon) {
      curve.push_back({s.t, static_cast<double>(s.t) * g_star - reward.value()});
    }
  }
  return curve;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "# schema_version=" << kSchemaVersion << '\n';
  out << "t,regret\n";
  for (const auto& p : curve) out << p.t << ',' << fmt(p.regret) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<CurvePoint> read_curve_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<CurvePoint> curve;
  if (!in) return curve;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("malformed regret curve: " + path.string());
    curve.push_back({std::stoull(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
  }
  return curve;
}

struct Oracle {
  double g_star = 0.0;
  double sp_h = 0.0;
};

RunLog run_job(const ExperimentConfig& config, const Oracle& oracle, const std::string& baseline,
               std::uint64_t seed, const fs::path& dir) {
  RunLog log;
  log.baseline = baseline;
  log.seed = seed;
  const std::string stem = job_stem(baseline, seed);
  log.meta_path = dir / (stem + ".meta.json");

  std::vector<learner::GuaranteeSpec> specs;
  for (std::size_t i = 0; i < config.num_classes; ++i) {
    specs.push_back(learner::make_guarantee_spec(i, config.stage.num_learner_actions(),
                                                 config.stage.num_opponent_actions(),
                                                 config.universal_constant, config.c_h));
  }
  const auto sel = selector::derive_constants(config.num_classes, config.horizon, config.delta,
                                              config.c_h, specs);
  json meta = {{"schema_version", kSchemaVersion},
               {"config_hash", hex(fnv1a(config.source.dump()))},
               {"config", config.source},
               {"baseline", baseline},
               {"seed", seed},
               {"horizon", config.horizon},
               {"num_classes", config.num_classes},
               {"delta", config.delta},
               {"c_h", config.c_h},
               {"universal_constant", config.universal_constant},
               {"alpha", sel.alpha},
               {"beta", sel.beta},
               {"warmup_steps", sel.warmup_steps},
               {"opponent_order", config.opponent.order()},
               {"g_star", oracle.g_star},
               {"sp_h", oracle.sp_h},
               {"failure_probability_bound",
                selector::failure_probability_bound(config.num_classes, config.horizon, config.delta)}};

  const auto started = std::chrono::steady_clock::now();
  try {
    game::GameEnv env(config.stage, config.opponent,
                      std::max(config.num_classes - 1, config.opponent.order()), seed);
    selector::RunTrace trace;
    if (baseline == kMrbear) {
      trace = selector::run_mrbear(sel, env, specs);
    } else {
      const std::size_t order = baseline == kNaiveTopClass ? config.num_classes - 1 : config.opponent.order();
      trace = selector::run_single_class(env, order, config.horizon, config.delta);
    }
    const auto regret = selector::compute_regret(trace, oracle.g_star);
    log.curve = regret_curve(trace, oracle.g_star);

    json classes = json::array();
    for (const auto& c : trace.classes) {
      classes.push_back({{"order", c.class_order},
                         {"C", c.coefficient},
                         {"N", c.steps},
                         {"reward_sum", c.reward_sum},
                         {"active", c.active},
                         {"eliminated_at", c.eliminated_at ? json(*c.eliminated_at) : json(nullptr)},
                         {"learner_epochs", c.learner_epochs}});
    }
    json history = json::array();
    for (const auto& p : trace.initial_history) history.push_back({p.a, p.b});
    meta["status"] = "ok";
    meta["total_reward"] = trace.total_reward;
    meta["regret"] = {{"total", regret.total}, {"per_class", regret.per_class}};
    meta["classes"] = std::move(classes);
    meta["outer_epochs"] = trace.epochs.size();
    meta["initial_history"] = std::move(history);

    if (config.write_steps) write_steps_csv(trace, dir / (stem + ".steps.csv"));
    write_epochs_csv(trace, dir / (stem + ".epochs.csv"));
    write_curve_csv(log.curve, dir / (stem + ".regret.csv"));
    log.ok = true;
  } catch (const std::exception& e) {
    meta["status"] = "error";
    meta["error"] = e.what();
    log.error = e.what();
    log.curve.clear();
  }
  meta["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  log.meta = meta;
  game::write_json_file(meta, log.meta_path);
  return log;
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ParseError("config must be a JSON object");
  ExperimentConfig c;
  c.source = doc;
  c.horizon = field<std::size_t>(doc, "horizon");
  c.num_classes = field<std::size_t>(doc, "num_classes");
  c.delta = field_or<double>(doc, "delta", 0.01);
  c.c_h = field_or<double>(doc, "c_h", 1.0);
  c.universal_constant = field_or<double>(doc, "universal_constant", 1.0);
  c.write_steps = field_or<bool>(doc, "write_steps", true);
  c.threads = field_or<std::size_t>(doc, "threads", 0);
  c.output_dir = field<std::string>(doc, "output_dir");
  c.seeds = field<std::vector<std::uint64_t>>(doc, "seeds");
  c.baselines = field_or<std::vector<std::string>>(doc, "baselines", {kMrbear});

  if (c.num_classes == 0) throw ValidationError("num_classes", "num_classes must be at least 1");
  if (c.num_classes > 255) throw ValidationError("num_classes", "num_classes must be at most 255");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ValidationError("delta", "delta must lie in (0, 1)");
  if (!(c.c_h >= 0.0)) throw ValidationError("c_h", "c_h must be nonnegative");
  if (!(c.universal_constant > 0.0)) {
    throw ValidationError("universal_constant", "universal_constant must be positive");
  }
  if (c.seeds.empty()) throw ValidationError("seeds", "at least one seed is required");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) {
    throw ValidationError("seeds", "seeds must be distinct");
  }
  if (c.baselines.empty()) throw ValidationError("baselines", "at least one baseline is required");
  for (const auto& b : c.baselines) {
    if (b != kMrbear && b != kNaiveTopClass && b != kOracleClass) {
      throw ValidationError("baselines", "unknown baseline '" + b + "'");
    }
  }
  if (std::set<std::string>(c.baselines.begin(), c.baselines.end()).size() != c.baselines.size()) {
    throw ValidationError("baselines", "baselines must be distinct");
  }
  if (c.output_dir.empty()) throw ValidationError("output_dir", "output_dir must not be empty");

  const std::size_t warmup = selector::warmup_length(c.c_h);
  if (c.horizon < c.num_classes * warmup) {
    throw ValidationError("horizon", "horizon T = " + std::to_string(c.horizon) +
                                         " is below the warm-up requirement M * max(ceil(c_h^5), 9) = " +
                                         std::to_string(c.num_classes * warmup));
  }
  if (c.horizon > 0xFFFFFFFFULL) throw ValidationError("horizon", "horizon must fit in 32 bits");

  if (!doc.contains("stage_game")) throw ValidationError("stage_game", "missing field 'stage_game'");
  if (!doc.contains("opponent")) throw ValidationError("opponent", "missing field 'opponent'");
  c.stage = parse_stage(doc.at("stage_game"), base_dir);
  c.opponent = parse_opponent(doc.at("opponent"), base_dir, c.stage);
  if (c.opponent.num_learner_actions() != c.stage.num_learner_actions() ||
      c.opponent.num_opponent_actions() != c.stage.num_opponent_actions()) {
    throw ValidationError("opponent", "opponent action sets do not match the stage game");
  }
  if (c.opponent.order() >= c.num_classes) {
    throw ValidationError("opponent.order", "opponent order " + std::to_string(c.opponent.order()) +
                                                " must be below num_classes " + std::to_string(c.num_classes));
  }
  if (c.stage.num_learner_actions() > 256 || c.stage.num_opponent_actions() > 256) {
    throw ValidationError("stage_game", "at most 256 actions per player are supported");
  }
  try {
    game::state_count(c.stage.num_learner_actions() * c.stage.num_opponent_actions(), c.num_classes - 1);
  } catch (const TooLarge&) {
    throw ValidationError("num_classes", "largest model class has too many states");
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  return parse_config(game::read_json_file(path), path.parent_path());
}

fs::path resolve_output_dir(const fs::path& output_dir) {
  const char* root = std::getenv(kOutputRootEnv);
  if (root != nullptr && *root != '\0' && output_dir.is_relative()) return fs::path(root) / output_dir;
  return output_dir;
}

std::string job_stem(const std::string& baseline, std::uint64_t seed) {
  return baseline + "_seed" + std::to_string(seed);
}

std::vector<RunLog> run_experiment(const ExperimentConfig& config) {
  const fs::path dir = resolve_output_dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const auto best = oracles::exact_best_response(config.opponent, config.stage);
  const Oracle oracle{best.g_star, best.sp_h};

  struct Job {
    std::string baseline;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::uint64_t seed : config.seeds)
    for (const auto& b : config.baselines) jobs.push_back({b, seed});

  std::vector<RunLog> logs(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        logs[i] = run_job(config, oracle, jobs[i].baseline, jobs[i].seed, dir);
      } catch (const std::exception& e) {
        logs[i].baseline = jobs[i].baseline;
        logs[i].seed = jobs[i].seed;
        logs[i].error = e.what();
      }
    }
  };
  std::size_t threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return logs;
}

std::vector<RunLog> load_run_logs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> metas;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 10 && name.ends_with(".meta.json")) metas.push_back(entry.path());
  }
  std::sort(metas.begin(), metas.end());
  std::vector<RunLog> logs;
  for (const auto& path : metas) {
    RunLog log;
    log.meta = game::read_json_file(path);
    log.meta_path = path;
    log.baseline = log.meta.value("baseline", "");
    log.seed = log.meta.value("seed", std::uint64_t{0});
    log.ok = log.meta.value("status", "") == "ok";
    log.error = log.meta.value("error", "");
    if (log.ok) {
      const std::string name = path.filename().string();
      log.curve = read_curve_csv(dir / (name.substr(0, name.size() - 10) + ".regret.csv"));
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyVector("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<BaselineSummary> summarize(const std::vector<RunLog>& logs) {
  std::map<std::string, std::vector<const RunLog*>> groups;
  for (const auto& log : logs) groups[log.baseline].push_back(&log);

  std::vector<BaselineSummary> out;
  for (const auto& [name, group] : groups) {
    BaselineSummary s;
    s.baseline = name;
    std::vector<double> regrets;
    std::map<std::size_t, std::vector<double>> shares, elim_epochs;
    for (const RunLog* log : group) {
      if (!log->ok) {
        ++s.failed;
        continue;
      }
      ++s.runs;
      regrets.push_back(log->meta.at("regret").at("total").get<double>());
      const double horizon = log->meta.at("horizon").get<double>();
      for (const auto& c : log->meta.at("classes")) {
        const auto order = c.at("order").get<std::size_t>();
        shares[order].push_back(c.at("N").get<double>() / horizon);
        if (!c.at("eliminated_at").is_null()) elim_epochs[order].push_back(c.at("eliminated_at").get<double>());
      }
    }
    if (!regrets.empty()) {
      s.median_regret = quantile(regrets, 0.5);
      s.q1_regret = quantile(regrets, 0.25);
      s.q3_regret = quantile(regrets, 0.75);
    }
    for (const auto& [order, values] : shares) {
      ClassShare cs;
      cs.class_order = order;
      double total = 0.0;
      for (double v : values) total += v;
      cs.mean_step_share = total / static_cast<double>(s.runs);
      if (auto it = elim_epochs.find(order); it != elim_epochs.end()) {
        cs.eliminated_runs = it->second.size();
        cs.median_elimination_epoch = quantile(it->second, 0.5);
      }
      s.classes.push_back(cs);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_summary_csv(const std::vector<BaselineSummary>& summary, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "# schema_version=" << kSchemaVersion << '\n';
  out << "baseline,runs,failed,median_regret,q1_regret,q3_regret,iqr_regret,class,mean_step_share,"
         "eliminated_runs,median_elimination_epoch\n";
  for (const auto& s : summary) {
    const std::string head = s.baseline + ',' + std::to_string(s.runs) + ',' + std::to_string(s.failed) +
                             ',' + fmt(s.median_regret) + ',' + fmt(s.q1_regret) + ',' +
                             fmt(s.q3_regret) + ',' + fmt(s.q3_regret - s.q1_regret) + ',';
    if (s.classes.empty()) out << head << ",,,\n";
    for (const auto& c : s.classes) {
      out << head << c.class_order << ',' << fmt(c.mean_step_share) << ',' << c.eliminated_runs << ','
          << (c.median_elimination_epoch ? fmt(*c.median_elimination_epoch) : "") << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

double log_log_slope(const std::vector<CurvePoint>& curve, std::size_t t_begin, std::size_t t_end) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (const auto& p : curve) {
    if (p.t < t_begin || p.t > t_end || !(p.regret > 0.0)) continue;
    const double x = std::log(static_cast<double>(p.t));
    const double y = std::log(p.regret);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw InvalidArgument("log_log_slope: fewer than two usable points");
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

std::vector<CurvePoint> median_curve(const std::vector<const std::vector<CurvePoint>*>& curves) {
  std::vector<CurvePoint> out;
  if (curves.empty()) return out;
  std::size_t len = curves.front()->size();
  for (const auto* c : curves) len = std::min(len, c->size());
  std::vector<double> column(curves.size());
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t k = 0; k < curves.size(); ++k) column[k] = (*curves[k])[i].regret;
    out.push_back({(*curves.front())[i].t, quantile(column, 0.5)});
  }
  return out;
}

}  // namespace mrbear::harness
