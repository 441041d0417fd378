#include "vidpreload/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vidpreload/errors.hpp"
#include "vidpreload/planner.hpp"
#include "vidpreload/scoring.hpp"
#include "vidpreload/sim.hpp"
#include "vidpreload/traceio.hpp"

namespace vidpreload {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

/// Reported as exit 1 with the message.
struct UsageError : Error {
  using Error::Error;
};

struct Options {
  std::string manifest;
  std::vector<std::string> bandwidth;
  std::vector<std::string> sessions;
  std::string suite;
  int suite_size = 0;
  std::string config;

  std::string strategy;
  std::vector<std::string> strategies;

  int horizon = 4;
  double alpha = 1.0;
  std::int64_t budget = 0;
  Millis time_budget = 0;
  std::string rollout;
  std::uint64_t seed = 1;
  std::vector<double> weights;

  Millis startup_delay = 200;
  std::string bitrate_rule;
  int threads = 1;

  std::string format;
  std::string output;
  std::vector<double> scales{1.0, 0.7, 0.5, 0.3};

  int videos = 12;
  int chunks = 10;
  int traces = 4;
};

/// Resolved run configuration: defaults, then the config file, then flags.
struct Settings {
  Weights weights;
  PlannerConfig planner;  // `plan`
  SimConfig sim;          // everything that simulates
  std::uint64_t seed = 1;
};

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// -- config file ---------------------------------------------------------------

template <typename F>
void for_keys(const ojson& obj, const std::string& path, const std::map<std::string, F>& handlers) {
  if (!obj.is_object()) throw ParseError(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    auto it = handlers.find(key);
    if (it == handlers.end()) throw ParseError(path + "." + key, "unknown key");
    it->second(value, path + "." + key);
  }
}

double num(const ojson& v, const std::string& path) {
  if (!v.is_number()) throw ParseError(path, "expected a number");
  return v.get<double>();
}

std::int64_t integer(const ojson& v, const std::string& path) {
  if (!v.is_number_integer()) throw ParseError(path, "expected an integer");
  return v.get<std::int64_t>();
}

std::string str(const ojson& v, const std::string& path) {
  if (!v.is_string()) throw ParseError(path, "expected a string");
  return v.get<std::string>();
}

RolloutPolicy parse_rollout(const std::string& s) {
  if (s == "greedy") return RolloutPolicy::Greedy;
  if (s == "random") return RolloutPolicy::Random;
  throw UsageError("unknown rollout policy \"" + s + "\" (expected greedy or random)");
}

BitrateRule parse_bitrate_rule(const std::string& s) {
  if (s == "deadline") return BitrateRule::DeadlineFit;
  if (s == "nominal") return BitrateRule::NominalRate;
  throw UsageError("unknown bitrate rule \"" + s + "\" (expected deadline or nominal)");
}

void apply_config(const fs::path& path, Settings& s) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  ojson doc;
  try {
    doc = ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), "malformed JSON config");
  }
  using H = std::function<void(const ojson&, const std::string&)>;
  auto planner_key = [&](auto setter) {
    return H([&s, setter](const ojson& v, const std::string& p) {
      setter(s.planner, v, p);
      setter(s.sim.planner, v, p);
    });
  };
  const std::map<std::string, H> weights{
      {"quality", [&](const ojson& v, const std::string& p) { s.weights.quality = num(v, p); }},
      {"variation", [&](const ojson& v, const std::string& p) { s.weights.variation = num(v, p); }},
      {"stall", [&](const ojson& v, const std::string& p) { s.weights.stall = num(v, p); }},
      {"bandwidth", [&](const ojson& v, const std::string& p) { s.weights.bandwidth = num(v, p); }},
  };
  const std::map<std::string, H> planner{
      {"horizon", planner_key([](PlannerConfig& c, const ojson& v, const std::string& p) {
         c.horizon = static_cast<int>(integer(v, p));
       })},
      {"exploration", planner_key([](PlannerConfig& c, const ojson& v, const std::string& p) {
         c.exploration = num(v, p);
       })},
      {"simulation_budget", planner_key([](PlannerConfig& c, const ojson& v, const std::string& p) {
         c.simulation_budget = integer(v, p);
       })},
      {"time_budget_ms", planner_key([](PlannerConfig& c, const ojson& v, const std::string& p) {
         c.time_budget = integer(v, p);
       })},
      {"rollout", planner_key([](PlannerConfig& c, const ojson& v, const std::string& p) {
         c.rollout = parse_rollout(str(v, p));
       })},
  };
  const std::map<std::string, H> sim{
      {"startup_delay_ms", [&](const ojson& v, const std::string& p) { s.sim.startup_delay = integer(v, p); }},
      {"replan_interval_ms", [&](const ojson& v, const std::string& p) { s.sim.replan_interval = integer(v, p); }},
      {"lookahead_chunks",
       [&](const ojson& v, const std::string& p) { s.sim.lookahead_chunks = static_cast<int>(integer(v, p)); }},
      {"next_video_chunks",
       [&](const ojson& v, const std::string& p) { s.sim.next_video_chunks = static_cast<int>(integer(v, p)); }},
      {"assume_early_leave",
       [&](const ojson& v, const std::string& p) {
         if (!v.is_boolean()) throw ParseError(p, "expected true or false");
         s.sim.assume_early_leave = v.get<bool>();
       }},
      {"initial_bandwidth_kbps",
       [&](const ojson& v, const std::string& p) { s.sim.initial_bandwidth_estimate = integer(v, p); }},
      {"bitrate_rule", [&](const ojson& v, const std::string& p) { s.sim.bitrate_rule = parse_bitrate_rule(str(v, p)); }},
      {"simulation_budget", [&](const ojson& v, const std::string& p) { s.sim.planner.simulation_budget = integer(v, p); }},
      {"threads", [&](const ojson& v, const std::string& p) { s.sim.threads = static_cast<int>(integer(v, p)); }},
  };
  const std::map<std::string, H> top{
      {"seed", [&](const ojson& v, const std::string& p) { s.seed = static_cast<std::uint64_t>(integer(v, p)); }},
      {"weights", [&](const ojson& v, const std::string& p) { for_keys(v, p, weights); }},
      {"planner", [&](const ojson& v, const std::string& p) { for_keys(v, p, planner); }},
      {"sim", [&](const ojson& v, const std::string& p) { for_keys(v, p, sim); }},
  };
  for_keys(doc, "config", top);
}

// -- flags ---------------------------------------------------------------------

struct Flags {
  CLI::Option* horizon = nullptr;
  CLI::Option* alpha = nullptr;
  CLI::Option* budget = nullptr;
  CLI::Option* time_budget = nullptr;
  CLI::Option* rollout = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* weights = nullptr;
  CLI::Option* startup = nullptr;
  CLI::Option* bitrate_rule = nullptr;
  CLI::Option* threads = nullptr;
  CLI::Option* config = nullptr;
};

void add_common(CLI::App* cmd, Options& o, Flags& f) {
  f.config = cmd->add_option("--config", o.config, "JSON config file (default: $" + std::string(kConfigEnv) + ")")
                 ->check(CLI::ExistingFile);
  f.seed = cmd->add_option("--seed", o.seed, "Master seed");
  f.weights = cmd->add_option("--weights", o.weights, "Score weights w1,w2,w3,w4 (quality, variation, stall, bandwidth)")
                  ->delimiter(',')
                  ->expected(4);
  f.alpha = cmd->add_option("--alpha", o.alpha, "UCT exploration constant");
  f.budget = cmd->add_option("--budget", o.budget, "MCTS simulation budget per planning call");
  f.time_budget = cmd->add_option("--time-budget", o.time_budget, "MCTS wall-clock budget per planning call, ms");
  f.rollout = cmd->add_option("--rollout", o.rollout, "Rollout policy")->check(CLI::IsMember({"greedy", "random"}));
}

void add_sim_flags(CLI::App* cmd, Options& o, Flags& f) {
  f.startup = cmd->add_option("--startup-delay", o.startup_delay, "Startup delay at session start, ms");
  f.bitrate_rule = cmd->add_option("--bitrate-rule", o.bitrate_rule, "FixedNextK bitrate rule")
                       ->check(CLI::IsMember({"deadline", "nominal"}));
  f.threads = cmd->add_option("--threads", o.threads, "Worker threads for batch runs")->check(CLI::PositiveNumber);
}

void add_inputs(CLI::App* cmd, Options& o) {
  cmd->add_option("--manifest", o.manifest, "Feed manifest (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--bandwidth", o.bandwidth, "Bandwidth trace (repeatable; pairs with --sessions)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--sessions", o.sessions, "Session trace (repeatable)")->check(CLI::ExistingFile);
  cmd->add_option("--suite", o.suite, "Built-in synthetic suite instead of files")
      ->check(CLI::IsMember({"standard", "stress"}));
  cmd->add_option("--suite-size", o.suite_size, "Sessions in the suite (default: suite's own)")
      ->check(CLI::PositiveNumber);
}

Settings resolve(const Options& o, const Flags& f) {
  Settings s;
  std::string config = o.config;
  if (config.empty())
    if (const char* env = std::getenv(kConfigEnv); env && *env) config = env;
  if (!config.empty()) apply_config(config, s);

  auto both = [&](auto fn) {
    fn(s.planner);
    fn(s.sim.planner);
  };
  if (f.horizon && f.horizon->count()) s.planner.horizon = o.horizon;
  if (f.alpha->count()) both([&](PlannerConfig& c) { c.exploration = o.alpha; });
  if (f.budget->count()) both([&](PlannerConfig& c) { c.simulation_budget = o.budget; });
  if (f.time_budget->count()) both([&](PlannerConfig& c) { c.time_budget = o.time_budget; });
  if (f.rollout->count()) both([&](PlannerConfig& c) { c.rollout = parse_rollout(o.rollout); });
  if (f.seed->count()) s.seed = o.seed;
  if (f.weights->count()) s.weights = {o.weights[0], o.weights[1], o.weights[2], o.weights[3]};
  if (f.startup && f.startup->count()) s.sim.startup_delay = o.startup_delay;
  if (f.bitrate_rule && f.bitrate_rule->count()) s.sim.bitrate_rule = parse_bitrate_rule(o.bitrate_rule);
  if (f.threads && f.threads->count()) s.sim.threads = o.threads;
  s.planner.rng_seed = s.seed;
  s.sim.master_seed = s.seed;

  try {
    s.weights.validate();
    s.planner.validate();
    s.sim.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return s;
}

std::vector<SessionCase> load_cases(const Options& o, const Settings& s, const std::string& default_suite) {
  const std::string suite = o.suite.empty() && o.manifest.empty() ? default_suite : o.suite;
  if (!suite.empty()) {
    if (!o.manifest.empty() || !o.bandwidth.empty() || !o.sessions.empty())
      throw UsageError("--suite cannot be combined with --manifest/--bandwidth/--sessions");
    if (suite == "stress") return o.suite_size ? stress_suite(s.seed, o.suite_size) : stress_suite(s.seed);
    return o.suite_size ? standard_suite(s.seed, o.suite_size) : standard_suite(s.seed);
  }
  if (o.manifest.empty()) throw UsageError("--manifest or --suite is required");
  if (o.sessions.empty()) throw UsageError("at least one --sessions trace is required");
  if (o.bandwidth.size() != 1 && o.bandwidth.size() != o.sessions.size())
    throw UsageError("give one --bandwidth trace, or one per --sessions trace");

  const Feed feed = load_manifest(o.manifest);
  std::vector<SessionCase> cases;
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < o.sessions.size(); ++i) {
    SessionCase c;
    c.id = fs::path(o.sessions[i]).stem().string();
    if (seen[c.id]++) c.id += "#" + std::to_string(i);
    c.feed = feed;
    c.bandwidth = load_bandwidth_trace(o.bandwidth.size() == 1 ? o.bandwidth[0] : o.bandwidth[i]);
    c.trace = load_session_trace(o.sessions[i]);
    cases.push_back(std::move(c));
  }
  return cases;
}

StrategyId strategy_or_usage(const std::string& name) {
  try {
    return parse_strategy(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.output, std::ios::binary);
  if (!f) throw UsageError("cannot write " + o.output);
  f << text;
}

// -- reports -------------------------------------------------------------------

constexpr const char* kCsvHeader = "strategy,trace_id,stall_ms,wasted_bytes,downloaded_bytes,mean_quality,qoe\n";

std::string csv_row(const std::string& strategy, const std::string& id, const SessionMetrics& m) {
  return strategy + "," + id + "," + std::to_string(m.total_stall) + "," + std::to_string(m.wasted_bytes) + "," +
         std::to_string(m.downloaded_bytes) + "," + fmt(m.mean_quality) + "," + fmt(m.qoe) + "\n";
}

std::string csv_row(const std::string& strategy, const std::string& id, const MetricSummary& m) {
  return strategy + "," + id + "," + fmt(m.stall_ms) + "," + fmt(m.wasted_bytes) + "," + fmt(m.downloaded_bytes) +
         "," + fmt(m.mean_quality) + "," + fmt(m.qoe) + "\n";
}

ojson json_of(const MetricSummary& m) {
  ojson j;
  j["stall_ms"] = m.stall_ms;
  j["wasted_bytes"] = m.wasted_bytes;
  j["downloaded_bytes"] = m.downloaded_bytes;
  j["mean_quality"] = m.mean_quality;
  j["qoe"] = m.qoe;
  return j;
}

ojson json_of(const SessionMetrics& m) {
  ojson j;
  j["stall_ms"] = m.total_stall;
  j["wasted_bytes"] = m.wasted_bytes;
  j["downloaded_bytes"] = m.downloaded_bytes;
  j["played_bytes"] = m.played_bytes;
  j["session_end_bytes"] = m.session_end_bytes;
  j["mean_quality"] = m.mean_quality;
  j["quality_switches"] = m.quality_switches;
  j["qoe"] = m.qoe;
  j["chunks_played"] = m.chunks_played;
  j["prompt_chunks_played"] = m.prompt_chunks_played;
  j["emergency_fetches"] = m.emergency_fetches;
  j["per_video"] = ojson::array();
  for (const auto& v : m.per_video) {
    ojson jv;
    jv["video_id"] = v.video_id;
    jv["chunks_played"] = v.chunks_played;
    jv["watched_ms"] = v.watched;
    jv["startup_ms"] = v.startup_ms;
    jv["rebuffer_ms"] = v.rebuffer_ms;
    jv["wasted_bytes"] = v.wasted_bytes;
    j["per_video"].push_back(std::move(jv));
  }
  return j;
}

// ratios may be infinite; JSON has no infinity, so those become null
ojson json_ratio(const MetricSummary& m) {
  ojson j = json_of(m);
  for (auto& [k, v] : j.items())
    if (!std::isfinite(v.get<double>())) v = nullptr;
  return j;
}

// -- subcommands ---------------------------------------------------------------

int cmd_plan(const Options& o, const Settings& s, std::ostream& out, std::ostream& err) {
  if (o.manifest.empty() || o.bandwidth.size() != 1) throw UsageError("plan needs --manifest and one --bandwidth");
  const Feed feed = load_manifest(o.manifest);
  const BandwidthModel bw = load_bandwidth_trace(o.bandwidth[0]);

  PlanningProblem problem;
  problem.feed = &feed;
  problem.bandwidth = bw;
  problem.state = PlaybackState::session_start(s.sim.startup_delay);
  problem.weights = s.weights;
  problem.candidates = horizon_chunks(feed, problem.state, s.planner.horizon);

  const std::string strategy = o.strategy.empty() ? "mcts" : o.strategy;
  PlanResult result;
  int code = kExitOk;
  std::string note;
  if (strategy == "mcts") {
    try {
      result = plan_mcts(problem, s.planner);
    } catch (const InfeasibleAllPruned& e) {
      result.plan = fallback_plan(problem);
      result.utility = evaluate_utility(problem, result.plan);
      note = std::string("infeasible: ") + e.what() + "; reporting the lowest-bitrate fallback plan";
      code = kExitInfeasible;
    }
  } else if (strategy == "brute") {
    try {
      result = plan_bruteforce(problem);
    } catch (const SpaceTooLarge& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  } else if (strategy == "sequential") {
    result = plan_sequential_baseline(problem);
  } else {
    throw UsageError("unknown plan strategy \"" + strategy + "\" (expected mcts, brute or sequential)");
  }
  if (!note.empty()) err << note << "\n";

  const ScheduleResult schedule = evaluate(problem, result.plan);
  std::ostringstream os;
  if (o.format == "json") {
    ojson j;
    j["strategy"] = strategy;
    j["plan"] = ojson::array();
    for (const auto& st : result.plan.steps) j["plan"].push_back({{"chunk", to_string(st.chunk)}, {"variant", st.variant}});
    j["utility"] = result.utility;
    j["feasible"] = code == kExitOk;
    j["total_stall_ms"] = schedule.total_stall;
    j["timeline"] = ojson::array();
    for (const auto& t : schedule.timings)
      j["timeline"].push_back({{"chunk", to_string(t.chunk)},
                               {"variant", t.variant},
                               {"download_end_ms", t.download_end},
                               {"decode_end_ms", t.decode_end},
                               {"deadline_ms", t.buffer_deadline},
                               {"playback_start_ms", t.playback_start},
                               {"stall_ms", t.stall},
                               {"compute_stall_ms", t.compute_stall}});
    j["stats"] = {{"simulations", result.stats.simulations},
                  {"nodes", result.stats.nodes},
                  {"best_found_at", result.stats.best_found_at},
                  {"complete", result.stats.complete},
                  {"exhausted", result.stats.exhausted},
                  {"stopped_early", result.stats.stopped_early}};
    os << j.dump(2) << "\n";
  } else {
    os << "strategy: " << strategy << "\n";
    os << "plan: " << to_string(result.plan) << "\n";
    os << "utility: " << fmt(result.utility) << "\n";
    os << "chunk,variant,codec,size_bytes,download_end_ms,decode_end_ms,deadline_ms,playback_start_ms,stall_ms,"
          "compute_stall_ms\n";
    for (const auto& t : schedule.timings) {
      const ChunkVariant& v = chunk_at(feed, t.chunk).variants[t.variant];
      os << to_string(t.chunk) << "," << t.variant << ","
         << (v.codec.is_prompt() ? std::string("prompt") : "pixel@" + std::to_string(v.codec.bitrate_kbps)) << ","
         << t.size << "," << t.download_end << "," << t.decode_end << "," << t.buffer_deadline << ","
         << t.playback_start << "," << t.stall << "," << t.compute_stall << "\n";
    }
    os << "total_stall_ms: " << schedule.total_stall << "\n";
    os << "simulations: " << result.stats.simulations << " nodes: " << result.stats.nodes
       << " best_found_at: " << result.stats.best_found_at << " complete: " << (result.stats.complete ? "yes" : "no")
       << " exhausted: " << (result.stats.exhausted ? "yes" : "no") << "\n";
  }
  emit(o, os.str(), out);
  return code;
}

int cmd_simulate(const Options& o, const Settings& s, std::ostream& out) {
  const std::vector<SessionCase> cases = load_cases(o, s, "");
  const StrategyId strategy = strategy_or_usage(o.strategy.empty() ? "mcts" : o.strategy);
  const DeviceModel device = DeviceModel::standard();
  SimConfig cfg = s.sim;
  cfg.record_events = o.format == "events";

  std::vector<SessionResult> results;
  for (const auto& c : cases)
    results.push_back(run_session(c.feed, c.bandwidth, c.trace, strategy, device, s.weights, cfg, c.id));

  std::ostringstream os;
  const std::string name = to_string(strategy);
  if (o.format == "events") {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      if (cases.size() > 1) os << "# " << cases[i].id << "\n";
      os << format_event_log(results[i].events);
    }
  } else if (o.format == "json") {
    ojson j;
    j["strategy"] = name;
    j["sessions"] = ojson::array();
    std::vector<SessionMetrics> all;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      ojson js = json_of(results[i].metrics);
      js["trace_id"] = cases[i].id;
      j["sessions"].push_back(std::move(js));
      all.push_back(results[i].metrics);
    }
    j["mean"] = json_of(summarize(all));
    os << j.dump(2) << "\n";
  } else {
    os << kCsvHeader;
    std::vector<SessionMetrics> all;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      os << csv_row(name, cases[i].id, results[i].metrics);
      all.push_back(results[i].metrics);
    }
    os << csv_row(name, "mean", summarize(all));
  }
  emit(o, os.str(), out);
  return kExitOk;
}

int cmd_compare(const Options& o, const Settings& s, std::ostream& out) {
  const std::vector<SessionCase> cases = load_cases(o, s, "");
  std::vector<std::string> names = o.strategies;
  if (names.empty()) names = {"fixed", "mcts"};
  if (names.size() < 2) throw UsageError("--strategies needs at least two entries");
  std::vector<StrategyId> ids;
  for (const auto& n : names) ids.push_back(strategy_or_usage(n));

  SimConfig cfg = s.sim;
  cfg.record_events = false;
  const ComparisonReport report = compare_strategies(cases, ids, DeviceModel::standard(), s.weights, cfg);

  std::ostringstream os;
  if (o.format == "json") {
    ojson j;
    j["baseline"] = to_string(ids.front());
    j["strategies"] = ojson::array();
    for (const auto& r : report.strategies) {
      ojson js;
      js["strategy"] = to_string(r.strategy);
      js["mean"] = json_of(r.mean);
      js["ratio_pct"] = json_ratio(r.ratio_pct);
      js["sessions"] = ojson::array();
      for (std::size_t i = 0; i < r.sessions.size(); ++i) {
        ojson m = json_of(r.sessions[i]);
        m["trace_id"] = r.trace_ids[i];
        js["sessions"].push_back(std::move(m));
      }
      j["strategies"].push_back(std::move(js));
    }
    os << j.dump(2) << "\n";
  } else {
    os << kCsvHeader;
    for (const auto& r : report.strategies)
      for (std::size_t i = 0; i < r.sessions.size(); ++i)
        os << csv_row(to_string(r.strategy), r.trace_ids[i], r.sessions[i]);
    for (const auto& r : report.strategies) os << csv_row(to_string(r.strategy), "mean", r.mean);
    for (const auto& r : report.strategies) os << csv_row(to_string(r.strategy), "ratio_pct", r.ratio_pct);
  }
  emit(o, os.str(), out);
  return kExitOk;
}

int cmd_sweep(const Options& o, const Settings& s, const Flags& f, std::ostream& out) {
  const std::vector<SessionCase> cases = load_cases(o, s, "stress");
  const StrategyId strategy = strategy_or_usage(o.strategy.empty() ? "fixed" : o.strategy);
  SimConfig cfg = s.sim;
  cfg.record_events = false;
  // sizes must not feed back into the bitrate choice, so nominal is the default here
  if (!f.bitrate_rule->count()) cfg.bitrate_rule = BitrateRule::NominalRate;
  for (double x : o.scales)
    if (!(x > 0.0 && x <= 1.0)) throw UsageError("--scales values must lie in (0, 1]");

  const auto rows = chunk_size_sweep(cases, strategy, o.scales, DeviceModel::standard(), s.weights, cfg);
  std::ostringstream os;
  if (o.format == "json") {
    ojson j;
    j["strategy"] = to_string(strategy);
    j["rows"] = ojson::array();
    for (const auto& r : rows) {
      ojson jr = json_of(r.mean);
      jr["scale"] = r.scale;
      j["rows"].push_back(std::move(jr));
    }
    os << j.dump(2) << "\n";
  } else {
    os << "scale,stall_ms,wasted_bytes,downloaded_bytes,mean_quality,qoe\n";
    for (const auto& r : rows)
      os << fmt(r.scale) << "," << fmt(r.mean.stall_ms) << "," << fmt(r.mean.wasted_bytes) << ","
         << fmt(r.mean.downloaded_bytes) << "," << fmt(r.mean.mean_quality) << "," << fmt(r.mean.qoe) << "\n";
  }
  emit(o, os.str(), out);
  return kExitOk;
}

int cmd_gen(const Options& o, const Settings& s, std::ostream& out) {
  if (o.output.empty()) throw UsageError("gen needs --output DIR");
  if (o.videos < 1 || o.chunks < 1 || o.traces < 1) throw UsageError("--videos, --chunks and --traces must be >= 1");
  const fs::path dir = o.output;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create " + dir.string() + ": " + ec.message());

  const Feed feed = gen_synthetic_feed(s.seed, o.videos, o.chunks, default_profiles());
  save_manifest(dir / "manifest.json", feed);
  for (int i = 0; i < o.traces; ++i) {
    const std::uint64_t seed = s.seed * 1000 + static_cast<std::uint64_t>(i);
    char name[32];
    std::snprintf(name, sizeof name, "%02d.csv", i);
    save_bandwidth_trace(dir / ("bandwidth_" + std::string(name)), gen_synthetic_bandwidth(seed, standard_pattern(i)));
    save_session_trace(dir / ("session_" + std::string(name)), gen_synthetic_session(seed, feed, RetentionModel{}));
  }
  out << "wrote " << dir.string() << " (" << o.videos << " videos, " << o.traces << " traces)\n";
  return kExitOk;
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Out-of-order video preloading: planning, simulation and experiments", "vidpreload"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Options o;
  std::map<std::string, Flags> flags;

  CLI::App* plan = app.add_subcommand("plan", "Plan the next downloads from session start");
  plan->add_option("--manifest", o.manifest, "Feed manifest (JSON)")->required()->check(CLI::ExistingFile);
  plan->add_option("--bandwidth", o.bandwidth, "Bandwidth trace used as the forecast")
      ->required()
      ->expected(1)
      ->check(CLI::ExistingFile);
  plan->add_option("--strategy", o.strategy, "mcts, brute or sequential")
      ->check(CLI::IsMember({"mcts", "brute", "sequential"}));
  flags["plan"].horizon = plan->add_option("--horizon", o.horizon, "Chunks to plan over")->check(CLI::PositiveNumber);
  plan->add_option("--startup-delay", o.startup_delay, "Startup delay, ms");
  plan->add_option("--format", o.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  plan->add_option("--output", o.output, "Write the report here instead of stdout");
  add_common(plan, o, flags["plan"]);
  flags["plan"].startup = plan->get_option("--startup-delay");

  CLI::App* simulate = app.add_subcommand("simulate", "Run sessions under one strategy");
  add_inputs(simulate, o);
  simulate->add_option("--strategy", o.strategy, "mcts, sequential, hybrid-off, fixed or fixed:K");
  simulate->add_option("--format", o.format, "csv, json or events")
      ->check(CLI::IsMember({"csv", "json", "events", "json-summary", "event-log"}));
  simulate->add_option("--output", o.output, "Write the report here instead of stdout");
  add_common(simulate, o, flags["simulate"]);
  add_sim_flags(simulate, o, flags["simulate"]);

  CLI::App* compare = app.add_subcommand("compare", "Compare strategies over the same sessions");
  add_inputs(compare, o);
  compare->add_option("--strategies", o.strategies, "Comma-separated; the first is the 100% baseline")
      ->delimiter(',');
  compare->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json", "json-summary"}));
  compare->add_option("--output", o.output, "Write the report here instead of stdout");
  add_common(compare, o, flags["compare"]);
  add_sim_flags(compare, o, flags["compare"]);

  CLI::App* sweep = app.add_subcommand("sweep", "Rerun sessions with every chunk size scaled");
  add_inputs(sweep, o);
  sweep->add_option("--strategy", o.strategy, "Strategy (default fixed)");
  sweep->add_option("--scales", o.scales, "Comma-separated factors in (0, 1]")->delimiter(',');
  sweep->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json", "json-summary"}));
  sweep->add_option("--output", o.output, "Write the report here instead of stdout");
  add_common(sweep, o, flags["sweep"]);
  add_sim_flags(sweep, o, flags["sweep"]);

  CLI::App* gen = app.add_subcommand("gen", "Write a synthetic manifest with bandwidth and session traces");
  gen->add_option("--output", o.output, "Output directory")->required();
  gen->add_option("--videos", o.videos, "Videos in the feed");
  gen->add_option("--chunks", o.chunks, "Chunks per video");
  gen->add_option("--traces", o.traces, "Bandwidth/session trace pairs");
  add_common(gen, o, flags["gen"]);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  // accept the long format names too
  if (o.format == "json-summary") o.format = "json";
  if (o.format == "event-log") o.format = "events";

  try {
    CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    const Settings s = resolve(o, flags[name]);
    if (name == "plan") return cmd_plan(o, s, out, err);
    if (name == "simulate") return cmd_simulate(o, s, out);
    if (name == "compare") return cmd_compare(o, s, out);
    if (name == "sweep") return cmd_sweep(o, s, flags[name], out);
    return cmd_gen(o, s, out);
  } catch (const InvalidManifest& e) {
    err << "error: " << e.what() << "\n";
    for (const auto& v : e.violations()) err << "  " << v << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace vidpreload
