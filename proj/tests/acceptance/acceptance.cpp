// Acceptance checks, one line per criterion:
//
//   acceptance            run all
//   acceptance 3 7        run a subset
//
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "support/instances.hpp"
#include "vidpreload/cli.hpp"
#include "vidpreload/errors.hpp"
#include "vidpreload/scoring.hpp"
#include "vidpreload/sim.hpp"

using namespace vidpreload;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;  // printed indented under the result line
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

nlohmann::json load_fixture(const std::string& rel) {
  std::ifstream in(std::string(VIDPRELOAD_FIXTURE_DIR) + "/" + rel);
  if (!in) throw std::runtime_error("missing fixture " + rel);
  return nlohmann::json::parse(in);
}

Plan plan_from_json(const nlohmann::json& steps, int video = 0) {
  Plan p;
  for (const auto& s : steps) p.steps.push_back({{video, s[0].get<int>()}, s[1].get<int>()});
  return p;
}

// -- 1 -------------------------------------------------------------------------

Outcome timeline_exactness() {
  const Feed toy = testing::toy_feed(8);
  const auto bw = BandwidthModel::constant(testing::kToyBandwidth);
  const auto state = PlaybackState::session_start(testing::kToyStartup);
  int checked = 0, wrong = 0;

  auto expect = [&](const ChunkTiming& t, Millis dl, Millis dec, Millis deadline, Millis start, Millis stall) {
    ++checked;
    if (t.download_end != dl || t.decode_end != dec || t.buffer_deadline != deadline || t.playback_start != start ||
        t.stall != stall)
      ++wrong;
  };

  // one pixel chunk, then two prompt chunks queued on the neural unit
  Feed one = toy;
  one[0].chunks.resize(2);
  auto r = evaluate_plan(Plan{{{{0, 0}, testing::kToyPixel}}}, DeviceModel::standard(), bw, state, one);
  expect(r.timings.at(0), 700, 700, 1000, 1000, 0);
  r = evaluate_plan(Plan{{{{0, 0}, testing::kToyPrompt}, {{0, 1}, testing::kToyPrompt}}}, DeviceModel::standard(), bw,
                    state, one);
  expect(r.timings.at(0), 200, 1700, 1000, 1700, 700);
  expect(r.timings.at(1), 400, 3200, 2700, 3200, 500);
  if (r.total_stall != 1200) ++wrong;

  // the golden toy timelines
  const auto doc = load_fixture("toy/timelines.json");
  for (const char* name : {"in_order", "out_of_order"}) {
    const auto s = evaluate_plan(plan_from_json(doc[name]["plan"]), DeviceModel::standard(), bw, state, toy);
    const auto& rows = doc[name]["timings"];
    if (s.timings.size() != rows.size()) {
      ++wrong;
      continue;
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      expect(s.timings[i], rows[i][1].get<Millis>(), rows[i][2].get<Millis>(), rows[i][3].get<Millis>(),
             rows[i][4].get<Millis>(), rows[i][5].get<Millis>());
  }

  // single unit, zero start, in playback order: the plain recursions
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 50; ++iter) {
    auto inst = testing::random_instance(static_cast<std::uint64_t>(iter), 6, 3);
    for (auto& c : inst.feed[0].chunks)
      for (auto& v : c.variants) v.decode_unit = Unit::VideoDecoder;
    PlaybackState zero = PlaybackState::session_start(static_cast<Millis>(rng() % 2000));
    Plan plan;
    for (const auto& c : inst.feed[0].chunks) plan.steps.push_back({c.id, static_cast<int>(rng() % c.variants.size())});
    const auto s = evaluate_plan(plan, DeviceModel::standard(), inst.problem.bandwidth, zero, inst.feed);
    Millis dl = 0, dec = 0, deadline = zero.startup_delay;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const Chunk& c = inst.feed[0].chunks[i];
      const ChunkVariant& v = c.variants[plan.steps[i].variant];
      dl += download_duration(v.size, inst.problem.bandwidth, dl);
      dec = std::max(dl, dec) + v.decode_latency;
      const Millis start = std::max(dec, deadline);
      expect(s.timings[i], dl, dec, deadline, start, std::max<Millis>(0, dec - deadline));
      deadline = start + c.playout;
    }
  }
  return {wrong == 0, fmt("%d hand-derived and recursive timings checked, %d mismatches", checked, wrong)};
}

// -- 2 -------------------------------------------------------------------------

/// Prompt chunks decoded by their deadline and inside the window, for a
/// plan that never stalls; -1 when the plan stalls.
int prompts_fitted(const ScheduleResult& s, Millis window) {
  if (s.total_stall != 0) return -1;
  int n = 0;
  for (const auto& t : s.timings)
    if (t.variant == testing::kToyPrompt && t.decode_end <= std::min(t.buffer_deadline, window)) ++n;
  return n;
}

Outcome toy_reproduction() {
  const Feed feed = testing::toy_feed(8);
  const auto problem = testing::toy_problem(feed);
  const auto doc = load_fixture("toy/timelines.json");
  const Millis window = doc["window_ms"].get<Millis>();

  // every in-order configuration
  int best_in_order = -1;
  for (unsigned mask = 0; mask < 256; ++mask) {
    Plan plan;
    for (int c = 0; c < 8; ++c) plan.steps.push_back({{0, c}, (mask >> c) & 1 ? testing::kToyPrompt : testing::kToyPixel});
    best_in_order = std::max(best_in_order, prompts_fitted(evaluate(problem, plan), window));
  }

  const auto golden = prompts_fitted(evaluate(problem, plan_from_json(doc["out_of_order"]["plan"])), window);
  const auto mcts = plan_mcts(problem, PlannerConfig{});
  const int planned = mcts.plan.size() == 8 ? prompts_fitted(evaluate(problem, mcts.plan), window) : -1;

  const bool pass = best_in_order == 3 && golden >= 4 && planned >= 4;
  return {pass, fmt("window %lld ms: best in-order plan fits %d prompt chunks, golden out-of-order %d, MCTS plan %d",
                    static_cast<long long>(window), best_in_order, golden, planned),
          {"MCTS plan " + to_string(mcts.plan)}};
}

// -- 3 -------------------------------------------------------------------------

Outcome mcts_matches_oracle() {
  int matches = 0, worse_than_seq = 0, runs = 0;
  std::vector<std::string> notes;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto inst = testing::random_instance(seed, 4, 3);
    const auto& p = inst.problem;
    ++runs;
    const auto brute = plan_bruteforce(p);
    const auto seq = plan_sequential_baseline(p);
    PlannerConfig cfg;
    cfg.simulation_budget = 20'000;
    cfg.time_budget = 600'000;
    cfg.rng_seed = seed;
    double u = 0.0;
    try {
      u = plan_mcts(p, cfg).utility;
    } catch (const InfeasibleAllPruned&) {
      u = evaluate_utility(p, fallback_plan(p));
      if (!brute.stats.complete) ++matches;
      if (u < seq.utility - 1e-9) ++worse_than_seq;
      continue;
    }
    if (std::abs(u - brute.utility) <= 1e-9) {
      ++matches;
    } else {
      notes.push_back(fmt("instance %llu: mcts %.6f, optimum %.6f", static_cast<unsigned long long>(seed), u,
                          brute.utility));
    }
    if (u < seq.utility - 1e-9) {
      ++worse_than_seq;
      notes.push_back(fmt("instance %llu: mcts %.6f below sequential %.6f", static_cast<unsigned long long>(seed), u,
                          seq.utility));
    }
  }
  return {matches >= 95 && worse_than_seq == 0,
          fmt("MCTS equals the exhaustive optimum on %d/%d instances, below sequential on %d", matches, runs,
              worse_than_seq),
          notes};
}

// -- 4 -------------------------------------------------------------------------

Outcome seven_chunk_scale() {
  const Feed feed = testing::wide_feed();
  const auto problem = testing::wide_problem(feed);
  const std::uint64_t space = search_space_size(problem);
  bool refused = false;
  try {
    plan_bruteforce(problem);
  } catch (const SpaceTooLarge&) {
    refused = true;
  }

  const auto frozen = load_fixture("seven_chunk_optimum.json");
  const double optimum = frozen["utility"].get<double>();
  const Plan frozen_plan = plan_from_json(frozen["plan"]);

  PlannerConfig cfg;
  cfg.simulation_budget = 120'000;
  cfg.time_budget = 600'000;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = plan_mcts(problem, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const bool found = std::abs(r.utility - optimum) <= 1e-9;
  const bool pass = space == 5040ULL * 279'936ULL && refused && found && r.stats.best_found_at <= 120'000;
  return {pass,
          fmt("space %llu (7! x 6^7), brute force %s; MCTS utility %.6f vs frozen optimum %.6f, first reached at "
              "simulation %lld (%.1f s)",
              static_cast<unsigned long long>(space), refused ? "refused" : "ran", r.utility, optimum,
              static_cast<long long>(r.stats.best_found_at), secs),
          {"MCTS plan " + to_string(r.plan) + (r.plan == frozen_plan ? " (same as frozen)" : " (frozen " + to_string(frozen_plan) + ")")}};
}

// -- 5 -------------------------------------------------------------------------

Outcome pruning_soundness() {
  std::mt19937_64 rng(2024);
  int instances = 0, prefixes = 0, bad_children = 0, missed = 0, bad_plans = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const int horizon = 2 + static_cast<int>(seed % 5);
    const int variants = 1 + static_cast<int>((seed / 5) % 6);
    auto inst = testing::random_instance(seed + 5000, horizon, variants);
    const auto& p = inst.problem;
    ++instances;

    // walk random prefixes, checking the surviving children against a
    // from-scratch evaluation of every possible extension
    Plan prefix;
    for (;;) {
      ++prefixes;
      const auto kids = expand(p, prefix);
      const std::set<std::pair<ChunkId, int>> kept = [&] {
        std::set<std::pair<ChunkId, int>> s;
        for (const auto& k : kids) s.insert({k.chunk, k.variant});
        return s;
      }();
      for (ChunkId id : p.candidates) {
        if (std::any_of(prefix.steps.begin(), prefix.steps.end(), [&](const PlanStep& s) { return s.chunk == id; }))
          continue;
        for (int v : p.allowed_variants(chunk_at(inst.feed, id))) {
          Plan ext = prefix;
          ext.steps.push_back({id, v});
          const bool clean = compute_stall_free(evaluate(p, ext));
          const bool survived = kept.contains({id, v});
          if (survived && !clean) ++bad_children;
          if (!survived && clean) ++missed;
        }
      }
      if (kids.empty()) break;
      prefix.steps.push_back(kids[rng() % kids.size()]);
    }

    PlannerConfig cfg;
    cfg.simulation_budget = 400;
    cfg.rng_seed = seed;
    try {
      if (!compute_stall_free(evaluate(p, plan_mcts(p, cfg).plan))) ++bad_plans;
    } catch (const InfeasibleAllPruned&) {
    }
    if (search_space_size(p) <= 200'000 && !compute_stall_free(evaluate(p, plan_bruteforce(p).plan))) ++bad_plans;
  }
  return {bad_children == 0 && bad_plans == 0 && missed == 0,
          fmt("%d instances, %d prefixes: %d surviving children with compute stall, %d clean children pruned, %d "
              "returned plans with compute stall",
              instances, prefixes, bad_children, missed, bad_plans)};
}

// -- 6 -------------------------------------------------------------------------

Outcome chunk_size_direction(std::vector<SessionMetrics>& all) {
  const auto cases = stress_suite(1);
  SimConfig cfg;
  cfg.bitrate_rule = BitrateRule::NominalRate;
  cfg.threads = 4;
  const std::vector<double> scales{1.0, 0.7, 0.5, 0.3};
  const auto rows = chunk_size_sweep(cases, StrategyId::fixed_next_k(3), scales, DeviceModel::standard(), Weights{}, cfg);

  bool monotone = true;
  int per_case_violations = 0;
  std::vector<std::string> notes;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    notes.push_back(fmt("scale %.1f: stall %.1f ms, waste %.0f bytes", rows[i].scale, rows[i].mean.stall_ms,
                        rows[i].mean.wasted_bytes));
    for (const auto& s : rows[i].sessions) all.push_back(s);
    if (i == 0) continue;
    monotone = monotone && rows[i].mean.stall_ms <= rows[i - 1].mean.stall_ms &&
               rows[i].mean.wasted_bytes <= rows[i - 1].mean.wasted_bytes;
    for (std::size_t c = 0; c < cases.size(); ++c)
      if (rows[i].sessions[c].total_stall > rows[i - 1].sessions[c].total_stall) ++per_case_violations;
  }
  notes.push_back(fmt("per-session stall increases between adjacent scales: %d of %zu", per_case_violations,
                      cases.size() * (scales.size() - 1)));
  const double stall_cut = 1.0 - rows.back().mean.stall_ms / rows.front().mean.stall_ms;
  const double waste_cut = 1.0 - rows.back().mean.wasted_bytes / rows.front().mean.wasted_bytes;
  return {stall_cut >= 0.5 && waste_cut >= 0.5 && monotone,
          fmt("%zu stress sessions, scale 0.3 vs 1.0: stall -%.1f%%, waste -%.1f%%, means %s", cases.size(),
              100 * stall_cut, 100 * waste_cut, monotone ? "monotone" : "NOT monotone"),
          notes};
}

// -- 7 -------------------------------------------------------------------------

Outcome end_to_end(std::vector<SessionMetrics>& all) {
  const auto cases = standard_suite(1);
  SimConfig cfg;
  cfg.threads = 4;
  cfg.record_events = false;
  const std::vector<StrategyId> ids{StrategyId::fixed_next_k(3), StrategyId::mcts(), StrategyId::hybrid_off(),
                                    StrategyId::sequential()};
  const auto report = compare_strategies(cases, ids, DeviceModel::standard(), Weights{}, cfg);

  std::vector<std::string> notes{fmt("%-12s %12s %12s %12s %12s %12s", "strategy", "stall_ms", "wasted_B",
                                     "downloaded_B", "quality", "qoe")};
  for (const auto& r : report.strategies) {
    notes.push_back(fmt("%-12s %12.1f %12.0f %12.0f %12.4f %12.3f", to_string(r.strategy).c_str(), r.mean.stall_ms,
                        r.mean.wasted_bytes, r.mean.downloaded_bytes, r.mean.mean_quality, r.mean.qoe));
    for (const auto& s : r.sessions) all.push_back(s);
  }
  for (const auto& r : report.strategies)
    notes.push_back(fmt("%-12s %11.1f%% %11.1f%% %11.1f%% %11.1f%% %11.1f%%", (to_string(r.strategy) + " %").c_str(),
                        r.ratio_pct.stall_ms, r.ratio_pct.wasted_bytes, r.ratio_pct.downloaded_bytes,
                        r.ratio_pct.mean_quality, r.ratio_pct.qoe));

  const auto& base = report.strategies[0].mean;
  const auto& mcts = report.strategies[1].mean;
  const bool pass = mcts.stall_ms < base.stall_ms && mcts.wasted_bytes < base.wasted_bytes && mcts.qoe > base.qoe;
  const auto& ratio = report.strategies[1].ratio_pct;
  return {pass,
          fmt("%zu sessions, mcts vs fixed:3: stall %.1f%%, waste %.1f%%, downloaded %.1f%%, QoE %.1f%%",
              cases.size(), ratio.stall_ms, ratio.wasted_bytes, ratio.downloaded_bytes, ratio.qoe),
          notes};
}

// -- 8 -------------------------------------------------------------------------

std::string run_cli_text(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return std::to_string(code) + "\n" + out.str() + err.str();
}

Outcome conservation_and_determinism(const std::vector<SessionMetrics>& earlier) {
  int sessions = 0, leaks = 0;
  for (const auto& m : earlier) {
    ++sessions;
    if (!m.conserves_bytes() || m.wasted_bytes > m.downloaded_bytes) ++leaks;
  }

  // event logs, twice, for every strategy on both suites
  int logs = 0, diverged = 0;
  std::vector<SessionCase> cases = standard_suite(2, 6);
  for (auto& c : stress_suite(2, 6)) cases.push_back(std::move(c));
  SimConfig cfg;
  for (const auto& c : cases) {
    for (auto id : {StrategyId::mcts(), StrategyId::sequential(), StrategyId::fixed_next_k(3), StrategyId::hybrid_off()}) {
      const auto a = run_session(c.feed, c.bandwidth, c.trace, id, DeviceModel::standard(), Weights{}, cfg, c.id);
      const auto b = run_session(c.feed, c.bandwidth, c.trace, id, DeviceModel::standard(), Weights{}, cfg, c.id);
      ++sessions;
      ++logs;
      if (!a.metrics.conserves_bytes()) ++leaks;
      if (format_event_log(a.events) != format_event_log(b.events)) ++diverged;
    }
  }

  // reports through the command line, serial and parallel
  int reports = 0, report_diffs = 0;
  const std::vector<std::vector<std::string>> commands{
      {"compare", "--suite", "standard", "--suite-size", "6", "--strategies", "fixed,mcts,sequential"},
      {"sweep", "--suite", "stress", "--suite-size", "6", "--format", "json"},
      {"simulate", "--suite", "stress", "--suite-size", "3", "--format", "events"},
  };
  for (auto cmd : commands) {
    const std::string first = run_cli_text(cmd);
    cmd.push_back("--threads");
    cmd.push_back("4");
    ++reports;
    if (first.rfind("0\n", 0) != 0 || run_cli_text(cmd) != first || run_cli_text(cmd) != first) ++report_diffs;
  }

  return {leaks == 0 && diverged == 0 && report_diffs == 0,
          fmt("%d sessions conserve bytes (%d leaks); %d event logs replayed (%d differ); %d reports repeated (%d "
              "differ)",
              sessions, leaks, logs, diverged, reports, report_diffs)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto want = [&](int n) { return wanted.empty() || wanted.contains(n); };

  std::vector<SessionMetrics> simulated;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"timeline exactness", timeline_exactness},
      {"toy out-of-order reproduction", toy_reproduction},
      {"MCTS matches the exhaustive oracle", mcts_matches_oracle},
      {"seven-chunk search guard and convergence", seven_chunk_scale},
      {"pruning soundness", pruning_soundness},
      {"chunk size sweep direction", [&] { return chunk_size_direction(simulated); }},
      {"end-to-end dominance over fixed next-K", [&] { return end_to_end(simulated); }},
      {"conservation and determinism", [&] { return conservation_and_determinism(simulated); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!want(n)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", n, criteria[i].first, o.detail.c_str(), secs);
    for (const auto& note : o.notes) std::printf("       %s\n", note.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed;
}
