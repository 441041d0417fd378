#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "support/instances.hpp"
#include "vidpreload/errors.hpp"
#include "vidpreload/planner.hpp"
#include "vidpreload/scoring.hpp"

using namespace vidpreload;
using testing::kToyPixel;
using testing::kToyPrompt;

namespace {

PlannerConfig quick(std::int64_t sims, std::uint64_t seed = 1) {
  PlannerConfig c;
  c.simulation_budget = sims;
  c.time_budget = 600'000;
  c.rng_seed = seed;
  return c;
}

/// Every order x configuration plan over the problem's candidates.
template <typename F>
void for_each_plan(const PlanningProblem& p, F&& f) {
  std::vector<std::size_t> perm(p.candidates.size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    std::vector<std::size_t> digits(perm.size(), 0);
    for (;;) {
      Plan plan;
      for (std::size_t i = 0; i < perm.size(); ++i) {
        const ChunkId id = p.candidates[perm[i]];
        plan.steps.push_back({id, p.allowed_variants(chunk_at(*p.feed, id))[digits[i]]});
      }
      f(plan);
      std::size_t k = 0;
      for (; k < digits.size(); ++k) {
        const ChunkId id = p.candidates[perm[k]];
        if (++digits[k] < p.allowed_variants(chunk_at(*p.feed, id)).size()) break;
        digits[k] = 0;
      }
      if (k == digits.size()) break;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
}

int prompts_of(const Plan& plan, const Feed& feed) {
  int n = 0;
  for (const auto& s : plan.steps) n += chunk_at(feed, s.chunk).variants[s.variant].codec.is_prompt();
  return n;
}

}  // namespace

TEST_SUITE("planner") {

TEST_CASE("uct value") {
  CHECK(std::isinf(uct_value(5.0, 0, 10, 1.0)));
  CHECK(uct_value(10.0, 5, 100, 1.0) == doctest::Approx(2.0 + std::sqrt(std::log(100.0) / 5.0)));
  CHECK(uct_value(10.0, 5, 100, 1.0) == doctest::Approx(2.9597).epsilon(1e-4));
  CHECK(uct_value(3.0, 3, 77, 0.0) == 1.0);
}

TEST_CASE("harmonic mean prediction") {
  const std::vector<Kbps> two{1000, 500};
  CHECK(harmonic_mean(two) == 666);
  CHECK(harmonic_mean(std::span<const Kbps>{}) == 0);

  const std::vector<Kbps> obs{100, 2000, 2000, 2000, 2000, 2000};
  CHECK(predict_bandwidth(obs, 700).throughput_at(0) == 2000);  // only the last five count
  CHECK(predict_bandwidth(std::span<const Kbps>{}, 700).throughput_at(0) == 700);

  const BandwidthModel trace({{0, 100}, {10, 400}, {20, 400}, {30, 400}, {40, 400}, {50, 400}, {60, 50}});
  CHECK(predict_bandwidth(trace, 55).throughput_at(0) == 400);
  CHECK(predict_bandwidth(trace, 15).throughput_at(0) == 160);
}

TEST_CASE("horizon skips buffered chunks and crosses videos") {
  const Feed feed = gen_synthetic_feed(3, 2, 3, default_profiles());
  PlaybackState s;
  s.next_chunk = {0, 1};
  s.buffered = {{{0, 2}, 0, 0}};
  const auto h = horizon_chunks(feed, s, 3);
  REQUIRE(h.size() == 3);
  CHECK(h[0] == ChunkId{0, 1});
  CHECK(h[1] == ChunkId{1, 0});
  CHECK(h[2] == ChunkId{1, 1});
  CHECK(horizon_chunks(feed, s, 50).size() == 4);
}

TEST_CASE("expansion prunes late prompt decodes") {
  const Feed feed = testing::toy_feed(1);
  auto p = testing::toy_problem(feed);

  // the prompt would finish at 1700 against a 1000 ms deadline
  const auto kids = expand(p, Plan{});
  REQUIRE(kids.size() == 1);
  CHECK(kids[0].variant == kToyPixel);

  p.state.startup_delay = 2000;
  CHECK(expand(p, Plan{}).size() == 2);

  Feed prompt_only = feed;
  prompt_only[0].chunks[0].variants = {testing::toy_variants()[kToyPrompt]};
  auto q = testing::toy_problem(prompt_only);
  q.state.startup_delay = 500;
  CHECK(expand(q, Plan{}).empty());
  CHECK_THROWS_AS(plan_mcts(q, quick(100)), InfeasibleAllPruned);
  CHECK(fallback_plan(q) == Plan{{{{0, 0}, 0}}});
}

TEST_CASE("single step search is exhaustive") {
  Feed feed = gen_synthetic_feed(5, 1, 1, default_profiles());
  feed[0].chunks[0].variants.resize(3);
  PlanningProblem p;
  p.feed = &feed;
  p.state = PlaybackState::session_start(1000);
  p.candidates = playback_order(feed);
  p.bandwidth = BandwidthModel::constant(5000);

  const auto mcts = plan_mcts(p, quick(100));
  CHECK(mcts.stats.simulations <= 3);
  CHECK(mcts.stats.exhausted);
  int best = 0;
  for (int v = 1; v < 3; ++v)
    if (evaluate_utility(p, Plan{{{{0, 0}, v}}}) > evaluate_utility(p, Plan{{{{0, 0}, best}}})) best = v;
  CHECK(mcts.plan == Plan{{{{0, 0}, best}}});
  CHECK(plan_bruteforce(p).plan == mcts.plan);
}

TEST_CASE("brute force beats every enumerated plan") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = testing::random_instance(seed, 3, 2);
    const auto& p = inst.problem;
    const auto best = plan_bruteforce(p);
    int feasible = 0, total = 0;
    for_each_plan(p, [&](const Plan& plan) {
      ++total;
      // pruning applies to every download-order prefix, and a prefix stall
      // can disappear once earlier chunks are added, so check them all
      Plan prefix;
      for (const auto& step : plan.steps) {
        prefix.steps.push_back(step);
        if (!compute_stall_free(evaluate(p, prefix))) return;
      }
      ++feasible;
      CHECK(evaluate_utility(p, plan) <= best.utility + 1e-12);
    });
    CHECK(total == 48);
    if (feasible > 0) {
      CHECK(best.stats.complete);
      CHECK(best.utility == doctest::Approx(evaluate_utility(p, best.plan)));
      CHECK(compute_stall_free(evaluate(p, best.plan)));
    }
  }
}

TEST_CASE("unpruned brute force visits every plan") {
  auto inst = testing::random_instance(3, 3, 2);
  const auto r = plan_bruteforce(inst.problem, {false, 1000});
  CHECK(r.stats.simulations == 48);
}

TEST_CASE("space guard") {
  const Feed feed = testing::wide_feed();
  const auto p = testing::wide_problem(feed);
  CHECK(search_space_size(p) == 5040ULL * 279'936ULL);
  CHECK_THROWS_AS(plan_bruteforce(p), SpaceTooLarge);

  auto small = p;
  small.candidates.resize(2);
  CHECK(search_space_size(small) == 2 * 36);
  small.allow_prompt = false;
  CHECK(search_space_size(small) == 2 * 25);
}

TEST_CASE("mcts is deterministic, sound and anytime") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto inst = testing::random_instance(seed + 100, 5, 3);
    const auto& p = inst.problem;
    PlanResult a, b;
    try {
      a = plan_mcts(p, quick(2000, seed));
      b = plan_mcts(p, quick(2000, seed));
    } catch (const InfeasibleAllPruned&) {
      continue;
    }
    CHECK(a.plan == b.plan);
    CHECK(a.stats.simulations == b.stats.simulations);
    CHECK(a.stats.improvements == b.stats.improvements);
    CHECK(compute_stall_free(evaluate(p, a.plan)));
    CHECK(a.utility == doctest::Approx(evaluate_utility(p, a.plan)));
    for (std::size_t i = 1; i < a.stats.improvements.size(); ++i) {
      CHECK(a.stats.improvements[i].first >= a.stats.improvements[i - 1].first);
      CHECK(a.stats.improvements[i].second >= a.stats.improvements[i - 1].second);
    }
    CHECK(a.stats.best_found_at <= a.stats.simulations);

    const auto brute = plan_bruteforce(p);
    if (a.stats.complete) {
      CHECK(brute.utility >= a.utility - 1e-9);
      CHECK(a.utility >= plan_sequential_baseline(p).utility - 1e-9);
    }
  }
}

TEST_CASE("argmax is invariant to weight scaling") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto inst = testing::random_instance(seed + 200, 4, 2);
    auto p = inst.problem;
    const auto base = plan_bruteforce(p);
    p.weights = p.weights.scaled(3.5);
    const auto scaled = plan_bruteforce(p);
    CHECK(scaled.plan == base.plan);
    CHECK(scaled.utility == doctest::Approx(3.5 * base.utility));
  }
}

TEST_CASE("sequential baseline on the toy instance") {
  const Feed feed = testing::toy_feed(8);
  const auto p = testing::toy_problem(feed);
  const auto r = plan_sequential_baseline(p);
  REQUIRE(r.plan.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(r.plan.steps[i].chunk == ChunkId{0, static_cast<int>(i)});
  CHECK(prompts_of(r.plan, feed) == 3);
  CHECK(compute_stall_free(evaluate(p, r.plan)));
}

TEST_CASE("sequential baseline without prompts is a plain in-order preload") {
  const Feed feed = gen_synthetic_feed(9, 1, 4, default_profiles());
  PlanningProblem p;
  p.feed = &feed;
  p.state = PlaybackState::session_start(200);
  p.candidates = playback_order(feed);
  p.allow_prompt = false;
  const auto r = plan_sequential_baseline(p);
  CHECK(prompts_of(r.plan, feed) == 0);
  for (std::size_t i = 0; i < r.plan.size(); ++i) CHECK(r.plan.steps[i].chunk.chunk == static_cast<int>(i));
}

TEST_CASE("fixed next-k baseline") {
  const Feed feed = gen_synthetic_feed(11, 3, 6, default_profiles());
  PlaybackState s;
  s.next_chunk = {0, 1};
  const auto fast = BandwidthModel::constant(100'000);

  const Plan two = plan_fixed_nextk_baseline(feed, s, fast, 2);
  REQUIRE(two.size() == 3);
  CHECK(two.steps[0].chunk == ChunkId{0, 1});
  CHECK(two.steps[1].chunk == ChunkId{0, 2});
  CHECK(two.steps[2].chunk == ChunkId{1, 0});
  for (const auto& step : two.steps) {
    const auto& v = chunk_at(feed, step.chunk).variants[step.variant];
    CHECK_FALSE(v.codec.is_prompt());
    CHECK(v.codec.bitrate_kbps == 1200);
  }

  const Plan slow = plan_fixed_nextk_baseline(feed, s, BandwidthModel::constant(50), 2);
  for (const auto& step : slow.steps) CHECK(step.variant == lowest_pixel_variant(chunk_at(feed, step.chunk)));

  const Plan nominal = plan_fixed_nextk_baseline(feed, s, BandwidthModel::constant(700), 1, BitrateRule::NominalRate);
  CHECK(chunk_at(feed, nominal.steps[0].chunk).variants[nominal.steps[0].variant].codec.bitrate_kbps == 600);

  s.next_chunk = {2, 3};
  const Plan tail = plan_fixed_nextk_baseline(feed, s, fast, 10);
  CHECK(tail.size() == 3);  // the last video has three chunks left and nothing follows

  s.buffered = {{{2, 4}, 0, 0}};
  CHECK(plan_fixed_nextk_baseline(feed, s, fast, 10).size() == 2);
  CHECK_THROWS_AS(plan_fixed_nextk_baseline(feed, s, fast, 0), std::invalid_argument);
}

TEST_CASE("planner config validation") {
  CHECK_NOTHROW(PlannerConfig{}.validate());
  PlannerConfig c;
  c.horizon = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.simulation_budget = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.exploration = std::nan("");
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

}
