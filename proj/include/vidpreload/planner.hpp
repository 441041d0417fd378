#pragma once

// Download planning over the order x configuration space.
//
// A planning problem fixes a set of candidate chunks (the horizon). A plan
// picks a download order over them and one variant per chunk. Prefixes in
// which any chunk suffers a compute-attributable stall are pruned, both in
// the Monte Carlo tree search and in the exhaustive oracle.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "vidpreload/model.hpp"
#include "vidpreload/timeline.hpp"

namespace vidpreload {

// Greedy completes the rollout in playback order, each chunk at its
// best-scoring feasible variant. Random picks any feasible extension.
enum class RolloutPolicy { Greedy, Random };

struct PlannerConfig {
  int horizon = 4;
  double exploration = 1.0;
  std::int64_t simulation_budget = 20000;
  Millis time_budget = 60000;
  RolloutPolicy rollout = RolloutPolicy::Greedy;
  std::uint64_t rng_seed = 1;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct PlanningProblem {
  const Feed* feed = nullptr;
  DeviceModel device = DeviceModel::standard();
  BandwidthModel bandwidth = BandwidthModel::constant(1000);  // used as given
  PlaybackState state;
  Weights weights;
  std::vector<ChunkId> candidates;  // playback order
  bool allow_prompt = true;         // false drops prompt variants from the search

  std::size_t horizon() const { return candidates.size(); }
  /// Variant indices the search may choose for a chunk.
  std::vector<int> allowed_variants(const Chunk& chunk) const;
};

struct SearchStats {
  std::int64_t simulations = 0;
  double best_utility = 0.0;
  std::int64_t nodes = 0;
  std::int64_t best_found_at = 0;  // simulation that first produced the returned plan
  bool complete = false;           // the returned plan covers the whole horizon
  bool stopped_early = false;      // time budget hit before the simulation budget
  bool exhausted = false;          // every tree leaf visited
  std::vector<std::pair<std::int64_t, double>> improvements;  // (simulation, best utility)
};

struct PlanResult {
  Plan plan;
  double utility = 0.0;
  SearchStats stats;
};

/// Harmonic mean, rounded down to at least 1 kbps. Empty input gives 0.
Kbps harmonic_mean(std::span<const Kbps> samples);

/// Constant model at the harmonic mean of the last five samples that start
/// at or before `now`.
BandwidthModel predict_bandwidth(const BandwidthModel& observed, Millis now);
BandwidthModel predict_bandwidth(std::span<const Kbps> observations, Kbps fallback);

/// Next `count` chunks from the playhead that are not buffered, in playback
/// order across video boundaries.
std::vector<ChunkId> horizon_chunks(const Feed& feed, const PlaybackState& state, int count);

/// Problem over the next `horizon` chunks, planned against the predicted
/// bandwidth of `observed`.
PlanningProblem make_problem(const Feed& feed, const DeviceModel& device, const BandwidthModel& observed,
                             const PlaybackState& state, const Weights& w, int horizon);

/// V/n + alpha*sqrt(ln(N)/n); +infinity for an unvisited node.
double uct_value(double value, std::int64_t visits, std::int64_t total, double alpha);

bool compute_stall_free(const ScheduleResult& schedule);

/// Feasible one-step extensions of `prefix` (all chunk x variant pairs whose
/// extended prefix has no compute stall), in (candidate, variant) order.
std::vector<PlanStep> expand(const PlanningProblem& problem, const Plan& prefix);

/// Utility of a plan, evaluated from scratch.
double evaluate_utility(const PlanningProblem& problem, const Plan& plan);
ScheduleResult evaluate(const PlanningProblem& problem, const Plan& plan);

/// Search tie-break: complete plans first, then higher utility, then the
/// lexicographically smaller step sequence.
bool preferred(const Plan& a, double ua, bool complete_a, const Plan& b, double ub, bool complete_b);

/// Throws InfeasibleAllPruned when no single step survives pruning.
PlanResult plan_mcts(const PlanningProblem& problem, const PlannerConfig& cfg);

/// H! * prod |R_i|, saturating at UINT64_MAX.
std::uint64_t search_space_size(const PlanningProblem& problem);

struct BruteForceOptions {
  bool pruned = true;
  std::uint64_t max_space = 10'000'000;
};

/// Exact argmax. Throws SpaceTooLarge when the order x configuration space
/// exceeds `max_space`.
PlanResult plan_bruteforce(const PlanningProblem& problem, const BruteForceOptions& opts = {});

/// Downloads strictly in playback order, taking per chunk the best-scoring
/// variant without compute stall (lowest pixel bitrate when none qualifies).
PlanResult plan_sequential_baseline(const PlanningProblem& problem);

/// Lowest-bitrate pixel variants in playback order.
Plan fallback_plan(const PlanningProblem& problem);

enum class BitrateRule {
  DeadlineFit,  // highest bitrate whose download fits in the chunk's playout
  NominalRate,  // highest nominal bitrate not above the predicted throughput
};

/// Pixel-only next-K preloader: up to K chunks of the current video plus the
/// first chunk of the next one.
Plan plan_fixed_nextk_baseline(const Feed& feed, const PlaybackState& state, const BandwidthModel& predicted,
                               int k, BitrateRule rule = BitrateRule::DeadlineFit);

}  // namespace vidpreload
