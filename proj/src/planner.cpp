#include "vidpreload/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "vidpreload/errors.hpp"
#include "vidpreload/scoring.hpp"

namespace vidpreload {

void PlannerConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("planner horizon must be at least 1");
  if (!(exploration >= 0.0) || !std::isfinite(exploration))
    throw std::invalid_argument("exploration must be finite and non-negative");
  if (simulation_budget < 1) throw std::invalid_argument("simulation budget must be at least 1");
  if (time_budget < 1) throw std::invalid_argument("time budget must be at least 1 ms");
}

std::vector<int> PlanningProblem::allowed_variants(const Chunk& chunk) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(chunk.variants.size()); ++i)
    if (allow_prompt || !chunk.variants[i].codec.is_prompt()) out.push_back(i);
  return out;
}

Kbps harmonic_mean(std::span<const Kbps> samples) {
  if (samples.empty()) return 0;
  double denom = 0.0;
  for (Kbps s : samples) denom += 1.0 / static_cast<double>(s);
  return std::max<Kbps>(1, static_cast<Kbps>(std::floor(static_cast<double>(samples.size()) / denom + 1e-9)));
}

BandwidthModel predict_bandwidth(const BandwidthModel& observed, Millis now) {
  std::vector<Kbps> recent;
  for (const auto& s : observed.samples())
    if (s.start <= now) recent.push_back(s.throughput);
  if (recent.size() > 5) recent.erase(recent.begin(), recent.end() - 5);
  return BandwidthModel::constant(harmonic_mean(recent));
}

BandwidthModel predict_bandwidth(std::span<const Kbps> observations, Kbps fallback) {
  if (observations.empty()) return BandwidthModel::constant(fallback);
  return BandwidthModel::constant(harmonic_mean(observations.last(std::min<std::size_t>(5, observations.size()))));
}

std::vector<ChunkId> horizon_chunks(const Feed& feed, const PlaybackState& state, int count) {
  std::vector<ChunkId> out;
  if (!contains(feed, state.next_chunk)) return out;
  std::optional<ChunkId> cur = state.next_chunk;
  while (cur && static_cast<int>(out.size()) < count) {
    if (!state.find_buffered(*cur)) out.push_back(*cur);
    cur = next_in_playback(feed, *cur);
  }
  return out;
}

PlanningProblem make_problem(const Feed& feed, const DeviceModel& device, const BandwidthModel& observed,
                             const PlaybackState& state, const Weights& w, int horizon) {
  PlanningProblem p;
  p.feed = &feed;
  p.device = device;
  p.bandwidth = predict_bandwidth(observed, state.now);
  p.state = state;
  p.weights = w;
  p.candidates = horizon_chunks(feed, state, horizon);
  return p;
}

double uct_value(double value, std::int64_t visits, std::int64_t total, double alpha) {
  if (visits <= 0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(visits);
  const double big_n = static_cast<double>(std::max<std::int64_t>(1, total));
  return value / n + alpha * std::sqrt(std::log(big_n) / n);
}

bool compute_stall_free(const ScheduleResult& schedule) {
  return std::all_of(schedule.timings.begin(), schedule.timings.end(),
                     [](const ChunkTiming& t) { return t.compute_stall == 0; });
}

bool preferred(const Plan& a, double ua, bool complete_a, const Plan& b, double ub, bool complete_b) {
  if (complete_a != complete_b) return complete_a;
  if (ua != ub) return ua > ub;
  return std::lexicographical_compare(a.steps.begin(), a.steps.end(), b.steps.begin(), b.steps.end(),
                                      [](const PlanStep& x, const PlanStep& y) {
                                        if (x.chunk != y.chunk) return x.chunk < y.chunk;
                                        return x.variant < y.variant;
                                      });
}

namespace {

struct Extension {
  std::uint16_t slot;
  std::uint16_t variant;
  double utility;
};

/// Search state shared by the tree search and the enumerations: a schedule
/// builder over the problem's candidates plus the allowed variant lists.
class SearchContext {
 public:
  explicit SearchContext(const PlanningProblem& p)
      : problem_(p), builder_(*p.feed, p.device, p.bandwidth, p.state, p.candidates) {
    for (std::size_t i = 0; i < builder_.slot_count(); ++i)
      allowed_.push_back(p.allowed_variants(builder_.slot_chunk(i)));
  }

  ScheduleBuilder& builder() { return builder_; }
  std::size_t horizon() const { return builder_.slot_count(); }

  double utility() const { return plan_utility(builder_.playback(), problem_.weights); }

  /// Utility of the current prefix, or nullopt when it has a compute stall.
  std::optional<double> feasible_utility() const {
    const ScheduleResult& r = builder_.playback();
    if (!compute_stall_free(r)) return std::nullopt;
    return plan_utility(r, problem_.weights);
  }

  void extensions(std::vector<Extension>& out, bool pruned) {
    out.clear();
    for (std::size_t s = 0; s < builder_.slot_count(); ++s) {
      if (builder_.planned(s)) continue;
      for (int v : allowed_[s]) {
        builder_.push(s, v);
        if (pruned) {
          if (auto u = feasible_utility()) out.push_back({static_cast<std::uint16_t>(s), static_cast<std::uint16_t>(v), *u});
        } else {
          out.push_back({static_cast<std::uint16_t>(s), static_cast<std::uint16_t>(v), utility()});
        }
        builder_.pop();
      }
    }
  }

 private:
  const PlanningProblem& problem_;
  ScheduleBuilder builder_;
  std::vector<std::vector<int>> allowed_;
};

struct Best {
  Plan plan;
  double utility = -std::numeric_limits<double>::infinity();
  bool complete = false;
  bool set = false;

  bool offer(const ScheduleBuilder& b, double u, bool complete_plan) {
    if (set) {
      // cheap reject before materializing the plan
      if (complete && !complete_plan) return false;
      if (complete == complete_plan && u < utility) return false;
    }
    Plan candidate = b.plan();
    if (set && !preferred(candidate, u, complete_plan, plan, utility, complete)) return false;
    plan = std::move(candidate);
    utility = u;
    complete = complete_plan;
    set = true;
    return true;
  }
};

void check_problem(const PlanningProblem& p) {
  if (p.feed == nullptr) throw std::invalid_argument("planning problem has no feed");
  p.weights.validate();
}

}  // namespace

std::vector<PlanStep> expand(const PlanningProblem& problem, const Plan& prefix) {
  check_problem(problem);
  SearchContext ctx(problem);
  for (const auto& step : prefix.steps) {
    auto slot = ctx.builder().slot_of(step.chunk);
    if (!slot) throw InvalidPlan("chunk " + to_string(step.chunk) + " is outside the planning horizon");
    ctx.builder().push(*slot, step.variant);
  }
  std::vector<PlanStep> out;
  if (prefix.size() >= ctx.horizon()) return out;
  std::vector<Extension> ext;
  ctx.extensions(ext, true);
  for (const auto& e : ext) out.push_back({ctx.builder().slot(e.slot), e.variant});
  return out;
}

ScheduleResult evaluate(const PlanningProblem& problem, const Plan& plan) {
  check_problem(problem);
  return evaluate_plan(plan, problem.device, problem.bandwidth, problem.state, *problem.feed);
}

double evaluate_utility(const PlanningProblem& problem, const Plan& plan) {
  return plan_utility(evaluate(problem, plan), problem.weights);
}

PlanResult plan_mcts(const PlanningProblem& problem, const PlannerConfig& cfg) {
  check_problem(problem);
  cfg.validate();
  SearchContext ctx(problem);
  ScheduleBuilder& builder = ctx.builder();
  const std::size_t horizon = ctx.horizon();
  PlanResult result;
  if (horizon == 0) {
    result.stats.complete = true;
    result.stats.exhausted = true;
    return result;
  }

  struct Edge {
    std::uint16_t slot;
    std::uint16_t variant;
    std::int32_t child = -1;
  };
  struct Node {
    std::int32_t edge_begin = 0;
    std::int32_t edge_count = 0;
    std::int64_t visits = 0;
    double value = 0.0;
    bool expanded = false;
    bool exhausted = false;
  };
  std::vector<Node> nodes(1);
  std::vector<Edge> edges;
  std::vector<Extension> ext;
  std::vector<std::int32_t> path;
  std::vector<std::size_t> unvisited;
  std::mt19937_64 rng(cfg.rng_seed);
  Best best;

  auto expand_node = [&](std::int32_t idx) {
    ctx.extensions(ext, true);
    nodes[idx].edge_begin = static_cast<std::int32_t>(edges.size());
    nodes[idx].edge_count = static_cast<std::int32_t>(ext.size());
    for (const auto& e : ext) edges.push_back({e.slot, e.variant, -1});
    nodes[idx].expanded = true;
  };

  const auto started = std::chrono::steady_clock::now();
  std::int64_t sim = 0;
  for (; sim < cfg.simulation_budget; ++sim) {
    if (sim % 64 == 0 && sim > 0) {
      const auto elapsed =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
      if (elapsed >= cfg.time_budget) {
        result.stats.stopped_early = true;
        break;
      }
    }
    if (nodes[0].exhausted) {
      result.stats.exhausted = true;
      break;
    }

    // selection and expansion
    path.assign(1, 0);
    std::int32_t node = 0;
    for (;;) {
      if (!nodes[node].expanded && builder.depth() < horizon) expand_node(node);
      if (node == 0 && nodes[0].edge_count == 0)
        throw InfeasibleAllPruned("every first download decision causes a compute stall");
      if (builder.depth() >= horizon || nodes[node].edge_count == 0) break;

      const Node& parent = nodes[node];
      unvisited.clear();
      std::size_t chosen = 0;
      double best_uct = -std::numeric_limits<double>::infinity();
      bool found = false;
      for (std::int32_t i = 0; i < parent.edge_count; ++i) {
        const std::size_t e = static_cast<std::size_t>(parent.edge_begin + i);
        const std::int32_t child = edges[e].child;
        if (child < 0) {
          unvisited.push_back(e);
          continue;
        }
        if (nodes[child].exhausted) continue;
        const double u = uct_value(nodes[child].value, nodes[child].visits, nodes[0].visits, cfg.exploration);
        if (!found || u > best_uct) {
          best_uct = u;
          chosen = e;
          found = true;
        }
      }
      if (!unvisited.empty()) {
        chosen = unvisited[std::uniform_int_distribution<std::size_t>(0, unvisited.size() - 1)(rng)];
        found = true;
      }
      if (!found) break;  // all children exhausted; caught by exhaustion marking below

      builder.push(edges[chosen].slot, edges[chosen].variant);
      if (edges[chosen].child < 0) {
        edges[chosen].child = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();
        path.push_back(edges[chosen].child);
        break;
      }
      node = edges[chosen].child;
      path.push_back(node);
    }

    // rollout
    while (builder.depth() < horizon) {
      ctx.extensions(ext, true);
      if (ext.empty()) break;
      std::size_t pick = 0;
      if (cfg.rollout == RolloutPolicy::Random) {
        pick = std::uniform_int_distribution<std::size_t>(0, ext.size() - 1)(rng);
      } else {
        // next chunk in playback order at its best variant; deferring a chunk
        // only looks good because the prefix assumes gaps arrive on time
        std::uint16_t first = ext[0].slot;
        for (const auto& e : ext) first = std::min(first, e.slot);
        double top = -std::numeric_limits<double>::infinity();
        unvisited.clear();
        for (std::size_t i = 0; i < ext.size(); ++i) {
          if (ext[i].slot != first) continue;
          if (ext[i].utility > top) {
            top = ext[i].utility;
            unvisited.assign(1, i);
          } else if (ext[i].utility == top) {
            unvisited.push_back(i);
          }
        }
        pick = unvisited.size() == 1
                   ? unvisited[0]
                   : unvisited[std::uniform_int_distribution<std::size_t>(0, unvisited.size() - 1)(rng)];
      }
      builder.push(ext[pick].slot, ext[pick].variant);
    }

    const bool complete = builder.depth() == horizon;
    const double utility = ctx.utility();
    if (best.offer(builder, utility, complete)) {
      result.stats.best_found_at = sim + 1;
      result.stats.improvements.emplace_back(sim + 1, utility);
    }
    while (builder.depth() > 0) builder.pop();

    // backpropagation
    for (std::int32_t idx : path) {
      nodes[idx].visits += 1;
      nodes[idx].value += utility;
    }
    // A leaf is exhausted once simulated (full depth or no feasible child);
    // inner nodes once every child is.
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      Node& n = nodes[*it];
      const std::size_t depth = static_cast<std::size_t>(path.rend() - it) - 1;
      bool done;
      if (depth >= horizon) {
        done = true;
      } else if (!n.expanded) {
        done = false;
      } else {
        done = true;
        for (std::int32_t i = 0; i < n.edge_count && done; ++i) {
          const std::int32_t child = edges[static_cast<std::size_t>(n.edge_begin + i)].child;
          done = child >= 0 && nodes[child].exhausted;
        }
      }
      if (!done) break;
      n.exhausted = true;
    }
  }
  if (nodes[0].exhausted) result.stats.exhausted = true;

  result.plan = best.plan;
  result.utility = best.utility;
  result.stats.simulations = sim;
  result.stats.best_utility = best.utility;
  result.stats.nodes = static_cast<std::int64_t>(nodes.size());
  result.stats.complete = best.complete;
  return result;
}

std::uint64_t search_space_size(const PlanningProblem& problem) {
  check_problem(problem);
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 1;
  auto mul = [&](std::uint64_t x) {
    if (x != 0 && total > kMax / x) {
      total = kMax;
    } else {
      total *= x;
    }
  };
  for (std::size_t i = 1; i <= problem.candidates.size(); ++i) mul(i);
  for (ChunkId id : problem.candidates) mul(problem.allowed_variants(chunk_at(*problem.feed, id)).size());
  return total;
}

PlanResult plan_bruteforce(const PlanningProblem& problem, const BruteForceOptions& opts) {
  check_problem(problem);
  const std::uint64_t space = search_space_size(problem);
  if (space > opts.max_space)
    throw SpaceTooLarge("order x configuration space has " + std::to_string(space) + " plans (limit " +
                        std::to_string(opts.max_space) + ")");

  SearchContext ctx(problem);
  ScheduleBuilder& builder = ctx.builder();
  const std::size_t horizon = ctx.horizon();
  Best best;
  std::int64_t evaluated = 0;
  std::vector<std::vector<Extension>> ext(horizon + 1);

  // Depth-first; ext[d] holds the children of the depth-d prefix.
  auto visit = [&](auto&& self, std::size_t depth, double prefix_utility) -> void {
    if (depth == horizon) {
      ++evaluated;
      best.offer(builder, prefix_utility, true);
      return;
    }
    ctx.extensions(ext[depth], opts.pruned);
    if (ext[depth].empty()) {
      ++evaluated;
      best.offer(builder, prefix_utility, false);
      return;
    }
    for (std::size_t i = 0; i < ext[depth].size(); ++i) {
      const Extension e = ext[depth][i];
      builder.push(e.slot, e.variant);
      self(self, depth + 1, e.utility);
      builder.pop();
    }
  };
  if (horizon == 0) {
    best.offer(builder, 0.0, true);
  } else {
    visit(visit, 0, 0.0);
  }

  PlanResult r;
  r.plan = best.plan;
  r.utility = best.utility;
  r.stats.simulations = evaluated;
  r.stats.best_utility = best.utility;
  r.stats.complete = best.complete;
  r.stats.exhausted = true;
  return r;
}

PlanResult plan_sequential_baseline(const PlanningProblem& problem) {
  check_problem(problem);
  SearchContext ctx(problem);
  ScheduleBuilder& builder = ctx.builder();
  // candidates may arrive in any order; download in playback order
  std::vector<std::size_t> order(ctx.horizon());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return builder.slot(a) < builder.slot(b); });

  for (std::size_t slot : order) {
    const Chunk& chunk = builder.slot_chunk(slot);
    int pick = -1;
    double pick_score = 0.0;
    for (int v : problem.allowed_variants(chunk)) {
      builder.push(slot, v);
      const ScheduleResult& r = builder.playback();
      if (compute_stall_free(r)) {
        const auto it = std::find_if(r.timings.begin(), r.timings.end(),
                                     [&](const ChunkTiming& t) { return t.chunk == builder.slot(slot); });
        const double score = chunk_score(metrics_of(*it), problem.weights);
        if (pick < 0 || score > pick_score) {
          pick = v;
          pick_score = score;
        }
      }
      builder.pop();
    }
    builder.push(slot, pick >= 0 ? pick : lowest_pixel_variant(chunk));
  }
  PlanResult r;
  r.plan = builder.plan();
  r.utility = ctx.utility();
  r.stats.best_utility = r.utility;
  r.stats.complete = true;
  return r;
}

Plan fallback_plan(const PlanningProblem& problem) {
  check_problem(problem);
  std::vector<ChunkId> ids = problem.candidates;
  std::sort(ids.begin(), ids.end());
  Plan plan;
  for (ChunkId id : ids) plan.steps.push_back({id, lowest_pixel_variant(chunk_at(*problem.feed, id))});
  return plan;
}

Plan plan_fixed_nextk_baseline(const Feed& feed, const PlaybackState& state, const BandwidthModel& predicted, int k,
                               BitrateRule rule) {
  if (k < 1) throw std::invalid_argument("K must be at least 1");
  Plan plan;
  if (!contains(feed, state.next_chunk)) return plan;

  auto choose = [&](const Chunk& chunk) {
    int pick = lowest_pixel_variant(chunk);
    const Kbps rate = predicted.throughput_at(state.now);
    for (int i = 0; i < static_cast<int>(chunk.variants.size()); ++i) {
      const ChunkVariant& v = chunk.variants[i];
      if (v.codec.is_prompt()) continue;
      const bool fits = rule == BitrateRule::DeadlineFit ? download_duration(v.size, predicted, state.now) <= chunk.playout
                                                         : v.codec.bitrate_kbps <= rate;
      if (fits && v.codec.bitrate_kbps > chunk.variants[pick].codec.bitrate_kbps) pick = i;
    }
    return pick;
  };
  auto add = [&](ChunkId id) {
    if (!state.find_buffered(id)) plan.steps.push_back({id, choose(chunk_at(feed, id))});
  };

  const auto& video = feed[state.next_chunk.video];
  const int end = std::min<int>(static_cast<int>(video.chunks.size()), state.next_chunk.chunk + k);
  for (int c = state.next_chunk.chunk; c < end; ++c) add({state.next_chunk.video, c});
  if (state.next_chunk.video + 1 < static_cast<int>(feed.size()) && !feed[state.next_chunk.video + 1].chunks.empty())
    add({state.next_chunk.video + 1, 0});
  return plan;
}

}  // namespace vidpreload
