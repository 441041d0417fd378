#include "vidpreload/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <deque>
#include <map>
#include <mutex>
#include <queue>
#include <random>
#include <stdexcept>
#include <thread>

#include "vidpreload/errors.hpp"
#include "vidpreload/scoring.hpp"

namespace vidpreload {

std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::DownloadComplete:
      return "download_complete";
    case EventKind::DecodeComplete:
      return "decode_complete";
    case EventKind::ChunkPlaybackDue:
      return "playback_due";
    case EventKind::Swipe:
      return "swipe";
    case EventKind::ReplanTimer:
      return "replan_timer";
    case EventKind::SessionEnd:
      return "session_end";
  }
  return "?";
}

std::string format_event_log(const EventLog& log) {
  std::string out;
  for (const Event& e : log) {
    out += std::to_string(e.time);
    out += ',';
    out += event_kind_name(e.kind);
    out += ',';
    out += e.chunk ? to_string(*e.chunk) : "-";
    out += ',';
    out += e.unit ? std::string(unit_name(*e.unit)) : "-";
    out += '\n';
  }
  return out;
}

std::string to_string(const StrategyId& id) {
  switch (id.kind) {
    case StrategyId::Kind::Mcts:
      return "mcts";
    case StrategyId::Kind::Sequential:
      return "sequential";
    case StrategyId::Kind::HybridOff:
      return "hybrid-off";
    case StrategyId::Kind::FixedNextK:
      return id.k == 3 ? "fixed" : "fixed:" + std::to_string(id.k);
  }
  return "?";
}

StrategyId parse_strategy(std::string_view name) {
  if (name == "mcts") return StrategyId::mcts();
  if (name == "sequential") return StrategyId::sequential();
  if (name == "hybrid-off") return StrategyId::hybrid_off();
  if (name == "fixed") return StrategyId::fixed_next_k(3);
  if (name.starts_with("fixed:")) {
    const std::string digits(name.substr(6));
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == digits.size() && k >= 1) return StrategyId::fixed_next_k(k);
  }
  throw std::invalid_argument("unknown strategy \"" + std::string(name) +
                              "\" (expected mcts, sequential, hybrid-off, fixed or fixed:K)");
}

PlannerConfig SimConfig::default_planner() {
  PlannerConfig p;
  p.simulation_budget = 1500;
  // large enough never to bind; a binding time budget makes runs machine-dependent
  p.time_budget = 600000;
  return p;
}

void SimConfig::validate() const {
  if (startup_delay < 0) throw std::invalid_argument("startup delay must be non-negative");
  if (replan_interval < 1) throw std::invalid_argument("replan interval must be at least 1 ms");
  if (lookahead_chunks < 1) throw std::invalid_argument("lookahead must be at least 1 chunk");
  if (next_video_chunks < 0) throw std::invalid_argument("next-video chunks must be non-negative");
  if (initial_bandwidth_estimate < 1) throw std::invalid_argument("initial bandwidth estimate must be positive");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
  planner.validate();
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

PlanningProblem problem_of(const PlanningContext& ctx, bool allow_prompt) {
  PlanningProblem p;
  p.feed = &ctx.feed;
  p.device = ctx.device;
  p.bandwidth = ctx.predicted;
  p.state = ctx.state;
  p.weights = ctx.weights;
  p.candidates = ctx.candidates;
  p.allow_prompt = allow_prompt;
  return p;
}

Plan mcts_strategy(const PlanningContext& ctx, bool allow_prompt) {
  const PlanningProblem problem = problem_of(ctx, allow_prompt);
  PlannerConfig cfg = ctx.config.planner;
  cfg.rng_seed = ctx.seed;
  try {
    return plan_mcts(problem, cfg).plan;
  } catch (const InfeasibleAllPruned&) {
    return fallback_plan(problem);
  }
}

struct QueuedEvent {
  Millis time;
  EventKind kind;
  ChunkId chunk;  // {-1, -1} when absent
  std::uint64_t seq;
  std::uint64_t token = 0;
  std::optional<Unit> unit;

  bool operator>(const QueuedEvent& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    if (chunk != o.chunk) return chunk > o.chunk;
    return seq > o.seq;
  }
};

constexpr ChunkId kNoChunk{-1, -1};

class Session {
 public:
  Session(const Feed& feed, const BandwidthModel& bw, const SessionTrace& trace, const Strategy& strategy,
          std::string_view stream, const DeviceModel& device, const Weights& w, const SimConfig& cfg,
          std::string_view trace_id)
      : feed_(feed),
        bw_(bw),
        trace_(trace),
        strategy_(strategy),
        device_(device),
        w_(w),
        cfg_(cfg),
        rng_(cfg.master_seed ^ fnv1a(trace_id) ^ (fnv1a(stream) * 0x9e3779b97f4a7c15ULL)) {}

  SessionResult run() {
    begin_video(0, cfg_.startup_delay);
    replan(0);
    push(cfg_.replan_interval, EventKind::ReplanTimer, kNoChunk);

    while (!queue_.empty()) {
      const QueuedEvent e = queue_.top();
      queue_.pop();
      switch (e.kind) {
        case EventKind::DownloadComplete:
          on_download_complete(e);
          break;
        case EventKind::DecodeComplete:
          on_decode_complete(e);
          break;
        case EventKind::ChunkPlaybackDue:
          on_due(e);
          break;
        case EventKind::Swipe:
          log(e);
          on_swipe(e.time);
          break;
        case EventKind::ReplanTimer:
          if (ended_) break;
          log(e);
          replan(e.time);
          push(e.time + cfg_.replan_interval, EventKind::ReplanTimer, kNoChunk);
          break;
        case EventKind::SessionEnd:
          log(e);
          on_session_end(e.time);
          break;
      }
    }
    finish();
    return std::move(result_);
  }

 private:
  struct Downloaded {
    int variant = 0;
    Bytes size = 0;
    Millis decode_end = 0;
    bool settled = false;  // classified as played, wasted or session-end
  };
  struct DecodeJob {
    ChunkId chunk;
    Millis ready = 0;  // download end
    Millis start = 0;
    Millis end = 0;
    std::uint64_t token = 0;
  };
  struct InFlight {
    ChunkId chunk;
    int variant = 0;
    Millis start = 0;
    Bytes size = 0;
    std::uint64_t token = 0;
  };

  SessionMetrics& m() { return result_.metrics; }

  void push(Millis t, EventKind kind, ChunkId chunk, std::uint64_t token = 0, std::optional<Unit> unit = {}) {
    queue_.push({t, kind, chunk, seq_++, token, unit});
  }

  void log(const QueuedEvent& e) {
    if (!cfg_.record_events) return;
    Event out;
    out.time = e.time;
    out.kind = e.kind;
    if (e.chunk != kNoChunk) out.chunk = e.chunk;
    out.unit = e.unit;
    result_.events.push_back(out);
  }

  const WatchRecord& record() const { return trace_.records[video_]; }

  // -- playback --------------------------------------------------------------

  void begin_video(Millis t, Millis delay) {
    if (video_ >= trace_.records.size()) {
      ended_ = true;
      push(t, EventKind::SessionEnd, kNoChunk);
      return;
    }
    VideoMetrics vm;
    vm.video_id = record().video_id;
    m().per_video.push_back(vm);
    next_ = {static_cast<int>(video_), 0};
    has_next_ = true;
    due_ = t + delay;
    offset_ = 0;
    last_quality_.reset();
    waiting_ = false;
    if (record().watch == 0 || feed_[video_].chunks.empty()) {
      push(t, EventKind::Swipe, kNoChunk);
      has_next_ = false;
    } else {
      push(due_, EventKind::ChunkPlaybackDue, next_);
    }
  }

  void on_due(const QueuedEvent& e) {
    if (ended_ || !has_next_ || e.chunk != next_ || next_.video != static_cast<int>(video_)) return;
    log(e);
    const auto it = downloaded_.find(next_);
    if (it != downloaded_.end() && it->second.decode_end <= e.time) {
      start_chunk(e.time);
      return;
    }
    waiting_ = true;
    if (it == downloaded_.end() && !(inflight_ && inflight_->chunk == next_)) {
      emergency_ = next_;
      if (!inflight_) start_emergency(e.time);
    }
  }

  void start_chunk(Millis t) {
    const ChunkId id = next_;
    Downloaded& d = downloaded_.at(id);
    const Chunk& chunk = chunk_at(feed_, id);
    const ChunkVariant& v = chunk.variants[d.variant];

    PlayedChunk p;
    p.chunk = id;
    p.variant = d.variant;
    p.due = due_;
    p.start = t;
    p.stall = t - due_;
    p.size = d.size;
    p.quality = v.quality;
    m().played.push_back(p);
    d.settled = true;
    m().played_bytes += d.size;
    m().chunks_played += 1;
    if (v.codec.is_prompt()) m().prompt_chunks_played += 1;

    VideoMetrics& vm = m().per_video.back();
    vm.chunks_played += 1;
    if (id.chunk == 0)
      vm.startup_ms += p.stall + (video_ == 0 ? cfg_.startup_delay : 0);
    else
      vm.rebuffer_ms += p.stall;

    ChunkMetrics cm;
    cm.quality = v.quality;
    cm.variation = last_quality_ ? std::abs(v.quality - *last_quality_) : 0.0;
    cm.stall = p.stall;
    cm.bandwidth = d.size;
    if (last_quality_ && *last_quality_ != v.quality) m().quality_switches += 1;
    m().qoe += chunk_score(cm, w_);
    last_quality_ = v.quality;

    waiting_ = false;
    const Millis limit = record().watch;
    const Millis offset_after = offset_ + chunk.playout;
    const Millis end = t + chunk.playout;
    const bool more_in_video = id.chunk + 1 < static_cast<int>(feed_[video_].chunks.size());

    const auto following = next_in_playback(feed_, id);
    has_next_ = following.has_value();
    if (following) next_ = *following;
    due_ = end;

    if (limit < offset_after) {
      push(t + (limit - offset_), EventKind::Swipe, kNoChunk);
    } else if (more_in_video && limit > offset_after) {
      push(end, EventKind::ChunkPlaybackDue, next_);
    } else {
      push(end, EventKind::Swipe, kNoChunk);
    }
    offset_ = offset_after;
  }

  void on_swipe(Millis t) {
    VideoMetrics& vm = m().per_video.back();
    vm.watched = std::min(offset_, record().watch);
    const int leaving = static_cast<int>(video_);
    for (auto& [id, d] : downloaded_) {
      if (id.video > leaving || d.settled) continue;
      d.settled = true;
      m().wasted_bytes += d.size;
      vm.wasted_bytes += d.size;
    }
    if (inflight_ && inflight_->chunk.video <= leaving) {
      const Bytes partial = std::min(inflight_->size, bytes_transferred(bw_, inflight_->start, t));
      m().downloaded_bytes += partial;
      m().wasted_bytes += partial;
      vm.wasted_bytes += partial;
      inflight_.reset();
    }
    if (emergency_ && emergency_->video <= leaving) emergency_.reset();
    drop_decodes(t, leaving);

    ++video_;
    begin_video(t, 0);
    if (!ended_) replan(t);
  }

  void on_session_end(Millis t) {
    if (inflight_) {
      const Bytes partial = std::min(inflight_->size, bytes_transferred(bw_, inflight_->start, t));
      m().downloaded_bytes += partial;
      m().session_end_bytes += partial;
      inflight_.reset();
    }
    for (auto& [id, d] : downloaded_) {
      if (d.settled) continue;
      d.settled = true;
      m().session_end_bytes += d.size;
    }
    m().session_length = t;
    while (!queue_.empty()) queue_.pop();
  }

  // -- network -----------------------------------------------------------------

  void start_download(Millis t, ChunkId id, int variant) {
    const ChunkVariant& v = chunk_at(feed_, id).variants[variant];
    InFlight f;
    f.chunk = id;
    f.variant = variant;
    f.start = t;
    f.size = v.size;
    f.token = ++token_;
    inflight_ = f;
    push(t + download_duration(v.size, bw_, t), EventKind::DownloadComplete, id, f.token, Unit::Network);
  }

  void start_emergency(Millis t) {
    const ChunkId id = *emergency_;
    emergency_.reset();
    m().emergency_fetches += 1;
    start_download(t, id, lowest_pixel_variant(chunk_at(feed_, id)));
  }

  void on_download_complete(const QueuedEvent& e) {
    if (!inflight_ || inflight_->token != e.token) return;  // abandoned
    log(e);
    const InFlight f = *inflight_;
    inflight_.reset();
    const ChunkVariant& v = chunk_at(feed_, f.chunk).variants[f.variant];
    m().downloaded_bytes += f.size;
    const Millis took = std::max<Millis>(1, e.time - f.start);
    observations_.push_back(std::max<Kbps>(1, f.size * 8 / took));

    auto& jobs = decodes_[static_cast<std::size_t>(v.decode_unit)];
    DecodeJob job;
    job.chunk = f.chunk;
    job.ready = e.time;
    job.start = std::max(e.time, jobs.empty() ? e.time : jobs.back().end);
    job.end = job.start + v.decode_latency;
    job.token = ++token_;
    jobs.push_back(job);
    downloaded_[f.chunk] = {f.variant, f.size, job.end, false};
    push(job.end, EventKind::DecodeComplete, f.chunk, job.token, v.decode_unit);

    if (emergency_ && downloaded_.contains(*emergency_)) emergency_.reset();
    if (emergency_)
      start_emergency(e.time);
    else
      replan(e.time);
  }

  void on_decode_complete(const QueuedEvent& e) {
    auto& jobs = decodes_[static_cast<std::size_t>(*e.unit)];
    if (jobs.empty() || jobs.front().token != e.token) return;  // cancelled or rescheduled
    jobs.pop_front();
    log(e);
    if (waiting_ && e.chunk == next_) start_chunk(e.time);
  }

  /// The player stops decoding a video once the viewer leaves it: pending
  /// and running jobs of videos up to `leaving` are cancelled and the rest
  /// of each queue moves up.
  void drop_decodes(Millis t, int leaving) {
    for (std::size_t u = 0; u < kUnitCount; ++u) {
      auto& jobs = decodes_[u];
      if (std::none_of(jobs.begin(), jobs.end(), [&](const DecodeJob& j) { return j.chunk.video <= leaving; }))
        continue;
      std::deque<DecodeJob> kept;
      Millis free_at = t;
      for (const DecodeJob& j : jobs) {
        if (j.chunk.video <= leaving) continue;
        DecodeJob n = j;
        if (j.start > t) {  // not running yet
          n.start = std::max(j.ready, free_at);
          n.end = n.start + (j.end - j.start);
        }
        if (n.end != j.end) {
          n.token = ++token_;
          downloaded_.at(n.chunk).decode_end = n.end;
          push(n.end, EventKind::DecodeComplete, n.chunk, n.token, static_cast<Unit>(u));
        }
        free_at = n.end;
        kept.push_back(n);
      }
      jobs = std::move(kept);
    }
  }

  // -- planning ----------------------------------------------------------------

  PlaybackState state_at(Millis t) const {
    PlaybackState s;
    s.now = t;
    s.next_chunk = next_;
    s.startup_delay = std::max<Millis>(0, due_ - t);
    for (const auto& [id, d] : downloaded_)
      if (id >= next_ && !d.settled) s.buffered.push_back({id, d.variant, d.decode_end});
    for (std::size_t u = 0; u < kUnitCount; ++u) s.unit_free_at[u] = decodes_[u].empty() ? t : decodes_[u].back().end;
    if (next_.chunk > 0 && next_.video == static_cast<int>(video_)) s.playing_quality = last_quality_;
    if (cfg_.assume_early_leave && next_.video == static_cast<int>(video_)) s.next_video_due = std::max(t, due_);
    return s;
  }

  std::vector<ChunkId> window(const PlaybackState& s) const {
    std::vector<ChunkId> out;
    auto add = [&](ChunkId id) {
      if (!s.find_buffered(id)) out.push_back(id);
    };
    const auto& video = feed_[next_.video];
    const int end = std::min<int>(static_cast<int>(video.chunks.size()), next_.chunk + cfg_.lookahead_chunks);
    for (int c = next_.chunk; c < end; ++c) add({next_.video, c});
    if (next_.video + 1 < static_cast<int>(feed_.size())) {
      const auto& nv = feed_[next_.video + 1];
      const int n = std::min<int>(static_cast<int>(nv.chunks.size()), cfg_.next_video_chunks);
      for (int c = 0; c < n; ++c) add({next_.video + 1, c});
    }
    return out;
  }

  bool usable(const PlanStep& step) const {
    if (!contains(feed_, step.chunk) || step.chunk < next_) return false;
    if (downloaded_.contains(step.chunk)) return false;
    const Chunk& c = chunk_at(feed_, step.chunk);
    if (step.variant < 0 || step.variant >= static_cast<int>(c.variants.size())) return false;
    const Unit u = c.variants[step.variant].decode_unit;
    return u != Unit::Network && device_.has(u);
  }

  void replan(Millis t) {
    if (ended_ || inflight_ || !has_next_) return;
    const PlaybackState s = state_at(t);
    const std::vector<ChunkId> candidates = window(s);
    if (candidates.empty()) return;
    const BandwidthModel predicted = predict_bandwidth(observations_, cfg_.initial_bandwidth_estimate);
    const PlanningContext ctx{feed_, device_, s, predicted, w_, candidates, cfg_, rng_()};
    const Plan plan = strategy_(ctx);
    m().replans += 1;
    for (const PlanStep& step : plan.steps) {
      if (usable(step)) {
        start_download(t, step.chunk, step.variant);
        return;
      }
    }
  }

  void finish() {
    SessionMetrics& s = m();
    // the session's startup wait counts as stall when the first video plays
    const bool started = !s.played.empty() && s.played.front().chunk == ChunkId{0, 0};
    s.total_stall = started ? cfg_.startup_delay : 0;
    double q = 0.0;
    for (const PlayedChunk& p : s.played) {
      s.total_stall += p.stall;
      q += p.quality;
    }
    s.mean_quality = s.played.empty() ? 0.0 : q / static_cast<double>(s.played.size());
    if (started) s.qoe -= w_.stall * stall_seconds(cfg_.startup_delay);
  }

  const Feed& feed_;
  const BandwidthModel& bw_;
  const SessionTrace& trace_;
  const Strategy& strategy_;
  const DeviceModel& device_;
  const Weights& w_;
  const SimConfig& cfg_;
  std::mt19937_64 rng_;

  std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  std::uint64_t token_ = 0;

  std::map<ChunkId, Downloaded> downloaded_;
  std::optional<InFlight> inflight_;
  std::optional<ChunkId> emergency_;
  std::array<std::deque<DecodeJob>, kUnitCount> decodes_;  // unfinished jobs per unit, FIFO
  std::vector<Kbps> observations_;

  std::size_t video_ = 0;
  ChunkId next_{};
  bool has_next_ = false;
  Millis due_ = 0;
  Millis offset_ = 0;
  bool waiting_ = false;
  bool ended_ = false;
  std::optional<double> last_quality_;

  SessionResult result_;
};

void check_trace(const Feed& feed, const SessionTrace& trace) {
  if (trace.records.size() > feed.size())
    throw TraceMismatch("trace has " + std::to_string(trace.records.size()) + " videos but the feed only " +
                        std::to_string(feed.size()));
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    if (trace.records[i].video_id != feed[i].video_id)
      throw TraceMismatch("trace record " + std::to_string(i) + " is \"" + trace.records[i].video_id +
                          "\" but feed position " + std::to_string(i) + " is \"" + feed[i].video_id + "\"");
    if (trace.records[i].watch < 0) throw TraceMismatch("negative watch time for " + trace.records[i].video_id);
  }
}

}  // namespace

Strategy make_strategy(const StrategyId& id) {
  switch (id.kind) {
    case StrategyId::Kind::Mcts:
      return [](const PlanningContext& ctx) { return mcts_strategy(ctx, true); };
    case StrategyId::Kind::HybridOff:
      return [](const PlanningContext& ctx) { return mcts_strategy(ctx, false); };
    case StrategyId::Kind::Sequential:
      return [](const PlanningContext& ctx) { return plan_sequential_baseline(problem_of(ctx, true)).plan; };
    case StrategyId::Kind::FixedNextK: {
      const int k = id.k;
      return [k](const PlanningContext& ctx) {
        return plan_fixed_nextk_baseline(ctx.feed, ctx.state, ctx.predicted, k, ctx.config.bitrate_rule);
      };
    }
  }
  throw std::invalid_argument("unknown strategy kind");
}

SessionResult run_session(const Feed& feed, const BandwidthModel& bw, const SessionTrace& trace,
                          const Strategy& strategy, std::string_view stream, const DeviceModel& device,
                          const Weights& w, const SimConfig& cfg, std::string_view trace_id) {
  cfg.validate();
  w.validate();
  check_trace(feed, trace);
  Session session(feed, bw, trace, strategy, stream, device, w, cfg, trace_id);
  return session.run();
}

SessionResult run_session(const Feed& feed, const BandwidthModel& bw, const SessionTrace& trace,
                          const StrategyId& strategy, const DeviceModel& device, const Weights& w,
                          const SimConfig& cfg, std::string_view trace_id) {
  const Strategy s = make_strategy(strategy);
  return run_session(feed, bw, trace, s, to_string(strategy), device, w, cfg, trace_id);
}

MetricSummary summarize(std::span<const SessionMetrics> sessions) {
  MetricSummary s;
  if (sessions.empty()) return s;
  for (const auto& m : sessions) {
    s.stall_ms += static_cast<double>(m.total_stall);
    s.wasted_bytes += static_cast<double>(m.wasted_bytes);
    s.downloaded_bytes += static_cast<double>(m.downloaded_bytes);
    s.mean_quality += m.mean_quality;
    s.qoe += m.qoe;
  }
  const double n = static_cast<double>(sessions.size());
  s.stall_ms /= n;
  s.wasted_bytes /= n;
  s.downloaded_bytes /= n;
  s.mean_quality /= n;
  s.qoe /= n;
  return s;
}

double ratio_pct(double value, double base) {
  if (base == 0.0) {
    if (value == 0.0) return 100.0;
    return value > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  // equals 100 * value / base for positive bases, keeps "higher is higher" for negative ones
  return 100.0 + 100.0 * (value - base) / std::abs(base);
}

namespace {

/// Runs job(i) for i in [0, n) on up to `threads` workers. Results are
/// written by index, so ordering never depends on scheduling.
template <typename Job>
void parallel_for(std::size_t n, int threads, Job job) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

MetricSummary ratios(const MetricSummary& v, const MetricSummary& base) {
  return {ratio_pct(v.stall_ms, base.stall_ms), ratio_pct(v.wasted_bytes, base.wasted_bytes),
          ratio_pct(v.downloaded_bytes, base.downloaded_bytes), ratio_pct(v.mean_quality, base.mean_quality),
          ratio_pct(v.qoe, base.qoe)};
}

}  // namespace

ComparisonReport compare_strategies(std::span<const SessionCase> cases, std::span<const StrategyId> strategies,
                                    const DeviceModel& device, const Weights& w, const SimConfig& cfg) {
  if (strategies.size() < 2) throw std::invalid_argument("comparison needs at least two strategies");
  ComparisonReport report;
  for (const auto& s : strategies) {
    StrategyReport r;
    r.strategy = s;
    for (const auto& c : cases) r.trace_ids.push_back(c.id);
    r.sessions.resize(cases.size());
    report.strategies.push_back(std::move(r));
  }
  const std::size_t n = cases.size();
  parallel_for(n * strategies.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t si = job / n, ci = job % n;
    const SessionCase& c = cases[ci];
    report.strategies[si].sessions[ci] =
        run_session(c.feed, c.bandwidth, c.trace, strategies[si], device, w, cfg, c.id).metrics;
  });
  for (auto& r : report.strategies) r.mean = summarize(r.sessions);
  for (auto& r : report.strategies) r.ratio_pct = ratios(r.mean, report.strategies.front().mean);
  return report;
}

Feed scale_feed(const Feed& feed, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw std::invalid_argument("scale factor must be positive");
  Feed out = feed;
  for (auto& video : out)
    for (auto& chunk : video.chunks)
      for (auto& v : chunk.variants)
        v.size = std::max<Bytes>(1, static_cast<Bytes>(std::ceil(static_cast<double>(v.size) * factor - 1e-9)));
  return out;
}

std::vector<SweepRow> chunk_size_sweep(std::span<const SessionCase> cases, const StrategyId& strategy,
                                       std::span<const double> scales, const DeviceModel& device, const Weights& w,
                                       const SimConfig& cfg) {
  for (double s : scales)
    if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("scale factors must lie in (0, 1]");
  std::vector<SweepRow> rows(scales.size());
  for (std::size_t i = 0; i < scales.size(); ++i) {
    rows[i].scale = scales[i];
    rows[i].sessions.resize(cases.size());
  }
  const std::size_t n = cases.size();
  parallel_for(n * scales.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t si = job / n, ci = job % n;
    const SessionCase& c = cases[ci];
    const Feed feed = scales[si] == 1.0 ? c.feed : scale_feed(c.feed, scales[si]);
    rows[si].sessions[ci] = run_session(feed, c.bandwidth, c.trace, strategy, device, w, cfg, c.id).metrics;
  });
  for (auto& r : rows) r.mean = summarize(r.sessions);
  return rows;
}

}  // namespace vidpreload
