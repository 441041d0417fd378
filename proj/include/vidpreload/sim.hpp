#pragma once

// Discrete-event playback of a feed against a bandwidth trace and a swipe
// trace.
//
// The network carries one download at a time. Whenever it goes idle the
// strategy is asked for a plan and the first step that is still needed is
// started; finished downloads are decoded on their unit in completion order.
// Playback moves chunk by chunk, stalling whenever the due chunk is not yet
// decoded. A due chunk that is neither downloaded nor in flight is fetched
// at the lowest pixel bitrate ahead of anything else.
//
// Byte accounting: every downloaded byte ends up in exactly one of played,
// wasted (unplayed chunks of a video the viewer left, plus partial downloads
// abandoned at the swipe) and session_end (preloaded chunks of videos the
// session never reached).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vidpreload/model.hpp"
#include "vidpreload/planner.hpp"
#include "vidpreload/timeline.hpp"
#include "vidpreload/traceio.hpp"

namespace vidpreload {

// Declaration order is the tie-break order for events at the same time.
enum class EventKind : std::uint8_t { DownloadComplete, DecodeComplete, ChunkPlaybackDue, Swipe, ReplanTimer, SessionEnd };

std::string_view event_kind_name(EventKind kind);

struct Event {
  Millis time = 0;
  EventKind kind = EventKind::ReplanTimer;
  std::optional<ChunkId> chunk;
  std::optional<Unit> unit;

  bool operator==(const Event&) const = default;
};

using EventLog = std::vector<Event>;

/// One "time,kind,video:chunk,unit" line per event; "-" for absent fields.
std::string format_event_log(const EventLog& log);

struct StrategyId {
  enum class Kind : std::uint8_t { Mcts, Sequential, FixedNextK, HybridOff };

  Kind kind = Kind::Mcts;
  int k = 3;  // FixedNextK only

  static StrategyId mcts() { return {Kind::Mcts, 3}; }
  static StrategyId sequential() { return {Kind::Sequential, 3}; }
  static StrategyId fixed_next_k(int k) { return {Kind::FixedNextK, k}; }
  static StrategyId hybrid_off() { return {Kind::HybridOff, 3}; }

  bool operator==(const StrategyId&) const = default;
};

/// "mcts", "sequential", "hybrid-off", "fixed" (K = 3) or "fixed:K".
std::string to_string(const StrategyId& id);
/// Throws std::invalid_argument.
StrategyId parse_strategy(std::string_view name);

struct SimConfig {
  Millis startup_delay = 200;      // session start only; after a swipe the next video is due at once
  Millis replan_interval = 500;
  int lookahead_chunks = 3;        // planning window in the current video, from the next unplayed chunk
  int next_video_chunks = 1;       // ... plus this many chunks of the following video
  /// Plan as if the viewer may leave when the playing chunk ends: the next
  /// video's first chunk is due then at the latest.
  bool assume_early_leave = true;
  Kbps initial_bandwidth_estimate = 1000;
  BitrateRule bitrate_rule = BitrateRule::DeadlineFit;  // FixedNextK
  PlannerConfig planner = default_planner();
  std::uint64_t master_seed = 1;
  bool record_events = true;
  int threads = 1;                 // batch runs only

  static PlannerConfig default_planner();
  /// Throws std::invalid_argument.
  void validate() const;
};

/// What a strategy sees at a replanning point.
struct PlanningContext {
  const Feed& feed;
  const DeviceModel& device;
  const PlaybackState& state;
  const BandwidthModel& predicted;
  const Weights& weights;
  const std::vector<ChunkId>& candidates;  // planning window, unbuffered, playback order
  const SimConfig& config;
  std::uint64_t seed;                      // fresh per call
};

/// Returns download steps; steps that are stale, buffered or in flight are
/// skipped by the simulator.
using Strategy = std::function<Plan(const PlanningContext&)>;

Strategy make_strategy(const StrategyId& id);

struct PlayedChunk {
  ChunkId chunk;
  int variant = 0;
  Millis due = 0;
  Millis start = 0;
  Millis stall = 0;  // start - due
  Bytes size = 0;
  double quality = 0.0;
};

struct VideoMetrics {
  std::string video_id;
  int chunks_played = 0;
  Millis watched = 0;      // content time shown
  Millis startup_ms = 0;   // wait before the first frame of the video
  Millis rebuffer_ms = 0;  // stalls after the first frame
  Bytes wasted_bytes = 0;
};

struct SessionMetrics {
  Millis total_stall = 0;
  Bytes wasted_bytes = 0;
  Bytes downloaded_bytes = 0;
  Bytes played_bytes = 0;
  Bytes session_end_bytes = 0;
  double mean_quality = 0.0;
  int quality_switches = 0;
  double qoe = 0.0;
  int chunks_played = 0;
  int prompt_chunks_played = 0;
  int emergency_fetches = 0;
  int replans = 0;
  Millis session_length = 0;
  std::vector<VideoMetrics> per_video;
  std::vector<PlayedChunk> played;

  bool conserves_bytes() const { return downloaded_bytes == played_bytes + wasted_bytes + session_end_bytes; }
};

struct SessionResult {
  SessionMetrics metrics;
  EventLog events;
};

/// Throws TraceMismatch unless the trace's video ids are a prefix of the
/// feed's.
SessionResult run_session(const Feed& feed, const BandwidthModel& bw, const SessionTrace& trace,
                          const StrategyId& strategy, const DeviceModel& device, const Weights& w,
                          const SimConfig& cfg, std::string_view trace_id = "");

/// Same with an arbitrary strategy; `stream` names its RNG stream.
SessionResult run_session(const Feed& feed, const BandwidthModel& bw, const SessionTrace& trace,
                          const Strategy& strategy, std::string_view stream, const DeviceModel& device,
                          const Weights& w, const SimConfig& cfg, std::string_view trace_id = "");

/// Mean over sessions of the reported metrics.
struct MetricSummary {
  double stall_ms = 0.0;
  double wasted_bytes = 0.0;
  double downloaded_bytes = 0.0;
  double mean_quality = 0.0;
  double qoe = 0.0;
};

MetricSummary summarize(std::span<const SessionMetrics> sessions);

struct StrategyReport {
  StrategyId strategy;
  std::vector<std::string> trace_ids;
  std::vector<SessionMetrics> sessions;  // per case, in input order
  MetricSummary mean;
  MetricSummary ratio_pct;  // mean relative to the first strategy, in percent
};

struct ComparisonReport {
  std::vector<StrategyReport> strategies;
};

/// Percent of `value` relative to `base`: 100 * value / base for positive
/// bases, mirrored for negative ones so that a larger value always gives a
/// larger ratio. 100 when both are zero.
double ratio_pct(double value, double base);

/// Throws std::invalid_argument for fewer than two strategies.
ComparisonReport compare_strategies(std::span<const SessionCase> cases, std::span<const StrategyId> strategies,
                                    const DeviceModel& device, const Weights& w, const SimConfig& cfg);

/// Every variant size multiplied by `factor`, rounded up, at least one byte.
Feed scale_feed(const Feed& feed, double factor);

struct SweepRow {
  double scale = 1.0;
  MetricSummary mean;
  std::vector<SessionMetrics> sessions;
};

/// Throws std::invalid_argument for scale factors outside (0, 1].
std::vector<SweepRow> chunk_size_sweep(std::span<const SessionCase> cases, const StrategyId& strategy,
                                       std::span<const double> scales, const DeviceModel& device, const Weights& w,
                                       const SimConfig& cfg);

}  // namespace vidpreload
