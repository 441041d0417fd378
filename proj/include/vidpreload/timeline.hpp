#pragma once

// Download / decode / playback timing of a plan.
//
// Downloads are serial on the network in plan order. Each decode unit is a
// FIFO that takes jobs in download-completion order:
//
//   download_end[k] = download_end[k-1] + download_duration[k]   (starts at now)
//   decode_end[b]   = max(download_end[b], decode_end[a]) + decode_duration[b]
//
// where a is the previous job on b's unit. Playback follows playback order:
// the first unplayed chunk is due at now + startup_delay, every later chunk
// is due when its predecessor finishes playing, and
//
//   playback_start = max(decode_end, deadline)
//   stall          = max(0, decode_end - deadline)

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "vidpreload/model.hpp"

namespace vidpreload {

struct ChunkTiming {
  ChunkId chunk;
  int variant = 0;
  Millis download_duration = 0;
  Millis download_end = 0;
  Millis decode_duration = 0;
  Millis decode_end = 0;
  Millis buffer_deadline = 0;
  Millis playback_start = 0;
  Millis stall = 0;
  Millis compute_stall = 0;
  Bytes size = 0;
  double quality = 0.0;
  /// Quality of the chunk played just before this one in the same video,
  /// when it is known (planned, buffered or currently playing).
  std::optional<double> prev_quality;

  bool operator==(const ChunkTiming&) const = default;
};

struct ScheduleResult {
  std::vector<ChunkTiming> timings;  // planned chunks, in playback order
  Millis total_stall = 0;

  bool operator==(const ScheduleResult&) const = default;
};

/// A chunk already downloaded. `ready_at` is its decode end, which may lie
/// in the future when the decode is still queued.
struct BufferedChunk {
  ChunkId chunk;
  int variant = 0;
  Millis ready_at = 0;
};

/// Where the viewer is when a plan starts executing.
struct PlaybackState {
  Millis now = 0;
  ChunkId next_chunk{};       // first chunk that has not started playing
  Millis startup_delay = 0;   // next_chunk is due at now + startup_delay
  std::vector<BufferedChunk> buffered;
  std::array<Millis, kUnitCount> unit_free_at{};  // decode queues; values <= now mean idle
  std::optional<double> playing_quality;          // quality of the chunk before next_chunk
  /// The viewer may leave the current video early: when set, the first
  /// chunk of the following video is due no later than this.
  std::optional<Millis> next_video_due;

  static PlaybackState session_start(Millis startup_delay = 200);
  const BufferedChunk* find_buffered(ChunkId id) const;
};

/// Smallest whole number of milliseconds in which `size` bytes arrive when
/// the transfer starts at `start`.
Millis download_duration(Bytes size, const BandwidthModel& bw, Millis start);

/// Bytes delivered over [start, end).
Bytes bytes_transferred(const BandwidthModel& bw, Millis start, Millis end);

/// Throws InvalidPlan (including steps whose decode unit the device lacks or
/// that re-download a buffered chunk) and StaleChunk.
ScheduleResult evaluate_plan(const Plan& plan, const DeviceModel& device, const BandwidthModel& bw,
                             const PlaybackState& state, const Feed& feed);

/// Decode-attributable part of a chunk's lateness: all of it when the
/// download met the deadline, otherwise only the decode-queue wait.
Millis compute_stall_of(const ChunkTiming& timing);

/// Incremental form of evaluate_plan over a fixed set of candidate chunks
/// ("slots"). Steps are pushed in download order and can be popped, so a
/// search can extend and retract a prefix cheaply.
///
/// Chunks between next_chunk and a planned slot that are neither planned
/// nor buffered are assumed to arrive exactly on time.
class ScheduleBuilder {
 public:
  ScheduleBuilder(const Feed& feed, const DeviceModel& device, const BandwidthModel& bw,
                  const PlaybackState& state, std::span<const ChunkId> slots);

  std::size_t slot_count() const { return slots_.size(); }
  ChunkId slot(std::size_t i) const { return slots_[i].id; }
  const Chunk& slot_chunk(std::size_t i) const { return *slots_[i].chunk; }
  std::optional<std::size_t> slot_of(ChunkId id) const;

  void push(std::size_t slot, int variant);
  void pop();
  std::size_t depth() const { return frames_.size(); }
  bool planned(std::size_t slot) const { return slots_[slot].variant >= 0; }

  /// Steps pushed so far, in download order.
  Plan plan() const;

  /// Playback pass over the current prefix. The reference stays valid until
  /// the next call.
  const ScheduleResult& playback() const;

 private:
  struct Slot {
    ChunkId id;
    const Chunk* chunk = nullptr;
    std::size_t walk_index = 0;
    int variant = -1;
    Millis download_duration = 0;
    Millis download_end = 0;
    Millis decode_duration = 0;
    Millis decode_end = 0;
  };
  struct WalkEntry {
    ChunkId id;
    Millis playout = 0;
    int slot = -1;
    Millis ready_at = -1;  // buffered chunks only
    double quality = 0.0;
  };
  struct Frame {
    std::size_t slot;
    Millis network_free;
    Millis unit_free;
    std::size_t walk_end;
  };

  const Feed* feed_;
  const DeviceModel* device_;
  const BandwidthModel* bw_;
  Millis now_;
  Millis first_deadline_;
  std::optional<double> playing_quality_;
  std::optional<Millis> next_video_due_;
  std::vector<Slot> slots_;
  std::vector<WalkEntry> walk_;
  std::vector<Frame> frames_;
  Millis network_free_;
  std::array<Millis, kUnitCount> unit_free_;
  std::size_t walk_end_ = 0;  // one past the furthest planned walk entry
  mutable ScheduleResult result_;
};

}  // namespace vidpreload
