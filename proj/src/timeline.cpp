#include "vidpreload/timeline.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "vidpreload/errors.hpp"

namespace vidpreload {

PlaybackState PlaybackState::session_start(Millis startup_delay) {
  PlaybackState state;
  state.startup_delay = startup_delay;
  return state;
}

const BufferedChunk* PlaybackState::find_buffered(ChunkId id) const {
  for (const auto& b : buffered)
    if (b.chunk == id) return &b;
  return nullptr;
}

Millis download_duration(Bytes size, const BandwidthModel& bw, Millis start) {
  if (size <= 0) return 0;
  const auto& samples = bw.samples();
  // kbps == bits per millisecond
  std::int64_t bits = size * 8;
  std::size_t idx = 0;
  while (idx + 1 < samples.size() && samples[idx + 1].start <= start) ++idx;
  Millis t = start;
  for (;; ++idx) {
    const Kbps rate = samples[idx].throughput;
    if (idx + 1 < samples.size()) {
      const Millis seg_end = samples[idx + 1].start;
      const std::int64_t avail = (seg_end - t) * rate;
      if (bits > avail) {
        bits -= avail;
        t = seg_end;
        continue;
      }
    }
    return t + (bits + rate - 1) / rate - start;
  }
}

Bytes bytes_transferred(const BandwidthModel& bw, Millis start, Millis end) {
  if (end <= start) return 0;
  const auto& samples = bw.samples();
  std::int64_t bits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Millis seg_begin = std::max(start, samples[i].start);
    const Millis seg_end =
        std::min(end, i + 1 < samples.size() ? samples[i + 1].start : std::numeric_limits<Millis>::max());
    if (seg_end > seg_begin) bits += (seg_end - seg_begin) * samples[i].throughput;
  }
  return bits / 8;
}

Millis compute_stall_of(const ChunkTiming& t) {
  if (t.download_end <= t.buffer_deadline) return std::max<Millis>(0, t.decode_end - t.buffer_deadline);
  return std::max<Millis>(0, t.decode_end - t.download_end - t.decode_duration);
}

ScheduleBuilder::ScheduleBuilder(const Feed& feed, const DeviceModel& device, const BandwidthModel& bw,
                                 const PlaybackState& state, std::span<const ChunkId> slots)
    : feed_(&feed),
      device_(&device),
      bw_(&bw),
      now_(state.now),
      first_deadline_(state.now + state.startup_delay),
      playing_quality_(state.next_chunk.chunk > 0 ? state.playing_quality : std::nullopt),
      next_video_due_(state.next_video_due),
      network_free_(state.now) {
  for (std::size_t u = 0; u < kUnitCount; ++u) unit_free_[u] = std::max(state.now, state.unit_free_at[u]);

  ChunkId furthest = state.next_chunk;
  for (ChunkId id : slots) {
    if (!contains(feed, id)) throw InvalidPlan("plan references unknown chunk " + to_string(id));
    if (id < state.next_chunk) throw StaleChunk("chunk " + to_string(id) + " is behind the playhead");
    if (state.find_buffered(id)) throw InvalidPlan("chunk " + to_string(id) + " is already buffered");
    Slot s;
    s.id = id;
    s.chunk = &chunk_at(feed, id);
    slots_.push_back(s);
    furthest = std::max(furthest, id);
  }

  if (slots_.empty()) return;
  std::map<ChunkId, std::size_t> slot_index;
  for (std::size_t i = 0; i < slots_.size(); ++i)
    if (!slot_index.emplace(slots_[i].id, i).second)
      throw InvalidPlan("chunk " + to_string(slots_[i].id) + " planned twice");

  std::optional<ChunkId> cur = state.next_chunk;
  while (cur && *cur <= furthest) {
    const Chunk& chunk = chunk_at(feed, *cur);
    WalkEntry e;
    e.id = *cur;
    e.playout = chunk.playout;
    if (auto it = slot_index.find(*cur); it != slot_index.end()) {
      e.slot = static_cast<int>(it->second);
      slots_[it->second].walk_index = walk_.size();
    } else if (const BufferedChunk* b = state.find_buffered(*cur)) {
      e.ready_at = b->ready_at;
      e.quality = chunk.variants.at(b->variant).quality;
    }
    walk_.push_back(e);
    cur = next_in_playback(feed, *cur);
  }
}

std::optional<std::size_t> ScheduleBuilder::slot_of(ChunkId id) const {
  for (std::size_t i = 0; i < slots_.size(); ++i)
    if (slots_[i].id == id) return i;
  return std::nullopt;
}

void ScheduleBuilder::push(std::size_t slot_index, int variant) {
  Slot& s = slots_.at(slot_index);
  if (s.variant >= 0) throw InvalidPlan("chunk " + to_string(s.id) + " planned twice");
  if (variant < 0 || variant >= static_cast<int>(s.chunk->variants.size()))
    throw InvalidPlan("invalid variant index " + std::to_string(variant) + " for chunk " + to_string(s.id));
  const ChunkVariant& v = s.chunk->variants[variant];
  if (!device_->has(v.decode_unit) || v.decode_unit == Unit::Network)
    throw InvalidPlan("device has no " + std::string(unit_name(v.decode_unit)) + " for chunk " + to_string(s.id));

  const auto unit = static_cast<std::size_t>(v.decode_unit);
  frames_.push_back({slot_index, network_free_, unit_free_[unit], walk_end_});

  s.variant = variant;
  s.download_duration = download_duration(v.size, *bw_, network_free_);
  s.download_end = network_free_ + s.download_duration;
  s.decode_duration = v.decode_latency;
  s.decode_end = std::max(s.download_end, unit_free_[unit]) + v.decode_latency;
  network_free_ = s.download_end;
  unit_free_[unit] = s.decode_end;
  walk_end_ = std::max(walk_end_, s.walk_index + 1);
}

void ScheduleBuilder::pop() {
  const Frame f = frames_.back();
  frames_.pop_back();
  Slot& s = slots_[f.slot];
  const auto unit = static_cast<std::size_t>(s.chunk->variants[s.variant].decode_unit);
  network_free_ = f.network_free;
  unit_free_[unit] = f.unit_free;
  walk_end_ = f.walk_end;
  s.variant = -1;
}

Plan ScheduleBuilder::plan() const {
  Plan p;
  p.steps.reserve(frames_.size());
  for (const Frame& f : frames_) p.steps.push_back({slots_[f.slot].id, slots_[f.slot].variant});
  return p;
}

const ScheduleResult& ScheduleBuilder::playback() const {
  result_.timings.clear();
  result_.total_stall = 0;
  Millis deadline = first_deadline_;
  std::optional<double> prev_quality = playing_quality_;
  for (std::size_t i = 0; i < walk_end_; ++i) {
    const WalkEntry& e = walk_[i];
    if (e.id.chunk == 0) prev_quality.reset();
    if (next_video_due_ && e.id.chunk == 0 && e.id.video == walk_.front().id.video + 1)
      deadline = std::min(deadline, *next_video_due_);
    if (e.slot >= 0 && slots_[e.slot].variant >= 0) {
      const Slot& s = slots_[e.slot];
      const ChunkVariant& v = s.chunk->variants[s.variant];
      ChunkTiming t;
      t.chunk = s.id;
      t.variant = s.variant;
      t.download_duration = s.download_duration;
      t.download_end = s.download_end;
      t.decode_duration = s.decode_duration;
      t.decode_end = s.decode_end;
      t.buffer_deadline = deadline;
      t.playback_start = std::max(s.decode_end, deadline);
      t.stall = std::max<Millis>(0, s.decode_end - deadline);
      t.compute_stall = compute_stall_of(t);
      t.size = v.size;
      t.quality = v.quality;
      t.prev_quality = prev_quality;
      result_.total_stall += t.stall;
      result_.timings.push_back(t);
      prev_quality = v.quality;
      deadline = t.playback_start + e.playout;
    } else if (e.ready_at >= 0) {
      prev_quality = e.quality;
      deadline = std::max(e.ready_at, deadline) + e.playout;
    } else {
      prev_quality.reset();
      deadline += e.playout;
    }
  }
  return result_;
}

ScheduleResult evaluate_plan(const Plan& plan, const DeviceModel& device, const BandwidthModel& bw,
                             const PlaybackState& state, const Feed& feed) {
  validate_plan(plan, feed);
  std::vector<ChunkId> slots;
  slots.reserve(plan.steps.size());
  for (const auto& step : plan.steps) slots.push_back(step.chunk);
  ScheduleBuilder builder(feed, device, bw, state, slots);
  for (std::size_t i = 0; i < plan.steps.size(); ++i) builder.push(i, plan.steps[i].variant);
  return builder.playback();
}

}  // namespace vidpreload
