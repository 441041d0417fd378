#pragma once

// Domain types shared by the timeline, planner and simulator.
//
// Times are integer milliseconds and sizes integer bytes throughout. All
// types are plain values; nothing here owns external resources.

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vidpreload {

using Millis = std::int64_t;
using Bytes = std::int64_t;
using Kbps = std::int64_t;

/// (video index in the feed, chunk index within the video). The defaulted
/// ordering is playback order.
struct ChunkId {
  int video = 0;
  int chunk = 0;

  auto operator<=>(const ChunkId&) const = default;
};

std::string to_string(ChunkId id);

/// Serial resources of the viewing device. The network carries downloads;
/// the other units decode.
enum class Unit : std::uint8_t { Network = 0, VideoDecoder = 1, NeuralAccel = 2 };
inline constexpr std::size_t kUnitCount = 3;

std::string_view unit_name(Unit unit);
std::optional<Unit> parse_unit(std::string_view name);

enum class CodecType : std::uint8_t { Pixel, Prompt };

struct Codec {
  CodecType type = CodecType::Pixel;
  int bitrate_kbps = 0;  // pixel codecs only; 0 for prompt

  static Codec pixel(int kbps) { return {CodecType::Pixel, kbps}; }
  static Codec prompt() { return {CodecType::Prompt, 0}; }
  bool is_prompt() const { return type == CodecType::Prompt; }

  bool operator==(const Codec&) const = default;
};

/// Decode unit a codec is dispatched to.
Unit route(const Codec& codec);

struct ChunkVariant {
  Codec codec;
  Bytes size = 0;
  double quality = 0.0;  // [0, 1], higher is better
  Millis decode_latency = 0;
  Unit decode_unit = Unit::VideoDecoder;

  bool operator==(const ChunkVariant&) const = default;
};

struct Chunk {
  ChunkId id;
  Millis playout = 0;
  std::vector<ChunkVariant> variants;

  bool operator==(const Chunk&) const = default;
};

struct VideoManifest {
  std::string video_id;
  std::vector<Chunk> chunks;

  Millis duration() const;
  bool operator==(const VideoManifest&) const = default;
};

using Feed = std::vector<VideoManifest>;

struct DeviceModel {
  std::vector<Unit> units;

  /// Network, video decoder and neural accelerator.
  static DeviceModel standard();
  bool has(Unit unit) const;
};

struct BandwidthSample {
  Millis start = 0;
  Kbps throughput = 0;

  bool operator==(const BandwidthSample&) const = default;
};

/// Piecewise-constant throughput; the last sample extends forever.
class BandwidthModel {
 public:
  /// Throws std::invalid_argument unless the first sample starts at 0,
  /// starts strictly increase and every throughput is positive.
  explicit BandwidthModel(std::vector<BandwidthSample> samples);

  static BandwidthModel constant(Kbps throughput);

  const std::vector<BandwidthSample>& samples() const { return samples_; }
  Kbps throughput_at(Millis t) const;

  bool operator==(const BandwidthModel&) const = default;

 private:
  std::vector<BandwidthSample> samples_;
};

struct WatchRecord {
  std::string video_id;
  Millis watch = 0;

  bool operator==(const WatchRecord&) const = default;
};

/// How long the viewer stays on each video before swiping, in feed order.
struct SessionTrace {
  std::vector<WatchRecord> records;

  bool operator==(const SessionTrace&) const = default;
};

/// Chunk score weights: quality, quality variation, stall (per second) and
/// bandwidth (per megabit).
struct Weights {
  double quality = 1.0;
  double variation = 1.0;
  double stall = 3.0;
  double bandwidth = 0.3;

  /// Throws std::invalid_argument for negative or non-finite weights.
  void validate() const;
  Weights scaled(double c) const { return {quality * c, variation * c, stall * c, bandwidth * c}; }
};

struct PlanStep {
  ChunkId chunk;
  int variant = 0;

  bool operator==(const PlanStep&) const = default;
};

/// Download decisions; step order is download order and may differ from
/// playback order.
struct Plan {
  std::vector<PlanStep> steps;

  bool empty() const { return steps.empty(); }
  std::size_t size() const { return steps.size(); }
  bool operator==(const Plan&) const = default;
};

std::string to_string(const Plan& plan);

bool contains(const Feed& feed, ChunkId id);
/// Throws std::out_of_range for ids outside the feed.
const Chunk& chunk_at(const Feed& feed, ChunkId id);
/// The chunk after `id` in playback order, crossing video boundaries.
std::optional<ChunkId> next_in_playback(const Feed& feed, ChunkId id);

/// Every chunk of the feed in playback order. Throws EmptyFeed.
std::vector<ChunkId> playback_order(const Feed& feed);

/// Every invariant violation of the manifest; empty when well-formed.
std::vector<std::string> validate_manifest(const VideoManifest& manifest);

/// Throws InvalidPlan for duplicate chunks, unknown chunks or bad variant
/// indices.
void validate_plan(const Plan& plan, const Feed& feed);

/// Index of the lowest-bitrate pixel variant, or the first variant when the
/// chunk has no pixel encoding.
int lowest_pixel_variant(const Chunk& chunk);

}  // namespace vidpreload
