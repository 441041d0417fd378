#pragma once

// File formats, codec profiles and synthetic data.
//
// Manifest: JSON document {"schema_version": 1, "videos": [...]}; see
// docs/formats.md. Bandwidth traces are "timestamp_ms,throughput_kbps" lines
// and session traces "video_id,watch_ms" lines, each with an optional header.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vidpreload/model.hpp"

namespace vidpreload {

inline constexpr int kManifestSchemaVersion = 1;

/// Text prompt shipped with every prompt-codec chunk, on top of the token
/// embeddings.
inline constexpr Bytes kPromptTextBytes = 200;

struct ProfileEntry {
  int bitrate_kbps = 0;           // 0 for the prompt codec
  Bytes bytes_per_second = 0;     // of playout
  double quality = 0.0;           // 1 - LPIPS
  Millis decode_ms_per_second = 0;
  Unit unit = Unit::VideoDecoder;
  Bytes keyframe_bytes = 0;       // reference I-frame size; not used for chunk sizing
};

struct CodecProfile {
  std::string name;
  CodecType codec = CodecType::Pixel;
  std::vector<ProfileEntry> entries;  // ascending bitrate for pixel profiles
};

struct DefaultProfiles {
  CodecProfile pixel;
  CodecProfile prompt;
};

/// Pixel ladder {200, 400, 600, 900, 1200} kbps and one prompt encoding,
/// with qualities taken as 1 - LPIPS of measured keyframes. 900 kbps is
/// interpolated between the 600 and 1200 kbps measurements.
DefaultProfiles default_profiles();

/// Variants of one chunk of `playout` ms: every pixel rung then the prompt
/// encoding. `pixel_size_factor` scales pixel sizes (content complexity).
std::vector<ChunkVariant> make_variants(const DefaultProfiles& profiles, Millis playout,
                                        double pixel_size_factor = 1.0);

// -- manifests ---------------------------------------------------------------

/// Throws ParseError (with the field path) or InvalidManifest.
Feed parse_manifest(std::string_view json_text);
std::string format_manifest(const Feed& feed);
Feed load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Feed& feed);

// -- bandwidth traces ----------------------------------------------------------

/// Throws ParseError naming the line.
BandwidthModel parse_bandwidth_trace(std::string_view text);
std::string format_bandwidth_trace(const BandwidthModel& bw);
BandwidthModel load_bandwidth_trace(const std::filesystem::path& path);
void save_bandwidth_trace(const std::filesystem::path& path, const BandwidthModel& bw);

// -- session traces ------------------------------------------------------------

SessionTrace parse_session_trace(std::string_view text);
std::string format_session_trace(const SessionTrace& trace);
SessionTrace load_session_trace(const std::filesystem::path& path);
void save_session_trace(const std::filesystem::path& path, const SessionTrace& trace);

// -- synthetic data ------------------------------------------------------------

Feed gen_synthetic_feed(std::uint64_t seed, int videos, int chunks_per_video, const DefaultProfiles& profiles,
                        Millis chunk_ms = 1000);

struct BandwidthPattern {
  enum class Kind { Constant, Step, Sawtooth, RandomWalk };

  Kind kind = Kind::Constant;
  Kbps low = 1000;
  Kbps high = 1000;
  Millis period = 1000;      // step half-period, sawtooth period, random-walk sample spacing
  Millis duration = 600000;  // covered span; the last value extends beyond it
  Kbps step = 100;           // random-walk maximum move per sample

  static BandwidthPattern constant(Kbps rate);
  static BandwidthPattern square(Kbps low, Kbps high, Millis half_period, Millis duration);
  static BandwidthPattern sawtooth(Kbps low, Kbps high, Millis period, Millis duration);
  static BandwidthPattern random_walk(Kbps low, Kbps high, Kbps step, Millis spacing, Millis duration);
};

BandwidthModel gen_synthetic_bandwidth(std::uint64_t seed, const BandwidthPattern& pattern);

/// Pattern of the i-th standard-suite session: random walk, square wave,
/// sawtooth and constant in rotation.
BandwidthPattern standard_pattern(int index);

/// Per video, the number of chunks watched is geometric with the given
/// continue probability, truncated at the video length.
struct RetentionModel {
  double continue_probability = 0.8;
};

SessionTrace gen_synthetic_session(std::uint64_t seed, const Feed& feed, const RetentionModel& retention);

/// One simulated viewing: a feed, a bandwidth trace and a swipe trace.
struct SessionCase {
  std::string id;
  Feed feed;
  BandwidthModel bandwidth = BandwidthModel::constant(1000);
  SessionTrace trace;
};

/// Mixed bandwidth patterns around typical short-video rates.
std::vector<SessionCase> standard_suite(std::uint64_t seed, int sessions = 24);
/// Square-wave bandwidth with deep dips, and early swipes.
std::vector<SessionCase> stress_suite(std::uint64_t seed, int sessions = 12);

}  // namespace vidpreload
