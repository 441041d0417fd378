#include "vidpreload/traceio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "vidpreload/errors.hpp"

namespace vidpreload {

using ojson = nlohmann::ordered_json;

namespace {

// Portable draws: std distributions are implementation-defined.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(rng() % span);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

/// Splits "a,b" into two trimmed fields.
bool split_pair(std::string_view line, std::string_view& a, std::string_view& b) {
  const auto comma = line.find(',');
  if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) return false;
  a = trim(line.substr(0, comma));
  b = trim(line.substr(comma + 1));
  return true;
}

std::string line_ref(std::size_t idx) { return "line " + std::to_string(idx + 1); }

// -- manifest helpers ----------------------------------------------------------

const ojson& require(const ojson& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path, std::string("missing \"") + key + "\"");
  return *it;
}

std::int64_t require_int(const ojson& obj, const char* key, const std::string& path) {
  const ojson& v = require(obj, key, path);
  if (!v.is_number_integer()) throw ParseError(path + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

double require_number(const ojson& obj, const char* key, const std::string& path) {
  const ojson& v = require(obj, key, path);
  if (!v.is_number()) throw ParseError(path + "." + key, "expected a number");
  return v.get<double>();
}

std::string require_string(const ojson& obj, const char* key, const std::string& path) {
  const ojson& v = require(obj, key, path);
  if (!v.is_string()) throw ParseError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

const ojson& require_array(const ojson& obj, const char* key, const std::string& path) {
  const ojson& v = require(obj, key, path);
  if (!v.is_array()) throw ParseError(path + "." + key, "expected an array");
  return v;
}

}  // namespace

DefaultProfiles default_profiles() {
  DefaultProfiles p;
  p.pixel.name = "h265";
  p.pixel.codec = CodecType::Pixel;
  // LPIPS of H.265 keyframes: 0.543 / 0.510 / 0.494 / (interpolated) / 0.454
  const double lpips_900 = 0.494 + (0.454 - 0.494) * (900.0 - 600.0) / (1200.0 - 600.0);
  const struct {
    int kbps;
    double lpips;
    Bytes keyframe;
  } rungs[] = {{200, 0.543, 7400}, {400, 0.510, 11200}, {600, 0.494, 14800}, {900, lpips_900, 21250}, {1200, 0.454, 27700}};
  for (const auto& r : rungs)
    p.pixel.entries.push_back({r.kbps, Bytes{r.kbps} * 1000 / 8, 1.0 - r.lpips, 1, Unit::VideoDecoder, r.keyframe});

  p.prompt.name = "prompt";
  p.prompt.codec = CodecType::Prompt;
  p.prompt.entries.push_back({0, 8800, 1.0 - 0.459, 1500, Unit::NeuralAccel, 8800});
  return p;
}

std::vector<ChunkVariant> make_variants(const DefaultProfiles& profiles, Millis playout, double pixel_size_factor) {
  std::vector<ChunkVariant> out;
  auto per_chunk = [&](std::int64_t per_second) { return (per_second * playout + 999) / 1000; };
  for (const auto& e : profiles.pixel.entries) {
    ChunkVariant v;
    v.codec = Codec::pixel(e.bitrate_kbps);
    v.size = std::max<Bytes>(1, static_cast<Bytes>(std::ceil(static_cast<double>(e.bytes_per_second * playout) *
                                                             pixel_size_factor / 1000.0 - 1e-9)));
    v.quality = e.quality;
    v.decode_latency = per_chunk(e.decode_ms_per_second);
    v.decode_unit = e.unit;
    out.push_back(v);
  }
  for (const auto& e : profiles.prompt.entries) {
    ChunkVariant v;
    v.codec = Codec::prompt();
    v.size = per_chunk(e.bytes_per_second) + kPromptTextBytes;
    v.quality = e.quality;
    v.decode_latency = per_chunk(e.decode_ms_per_second);
    v.decode_unit = e.unit;
    out.push_back(v);
  }
  return out;
}

// -- manifests ---------------------------------------------------------------

Feed parse_manifest(std::string_view text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "malformed JSON");
  }
  const std::int64_t version = require_int(doc, "schema_version", "manifest");
  if (version != kManifestSchemaVersion)
    throw ParseError("manifest.schema_version", "unsupported version " + std::to_string(version));

  Feed feed;
  std::vector<std::string> violations;
  const ojson& videos = require_array(doc, "videos", "manifest");
  for (std::size_t vi = 0; vi < videos.size(); ++vi) {
    const std::string vpath = "videos[" + std::to_string(vi) + "]";
    VideoManifest m;
    m.video_id = require_string(videos[vi], "video_id", vpath);
    const ojson& chunks = require_array(videos[vi], "chunks", vpath);
    for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
      const std::string cpath = vpath + ".chunks[" + std::to_string(ci) + "]";
      Chunk c;
      c.id = {static_cast<int>(vi), static_cast<int>(require_int(chunks[ci], "index", cpath))};
      c.playout = require_int(chunks[ci], "playout_ms", cpath);
      const ojson& variants = require_array(chunks[ci], "variants", cpath);
      for (std::size_t k = 0; k < variants.size(); ++k) {
        const std::string path = cpath + ".variants[" + std::to_string(k) + "]";
        const ojson& jv = variants[k];
        ChunkVariant v;
        const std::string codec = require_string(jv, "codec", path);
        if (codec == "pixel") {
          v.codec = Codec::pixel(static_cast<int>(require_int(jv, "bitrate_kbps", path)));
        } else if (codec == "prompt") {
          v.codec = Codec::prompt();
        } else {
          throw ParseError(path + ".codec", "unknown codec \"" + codec + "\"");
        }
        v.size = require_int(jv, "size_bytes", path);
        v.quality = require_number(jv, "quality", path);
        v.decode_latency = require_int(jv, "decode_ms", path);
        const std::string unit = require_string(jv, "decode_unit", path);
        const auto u = parse_unit(unit);
        if (!u || *u == Unit::Network) throw ParseError(path + ".decode_unit", "unknown decode unit \"" + unit + "\"");
        v.decode_unit = *u;
        c.variants.push_back(v);
      }
      m.chunks.push_back(std::move(c));
    }
    for (auto& v : validate_manifest(m)) violations.push_back(std::move(v));
    feed.push_back(std::move(m));
  }
  if (!violations.empty()) throw InvalidManifest(std::move(violations));
  return feed;
}

std::string format_manifest(const Feed& feed) {
  ojson doc;
  doc["schema_version"] = kManifestSchemaVersion;
  doc["videos"] = ojson::array();
  for (const auto& m : feed) {
    ojson jm;
    jm["video_id"] = m.video_id;
    jm["chunks"] = ojson::array();
    for (const auto& c : m.chunks) {
      ojson jc;
      jc["index"] = c.id.chunk;
      jc["playout_ms"] = c.playout;
      jc["variants"] = ojson::array();
      for (const auto& v : c.variants) {
        ojson jv;
        jv["codec"] = v.codec.is_prompt() ? "prompt" : "pixel";
        if (!v.codec.is_prompt()) jv["bitrate_kbps"] = v.codec.bitrate_kbps;
        jv["size_bytes"] = v.size;
        jv["quality"] = v.quality;
        jv["decode_ms"] = v.decode_latency;
        jv["decode_unit"] = std::string(unit_name(v.decode_unit));
        jc["variants"].push_back(std::move(jv));
      }
      jm["chunks"].push_back(std::move(jc));
    }
    doc["videos"].push_back(std::move(jm));
  }
  return doc.dump(2) + "\n";
}

Feed load_manifest(const std::filesystem::path& path) { return parse_manifest(read_file(path)); }

void save_manifest(const std::filesystem::path& path, const Feed& feed) { write_file(path, format_manifest(feed)); }

// -- bandwidth traces ----------------------------------------------------------

BandwidthModel parse_bandwidth_trace(std::string_view text) {
  std::vector<BandwidthSample> samples;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    std::string_view a, b;
    if (!split_pair(line, a, b)) throw ParseError(line_ref(i), "expected \"timestamp_ms,throughput_kbps\"");
    std::int64_t t = 0, kbps = 0;
    if (!parse_int(a, t) || !parse_int(b, kbps)) {
      if (samples.empty() && a == "timestamp_ms" && b == "throughput_kbps") continue;  // header
      throw ParseError(line_ref(i), "expected integer fields");
    }
    if (kbps <= 0) throw ParseError(line_ref(i), "throughput must be positive");
    if (samples.empty() && t != 0) throw ParseError(line_ref(i), "first sample must start at 0 ms");
    if (!samples.empty() && t <= samples.back().start)
      throw ParseError(line_ref(i), "timestamps must be strictly increasing");
    samples.push_back({t, kbps});
  }
  if (samples.empty()) throw ParseError("line 1", "bandwidth trace has no samples");
  return BandwidthModel(std::move(samples));
}

std::string format_bandwidth_trace(const BandwidthModel& bw) {
  std::string out = "timestamp_ms,throughput_kbps\n";
  for (const auto& s : bw.samples()) out += std::to_string(s.start) + "," + std::to_string(s.throughput) + "\n";
  return out;
}

BandwidthModel load_bandwidth_trace(const std::filesystem::path& path) {
  return parse_bandwidth_trace(read_file(path));
}

void save_bandwidth_trace(const std::filesystem::path& path, const BandwidthModel& bw) {
  write_file(path, format_bandwidth_trace(bw));
}

// -- session traces ------------------------------------------------------------

SessionTrace parse_session_trace(std::string_view text) {
  SessionTrace trace;
  bool seen_row = false;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    std::string_view a, b;
    if (!split_pair(line, a, b)) throw ParseError(line_ref(i), "expected \"video_id,watch_ms\"");
    std::int64_t watch = 0;
    if (!parse_int(b, watch)) {
      if (!seen_row && a == "video_id" && b == "watch_ms") {
        seen_row = true;
        continue;
      }
      throw ParseError(line_ref(i), "watch_ms must be an integer");
    }
    seen_row = true;
    if (a.empty()) throw ParseError(line_ref(i), "empty video id");
    if (watch < 0) throw ParseError(line_ref(i), "watch_ms must be non-negative");
    trace.records.push_back({std::string(a), watch});
  }
  return trace;
}

std::string format_session_trace(const SessionTrace& trace) {
  std::string out = "video_id,watch_ms\n";
  for (const auto& r : trace.records) out += r.video_id + "," + std::to_string(r.watch) + "\n";
  return out;
}

SessionTrace load_session_trace(const std::filesystem::path& path) { return parse_session_trace(read_file(path)); }

void save_session_trace(const std::filesystem::path& path, const SessionTrace& trace) {
  write_file(path, format_session_trace(trace));
}

// -- synthetic data ------------------------------------------------------------

Feed gen_synthetic_feed(std::uint64_t seed, int videos, int chunks_per_video, const DefaultProfiles& profiles,
                        Millis chunk_ms) {
  if (videos < 1 || chunks_per_video < 1 || chunk_ms < 1) throw std::invalid_argument("counts must be at least 1");
  std::mt19937_64 rng(mix_seed(seed, 1));
  Feed feed;
  for (int v = 0; v < videos; ++v) {
    VideoManifest m;
    char id[16];
    std::snprintf(id, sizeof id, "v%03d", v);
    m.video_id = id;
    const double complexity = 0.8 + 0.4 * uniform01(rng);
    for (int c = 0; c < chunks_per_video; ++c) {
      Chunk chunk;
      chunk.id = {v, c};
      chunk.playout = chunk_ms;
      chunk.variants = make_variants(profiles, chunk_ms, complexity);
      m.chunks.push_back(std::move(chunk));
    }
    feed.push_back(std::move(m));
  }
  return feed;
}

BandwidthPattern BandwidthPattern::constant(Kbps rate) {
  BandwidthPattern p;
  p.kind = Kind::Constant;
  p.low = p.high = rate;
  return p;
}

BandwidthPattern BandwidthPattern::square(Kbps low, Kbps high, Millis half_period, Millis duration) {
  BandwidthPattern p;
  p.kind = Kind::Step;
  p.low = low;
  p.high = high;
  p.period = half_period;
  p.duration = duration;
  return p;
}

BandwidthPattern BandwidthPattern::sawtooth(Kbps low, Kbps high, Millis period, Millis duration) {
  BandwidthPattern p;
  p.kind = Kind::Sawtooth;
  p.low = low;
  p.high = high;
  p.period = period;
  p.duration = duration;
  return p;
}

BandwidthPattern BandwidthPattern::random_walk(Kbps low, Kbps high, Kbps step, Millis spacing, Millis duration) {
  BandwidthPattern p;
  p.kind = Kind::RandomWalk;
  p.low = low;
  p.high = high;
  p.step = step;
  p.period = spacing;
  p.duration = duration;
  return p;
}

BandwidthModel gen_synthetic_bandwidth(std::uint64_t seed, const BandwidthPattern& p) {
  if (p.low <= 0 || p.high < p.low) throw std::invalid_argument("bandwidth range must be positive and ordered");
  if (p.kind == BandwidthPattern::Kind::Constant) return BandwidthModel::constant(p.low);
  if (p.period < 1) throw std::invalid_argument("bandwidth pattern period must be positive");

  std::vector<BandwidthSample> samples;
  std::mt19937_64 rng(mix_seed(seed, 2));
  switch (p.kind) {
    case BandwidthPattern::Kind::Step:
      for (Millis t = 0, i = 0; t < p.duration || samples.empty(); t += p.period, ++i)
        samples.push_back({t, i % 2 == 0 ? p.high : p.low});
      break;
    case BandwidthPattern::Kind::Sawtooth: {
      // ramps low -> high over each period in 10 steps
      const Millis spacing = std::max<Millis>(1, p.period / 10);
      for (Millis t = 0; t < p.duration || samples.empty(); t += spacing) {
        const double phase = static_cast<double>(t % p.period) / static_cast<double>(p.period);
        samples.push_back({t, p.low + static_cast<Kbps>(std::llround(phase * static_cast<double>(p.high - p.low)))});
      }
      break;
    }
    case BandwidthPattern::Kind::RandomWalk: {
      Kbps value = uniform_int(rng, p.low, p.high);
      for (Millis t = 0; t < p.duration || samples.empty(); t += p.period) {
        samples.push_back({t, value});
        value = std::clamp<Kbps>(value + uniform_int(rng, -p.step, p.step), p.low, p.high);
      }
      break;
    }
    case BandwidthPattern::Kind::Constant:
      break;
  }
  return BandwidthModel(std::move(samples));
}

SessionTrace gen_synthetic_session(std::uint64_t seed, const Feed& feed, const RetentionModel& retention) {
  if (!(retention.continue_probability >= 0.0 && retention.continue_probability <= 1.0))
    throw std::invalid_argument("continue probability must lie in [0, 1]");
  std::mt19937_64 rng(mix_seed(seed, 3));
  SessionTrace trace;
  for (const auto& video : feed) {
    std::size_t watched = 0;
    while (watched < video.chunks.size() && uniform01(rng) < retention.continue_probability) ++watched;
    Millis watch = 0;
    for (std::size_t c = 0; c < watched; ++c) watch += video.chunks[c].playout;
    if (watched < video.chunks.size()) watch += uniform_int(rng, 0, video.chunks[watched].playout - 1);
    trace.records.push_back({video.video_id, watch});
  }
  return trace;
}

BandwidthPattern standard_pattern(int index) {
  switch (index % 4) {
    case 0:
      return BandwidthPattern::random_walk(300, 2500, 300, 1000, 300000);
    case 1:
      return BandwidthPattern::square(400, 2000, 5000, 300000);
    case 2:
      return BandwidthPattern::sawtooth(300, 1800, 8000, 300000);
    default:
      return BandwidthPattern::constant(600 + 200 * (index % 5));
  }
}

std::vector<SessionCase> standard_suite(std::uint64_t seed, int sessions) {
  const DefaultProfiles profiles = default_profiles();
  std::vector<SessionCase> out;
  for (int i = 0; i < sessions; ++i) {
    const std::uint64_t s = mix_seed(seed, 100 + static_cast<std::uint64_t>(i));
    SessionCase c;
    c.id = "std" + std::to_string(i);
    c.feed = gen_synthetic_feed(s, 12, 10, profiles);
    const BandwidthPattern pattern = standard_pattern(i);
    c.bandwidth = gen_synthetic_bandwidth(s, pattern);
    c.trace = gen_synthetic_session(s, c.feed, RetentionModel{0.8});
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<SessionCase> stress_suite(std::uint64_t seed, int sessions) {
  const DefaultProfiles profiles = default_profiles();
  std::vector<SessionCase> out;
  for (int i = 0; i < sessions; ++i) {
    const std::uint64_t s = mix_seed(seed, 500 + static_cast<std::uint64_t>(i));
    SessionCase c;
    c.id = "stress" + std::to_string(i);
    c.feed = gen_synthetic_feed(s, 12, 8, profiles);
    // long good stretches fill the preload buffer, the dips stall it
    c.bandwidth = gen_synthetic_bandwidth(s, BandwidthPattern::square(200, 2500, 2000 + 1000 * (i % 4), 300000));
    c.trace = gen_synthetic_session(s, c.feed, RetentionModel{0.7});
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace vidpreload
