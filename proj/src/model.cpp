#include "vidpreload/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "vidpreload/errors.hpp"

namespace vidpreload {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

}  // namespace

InvalidManifest::InvalidManifest(std::vector<std::string> violations)
    : Error("invalid manifest: " + join(violations)), violations_(std::move(violations)) {}

std::string to_string(ChunkId id) {
  return std::to_string(id.video) + ":" + std::to_string(id.chunk);
}

std::string_view unit_name(Unit unit) {
  switch (unit) {
    case Unit::Network:
      return "network";
    case Unit::VideoDecoder:
      return "video_decoder";
    case Unit::NeuralAccel:
      return "neural_accel";
  }
  return "unknown";
}

std::optional<Unit> parse_unit(std::string_view name) {
  if (name == "network") return Unit::Network;
  if (name == "video_decoder") return Unit::VideoDecoder;
  if (name == "neural_accel") return Unit::NeuralAccel;
  return std::nullopt;
}

Unit route(const Codec& codec) {
  return codec.is_prompt() ? Unit::NeuralAccel : Unit::VideoDecoder;
}

Millis VideoManifest::duration() const {
  Millis total = 0;
  for (const auto& c : chunks) total += c.playout;
  return total;
}

DeviceModel DeviceModel::standard() {
  return {{Unit::Network, Unit::VideoDecoder, Unit::NeuralAccel}};
}

bool DeviceModel::has(Unit unit) const {
  return std::find(units.begin(), units.end(), unit) != units.end();
}

BandwidthModel::BandwidthModel(std::vector<BandwidthSample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw std::invalid_argument("bandwidth model needs at least one sample");
  if (samples_.front().start != 0) throw std::invalid_argument("first bandwidth sample must start at 0 ms");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].throughput <= 0) throw std::invalid_argument("bandwidth throughput must be positive");
    if (i > 0 && samples_[i].start <= samples_[i - 1].start)
      throw std::invalid_argument("bandwidth sample times must be strictly increasing");
  }
}

BandwidthModel BandwidthModel::constant(Kbps throughput) {
  return BandwidthModel({{0, throughput}});
}

Kbps BandwidthModel::throughput_at(Millis t) const {
  auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](Millis v, const BandwidthSample& s) { return v < s.start; });
  if (it == samples_.begin()) return samples_.front().throughput;
  return std::prev(it)->throughput;
}

void Weights::validate() const {
  for (double w : {quality, variation, stall, bandwidth}) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("weights must be finite and non-negative");
  }
}

std::string to_string(const Plan& plan) {
  std::string out = "[";
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    if (i) out += ' ';
    out += to_string(plan.steps[i].chunk) + "/" + std::to_string(plan.steps[i].variant);
  }
  return out + "]";
}

bool contains(const Feed& feed, ChunkId id) {
  return id.video >= 0 && id.video < static_cast<int>(feed.size()) && id.chunk >= 0 &&
         id.chunk < static_cast<int>(feed[id.video].chunks.size());
}

const Chunk& chunk_at(const Feed& feed, ChunkId id) {
  if (!contains(feed, id)) throw std::out_of_range("chunk " + to_string(id) + " is not in the feed");
  return feed[id.video].chunks[id.chunk];
}

std::optional<ChunkId> next_in_playback(const Feed& feed, ChunkId id) {
  ChunkId next{id.video, id.chunk + 1};
  while (next.video < static_cast<int>(feed.size())) {
    if (next.chunk < static_cast<int>(feed[next.video].chunks.size())) return next;
    next = {next.video + 1, 0};
  }
  return std::nullopt;
}

std::vector<ChunkId> playback_order(const Feed& feed) {
  if (feed.empty()) throw EmptyFeed();
  std::vector<ChunkId> order;
  for (int v = 0; v < static_cast<int>(feed.size()); ++v)
    for (int c = 0; c < static_cast<int>(feed[v].chunks.size()); ++c) order.push_back({v, c});
  return order;
}

std::vector<std::string> validate_manifest(const VideoManifest& manifest) {
  std::vector<std::string> out;
  if (manifest.video_id.empty()) out.emplace_back("empty video id");
  for (std::size_t i = 0; i < manifest.chunks.size(); ++i) {
    const Chunk& chunk = manifest.chunks[i];
    const std::string where = manifest.video_id + " chunk " + std::to_string(i) + ": ";
    if (chunk.id.chunk != static_cast<int>(i)) out.push_back(where + "chunk ids not contiguous");
    if (chunk.playout <= 0) out.push_back(where + "non-positive playout duration");
    if (chunk.variants.empty()) {
      out.push_back(where + "empty variants");
      continue;
    }
    int prompts = 0;
    std::vector<int> bitrates;
    for (const auto& v : chunk.variants) {
      if (v.codec.is_prompt()) {
        ++prompts;
      } else {
        if (v.codec.bitrate_kbps <= 0) out.push_back(where + "non-positive bitrate");
        bitrates.push_back(v.codec.bitrate_kbps);
      }
      if (v.size <= 0) out.push_back(where + "non-positive size");
      if (!(v.quality >= 0.0 && v.quality <= 1.0)) out.push_back(where + "quality outside [0,1]");
      if (v.decode_latency < 0) out.push_back(where + "negative decode latency");
      if (v.decode_unit != route(v.codec)) out.push_back(where + "decode unit does not match codec");
    }
    if (prompts > 1) out.push_back(where + "duplicate prompt variant");
    if (std::set<int>(bitrates.begin(), bitrates.end()).size() != bitrates.size())
      out.push_back(where + "duplicate bitrate");
    else if (!std::is_sorted(bitrates.begin(), bitrates.end()))
      out.push_back(where + "bitrates not ascending");
  }
  return out;
}

void validate_plan(const Plan& plan, const Feed& feed) {
  std::set<ChunkId> seen;
  for (const auto& step : plan.steps) {
    if (!contains(feed, step.chunk)) throw InvalidPlan("plan references unknown chunk " + to_string(step.chunk));
    const Chunk& chunk = chunk_at(feed, step.chunk);
    if (step.variant < 0 || step.variant >= static_cast<int>(chunk.variants.size()))
      throw InvalidPlan("invalid variant index " + std::to_string(step.variant) + " for chunk " +
                        to_string(step.chunk));
    if (!seen.insert(step.chunk).second) throw InvalidPlan("chunk " + to_string(step.chunk) + " planned twice");
  }
}

int lowest_pixel_variant(const Chunk& chunk) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(chunk.variants.size()); ++i) {
    const auto& v = chunk.variants[i];
    if (v.codec.is_prompt()) continue;
    if (best < 0 || v.codec.bitrate_kbps < chunk.variants[best].codec.bitrate_kbps) best = i;
  }
  return best < 0 ? 0 : best;
}

}  // namespace vidpreload
