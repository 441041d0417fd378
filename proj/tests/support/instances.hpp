#pragma once

// Planning instances shared by the unit tests, the acceptance binary and
// the offline optimum search.

#include <cstdint>
#include <random>
#include <string>

#include "vidpreload/planner.hpp"
#include "vidpreload/traceio.hpp"

namespace vidpreload::testing {

/// Two codecs for one 1000 ms chunk: pixel takes 700 ms to download at
/// 1000 kbps and decodes instantly, prompt takes 200 ms and 1500 ms.
inline std::vector<ChunkVariant> toy_variants() {
  ChunkVariant pixel{Codec::pixel(700), 87'500, 0.5, 0, Unit::VideoDecoder};
  ChunkVariant prompt{Codec::prompt(), 25'000, 0.5, 1500, Unit::NeuralAccel};
  return {pixel, prompt};
}
inline constexpr int kToyPixel = 0;
inline constexpr int kToyPrompt = 1;
inline constexpr Millis kToyStartup = 1000;
inline constexpr Millis kToyWindow = 7000;
inline constexpr Kbps kToyBandwidth = 1000;

inline Feed toy_feed(int chunks = 8) {
  VideoManifest m;
  m.video_id = "toy";
  for (int c = 0; c < chunks; ++c) m.chunks.push_back({{0, c}, 1000, toy_variants()});
  return {m};
}

/// Score that only rewards prompt chunks and punishes stall.
inline Weights toy_weights() { return {0.0, 0.0, 10.0, 1.0}; }

inline PlanningProblem toy_problem(const Feed& feed) {
  PlanningProblem p;
  p.feed = &feed;
  p.bandwidth = BandwidthModel::constant(kToyBandwidth);
  p.state = PlaybackState::session_start(kToyStartup);
  p.weights = toy_weights();
  p.candidates = playback_order(feed);
  return p;
}

/// Seven one-second chunks with the default ladder (five pixel rungs and a
/// prompt encoding) at a constant 800 kbps.
inline constexpr Kbps kWideBandwidth = 800;
inline constexpr Millis kWideStartup = 1000;

inline Feed wide_feed() {
  VideoManifest m;
  m.video_id = "wide";
  const auto variants = make_variants(default_profiles(), 1000);
  for (int c = 0; c < 7; ++c) m.chunks.push_back({{0, c}, 1000, variants});
  return {m};
}

inline Weights wide_weights() { return {1.0, 1.0, 3.0, 0.05}; }

inline PlanningProblem wide_problem(const Feed& feed) {
  PlanningProblem p;
  p.feed = &feed;
  p.bandwidth = BandwidthModel::constant(kWideBandwidth);
  p.state = PlaybackState::session_start(kWideStartup);
  p.weights = wide_weights();
  p.candidates = playback_order(feed);
  return p;
}

/// Random single-video instance: `horizon` chunks, `variants` variants each
/// (the prompt encoding plus the highest pixel rungs when variants > 1),
/// chunk sizes jittered, bandwidth drawn from several patterns.
struct RandomInstance {
  Feed feed;
  PlanningProblem problem;
};

inline RandomInstance random_instance(std::uint64_t seed, int horizon, int variants) {
  std::mt19937_64 rng(seed * 7919 + 17);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  DefaultProfiles profiles = default_profiles();
  VideoManifest m;
  m.video_id = "r" + std::to_string(seed);
  for (int c = 0; c < horizon; ++c) {
    const Millis playout = 500 + static_cast<Millis>(rng() % 3) * 500;
    auto all = make_variants(profiles, playout, uniform(0.6, 1.6));
    std::vector<ChunkVariant> picked;
    // random subset of pixel rungs (ascending) plus, usually, the prompt
    std::vector<int> pixel_idx{0, 1, 2, 3, 4};
    std::shuffle(pixel_idx.begin(), pixel_idx.end(), rng);
    const bool with_prompt = variants > 1 && rng() % 5 != 0;
    const int pixels = variants - (with_prompt ? 1 : 0);
    pixel_idx.resize(static_cast<std::size_t>(pixels));
    std::sort(pixel_idx.begin(), pixel_idx.end());
    for (int i : pixel_idx) picked.push_back(all[static_cast<std::size_t>(i)]);
    if (with_prompt) {
      ChunkVariant p = all.back();
      p.decode_latency = static_cast<Millis>(uniform(0.3, 1.6) * static_cast<double>(playout));
      picked.push_back(p);
    }
    m.chunks.push_back({{0, c}, playout, picked});
  }

  RandomInstance r;
  r.feed = {m};
  const BandwidthPattern patterns[] = {
      BandwidthPattern::constant(static_cast<Kbps>(uniform(300, 2000))),
      BandwidthPattern::square(static_cast<Kbps>(uniform(200, 600)), static_cast<Kbps>(uniform(800, 2500)), 700, 20000),
      BandwidthPattern::sawtooth(static_cast<Kbps>(uniform(200, 600)), static_cast<Kbps>(uniform(800, 2500)), 2000, 20000),
      BandwidthPattern::random_walk(200, 2500, 400, 250, 20000),
  };
  const BandwidthModel bw = gen_synthetic_bandwidth(seed, patterns[rng() % 4]);

  r.problem.feed = &r.feed;
  r.problem.bandwidth = bw;
  r.problem.state = PlaybackState::session_start(static_cast<Millis>(rng() % 1500));
  r.problem.weights = Weights{uniform(0.5, 2.0), uniform(0.0, 2.0), uniform(1.0, 6.0), uniform(0.0, 1.0)};
  r.problem.candidates = playback_order(r.feed);
  return r;
}

}  // namespace vidpreload::testing
