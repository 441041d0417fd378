#pragma once

#include "vidpreload/model.hpp"
#include "vidpreload/timeline.hpp"

namespace vidpreload {

struct ChunkMetrics {
  double quality = 0.0;
  double variation = 0.0;  // |q_i - q_{i-1}|, 0 for the first chunk of a video
  Millis stall = 0;
  Bytes bandwidth = 0;
};

/// Stall enters the score in seconds and bandwidth in megabits.
inline double stall_seconds(Millis stall) { return static_cast<double>(stall) / 1000.0; }
inline double megabits(Bytes bytes) { return static_cast<double>(bytes) * 8.0 / 1e6; }

/// w_quality*q - w_variation*v - w_stall*stall_s - w_bandwidth*Mbit
double chunk_score(const ChunkMetrics& m, const Weights& w);

ChunkMetrics metrics_of(const ChunkTiming& timing);

/// Sum of chunk scores over the scheduled chunks.
double plan_utility(const ScheduleResult& schedule, const Weights& w);

}  // namespace vidpreload
