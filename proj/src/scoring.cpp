#include "vidpreload/scoring.hpp"

#include <cmath>

namespace vidpreload {

double chunk_score(const ChunkMetrics& m, const Weights& w) {
  return w.quality * m.quality - w.variation * m.variation - w.stall * stall_seconds(m.stall) -
         w.bandwidth * megabits(m.bandwidth);
}

ChunkMetrics metrics_of(const ChunkTiming& t) {
  ChunkMetrics m;
  m.quality = t.quality;
  m.variation = t.prev_quality ? std::abs(t.quality - *t.prev_quality) : 0.0;
  m.stall = t.stall;
  m.bandwidth = t.size;
  return m;
}

double plan_utility(const ScheduleResult& schedule, const Weights& w) {
  double total = 0.0;
  for (const auto& t : schedule.timings) total += chunk_score(metrics_of(t), w);
  return total;
}

}  // namespace vidpreload
