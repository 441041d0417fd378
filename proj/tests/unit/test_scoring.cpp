#include "doctest.h"
#include "vidpreload/scoring.hpp"

using namespace vidpreload;

namespace {

ChunkTiming timing(double q, std::optional<double> prev, Millis stall, Bytes size) {
  ChunkTiming t;
  t.quality = q;
  t.prev_quality = prev;
  t.stall = stall;
  t.size = size;
  return t;
}

}  // namespace

TEST_SUITE("scoring") {

TEST_CASE("chunk score is a weighted sum") {
  CHECK(chunk_score({}, Weights{3, 2, 5, 7}) == 0.0);
  CHECK(chunk_score({0.6, 0.1, 500, 0}, Weights{1, 1, 1, 0}) == doctest::Approx(0.0));
  // 1 Mbit
  CHECK(chunk_score({0, 0, 0, 125'000}, Weights{0, 0, 0, 2}) == doctest::Approx(-2.0));
  CHECK(stall_seconds(1500) == 1.5);
  CHECK(megabits(125'000) == 1.0);
}

TEST_CASE("a cheap prompt beats a slightly better pixel chunk when bytes cost") {
  const Weights w{1, 1, 3, 5};
  CHECK(chunk_score({0.541, 0, 0, 8'800}, w) > chunk_score({0.546, 0, 0, 27'700}, w));
  CHECK(chunk_score({0.541, 0, 0, 8'800}, Weights{1, 1, 3, 0}) < chunk_score({0.546, 0, 0, 27'700}, Weights{1, 1, 3, 0}));
}

TEST_CASE("variation is zero without a predecessor") {
  CHECK(metrics_of(timing(0.7, std::nullopt, 0, 0)).variation == 0.0);
  CHECK(metrics_of(timing(0.7, 0.4, 0, 0)).variation == doctest::Approx(0.3));
  CHECK(metrics_of(timing(0.4, 0.7, 0, 0)).variation == doctest::Approx(0.3));
}

TEST_CASE("plan utility") {
  CHECK(plan_utility({}, Weights{}) == 0.0);

  ScheduleResult two;
  two.timings = {timing(0.5, std::nullopt, 0, 0), timing(0.5, 0.5, 0, 0)};
  CHECK(plan_utility(two, Weights{1, 1, 1, 1}) == doctest::Approx(1.0));

  // worked by hand: 0.3 - 0.8 + 0.4
  ScheduleResult three;
  three.timings = {timing(0.8, std::nullopt, 0, 125'000), timing(0.6, 0.8, 250, 62'500), timing(0.7, 0.6, 0, 25'000)};
  const Weights w{1, 2, 3, 0.5};
  CHECK(plan_utility(three, w) == doctest::Approx(-0.1));

  // linear in the weights
  CHECK(plan_utility(three, w.scaled(2.5)) == doctest::Approx(2.5 * plan_utility(three, w)));

  // more stall, less utility
  ScheduleResult worse = three;
  worse.timings[2].stall += 1;
  CHECK(plan_utility(worse, w) < plan_utility(three, w));
}

}
