#include <cmath>

#include "doctest.h"
#include "otta/buffer.hpp"
#include "test_support.hpp"

using namespace otta;

namespace {

Trial make_trial(uint64_t id, double fill = 0.0) {
  Trial t;
  t.data = Matrix(2, 4, fill);
  t.trial_id = id;
  return t;
}

}  // namespace

TEST_CASE("push: FIFO eviction at capacity") {
  RingBuffer buf(2, WeightScheme::uniform);
  buf.push(make_trial(1, 1.0));
  buf.push(make_trial(2, 2.0));
  buf.push(make_trial(3, 3.0));
  REQUIRE(buf.size() == 2);
  CHECK(buf.at(0).trial_id == 2);
  CHECK(buf.at(1).trial_id == 3);
}

TEST_CASE("push into empty buffer") {
  RingBuffer buf(4, WeightScheme::uniform);
  buf.push(make_trial(1));
  REQUIRE(buf.size() == 1);
  CHECK(buf.newest().trial_id == 1);
}

TEST_CASE("40 pushes into capacity 32 leaves ids 9..40") {
  // simulate the FIFO independently and compare
  RingBuffer buf(32, WeightScheme::uniform);
  std::vector<uint64_t> sim;
  for (uint64_t id = 1; id <= 40; ++id) {
    buf.push(make_trial(id));
    sim.push_back(id);
    if (sim.size() > 32) sim.erase(sim.begin());
  }
  REQUIRE(buf.size() == 32);
  for (int i = 0; i < 32; ++i) CHECK(buf.at(i).trial_id == sim[i]);
  CHECK(buf.at(0).trial_id == 9);
  CHECK(buf.at(31).trial_id == 40);
}

TEST_CASE("push rejects dimension mismatch and stale ids") {
  RingBuffer buf(4, WeightScheme::uniform);
  buf.push(make_trial(5));
  Trial wrong;
  wrong.data = Matrix(3, 4);
  wrong.trial_id = 6;
  CHECK_THROWS_AS(buf.push(std::move(wrong)), DimensionError);
  CHECK_THROWS_AS(buf.push(make_trial(5)), DimensionError);

  Trial inf_trial = make_trial(7);
  inf_trial.data(0, 0) = INFINITY;
  CHECK_THROWS_AS(buf.push(std::move(inf_trial)), NumericError);
}

TEST_CASE("uniform weights") {
  RingBuffer buf(8, WeightScheme::uniform);
  for (uint64_t i = 1; i <= 4; ++i) buf.push(make_trial(i));
  auto w = buf.weights();
  REQUIRE(w.size() == 4);
  for (double x : w) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("linear weights are proportional to recency index") {
  RingBuffer buf(8, WeightScheme::linear);
  for (uint64_t i = 1; i <= 3; ++i) buf.push(make_trial(i));
  auto w = buf.weights();
  CHECK(w[0] == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(2.0 / 6).epsilon(1e-15));
  CHECK(w[2] == doctest::Approx(3.0 / 6).epsilon(1e-15));
}

TEST_CASE("ema weights match the recursive unrolling") {
  // running mean R <- 0.9 R + 0.1 C_i unrolled over a 3-slot window gives
  // raw weights (0.081, 0.09, 0.1), renormalized
  RingBuffer buf(8, WeightScheme::ema, 0.1);
  for (uint64_t i = 1; i <= 3; ++i) buf.push(make_trial(i));
  auto w = buf.weights();

  double raw[3] = {0.1 * 0.9 * 0.9, 0.1 * 0.9, 0.1};
  double sum = raw[0] + raw[1] + raw[2];
  for (int i = 0; i < 3; ++i)
    CHECK(w[i] == doctest::Approx(raw[i] / sum).epsilon(1e-12));

  double total = 0.0;
  for (double x : w) total += x;
  CHECK(std::abs(total - 1.0) <= 1e-12);
  // newest/oldest ratio is (1/0.9)^2
  CHECK(w[2] / w[0] == doctest::Approx(1.0 / (0.9 * 0.9)).epsilon(1e-12));
}

TEST_CASE("weights sum to 1 and stay nonnegative for every scheme and fill level") {
  for (WeightScheme scheme :
       {WeightScheme::uniform, WeightScheme::linear, WeightScheme::ema}) {
    RingBuffer buf(16, scheme, 0.1);
    for (uint64_t i = 1; i <= 24; ++i) {
      buf.push(make_trial(i));
      auto w = buf.weights();
      double sum = 0.0;
      for (double x : w) {
        CHECK(x >= 0.0);
        sum += x;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      if (scheme == WeightScheme::ema)
        for (size_t j = 1; j < w.size(); ++j)
          CHECK(w[j] / w[j - 1] == doctest::Approx(1.0 / 0.9).epsilon(1e-10));
    }
    CHECK(buf.size() == 16);
  }
}

TEST_CASE("weights on an empty buffer is an error") {
  RingBuffer buf(4, WeightScheme::uniform);
  CHECK_THROWS_AS(buf.weights(), DimensionError);
}

TEST_CASE("constructor validates capacity and momentum") {
  CHECK_THROWS_AS(RingBuffer(0, WeightScheme::uniform), DimensionError);
  CHECK_THROWS_AS(RingBuffer(4, WeightScheme::ema, 0.0), NumericError);
  CHECK_THROWS_AS(RingBuffer(4, WeightScheme::ema, 1.0), NumericError);
}
