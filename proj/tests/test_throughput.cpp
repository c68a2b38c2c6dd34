#include <gtest/gtest.h>

#include "quadrl/error.hpp"
#include "quadrl/throughput.hpp"

using namespace quadrl;

namespace {

ThroughputConfig base(double cv, std::size_t workers = 16) {
  ThroughputConfig cfg;
  cfg.workers = workers;
  cfg.lengths = {1.0, cv};
  cfg.duration = 2000.0;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST(Throughput, ConstantLengthsMatch) {
  const auto c = compare_throughput(base(0.0));
  EXPECT_GE(c.speedup, 0.95);
  EXPECT_LE(c.speedup, 1.05);
  // Sync rounds last exactly one rollout plus one update.
  EXPECT_NEAR(c.sync.samples_per_second, 16.0 / 1.02, 0.05);
  EXPECT_NEAR(c.sync.utilization, 1.0 / 1.02, 1e-2);
  EXPECT_NEAR(c.async.utilization, 1.0, 1e-2);
}

TEST(Throughput, HeavyTailFavoursAsync) {
  const auto c = compare_throughput(base(1.0));
  EXPECT_GE(c.speedup, 2.0);
  EXPECT_LT(c.sync.utilization, 0.5);
}

TEST(Throughput, SpeedupMonotoneInVariance) {
  double prev = 0.0;
  for (double cv : {0.0, 0.5, 1.0, 2.0}) {
    const double s = compare_throughput(base(cv)).speedup;
    EXPECT_GE(s, prev) << "cv " << cv;
    prev = s;
  }
}

TEST(Throughput, SingleWorkerHasNoStragglers) {
  const auto c = compare_throughput(base(1.0, 1));
  EXPECT_NEAR(c.speedup, 1.0, 0.05);
}

TEST(Throughput, Deterministic) {
  const auto a = compare_throughput(base(1.5));
  const auto b = compare_throughput(base(1.5));
  EXPECT_EQ(a.sync.samples, b.sync.samples);
  EXPECT_EQ(a.async.samples, b.async.samples);
  EXPECT_EQ(a.speedup, b.speedup);
}

TEST(Throughput, SlowTrainerThrottlesAsyncWorkers) {
  auto cfg = base(0.0, 4);
  cfg.update_time = 4.0;  // four rollouts per second arrive, one batch per four seconds is consumed
  const auto r = simulate_throughput(SimMode::Async, cfg);
  EXPECT_NEAR(r.samples_per_second, 1.0, 0.05);
  EXPECT_LT(r.utilization, 0.5);
}

TEST(Throughput, RejectsBadConfig) {
  auto cfg = base(1.0);
  cfg.workers = 0;
  EXPECT_THROW(simulate_throughput(SimMode::Sync, cfg), Error);
  cfg = base(-1.0);
  EXPECT_THROW(simulate_throughput(SimMode::Async, cfg), Error);
  cfg = base(1.0);
  cfg.buffer_capacity = 2;
  EXPECT_THROW(simulate_throughput(SimMode::Async, cfg), Error);
}
