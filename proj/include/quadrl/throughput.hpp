#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace quadrl {

/// Rollout durations in virtual seconds: lognormal with the given mean and
/// coefficient of variation; cv == 0 gives constant durations.
struct LengthDistribution {
  double mean = 1.0;
  double cv = 1.0;
};

enum class SimMode { Sync, Async };

std::string_view to_string(SimMode mode);

struct ThroughputConfig {
  std::size_t workers = 16;
  std::size_t batch = 0;            // samples per update; 0 means one per worker
  double update_time = 0.02;        // virtual seconds per trainer update
  std::size_t buffer_capacity = 0;  // async only; 0 means 4 batches
  double duration = 3600.0;         // virtual seconds
  LengthDistribution lengths;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ThroughputResult {
  SimMode mode = SimMode::Sync;
  double utilization = 0.0;  // rollout-worker busy fraction
  double samples_per_second = 0.0;
  double samples_per_hour = 0.0;
  std::size_t samples = 0;  // consumed by the trainer
  std::size_t updates = 0;
  double virtual_time = 0.0;
};

/// Discrete-event simulation on a virtual clock. Sync: every round starts
/// all workers together, waits for the slowest, then runs one update while
/// workers idle. Async: workers stream into a bounded buffer (blocking when
/// full) and the trainer updates whenever a batch is available.
ThroughputResult simulate_throughput(SimMode mode, const ThroughputConfig& cfg);

struct ThroughputComparison {
  ThroughputResult sync;
  ThroughputResult async;
  double speedup = 0.0;  // async / sync samples per second
};

ThroughputComparison compare_throughput(const ThroughputConfig& cfg);

}  // namespace quadrl
