#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quadrl/arpo.hpp"
#include "quadrl/policy.hpp"
#include "quadrl/tokenizer.hpp"

namespace quadrl {

// ---------------------------------------------------------------------------
// Schedule

/// Counts of S_1, S_2 and sigma are in groups.
struct ScheduleConfig {
  std::size_t n1 = 2000;
  std::size_t n2 = 100;
  std::size_t t = 4;
  std::size_t b = 2;
  std::size_t s1 = 2000;
  std::size_t s2 = 100;
  std::size_t sigma = 50;
  double sigma_min = 8.0;
  double sigma_max = 64.0;
  double equality_tolerance = 1e-9;
  bool relax_equality = false;
};

struct ScheduleClause {
  std::string name;
  bool satisfied = false;
  std::string detail;
};

struct ScheduleReport {
  double steady_ratio = 0.0;    // N_2 T B / S_2
  double prestart_ratio = 0.0;  // N_1 T B / S_1
  std::vector<ScheduleClause> clauses;

  bool valid() const;
  std::vector<std::string> violations() const;
};

ScheduleReport validate_schedule(const ScheduleConfig& cfg);

// ---------------------------------------------------------------------------
// Samples and the replay buffer

struct RolloutSample {
  std::size_t condition = 0;
  std::shared_ptr<const std::vector<Token>> sequence;  // full generated sequence
  Window window;
  double reward = 0.0;
  double advantage = 0.0;
  std::uint64_t version = 0;
  std::uint64_t group_id = 0;

  std::span<const Token> window_tokens() const;
};

/// K samples that share a condition, a version and a truncation offset.
struct SampleGroup {
  std::uint64_t version = 0;
  std::size_t condition = 0;
  std::uint64_t ticket = 0;  // rollout iteration that produced the group
  std::uint64_t group_id = 0;
  std::vector<RolloutSample> samples;
};

/// Throws InvalidArgument when samples disagree on condition, version or
/// group id, a window leaves its sequence, or a reward is not finite.
void validate_group(const SampleGroup& group);

enum class PushResult { Stored, StoredWithEviction, Dropped };

/// Versioned group store shared by producers and consumers.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  /// Groups older than the discard watermark are dropped and counted. At
  /// capacity the earliest group of the oldest version is evicted.
  PushResult push(SampleGroup group);

  /// Distinct groups of exactly `version`, restricted to tickets below
  /// `ticket_limit` when given. Deterministic for a given seed and content.
  /// Throws InsufficientData when fewer than `count` groups qualify.
  std::vector<SampleGroup> sample(std::uint64_t version, std::size_t count, std::uint64_t seed,
                                  std::optional<std::uint64_t> ticket_limit = std::nullopt) const;

  /// Blocks until at least `groups` qualifying groups are present. Returns
  /// false on timeout or when `stop` becomes true.
  bool wait_for(std::uint64_t version, std::size_t groups, std::optional<std::uint64_t> ticket_limit,
                std::chrono::milliseconds timeout, const std::atomic<bool>* stop = nullptr) const;

  /// Removes groups with version < keep_version and raises the watermark.
  std::size_t discard(std::uint64_t keep_version);

  std::size_t size() const;
  std::size_t count(std::uint64_t version, std::optional<std::uint64_t> ticket_limit = std::nullopt) const;
  std::size_t capacity() const { return capacity_; }
  std::uint64_t watermark() const;
  std::size_t dropped() const;
  std::size_t evicted() const;
  /// Smallest and largest stored version; nullopt when empty.
  std::optional<std::pair<std::uint64_t, std::uint64_t>> version_range() const;

 private:
  std::size_t count_locked(std::uint64_t version, std::optional<std::uint64_t> ticket_limit) const;

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::map<std::uint64_t, std::vector<SampleGroup>> groups_;
  std::size_t size_ = 0;
  std::size_t capacity_;
  std::uint64_t watermark_ = 0;
  std::size_t dropped_ = 0;
  std::size_t evicted_ = 0;
};

// ---------------------------------------------------------------------------
// Policy store

/// Immutable, versioned policy snapshots. Optionally mirrors every published
/// snapshot to `<directory>/policy_v<N>.qpol`.
class PolicyStore {
 public:
  explicit PolicyStore(std::optional<std::filesystem::path> directory = std::nullopt);

  /// Versions must strictly increase; throws InvalidArgument otherwise.
  void publish(ToyPolicy policy);

  std::shared_ptr<const ToyPolicy> latest() const;
  std::shared_ptr<const ToyPolicy> get(std::uint64_t version) const;
  std::vector<std::uint64_t> versions() const;

  /// Blocks until a version newer than `version` exists.
  bool wait_newer(std::uint64_t version, std::chrono::milliseconds timeout, const std::atomic<bool>* stop) const;

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::map<std::uint64_t, std::shared_ptr<const ToyPolicy>> snapshots_;
  std::optional<std::filesystem::path> directory_;
};

// ---------------------------------------------------------------------------
// Workers

/// Hands out rollout tickets 0, 1, ... per policy version up to a quota.
class TicketBoard {
 public:
  explicit TicketBoard(std::function<std::uint64_t(std::uint64_t version)> quota);

  std::optional<std::uint64_t> claim(std::uint64_t version);

 private:
  std::mutex mu_;
  std::function<std::uint64_t(std::uint64_t)> quota_;
  std::map<std::uint64_t, std::uint64_t> next_;
};

/// Produces the groups of one rollout ticket under a fixed policy snapshot.
using RolloutGenerator = std::function<std::vector<SampleGroup>(const ToyPolicy& policy, std::uint64_t ticket)>;

struct RolloutStats {
  std::atomic<std::size_t> tickets{0};
  std::atomic<std::size_t> groups{0};
  std::atomic<std::size_t> dropped{0};
  std::atomic<std::size_t> failures{0};
};

/// Fetches the latest snapshot before each ticket, generates, tags every
/// group with the snapshot's version and pushes. Returns when `stop` is set
/// (after any in-flight ticket). Generator exceptions are counted, not
/// propagated.
void rollout_worker_loop(const PolicyStore& store, ReplayBuffer& buffer, TicketBoard& board,
                         const RolloutGenerator& generate, const std::atomic<bool>& stop, RolloutStats* stats = nullptr);

/// Adds the batch gradient into `grad` and returns the batch loss.
using BatchLoss = std::function<double(std::span<const SampleGroup> batch, const ToyPolicy& policy,
                                       std::span<double> grad)>;

struct TrainerConfig {
  ScheduleConfig schedule;
  std::size_t groups_per_ticket = 4;
  std::size_t checkpoints = 5;  // trained checkpoints to publish before returning
  double learning_rate = 1.0;
  std::uint64_t seed = 0;
  std::chrono::milliseconds starvation_timeout{120000};
};

/// Rollout tickets needed to cover `groups` groups.
std::uint64_t tickets_for_groups(std::size_t groups, std::size_t groups_per_ticket);

/// Ticket quota of a policy version: S_1 groups for version 0, S_2 after.
std::uint64_t ticket_quota(const TrainerConfig& cfg, std::uint64_t version);

/// Tickets that must be complete before steady-state step `step` samples.
std::uint64_t tickets_needed(const TrainerConfig& cfg, std::size_t step);

struct TrainerStep {
  std::uint64_t producing_version = 0;
  std::size_t step = 0;
  std::vector<std::uint64_t> consumed_versions;
  std::size_t groups = 0;
  double loss = 0.0;
};

struct TrainerLog {
  std::vector<TrainerStep> steps;
  std::vector<std::uint64_t> checkpoints;
};

/// Pre-start: waits for the full version-0 quota, runs N_1 steps, publishes
/// version 1 and discards version 0. Then, for each further version V, runs
/// N_2 steps on version V-1 data, publishes V and discards below V. Each
/// step samples T*B groups. Throws InvalidArgument when the schedule fails
/// validate_schedule and StarvationTimeout when data does not
/// arrive in time.
TrainerLog trainer_loop(PolicyStore& store, ReplayBuffer& buffer, const BatchLoss& loss, const TrainerConfig& cfg,
                        const std::atomic<bool>* stop = nullptr);

/// Truncated ARPO over a batch of groups: mean loss, gradient of the mean.
BatchLoss arpo_batch_loss(std::shared_ptr<const ToyPolicy> reference, ArpoConfig cfg);

struct AsyncRunResult {
  TrainerLog log;
  std::size_t rollout_tickets = 0;
  std::size_t rollout_failures = 0;
  std::size_t dropped_groups = 0;
  std::size_t evicted_groups = 0;
};

/// Starts `workers` rollout threads and runs the trainer on the calling
/// thread. `initial` must carry version 0.
AsyncRunResult run_async(PolicyStore& store, const ToyPolicy& initial, const RolloutGenerator& generate,
                         const BatchLoss& loss, const TrainerConfig& cfg, std::size_t workers);

}  // namespace quadrl
