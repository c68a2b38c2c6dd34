#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quadrl/async.hpp"
#include "quadrl/policy.hpp"
#include "quadrl/rewards.hpp"

namespace quadrl {

/// A conditioning shape and the token sequence that reproduces it.
struct ToyCondition {
  std::string name;
  QuantizedMesh target;        // canonical
  std::vector<Token> tokens;   // tokenize(target)
  Mesh mesh;                   // target on the unit cube
  std::vector<Vec3> points;    // surface samples of `mesh`
};

/// Names accepted by toy_shape: cube, slab (2x1x1 lattice), tower (1x1x3),
/// block (2x2x1).
std::vector<std::string> toy_shape_names();
Mesh toy_shape(std::string_view name);

ToyCondition make_toy_condition(std::string_view name, int bits, std::size_t points, std::uint64_t seed);

struct ToyTaskConfig {
  std::vector<std::string> shapes{"cube", "slab"};
  int bits = 3;
  std::size_t cloud_points = 16384;
  std::size_t group_size = 4;   // K
  std::size_t truncations = 4;  // windows per generated sequence
  std::size_t window = 48;      // tokens, a multiple of 12
  RewardConfig reward{.hd_samples = 16384};
  std::size_t pretrain_steps = 60;
  double pretrain_lr = 2.0;
  std::size_t eval_samples = 128;  // per condition
  std::uint64_t seed = 0;

  void validate() const;
};

struct ToyEval {
  double mean_reward = 0.0;
  double gate_pass_rate = 0.0;
  double mean_rings = 0.0;
  double mean_lines = 0.0;
  std::size_t samples = 0;
};

/// Procedural-mesh generation task scored by the real reward stack.
class ToyTask {
 public:
  explicit ToyTask(ToyTaskConfig cfg);

  const ToyTaskConfig& config() const { return cfg_; }
  const std::vector<ToyCondition>& conditions() const { return conditions_; }
  std::size_t sequence_length(std::size_t condition) const { return conditions_.at(condition).tokens.size(); }

  /// Uniform order-1 policy over the task vocabulary, version 0.
  ToyPolicy blank_policy() const;

  /// Maximum-likelihood steps on the target sequences.
  ToyPolicy pretrain(ToyPolicy policy) const;

  /// Full-mesh reward of a generated sequence (permissive decoding).
  RewardReport score(std::size_t condition, std::span<const Token> tokens) const;

  /// Reward restricted to the faces decoded from tokens [m, m + w).
  RewardReport score_window(std::size_t condition, std::span<const Token> tokens, const Window& window) const;

  /// One rollout ticket: K sequences for condition ticket mod C, each
  /// truncated at the same random face-aligned offsets; one group per offset.
  std::vector<SampleGroup> generate(const ToyPolicy& policy, std::uint64_t ticket) const;

  /// Mean full reward and gate pass rate over fixed-seed samples.
  ToyEval evaluate(const ToyPolicy& policy) const;

  std::size_t cached_sequences() const;

 private:
  struct Scored {
    Mesh mesh;
    RewardContext context;
    std::vector<std::size_t> faces_before;  // faces decoded from blocks [0, b)
    bool failed = false;
  };

  std::shared_ptr<const Scored> scored(std::size_t condition, std::span<const Token> tokens) const;

  ToyTaskConfig cfg_;
  std::vector<ToyCondition> conditions_;
  mutable std::mutex cache_mu_;
  mutable std::map<std::pair<std::size_t, std::vector<Token>>, std::shared_ptr<const Scored>> cache_;
};

struct ToyRunConfig {
  ToyTaskConfig task;
  TrainerConfig trainer;
  ArpoConfig arpo;
  std::size_t workers = 2;
  std::optional<std::filesystem::path> checkpoint_dir;
};

/// Two conditions (cube, slab), K = 4, four windows of 48 tokens, five
/// checkpoints with N_1 = 40, N_2 = 20, T = 1, B = 16, S_1 = 64, S_2 = 32,
/// sigma = 16, learning rate 20 and two rollout workers.
ToyRunConfig default_toy_run();

struct CheckpointMetrics {
  std::uint64_t version = 0;
  ToyEval eval;
};

struct ToyRunResult {
  std::vector<CheckpointMetrics> checkpoints;  // version 0 (reference) first
  AsyncRunResult run;
  /// Every trainer step producing version V consumed only version V-1 data.
  bool version_consistent = false;
  double seconds = 0.0;
};

/// Pretrains the reference, runs the asynchronous ARPO harness and
/// evaluates every published checkpoint.
ToyRunResult run_toy(const ToyRunConfig& cfg);

}  // namespace quadrl
