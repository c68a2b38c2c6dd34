#include "quadrl/toy_task.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <set>

#include "quadrl/error.hpp"
#include "quadrl/geometry.hpp"
#include "quadrl/random.hpp"
#include "quadrl/shapes.hpp"

namespace quadrl {

std::vector<std::string> toy_shape_names() { return {"cube", "slab", "tower", "block"}; }

Mesh toy_shape(std::string_view name) {
  if (name == "cube") return shapes::box();
  if (name == "slab") return shapes::lattice_box(2, 1, 1);
  if (name == "tower") return shapes::lattice_box(1, 1, 3);
  if (name == "block") return shapes::lattice_box(2, 2, 1);
  throw Error(ErrorCode::InvalidArgument, "unknown toy shape '" + std::string(name) + "'");
}

ToyCondition make_toy_condition(std::string_view name, int bits, std::size_t points, std::uint64_t seed) {
  ToyCondition c;
  c.name = std::string(name);
  const auto q = quantize_vertices(normalize_mesh(toy_shape(name)), bits);
  c.target = canonicalize(q.mesh).mesh;
  c.tokens = tokenize(c.target).tokens;
  c.mesh = dequantize_unit(c.target);
  c.points = sample_surface_points(c.mesh, points, seed);
  return c;
}

void ToyTaskConfig::validate() const {
  reward.validate();
  if (shapes.empty()) throw Error(ErrorCode::InvalidArgument, "toy task needs at least one shape");
  if (bits < 1 || bits > 10) throw Error(ErrorCode::InvalidArgument, "bits must be in [1, 10]");
  if (group_size < 2) throw Error(ErrorCode::InvalidArgument, "group size must be >= 2");
  if (truncations < 1) throw Error(ErrorCode::InvalidArgument, "truncations must be >= 1");
  if (window < kTokensPerFace || window % kTokensPerFace != 0)
    throw Error(ErrorCode::InvalidArgument, "window must be a positive multiple of 12 tokens");
  if (cloud_points < 1 || eval_samples < 1)
    throw Error(ErrorCode::InvalidArgument, "cloud and evaluation sizes must be positive");
}

ToyTask::ToyTask(ToyTaskConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  for (std::size_t i = 0; i < cfg_.shapes.size(); ++i)
    conditions_.push_back(make_toy_condition(cfg_.shapes[i], cfg_.bits, cfg_.cloud_points,
                                             derive_seed(cfg_.seed, {11, i})));
}

ToyPolicy ToyTask::blank_policy() const {
  std::size_t period = 0;
  for (const auto& c : conditions_) period = std::max(period, c.tokens.size());
  const TokenSequence probe{{}, cfg_.bits};
  return ToyPolicy(probe.vocab_size(), 1, period, conditions_.size());
}

ToyPolicy ToyTask::pretrain(ToyPolicy policy) const {
  std::vector<Demonstration> data;
  for (std::size_t c = 0; c < conditions_.size(); ++c) data.push_back({c, conditions_[c].tokens});
  std::vector<double> grad;
  for (std::size_t s = 0; s < cfg_.pretrain_steps; ++s) {
    nll_loss(policy, data, &grad);
    const auto version = policy.version;
    policy = sgd_step(policy, grad, cfg_.pretrain_lr);
    policy.version = version;
  }
  return policy;
}

std::shared_ptr<const ToyTask::Scored> ToyTask::scored(std::size_t condition, std::span<const Token> tokens) const {
  auto key = std::make_pair(condition, std::vector<Token>(tokens.begin(), tokens.end()));
  {
    std::lock_guard lock(cache_mu_);
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
  }

  auto s = std::make_shared<Scored>();
  const std::size_t blocks = tokens.size() / kTokensPerFace;
  s->faces_before.assign(blocks + 1, 0);
  try {
    TokenSequence seq{key.second, cfg_.bits};
    const auto decoded = detokenize(seq, Strictness::Permissive);
    s->mesh = dequantize_unit(decoded.mesh);
    // Each block decodes independently, so a block contributes a face iff
    // it decodes to one on its own.
    for (std::size_t b = 0; b < blocks; ++b) {
      TokenSequence one{{tokens.begin() + b * kTokensPerFace, tokens.begin() + (b + 1) * kTokensPerFace}, cfg_.bits};
      s->faces_before[b + 1] = s->faces_before[b] + detokenize(one, Strictness::Permissive).mesh.faces.size();
    }
    s->context = prepare_reward(s->mesh, conditions_.at(condition).points, cfg_.reward);
  } catch (const Error&) {
    s->failed = true;
  }

  std::lock_guard lock(cache_mu_);
  return cache_.emplace(std::move(key), std::move(s)).first->second;
}

RewardReport ToyTask::score(std::size_t condition, std::span<const Token> tokens) const {
  const auto s = scored(condition, tokens);
  if (s->failed) return RewardReport{0, std::numeric_limits<double>::infinity(), 0, 0, false, 0.0};
  return window_reward(s->mesh, s->context, 0, s->mesh.faces.size(), cfg_.reward);
}

RewardReport ToyTask::score_window(std::size_t condition, std::span<const Token> tokens, const Window& window) const {
  if (window.m % kTokensPerFace != 0 || window.w % kTokensPerFace != 0 || window.m + window.w > tokens.size())
    throw Error(ErrorCode::WindowOutOfRange, "window must be face aligned and inside the sequence");
  const auto s = scored(condition, tokens);
  if (s->failed) return RewardReport{0, std::numeric_limits<double>::infinity(), 0, 0, false, 0.0};
  const std::size_t first = s->faces_before[window.m / kTokensPerFace];
  const std::size_t last = s->faces_before[(window.m + window.w) / kTokensPerFace];
  return window_reward(s->mesh, s->context, first, last - first, cfg_.reward);
}

std::vector<SampleGroup> ToyTask::generate(const ToyPolicy& policy, std::uint64_t ticket) const {
  const std::size_t condition = static_cast<std::size_t>(ticket % conditions_.size());
  const std::size_t length = sequence_length(condition);
  const std::uint64_t base = derive_seed(cfg_.seed, {21, policy.version, ticket});

  std::vector<std::shared_ptr<const std::vector<Token>>> seqs;
  for (std::size_t k = 0; k < cfg_.group_size; ++k)
    seqs.push_back(std::make_shared<const std::vector<Token>>(
        policy_sample(policy, length, {}, derive_seed(base, {k}), condition)));

  const std::size_t w = std::min(cfg_.window, length);
  const std::size_t offsets = (length - w) / kTokensPerFace + 1;
  std::mt19937_64 rng(derive_seed(base, {1000}));
  std::uniform_int_distribution<std::size_t> pick(0, offsets - 1);

  std::vector<SampleGroup> groups;
  for (std::size_t t = 0; t < cfg_.truncations; ++t) {
    const Window window{pick(rng) * kTokensPerFace, w, length};
    SampleGroup g;
    g.version = policy.version;
    g.condition = condition;
    g.ticket = ticket;
    g.group_id = ticket * cfg_.truncations + t;
    std::vector<double> rewards;
    for (const auto& seq : seqs) {
      RolloutSample s;
      s.condition = condition;
      s.sequence = seq;
      s.window = window;
      s.reward = score_window(condition, *seq, window).total;
      s.version = policy.version;
      s.group_id = g.group_id;
      rewards.push_back(s.reward);
      g.samples.push_back(std::move(s));
    }
    const auto adv = advantages(rewards, 1e-8);
    for (std::size_t i = 0; i < adv.size(); ++i) g.samples[i].advantage = adv[i];
    groups.push_back(std::move(g));
  }
  return groups;
}

ToyEval ToyTask::evaluate(const ToyPolicy& policy) const {
  ToyEval e;
  for (std::size_t c = 0; c < conditions_.size(); ++c) {
    for (std::size_t i = 0; i < cfg_.eval_samples; ++i) {
      const auto tokens = policy_sample(policy, sequence_length(c), {}, derive_seed(cfg_.seed, {31, c, i}), c);
      const auto r = score(c, tokens);
      e.mean_reward += r.total;
      e.gate_pass_rate += r.gated ? 1.0 : 0.0;
      e.mean_rings += static_cast<double>(r.n_quad_rings);
      e.mean_lines += static_cast<double>(r.n_quad_lines);
      ++e.samples;
    }
  }
  const double n = static_cast<double>(e.samples);
  e.mean_reward /= n;
  e.gate_pass_rate /= n;
  e.mean_rings /= n;
  e.mean_lines /= n;
  return e;
}

std::size_t ToyTask::cached_sequences() const {
  std::lock_guard lock(cache_mu_);
  return cache_.size();
}

ToyRunConfig default_toy_run() {
  ToyRunConfig cfg;
  cfg.trainer.schedule = {.n1 = 40, .n2 = 20, .t = 1, .b = 16, .s1 = 64, .s2 = 32, .sigma = 16};
  cfg.trainer.learning_rate = 20.0;
  cfg.trainer.checkpoints = 5;
  cfg.workers = 2;
  return cfg;
}

ToyRunResult run_toy(const ToyRunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const ToyTask task(cfg.task);
  auto trainer = cfg.trainer;
  trainer.groups_per_ticket = cfg.task.truncations;
  auto arpo = cfg.arpo;
  arpo.group_size = cfg.task.group_size;

  ToyPolicy initial = task.pretrain(task.blank_policy());
  initial.version = 0;
  const auto reference = std::make_shared<const ToyPolicy>(initial);

  PolicyStore store(cfg.checkpoint_dir);
  ToyRunResult out;
  out.run = run_async(
      store, initial, [&task](const ToyPolicy& p, std::uint64_t ticket) { return task.generate(p, ticket); },
      arpo_batch_loss(reference, arpo), trainer, cfg.workers);

  out.version_consistent = !out.run.log.steps.empty();
  for (const auto& step : out.run.log.steps) {
    if (step.consumed_versions != std::vector<std::uint64_t>{step.producing_version - 1})
      out.version_consistent = false;
  }
  for (const auto v : store.versions()) out.checkpoints.push_back({v, task.evaluate(*store.get(v))});
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace quadrl
