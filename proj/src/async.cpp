#include "quadrl/async.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "quadrl/error.hpp"
#include "quadrl/random.hpp"

namespace quadrl {

// ---------------------------------------------------------------------------
// Schedule

bool ScheduleReport::valid() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const ScheduleClause& c) { return c.satisfied; });
}

std::vector<std::string> ScheduleReport::violations() const {
  std::vector<std::string> out;
  for (const auto& c : clauses)
    if (!c.satisfied) out.push_back(c.name);
  return out;
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

ScheduleReport validate_schedule(const ScheduleConfig& cfg) {
  ScheduleReport r;
  auto add = [&](std::string name, bool ok, std::string detail) {
    r.clauses.push_back({std::move(name), ok, std::move(detail)});
  };

  const bool positive = cfg.n1 > 0 && cfg.n2 > 0 && cfg.t > 0 && cfg.b > 0 && cfg.s1 > 0 && cfg.s2 > 0 &&
                        cfg.sigma > 0 && cfg.sigma_min > 0.0 && cfg.sigma_max >= cfg.sigma_min;
  add("positive", positive, "all counts > 0 and 0 < sigma_min <= sigma_max");
  if (!positive) return r;

  const double tb = static_cast<double>(cfg.t) * static_cast<double>(cfg.b);
  r.steady_ratio = static_cast<double>(cfg.n2) * tb / static_cast<double>(cfg.s2);
  r.prestart_ratio = static_cast<double>(cfg.n1) * tb / static_cast<double>(cfg.s1);

  add("sigma_min <= N2*T*B/S2", r.steady_ratio >= cfg.sigma_min,
      fmt(cfg.sigma_min) + " <= " + fmt(r.steady_ratio));
  add("N2*T*B/S2 <= sigma_max", r.steady_ratio <= cfg.sigma_max,
      fmt(r.steady_ratio) + " <= " + fmt(cfg.sigma_max));
  const double gap = std::abs(r.steady_ratio - r.prestart_ratio);
  if (cfg.relax_equality) {
    add("N2*T*B/S2 == N1*T*B/S1", true, "relaxed, |difference| = " + fmt(gap));
  } else {
    add("N2*T*B/S2 == N1*T*B/S1", gap <= cfg.equality_tolerance,
        "|" + fmt(r.steady_ratio) + " - " + fmt(r.prestart_ratio) + "| <= " + fmt(cfg.equality_tolerance));
  }
  add("N2 < N1", cfg.n2 < cfg.n1, std::to_string(cfg.n2) + " < " + std::to_string(cfg.n1));
  add("S1 > S2", cfg.s1 > cfg.s2, std::to_string(cfg.s1) + " > " + std::to_string(cfg.s2));
  add("S2 >= sigma", cfg.s2 >= cfg.sigma, std::to_string(cfg.s2) + " >= " + std::to_string(cfg.sigma));
  return r;
}

// ---------------------------------------------------------------------------
// Samples

std::span<const Token> RolloutSample::window_tokens() const {
  if (!sequence) return {};
  return std::span<const Token>(*sequence).subspan(window.m, window.w);
}

void validate_group(const SampleGroup& group) {
  if (group.samples.empty()) throw Error(ErrorCode::InvalidArgument, "empty group");
  for (const auto& s : group.samples) {
    if (s.condition != group.condition || s.version != group.version || s.group_id != group.group_id)
      throw Error(ErrorCode::InvalidArgument, "group members disagree on condition, version or group id");
    if (!s.sequence) throw Error(ErrorCode::InvalidArgument, "sample without a sequence");
    if (s.window.length != s.sequence->size() || s.window.m + s.window.w > s.sequence->size())
      throw Error(ErrorCode::InvalidArgument, "window outside its sequence");
    if (!std::isfinite(s.reward)) throw Error(ErrorCode::InvalidArgument, "non-finite reward");
  }
}

// ---------------------------------------------------------------------------
// ReplayBuffer

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::InvalidArgument, "buffer capacity must be > 0");
}

PushResult ReplayBuffer::push(SampleGroup group) {
  validate_group(group);
  PushResult result = PushResult::Stored;
  {
    std::lock_guard lock(mu_);
    if (group.version < watermark_) {
      ++dropped_;
      return PushResult::Dropped;
    }
    if (size_ == capacity_) {
      auto oldest = groups_.begin();
      oldest->second.erase(oldest->second.begin());
      if (oldest->second.empty()) groups_.erase(oldest);
      --size_;
      ++evicted_;
      result = PushResult::StoredWithEviction;
    }
    groups_[group.version].push_back(std::move(group));
    ++size_;
  }
  cv_.notify_all();
  return result;
}

std::size_t ReplayBuffer::count_locked(std::uint64_t version, std::optional<std::uint64_t> ticket_limit) const {
  const auto it = groups_.find(version);
  if (it == groups_.end()) return 0;
  if (!ticket_limit) return it->second.size();
  return static_cast<std::size_t>(std::count_if(it->second.begin(), it->second.end(),
                                                [&](const SampleGroup& g) { return g.ticket < *ticket_limit; }));
}

std::vector<SampleGroup> ReplayBuffer::sample(std::uint64_t version, std::size_t count, std::uint64_t seed,
                                              std::optional<std::uint64_t> ticket_limit) const {
  std::vector<const SampleGroup*> eligible;
  std::lock_guard lock(mu_);
  if (const auto it = groups_.find(version); it != groups_.end()) {
    for (const auto& g : it->second)
      if (!ticket_limit || g.ticket < *ticket_limit) eligible.push_back(&g);
  }
  if (eligible.size() < count)
    throw Error(ErrorCode::InsufficientData, "requested " + std::to_string(count) + " groups of version " +
                                                 std::to_string(version) + ", have " +
                                                 std::to_string(eligible.size()));
  // Arrival order depends on thread timing; sorting makes the draw depend
  // only on content.
  std::sort(eligible.begin(), eligible.end(), [](const SampleGroup* a, const SampleGroup* b) {
    return std::tie(a->ticket, a->group_id) < std::tie(b->ticket, b->group_id);
  });
  std::mt19937_64 rng(seed);
  std::vector<SampleGroup> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
    std::swap(eligible[i], eligible[pick(rng)]);
    out.push_back(*eligible[i]);
  }
  return out;
}

bool ReplayBuffer::wait_for(std::uint64_t version, std::size_t groups, std::optional<std::uint64_t> ticket_limit,
                            std::chrono::milliseconds timeout, const std::atomic<bool>* stop) const {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::unique_lock lock(mu_);
  while (count_locked(version, ticket_limit) < groups) {
    if (stop && stop->load()) return false;
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return false;
    cv_.wait_for(lock, std::min<std::chrono::steady_clock::duration>(deadline - now, std::chrono::milliseconds(50)));
  }
  return true;
}

std::size_t ReplayBuffer::discard(std::uint64_t keep_version) {
  std::lock_guard lock(mu_);
  watermark_ = std::max(watermark_, keep_version);
  std::size_t removed = 0;
  while (!groups_.empty() && groups_.begin()->first < keep_version) {
    removed += groups_.begin()->second.size();
    groups_.erase(groups_.begin());
  }
  size_ -= removed;
  return removed;
}

std::size_t ReplayBuffer::size() const {
  std::lock_guard lock(mu_);
  return size_;
}

std::size_t ReplayBuffer::count(std::uint64_t version, std::optional<std::uint64_t> ticket_limit) const {
  std::lock_guard lock(mu_);
  return count_locked(version, ticket_limit);
}

std::uint64_t ReplayBuffer::watermark() const {
  std::lock_guard lock(mu_);
  return watermark_;
}

std::size_t ReplayBuffer::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

std::size_t ReplayBuffer::evicted() const {
  std::lock_guard lock(mu_);
  return evicted_;
}

std::optional<std::pair<std::uint64_t, std::uint64_t>> ReplayBuffer::version_range() const {
  std::lock_guard lock(mu_);
  if (groups_.empty()) return std::nullopt;
  return std::pair{groups_.begin()->first, groups_.rbegin()->first};
}

// ---------------------------------------------------------------------------
// PolicyStore

PolicyStore::PolicyStore(std::optional<std::filesystem::path> directory) : directory_(std::move(directory)) {
  if (directory_) std::filesystem::create_directories(*directory_);
}

void PolicyStore::publish(ToyPolicy policy) {
  auto snap = std::make_shared<const ToyPolicy>(std::move(policy));
  {
    std::lock_guard lock(mu_);
    if (!snapshots_.empty() && snap->version <= snapshots_.rbegin()->first)
      throw Error(ErrorCode::InvalidArgument, "policy versions must increase");
    if (directory_)
      save_checkpoint(*directory_ / ("policy_v" + std::to_string(snap->version) + ".qpol"), *snap);
    snapshots_.emplace(snap->version, snap);
  }
  cv_.notify_all();
}

std::shared_ptr<const ToyPolicy> PolicyStore::latest() const {
  std::lock_guard lock(mu_);
  return snapshots_.empty() ? nullptr : snapshots_.rbegin()->second;
}

std::shared_ptr<const ToyPolicy> PolicyStore::get(std::uint64_t version) const {
  std::lock_guard lock(mu_);
  const auto it = snapshots_.find(version);
  return it == snapshots_.end() ? nullptr : it->second;
}

std::vector<std::uint64_t> PolicyStore::versions() const {
  std::lock_guard lock(mu_);
  std::vector<std::uint64_t> out;
  for (const auto& [v, p] : snapshots_) out.push_back(v);
  return out;
}

bool PolicyStore::wait_newer(std::uint64_t version, std::chrono::milliseconds timeout,
                             const std::atomic<bool>* stop) const {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::unique_lock lock(mu_);
  while (snapshots_.empty() || snapshots_.rbegin()->first <= version) {
    if (stop && stop->load()) return false;
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return false;
    cv_.wait_for(lock, std::min<std::chrono::steady_clock::duration>(deadline - now, std::chrono::milliseconds(50)));
  }
  return true;
}

// ---------------------------------------------------------------------------
// Workers

TicketBoard::TicketBoard(std::function<std::uint64_t(std::uint64_t)> quota) : quota_(std::move(quota)) {}

std::optional<std::uint64_t> TicketBoard::claim(std::uint64_t version) {
  std::lock_guard lock(mu_);
  auto& next = next_[version];
  if (next >= quota_(version)) return std::nullopt;
  return next++;
}

void rollout_worker_loop(const PolicyStore& store, ReplayBuffer& buffer, TicketBoard& board,
                         const RolloutGenerator& generate, const std::atomic<bool>& stop, RolloutStats* stats) {
  while (!stop.load()) {
    const auto policy = store.latest();
    if (!policy) {
      store.wait_newer(0, std::chrono::milliseconds(50), &stop);
      continue;
    }
    const auto ticket = board.claim(policy->version);
    if (!ticket) {
      store.wait_newer(policy->version, std::chrono::milliseconds(200), &stop);
      continue;
    }
    std::vector<SampleGroup> groups;
    try {
      groups = generate(*policy, *ticket);
    } catch (const std::exception&) {
      if (stats) ++stats->failures;
      continue;
    }
    for (auto& g : groups) {
      g.version = policy->version;
      g.ticket = *ticket;
      for (auto& s : g.samples) s.version = policy->version;
      try {
        const auto r = buffer.push(std::move(g));
        if (stats) {
          if (r == PushResult::Dropped)
            ++stats->dropped;
          else
            ++stats->groups;
        }
      } catch (const Error&) {
        if (stats) ++stats->failures;
      }
    }
    if (stats) ++stats->tickets;
  }
}

std::uint64_t tickets_for_groups(std::size_t groups, std::size_t groups_per_ticket) {
  if (groups_per_ticket == 0) throw Error(ErrorCode::InvalidArgument, "groups per ticket must be > 0");
  return (groups + groups_per_ticket - 1) / groups_per_ticket;
}

std::uint64_t ticket_quota(const TrainerConfig& cfg, std::uint64_t version) {
  return tickets_for_groups(version == 0 ? cfg.schedule.s1 : cfg.schedule.s2, cfg.groups_per_ticket);
}

std::uint64_t tickets_needed(const TrainerConfig& cfg, std::size_t step) {
  const auto& s = cfg.schedule;
  const std::uint64_t total = ticket_quota(cfg, 1);
  const std::uint64_t base =
      std::min(total, tickets_for_groups(std::max(s.sigma, s.t * s.b), cfg.groups_per_ticket));
  // Linear ramp from the minimum buffer size to the full quota over N_2 steps.
  const std::uint64_t ramp = (step * (total - base) + s.n2 - 1) / std::max<std::size_t>(s.n2, 1);
  return std::min(total, base + ramp);
}

namespace {

TrainerStep train_step(std::shared_ptr<const ToyPolicy>& current,
                       std::span<const SampleGroup> batch, const BatchLoss& loss, const TrainerConfig& cfg,
                       std::uint64_t producing, std::size_t step) {
  TrainerStep rec;
  rec.producing_version = producing;
  rec.step = step;
  rec.groups = batch.size();
  for (const auto& g : batch) rec.consumed_versions.push_back(g.version);
  std::sort(rec.consumed_versions.begin(), rec.consumed_versions.end());
  rec.consumed_versions.erase(std::unique(rec.consumed_versions.begin(), rec.consumed_versions.end()),
                              rec.consumed_versions.end());
  std::vector<double> grad(current->parameter_count(), 0.0);
  rec.loss = loss(batch, *current, grad);
  auto next = sgd_step(*current, grad, cfg.learning_rate);
  current = std::make_shared<const ToyPolicy>(std::move(next));
  return rec;
}

}  // namespace

TrainerLog trainer_loop(PolicyStore& store, ReplayBuffer& buffer, const BatchLoss& loss, const TrainerConfig& cfg,
                        const std::atomic<bool>* stop) {
  const auto& s = cfg.schedule;
  const std::size_t batch = s.t * s.b;
  if (const auto report = validate_schedule(s); !report.valid()) {
    std::string msg = "invalid schedule:";
    for (const auto& v : report.violations()) msg += " [" + v + "]";
    throw Error(ErrorCode::InvalidArgument, msg);
  }
  auto current = store.get(0);
  if (!current) throw Error(ErrorCode::InvalidArgument, "version 0 policy is not published");
  if (batch > ticket_quota(cfg, 1) * cfg.groups_per_ticket || batch > ticket_quota(cfg, 0) * cfg.groups_per_ticket)
    throw Error(ErrorCode::InvalidArgument, "batch larger than a version's data");

  TrainerLog log;
  auto wait = [&](std::uint64_t version, std::uint64_t tickets) {
    if (!buffer.wait_for(version, tickets * cfg.groups_per_ticket, tickets, cfg.starvation_timeout, stop)) {
      if (stop && stop->load()) return false;
      throw Error(ErrorCode::StarvationTimeout, "no data for version " + std::to_string(version));
    }
    return true;
  };

  // Pre-start stage.
  const std::uint64_t pre_tickets = ticket_quota(cfg, 0);
  if (!wait(0, pre_tickets)) return log;
  for (std::size_t j = 0; j < s.n1; ++j) {
    const auto groups = buffer.sample(0, batch, derive_seed(cfg.seed, {1, j}), pre_tickets);
    log.steps.push_back(train_step(current, groups, loss, cfg, 1, j));
  }
  {
    ToyPolicy snap = *current;
    snap.version = 1;
    store.publish(snap);
    current = store.get(1);
  }
  log.checkpoints.push_back(1);
  buffer.discard(1);

  for (std::uint64_t v = 2; v <= cfg.checkpoints; ++v) {
    const std::uint64_t target = v - 1;
    for (std::size_t j = 0; j < s.n2; ++j) {
      const std::uint64_t need = tickets_needed(cfg, j);
      if (!wait(target, need)) return log;
      const auto groups = buffer.sample(target, batch, derive_seed(cfg.seed, {v, j}), need);
      log.steps.push_back(train_step(current, groups, loss, cfg, v, j));
    }
    ToyPolicy snap = *current;
    snap.version = v;
    store.publish(snap);
    current = store.get(v);
    log.checkpoints.push_back(v);
    buffer.discard(v);
  }
  return log;
}

BatchLoss arpo_batch_loss(std::shared_ptr<const ToyPolicy> reference, ArpoConfig cfg) {
  cfg.validate();
  if (!reference) throw Error(ErrorCode::InvalidArgument, "missing reference policy");
  return [reference, cfg](std::span<const SampleGroup> batch, const ToyPolicy& policy, std::span<double> grad) {
    if (batch.empty()) return 0.0;
    const double scale = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const auto& g : batch) {
      GroupSamples entries;
      entries.reserve(g.samples.size());
      for (const auto& s : g.samples) {
        GroupEntry e;
        e.logp = sequence_logprob(policy, *s.sequence, s.condition, s.window);
        e.logp_ref = sequence_logprob(*reference, *s.sequence, s.condition, s.window);
        e.reward = s.reward;
        e.window = s.window;
        entries.push_back(e);
      }
      total += truncated_arpo_loss(entries, cfg);
      const auto coef = arpo_logprob_coefficients(entries, cfg);
      for (std::size_t i = 0; i < coef.size(); ++i) {
        if (coef[i] == 0.0) continue;
        const auto& s = g.samples[i];
        accumulate_logprob_gradient(policy, *s.sequence, s.condition, s.window, coef[i] * scale, grad);
      }
    }
    return total * scale;
  };
}

AsyncRunResult run_async(PolicyStore& store, const ToyPolicy& initial, const RolloutGenerator& generate,
                         const BatchLoss& loss, const TrainerConfig& cfg, std::size_t workers) {
  if (workers == 0) throw Error(ErrorCode::InvalidArgument, "need at least one rollout worker");
  if (initial.version != 0) throw Error(ErrorCode::InvalidArgument, "initial policy must be version 0");
  store.publish(initial);
  ReplayBuffer buffer((ticket_quota(cfg, 0) + ticket_quota(cfg, 1)) * cfg.groups_per_ticket);
  TicketBoard board([&cfg](std::uint64_t v) { return ticket_quota(cfg, v); });
  std::atomic<bool> stop{false};
  RolloutStats stats;

  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < workers; ++i)
    pool.emplace_back([&] { rollout_worker_loop(store, buffer, board, generate, stop, &stats); });

  AsyncRunResult result;
  std::exception_ptr failure;
  try {
    result.log = trainer_loop(store, buffer, loss, cfg, &stop);
  } catch (...) {
    failure = std::current_exception();
  }
  stop = true;
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  result.rollout_tickets = stats.tickets;
  result.rollout_failures = stats.failures;
  result.dropped_groups = buffer.dropped();
  result.evicted_groups = buffer.evicted();
  return result;
}

}  // namespace quadrl
