#include "quadrl/throughput.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <random>
#include <tuple>
#include <vector>

#include "quadrl/error.hpp"
#include "quadrl/random.hpp"

namespace quadrl {

std::string_view to_string(SimMode mode) { return mode == SimMode::Sync ? "sync" : "async"; }

void ThroughputConfig::validate() const {
  if (workers == 0) throw Error(ErrorCode::InvalidArgument, "workers must be > 0");
  if (!(lengths.mean > 0.0) || !std::isfinite(lengths.mean))
    throw Error(ErrorCode::InvalidArgument, "mean rollout length must be finite and > 0");
  if (!(lengths.cv >= 0.0) || !std::isfinite(lengths.cv))
    throw Error(ErrorCode::InvalidArgument, "cv must be finite and >= 0");
  if (!(update_time >= 0.0)) throw Error(ErrorCode::InvalidArgument, "update time must be >= 0");
  if (!(duration > 0.0)) throw Error(ErrorCode::InvalidArgument, "duration must be > 0");
}

namespace {

// Worker w's n-th rollout duration; the same (w, n) draws the same normal
// deviate in both modes and for every cv.
class LengthSource {
 public:
  LengthSource(const LengthDistribution& d, std::uint64_t seed) : seed_(seed) {
    const double s2 = std::log1p(d.cv * d.cv);
    sigma_ = std::sqrt(s2);
    mu_ = std::log(d.mean) - 0.5 * s2;
  }

  double draw(std::size_t worker) {
    if (counters_.size() <= worker) counters_.resize(worker + 1, 0);
    std::mt19937_64 rng(derive_seed(seed_, {worker, counters_[worker]++}));
    std::normal_distribution<double> z;
    return std::exp(mu_ + sigma_ * z(rng));
  }

 private:
  std::uint64_t seed_;
  double mu_ = 0.0;
  double sigma_ = 0.0;
  std::vector<std::uint64_t> counters_;
};

ThroughputResult finish(ThroughputResult r, double busy, const ThroughputConfig& cfg) {
  r.virtual_time = cfg.duration;
  r.utilization = busy / (static_cast<double>(cfg.workers) * cfg.duration);
  r.samples_per_second = static_cast<double>(r.samples) / cfg.duration;
  r.samples_per_hour = r.samples_per_second * 3600.0;
  return r;
}

ThroughputResult simulate_sync(const ThroughputConfig& cfg, std::size_t batch) {
  LengthSource src(cfg.lengths, cfg.seed);
  ThroughputResult r;
  r.mode = SimMode::Sync;
  double t = 0.0;
  double busy = 0.0;
  std::size_t pending = 0;
  while (true) {
    double longest = 0.0;
    std::vector<double> len(cfg.workers);
    for (std::size_t w = 0; w < cfg.workers; ++w) {
      len[w] = src.draw(w);
      longest = std::max(longest, len[w]);
    }
    if (t + longest > cfg.duration) {
      for (double l : len) busy += std::min(l, cfg.duration - t);
      break;
    }
    for (double l : len) busy += l;
    t += longest;
    pending += cfg.workers;
    // Every full batch is trained before the next round starts.
    while (pending >= batch && t + cfg.update_time <= cfg.duration) {
      pending -= batch;
      t += cfg.update_time;
      ++r.updates;
      r.samples += batch;
    }
    if (pending >= batch) break;
  }
  return finish(r, busy, cfg);
}

ThroughputResult simulate_async(const ThroughputConfig& cfg, std::size_t batch) {
  LengthSource src(cfg.lengths, cfg.seed);
  const std::size_t capacity = cfg.buffer_capacity ? cfg.buffer_capacity : 4 * batch;
  if (capacity < batch) throw Error(ErrorCode::InvalidArgument, "buffer capacity below one batch");
  ThroughputResult r;
  r.mode = SimMode::Async;

  struct Event {
    double time;
    int kind;  // 0 rollout done, 1 update done
    std::size_t worker;
    bool operator>(const Event& o) const {
      return std::tie(time, kind, worker) > std::tie(o.time, o.kind, o.worker);
    }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::vector<std::size_t> blocked;  // workers holding a finished rollout
  std::size_t buffered = 0;
  bool training = false;
  double busy = 0.0;

  auto start_rollout = [&](std::size_t w, double now) {
    const double len = src.draw(w);
    busy += std::min(len, cfg.duration - now);
    events.push({now + len, 0, w});
  };
  auto try_update = [&](double now) {
    if (training || buffered < batch) return;
    buffered -= batch;
    training = true;
    events.push({now + cfg.update_time, 1, 0});
    while (!blocked.empty() && buffered < capacity) {
      ++buffered;
      start_rollout(blocked.back(), now);
      blocked.pop_back();
    }
  };

  for (std::size_t w = 0; w < cfg.workers; ++w) start_rollout(w, 0.0);
  while (!events.empty() && events.top().time <= cfg.duration) {
    const Event e = events.top();
    events.pop();
    if (e.kind == 0) {
      if (buffered < capacity) {
        ++buffered;
        start_rollout(e.worker, e.time);
      } else {
        blocked.push_back(e.worker);
      }
    } else {
      training = false;
      ++r.updates;
      r.samples += batch;
    }
    try_update(e.time);
  }
  return finish(r, busy, cfg);
}

}  // namespace

ThroughputResult simulate_throughput(SimMode mode, const ThroughputConfig& cfg) {
  cfg.validate();
  const std::size_t batch = cfg.batch ? cfg.batch : cfg.workers;
  return mode == SimMode::Sync ? simulate_sync(cfg, batch) : simulate_async(cfg, batch);
}

ThroughputComparison compare_throughput(const ThroughputConfig& cfg) {
  ThroughputComparison c;
  c.sync = simulate_throughput(SimMode::Sync, cfg);
  c.async = simulate_throughput(SimMode::Async, cfg);
  c.speedup = c.sync.samples_per_second > 0.0 ? c.async.samples_per_second / c.sync.samples_per_second : 0.0;
  return c;
}

}  // namespace quadrl
