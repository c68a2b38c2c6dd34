#include "quadrl/arpo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "quadrl/error.hpp"

namespace quadrl {

void ArpoConfig::validate() const {
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be > 0");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be > 0");
  if (group_size < 2) throw Error(ErrorCode::InvalidArgument, "group size must be >= 2");
}

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double logsumexp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double hi = *std::max_element(xs.begin(), xs.end());
  if (std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

std::vector<double> advantages(std::span<const double> rewards, double epsilon) {
  if (rewards.empty()) return {};
  const double lo = *std::min_element(rewards.begin(), rewards.end());
  double total = 0.0;
  for (double r : rewards) total += r - lo;
  std::vector<double> a;
  a.reserve(rewards.size());
  for (double r : rewards) a.push_back((r - lo) / (total + epsilon));
  return a;
}

std::vector<std::size_t> preference_order(const GroupSamples& group) {
  std::vector<std::size_t> order(group.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return group[a].reward > group[b].reward; });
  return order;
}

GroupSamples sorted_by_preference(const GroupSamples& group) {
  GroupSamples out;
  out.reserve(group.size());
  for (auto i : preference_order(group)) out.push_back(group[i]);
  return out;
}

namespace {

std::vector<double> implicit_rewards(const GroupSamples& group, double beta) {
  std::vector<double> s;
  s.reserve(group.size());
  for (const auto& e : group) {
    if (!std::isfinite(e.logp) || !std::isfinite(e.logp_ref))
      throw Error(ErrorCode::NonFiniteLogProb, "group log-probability is not finite");
    s.push_back(beta * (e.logp - e.logp_ref));
  }
  return s;
}

// suffix[k] = logsumexp(s[k..K)).
std::vector<double> suffix_logsumexp(std::span<const double> s) {
  std::vector<double> out(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = logsumexp(s.subspan(k));
  return out;
}

// s[k] - logsumexp(s[k..K)) without cancellation when s[k] dominates.
double log_choice_prob(std::span<const double> s, std::size_t k) {
  const auto tail = s.subspan(k);
  const auto top = static_cast<std::size_t>(std::max_element(tail.begin(), tail.end()) - tail.begin());
  const double m = tail[top];
  double rest = 0.0;
  for (std::size_t j = 0; j < tail.size(); ++j)
    if (j != top) rest += std::exp(tail[j] - m);
  return (s[k] - m) - std::log1p(rest);
}

std::vector<double> rewards_of(const GroupSamples& g) {
  std::vector<double> r;
  r.reserve(g.size());
  for (const auto& e : g) r.push_back(e.reward);
  return r;
}

void check_grad_shapes(const GroupSamples& group, std::span<const std::vector<double>> grads) {
  if (grads.size() != group.size()) throw Error(ErrorCode::ShapeMismatch, "one gradient per group entry required");
  for (const auto& g : grads)
    if (g.size() != grads.front().size()) throw Error(ErrorCode::ShapeMismatch, "gradient sizes differ");
}

}  // namespace

double pl_ranking_logprob(const GroupSamples& group, double beta) {
  const auto s = implicit_rewards(group, beta);
  double total = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) total += log_choice_prob(s, k);
  return total;
}

double arpo_loss(const GroupSamples& group, const ArpoConfig& cfg) {
  const GroupSamples sorted = sorted_by_preference(group);
  const auto a = advantages(rewards_of(sorted), cfg.epsilon);
  const auto s = implicit_rewards(sorted, cfg.beta);
  double loss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (a[i] != 0.0) loss -= a[i] * log_choice_prob(s, i);
  }
  return loss;
}

double dpo_loss(double winner_logratio, double loser_logratio, double beta) {
  return -log_sigmoid(beta * (winner_logratio - loser_logratio));
}

std::vector<double> arpo_logprob_coefficients(const GroupSamples& group, const ArpoConfig& cfg) {
  const auto order = preference_order(group);
  GroupSamples sorted;
  for (auto i : order) sorted.push_back(group[i]);
  const auto a = advantages(rewards_of(sorted), cfg.epsilon);
  const auto s = implicit_rewards(sorted, cfg.beta);
  const auto lse = suffix_logsumexp(s);

  // dL/ds_k = -A_k sum_{j>k} p_k(j) + sum_{i<k} A_i p_i(k), where p_i is the
  // softmax over s[i..K). Written this way so 1 - p_k(k) never cancels.
  std::vector<double> coef(group.size(), 0.0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    double lose = 0.0;
    if (a[k] != 0.0) {
      for (std::size_t j = k + 1; j < s.size(); ++j) lose += std::exp(s[j] - lse[k]);
    }
    double gain = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (a[i] != 0.0) gain += a[i] * std::exp(s[k] - lse[i]);
    }
    coef[order[k]] = cfg.beta * (gain - a[k] * lose);
  }
  return coef;
}

std::vector<double> arpo_gradient(const GroupSamples& group, std::span<const std::vector<double>> logp_grads,
                                  const ArpoConfig& cfg) {
  check_grad_shapes(group, logp_grads);
  const auto coef = arpo_logprob_coefficients(group, cfg);
  std::vector<double> g(logp_grads.empty() ? 0 : logp_grads.front().size(), 0.0);
  for (std::size_t i = 0; i < coef.size(); ++i) {
    if (coef[i] == 0.0) continue;
    for (std::size_t p = 0; p < g.size(); ++p) g[p] += coef[i] * logp_grads[i][p];
  }
  return g;
}

std::vector<double> arpo_gradient_pairwise(const GroupSamples& group, std::span<const std::vector<double>> logp_grads,
                                           const ArpoConfig& cfg) {
  check_grad_shapes(group, logp_grads);
  const auto order = preference_order(group);
  GroupSamples sorted;
  for (auto i : order) sorted.push_back(group[i]);
  const auto a = advantages(rewards_of(sorted), cfg.epsilon);
  implicit_rewards(sorted, cfg.beta);  // finiteness check

  std::vector<double> g(logp_grads.empty() ? 0 : logp_grads.front().size(), 0.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      const double delta = (sorted[i].logp - sorted[i].logp_ref) - (sorted[j].logp - sorted[j].logp_ref);
      const double w = -cfg.beta * a[i] * std::exp(log_sigmoid(-cfg.beta * delta));
      const auto& gi = logp_grads[order[i]];
      const auto& gj = logp_grads[order[j]];
      for (std::size_t p = 0; p < g.size(); ++p) g[p] += w * (gi[p] - gj[p]);
    }
  }
  return g;
}

double truncated_arpo_loss(const GroupSamples& group, const ArpoConfig& cfg) {
  for (const auto& e : group) {
    if (!e.window) throw Error(ErrorCode::WindowOutOfRange, "entry has no window");
    if (e.window->m > e.window->length || e.window->w > e.window->length - e.window->m)
      throw Error(ErrorCode::WindowOutOfRange, "window exceeds its parent sequence");
  }
  return arpo_loss(group, cfg);
}

}  // namespace quadrl
