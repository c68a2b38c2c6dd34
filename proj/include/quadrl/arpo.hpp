#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace quadrl {

struct ArpoConfig {
  double beta = 1.0;
  double epsilon = 1e-8;
  std::size_t group_size = 4;

  void validate() const;
};

/// Token window [m, m + w) of a parent sequence of `length` tokens.
struct Window {
  std::size_t m = 0;
  std::size_t w = 0;
  std::size_t length = 0;
};

/// One member of a preference group. Log-probabilities are sequence sums
/// (window sums when `window` is set).
struct GroupEntry {
  double logp = 0.0;
  double logp_ref = 0.0;
  double reward = 0.0;
  std::optional<Window> window;
};

using GroupSamples = std::vector<GroupEntry>;

/// (R_k - min R) / (sum_k (R_k - min R) + epsilon).
std::vector<double> advantages(std::span<const double> rewards, double epsilon);

/// Indices ordering entries by descending reward; ties keep input order.
std::vector<std::size_t> preference_order(const GroupSamples& group);

GroupSamples sorted_by_preference(const GroupSamples& group);

/// Log Plackett-Luce probability of the group's order (as given) under the
/// implicit rewards s_i = beta * (logp_i - logp_ref_i).
double pl_ranking_logprob(const GroupSamples& group, double beta);

/// Advantage-weighted negative ranking log-likelihood. The group is sorted by
/// descending reward internally.
double arpo_loss(const GroupSamples& group, const ArpoConfig& cfg);

/// -log sigmoid(beta * (winner - loser)).
double dpo_loss(double winner_logratio, double loser_logratio, double beta);

/// d arpo_loss / d logp_i, in the group's input order.
std::vector<double> arpo_logprob_coefficients(const GroupSamples& group, const ArpoConfig& cfg);

/// Exact parameter gradient of arpo_loss given per-entry gradients of logp.
std::vector<double> arpo_gradient(const GroupSamples& group, std::span<const std::vector<double>> logp_grads,
                                  const ArpoConfig& cfg);

/// Pairwise form -beta * sum_{i<j} A_i sigmoid(-beta Delta_ij) (g_i - g_j)
/// over the preference-sorted group. Equals arpo_gradient for two entries.
std::vector<double> arpo_gradient_pairwise(const GroupSamples& group, std::span<const std::vector<double>> logp_grads,
                                           const ArpoConfig& cfg);

/// arpo_loss over window-restricted log-probabilities; every entry must
/// carry a window inside its parent sequence.
double truncated_arpo_loss(const GroupSamples& group, const ArpoConfig& cfg);

double log_sigmoid(double x);
double logsumexp(std::span<const double> xs);

}  // namespace quadrl
