#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "quadrl/arpo.hpp"
#include "quadrl/error.hpp"
#include "quadrl/policy.hpp"

using namespace quadrl;

namespace {

GroupSamples group_from_s(std::initializer_list<double> s, std::initializer_list<double> rewards) {
  GroupSamples g;
  auto r = rewards.begin();
  for (double x : s) g.push_back({x, 0.0, *r++, std::nullopt});
  return g;
}

// Independent brute-force Plackett-Luce probability: product of sequential
// softmax choices, computed with raw exponentials.
double pl_probability(const std::vector<double>& s, const std::vector<std::size_t>& order) {
  double p = 1.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    double denom = 0.0;
    for (std::size_t j = k; j < order.size(); ++j) denom += std::exp(s[order[j]]);
    p *= std::exp(s[order[k]]) / denom;
  }
  return p;
}

struct PolicyGroup {
  ToyPolicy policy;
  ToyPolicy reference;
  std::vector<std::vector<Token>> seqs;
  std::vector<double> rewards;
};

PolicyGroup random_policy_group(std::mt19937_64& rng, std::size_t k) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<Token> tok(0, 4);
  PolicyGroup pg{ToyPolicy(5, 1, 2), ToyPolicy(5, 1, 2), {}, {}};
  for (auto& x : pg.policy.parameters()) x = n(rng);
  for (auto& x : pg.reference.parameters()) x = n(rng);
  std::uniform_int_distribution<int> reward(0, 3);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<Token> s(6);
    for (auto& t : s) t = tok(rng);
    pg.seqs.push_back(s);
    pg.rewards.push_back(reward(rng) + 0.25 * static_cast<double>(i % 2));
  }
  return pg;
}

GroupSamples make_group(const ToyPolicy& policy, const PolicyGroup& pg) {
  GroupSamples g;
  for (std::size_t i = 0; i < pg.seqs.size(); ++i)
    g.push_back({sequence_logprob(policy, pg.seqs[i]), sequence_logprob(pg.reference, pg.seqs[i]), pg.rewards[i],
                 std::nullopt});
  return g;
}

std::vector<std::vector<double>> logp_grads(const PolicyGroup& pg) {
  std::vector<std::vector<double>> out;
  for (const auto& s : pg.seqs) out.push_back(sequence_logprob_gradient(pg.policy, s));
  return out;
}

std::vector<double> finite_difference(const PolicyGroup& pg, const ArpoConfig& cfg, double h) {
  std::vector<double> fd(pg.policy.parameter_count());
  for (std::size_t p = 0; p < fd.size(); ++p) {
    ToyPolicy plus = pg.policy, minus = pg.policy;
    plus.parameters()[p] += h;
    minus.parameters()[p] -= h;
    fd[p] = (arpo_loss(make_group(plus, pg), cfg) - arpo_loss(make_group(minus, pg), cfg)) / (2 * h);
  }
  return fd;
}

double max_relative_error(const std::vector<double>& g, const std::vector<double>& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    num = std::max(num, std::abs(g[i] - ref[i]));
    den = std::max(den, std::abs(ref[i]));
  }
  return num / std::max(den, 1e-12);
}

}  // namespace

TEST(Advantages, Examples) {
  EXPECT_EQ(advantages(std::vector<double>{5, 5, 5, 5}, 1e-8), (std::vector<double>{0, 0, 0, 0}));
  const auto a = advantages(std::vector<double>{10, 2}, 1e-8);
  EXPECT_NEAR(a[0], 8.0 / (8.0 + 1e-8), 1e-15);
  EXPECT_EQ(a[1], 0.0);
  const auto b = advantages(std::vector<double>{4, 3, 1}, 1e-8);
  EXPECT_NEAR(b[0], 0.6, 1e-8);
  EXPECT_NEAR(b[1], 0.4, 1e-8);
  EXPECT_EQ(b[2], 0.0);
}

TEST(Advantages, SumBelowOne) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> r(4);
    for (auto& x : r) x = u(rng);
    const auto a = advantages(r, 1e-8);
    const double sum = std::accumulate(a.begin(), a.end(), 0.0);
    EXPECT_GE(sum, 0.0);
    EXPECT_LT(sum, 1.0);
    for (double x : a) EXPECT_GE(x, 0.0);
  }
}

TEST(PlackettLuce, Examples) {
  EXPECT_NEAR(pl_ranking_logprob(group_from_s({0.3, 0.3, 0.3}, {3, 2, 1}), 1.0), -std::log(6.0), 1e-12);
  EXPECT_EQ(pl_ranking_logprob(group_from_s({1.7}, {1}), 1.0), 0.0);
  EXPECT_NEAR(pl_ranking_logprob(group_from_s({1.0, 0.0}, {2, 1}), 1.0), log_sigmoid(1.0), 1e-12);
  EXPECT_NEAR(log_sigmoid(1.0), -0.31326168751822286, 1e-15);
}

TEST(PlackettLuce, MatchesSequentialChoiceOracle) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(4);
    GroupSamples g;
    for (auto& x : s) {
      x = n(rng);
      g.push_back({x, 0.0, 0.0, std::nullopt});
    }
    EXPECT_NEAR(std::exp(pl_ranking_logprob(g, 1.0)), pl_probability(s, {0, 1, 2, 3}), 1e-12);
  }
}

TEST(PlackettLuce, SumsToOneOverAllRankings) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 1.5);
  for (std::size_t k = 1; k <= 5; ++k) {
    GroupSamples g;
    for (std::size_t i = 0; i < k; ++i) g.push_back({n(rng), n(rng), 0.0, std::nullopt});
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0.0;
    do {
      GroupSamples ordered;
      for (auto i : perm) ordered.push_back(g[i]);
      total += std::exp(pl_ranking_logprob(ordered, 0.7));
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(total, 1.0, 1e-9) << "K=" << k;
  }
}

TEST(PlackettLuce, ShiftInvariant) {
  const auto g = group_from_s({0.4, -1.2, 2.0, 0.1}, {4, 3, 2, 1});
  auto shifted = g;
  for (auto& e : shifted) e.logp += 3.5;
  EXPECT_NEAR(pl_ranking_logprob(g, 1.3), pl_ranking_logprob(shifted, 1.3), 1e-12);
  EXPECT_NEAR(arpo_loss(g, {}), arpo_loss(shifted, {}), 1e-12);
}

TEST(PlackettLuce, NonFiniteThrows) {
  auto g = group_from_s({0.0, std::nan("")}, {1, 0});
  EXPECT_THROW(pl_ranking_logprob(g, 1.0), Error);
  EXPECT_THROW(arpo_loss(g, {}), Error);
}

TEST(ArpoLoss, Examples) {
  EXPECT_NEAR(arpo_loss(group_from_s({0.2, 0.2, 0.2, 0.2}, {1, 0, 0, 0}), {1.0, 1e-20, 4}), std::log(4.0), 1e-12);
  EXPECT_EQ(arpo_loss(group_from_s({0.2, -1.0, 3.0}, {2, 2, 2}), {}), 0.0);
  EXPECT_NEAR(arpo_loss(group_from_s({0.5, -0.5}, {1, 0}), {1.0, 1e-20, 2}), 0.31326168751822286, 1e-12);
}

TEST(ArpoLoss, SortsByRewardInternally) {
  const auto g = group_from_s({0.4, -1.2, 2.0}, {1, 3, 2});
  const auto sorted = sorted_by_preference(g);
  EXPECT_EQ(sorted[0].reward, 3);
  EXPECT_EQ(sorted[2].reward, 1);
  EXPECT_DOUBLE_EQ(arpo_loss(g, {}), arpo_loss(sorted, {}));
}

TEST(DpoLoss, Examples) {
  EXPECT_NEAR(dpo_loss(0.3, 0.3, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(dpo_loss(1.0, 0.0, 1.0), 0.31326168751822286, 1e-15);
  EXPECT_NEAR(dpo_loss(-800, 0, 1.0), 800.0, 1e-9);
}

TEST(ArpoLoss, TwoEntryGroupEqualsDpo) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_int_distribution<int> bi(0, 2);
  const double betas[] = {0.1, 1.0, 10.0};
  for (int trial = 0; trial < 1000; ++trial) {
    const double beta = betas[bi(rng)];
    const GroupEntry a{u(rng), u(rng), u(rng), std::nullopt};
    GroupEntry b{u(rng), u(rng), u(rng), std::nullopt};
    if (b.reward == a.reward) b.reward += 1.0;
    const auto& w = a.reward > b.reward ? a : b;
    const auto& l = a.reward > b.reward ? b : a;
    const double dpo = dpo_loss(w.logp - w.logp_ref, l.logp - l.logp_ref, beta);
    // Vanishing epsilon makes the top advantage exactly one.
    EXPECT_NEAR(arpo_loss({a, b}, {beta, 1e-20, 2}), dpo, 1e-12);
    // At the default epsilon the top advantage is d / (d + eps).
    const double d = std::abs(a.reward - b.reward);
    EXPECT_NEAR(arpo_loss({a, b}, {beta, 1e-8, 2}), dpo * d / (d + 1e-8), 1e-12);
  }
}

TEST(ArpoLoss, MonotoneInTopLogProb) {
  auto g = group_from_s({0.1, 0.4, -0.3, 0.0}, {4, 3, 2, 1});
  double prev = arpo_loss(g, {});
  for (int step = 0; step < 10; ++step) {
    g[0].logp += 0.25;
    const double cur = arpo_loss(g, {});
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(ArpoGradient, ZeroAdvantagesGiveZeroGradient) {
  std::mt19937_64 rng(1);
  auto pg = random_policy_group(rng, 4);
  pg.rewards.assign(4, 2.5);
  const auto g = arpo_gradient(make_group(pg.policy, pg), logp_grads(pg), {});
  for (double x : g) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(arpo_loss(make_group(pg.policy, pg), {}), 0.0);
}

TEST(ArpoGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  for (double beta : {0.1, 1.0, 10.0}) {
    for (std::size_t k : {2u, 3u, 4u, 8u}) {
      for (int trial = 0; trial < 5; ++trial) {
        const auto pg = random_policy_group(rng, k);
        const ArpoConfig cfg{beta, 1e-8, k};
        const auto g = arpo_gradient(make_group(pg.policy, pg), logp_grads(pg), cfg);
        EXPECT_LT(max_relative_error(g, finite_difference(pg, cfg, 1e-5)), 1e-4) << "beta " << beta << " K " << k;
      }
    }
  }
}

TEST(ArpoGradient, PairwiseFormMatchesForTwoEntries) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pg = random_policy_group(rng, 2);
    const auto group = make_group(pg.policy, pg);
    const auto grads = logp_grads(pg);
    const auto exact = arpo_gradient(group, grads, {});
    const auto pair = arpo_gradient_pairwise(group, grads, {});
    for (std::size_t i = 0; i < exact.size(); ++i) EXPECT_NEAR(pair[i], exact[i], 1e-12);
  }
}

TEST(ArpoGradient, PairwiseFormDiffersForLargerGroups) {
  // With three or more entries the pairwise expression is not the
  // derivative of the ranking loss; the gap is reported here.
  std::mt19937_64 rng(14);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto pg = random_policy_group(rng, 4);
    const auto group = make_group(pg.policy, pg);
    const auto grads = logp_grads(pg);
    worst = std::max(worst,
                     max_relative_error(arpo_gradient_pairwise(group, grads, {}), arpo_gradient(group, grads, {})));
  }
  RecordProperty("max_relative_gap", std::to_string(worst));
  EXPECT_GT(worst, 1e-3);
}

TEST(ArpoGradient, ShapeMismatch) {
  const auto g = group_from_s({0.1, 0.2}, {1, 0});
  std::vector<std::vector<double>> grads{{1.0, 2.0}};
  EXPECT_THROW(arpo_gradient(g, grads, {}), Error);
  grads.push_back({1.0});
  EXPECT_THROW(arpo_gradient(g, grads, {}), Error);
}

TEST(TruncatedArpo, Windows) {
  std::mt19937_64 rng(15);
  const auto pg = random_policy_group(rng, 3);
  const ArpoConfig cfg{};

  // Full window equals the plain loss.
  GroupSamples full;
  for (std::size_t i = 0; i < 3; ++i)
    full.push_back({sequence_logprob(pg.policy, pg.seqs[i]), sequence_logprob(pg.reference, pg.seqs[i]),
                    pg.rewards[i], Window{0, 6, 6}});
  EXPECT_DOUBLE_EQ(truncated_arpo_loss(full, cfg), arpo_loss(make_group(pg.policy, pg), cfg));

  // Empty windows: all implicit rewards vanish.
  GroupSamples empty;
  for (std::size_t i = 0; i < 3; ++i) {
    const Window w{2, 0, 6};
    empty.push_back({sequence_logprob(pg.policy, pg.seqs[i], 0, w), sequence_logprob(pg.reference, pg.seqs[i], 0, w),
                     pg.rewards[i], w});
  }
  const auto sorted = sorted_by_preference(empty);
  std::vector<double> r;
  for (const auto& e : sorted) r.push_back(e.reward);
  const auto a = advantages(r, cfg.epsilon);
  double expected = 0.0;
  for (std::size_t i = 0; i < 3; ++i) expected -= a[i] * std::log(1.0 / static_cast<double>(3 - i));
  EXPECT_NEAR(truncated_arpo_loss(empty, cfg), expected, 1e-12);

  // Log-ratio sums are additive over disjoint windows.
  for (const auto& s : pg.seqs) {
    const double left = sequence_logprob(pg.policy, s, 0, Window{0, 3, 6});
    const double right = sequence_logprob(pg.policy, s, 0, Window{3, 3, 6});
    EXPECT_NEAR(left + right, sequence_logprob(pg.policy, s), 1e-12);
  }

  auto bad = full;
  bad[1].window = Window{4, 4, 6};
  EXPECT_THROW(truncated_arpo_loss(bad, cfg), Error);
  bad[1].window.reset();
  EXPECT_THROW(truncated_arpo_loss(bad, cfg), Error);
}
