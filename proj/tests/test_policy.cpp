#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "quadrl/error.hpp"
#include "quadrl/policy.hpp"

using namespace quadrl;

TEST(SequenceLogprob, UniformPolicy) {
  const ToyPolicy p(7, 1, 3, 2);
  const std::vector<Token> seq{1, 4, 6, 0, 2};
  EXPECT_NEAR(sequence_logprob(p, seq, 1), -5 * std::log(7.0), 1e-12);
  EXPECT_EQ(sequence_logprob(p, seq, 0, Window{2, 0, 5}), 0.0);
}

TEST(SequenceLogprob, BigramHandEvaluation) {
  ToyPolicy p(2, 1);
  // Rows are indexed by the previous token; the first position sees token 0.
  auto r0 = p.row(0);
  r0[0] = 1.0;
  r0[1] = 0.0;
  auto r1 = p.row(1);
  r1[0] = -1.0;
  r1[1] = 2.0;
  const std::vector<Token> seq{1, 1, 0};
  const double l0 = std::log(std::exp(0.0) / (std::exp(1.0) + std::exp(0.0)));
  const double l1 = std::log(std::exp(2.0) / (std::exp(-1.0) + std::exp(2.0)));
  const double l2 = std::log(std::exp(-1.0) / (std::exp(-1.0) + std::exp(2.0)));
  EXPECT_NEAR(sequence_logprob(p, seq), l0 + l1 + l2, 1e-12);
  EXPECT_NEAR(sequence_logprob(p, seq, 0, Window{1, 2, 3}), l1 + l2, 1e-12);
}

TEST(SequenceLogprob, Errors) {
  const ToyPolicy p(3, 1);
  const std::vector<Token> bad{0, 3};
  EXPECT_THROW(sequence_logprob(p, bad), Error);
  const std::vector<Token> ok{0, 1};
  EXPECT_THROW(sequence_logprob(p, ok, 0, Window{1, 2, 2}), Error);
}

TEST(SequenceLogprob, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  ToyPolicy p(4, 1, 2, 2);
  for (auto& x : p.parameters()) x = n(rng);
  const std::vector<Token> seq{3, 1, 1, 0, 2, 3};
  const Window w{1, 4, 6};
  const auto g = sequence_logprob_gradient(p, seq, 1, w);
  for (std::size_t i = 0; i < g.size(); ++i) {
    ToyPolicy a = p, b = p;
    a.parameters()[i] += 1e-6;
    b.parameters()[i] -= 1e-6;
    const double fd = (sequence_logprob(a, seq, 1, w) - sequence_logprob(b, seq, 1, w)) / 2e-6;
    EXPECT_NEAR(g[i], fd, 1e-8);
  }
}

TEST(PolicySample, ForcedSequence) {
  ToyPolicy p(3, 1);
  // 0 -> 2 -> 1 -> 0 -> 2 ...
  p.row(0)[2] = 1e3;
  p.row(2)[1] = 1e3;
  p.row(1)[0] = 1e3;
  const auto s = policy_sample(p, 5, nullptr, 9);
  EXPECT_EQ(s, (std::vector<Token>{2, 1, 0, 2, 1}));
}

TEST(PolicySample, StopRuleAndDeterminism) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  ToyPolicy p(6, 1, 4);
  for (auto& x : p.parameters()) x = n(rng);
  const auto a = policy_sample(p, 40, nullptr, 123);
  EXPECT_EQ(a.size(), 40u);
  EXPECT_EQ(a, policy_sample(p, 40, nullptr, 123));
  const auto stopped = policy_sample(p, 40, [](std::span<const Token> s) { return s.back() == 5; }, 123);
  EXPECT_TRUE(stopped.size() == 40u || stopped.back() == 5);
  for (std::size_t i = 0; i + 1 < stopped.size(); ++i) EXPECT_NE(stopped[i], 5u);
}

TEST(PolicySample, EmpiricalFrequenciesMatchSoftmax) {
  ToyPolicy p(4, 0);
  const std::vector<double> logits{0.5, -1.0, 1.5, 0.0};
  std::copy(logits.begin(), logits.end(), p.row(0).begin());
  const auto lp = p.log_probs(0);
  const int draws = 100000;
  std::vector<int> counts(4, 0);
  for (int s = 0; s < draws; ++s) ++counts[policy_sample(p, 1, nullptr, static_cast<std::uint64_t>(s))[0]];
  for (int k = 0; k < 4; ++k) {
    const double prob = std::exp(lp[k]);
    const double sd = std::sqrt(draws * prob * (1 - prob));
    EXPECT_NEAR(counts[k], draws * prob, 3 * sd) << k;
  }
}

TEST(SgdStep, Updates) {
  ToyPolicy p(3, 0);
  const std::vector<double> zero(3, 0.0);
  const auto moved = sgd_step(p, zero, 0.5);
  EXPECT_TRUE(std::equal(moved.parameters().begin(), moved.parameters().end(), zero.begin()));
  const std::vector<double> g{1.0, -2.0, 0.5};
  const auto same = sgd_step(p, g, 0.0);
  EXPECT_TRUE(std::equal(same.parameters().begin(), same.parameters().end(), p.parameters().begin()));
  EXPECT_THROW(sgd_step(p, std::vector<double>(2), 0.1), Error);
}

TEST(SgdStep, DescendsQuadraticSurrogate) {
  ToyPolicy p(4, 0);
  const std::vector<double> target{1, -2, 3, 0.5};
  auto surrogate = [&](const ToyPolicy& q) {
    double s = 0;
    for (std::size_t i = 0; i < 4; ++i) s += (q.parameters()[i] - target[i]) * (q.parameters()[i] - target[i]);
    return s;
  };
  std::vector<double> g(4);
  for (std::size_t i = 0; i < 4; ++i) g[i] = 2 * (p.parameters()[i] - target[i]);
  EXPECT_LT(surrogate(sgd_step(p, g, 0.1)), surrogate(p));
}

TEST(Nll, GradientDescentFitsDemonstration) {
  ToyPolicy p(5, 1, 6);
  const std::vector<Demonstration> data{{0, {1, 2, 3, 4, 0, 1}}};
  std::vector<double> g;
  const double before = nll_loss(p, data, &g);
  for (int i = 0; i < 50; ++i) {
    nll_loss(p, data, &g);
    p = sgd_step(p, g, 1.0);
  }
  EXPECT_LT(nll_loss(p, data), 0.1 * before);
}

TEST(Checkpoint, RoundTrip) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  ToyPolicy p(5, 1, 3, 2);
  p.version = 7;
  for (auto& x : p.parameters()) x = n(rng);
  std::stringstream buf;
  save_checkpoint(buf, p);
  const ToyPolicy q = load_checkpoint(buf);
  EXPECT_EQ(q.version, 7u);
  EXPECT_EQ(q.vocab(), 5u);
  EXPECT_EQ(q.order(), 1);
  EXPECT_EQ(q.period(), 3u);
  EXPECT_EQ(q.conditions(), 2u);
  EXPECT_TRUE(std::equal(p.parameters().begin(), p.parameters().end(), q.parameters().begin()));
  std::stringstream junk("nope");
  EXPECT_THROW(load_checkpoint(junk), Error);
}
