#include <gtest/gtest.h>

#include <set>

#include "quadrl/error.hpp"
#include "quadrl/shapes.hpp"
#include "quadrl/toy_task.hpp"

using namespace quadrl;

namespace {

double signed_volume(const Mesh& m) {
  double v = 0.0;
  for (const auto& f : m.faces) {
    const auto ids = f.indices();
    for (std::size_t k = 1; k + 1 < ids.size(); ++k)
      v += dot(m.vertices[ids[0]], cross(m.vertices[ids[k]], m.vertices[ids[k + 1]])) / 6.0;
  }
  return v;
}

ToyTaskConfig small_task() {
  ToyTaskConfig cfg;
  cfg.eval_samples = 16;
  return cfg;
}

}  // namespace

TEST(LatticeBox, ClosedOutwardQuads) {
  for (auto [nx, ny, nz] : {std::array{1, 1, 1}, std::array{2, 1, 1}, std::array{1, 1, 3}, std::array{2, 2, 1}}) {
    const Mesh m = shapes::lattice_box(nx, ny, nz);
    EXPECT_EQ(m.faces.size(), static_cast<std::size_t>(2 * (nx * ny + ny * nz + nz * nx)));
    EXPECT_EQ(m.quad_count(), m.faces.size());
    const auto adj = build_edge_adjacency(m);
    for (const auto& [edge, faces] : adj.edge_faces) EXPECT_EQ(faces.size(), 2u);
    EXPECT_NEAR(signed_volume(m), nx * ny * nz, 1e-12);
    EXPECT_EQ(static_cast<long>(m.vertices.size()) - static_cast<long>(adj.edge_count()) +
                  static_cast<long>(m.faces.size()),
              2);
  }
  EXPECT_THROW(shapes::lattice_box(0, 1, 1), Error);
}

TEST(ToyCondition, TargetsRoundTripAndPassGates) {
  const ToyTask task(small_task());
  ASSERT_EQ(task.conditions().size(), 2u);
  for (std::size_t c = 0; c < task.conditions().size(); ++c) {
    const auto& cond = task.conditions()[c];
    EXPECT_EQ(cond.tokens.size(), 12 * cond.target.faces.size());
    const auto back = detokenize(TokenSequence{cond.tokens, 3});
    EXPECT_EQ(back.mesh.vertices, cond.target.vertices);
    const auto r = task.score(c, cond.tokens);
    EXPECT_TRUE(r.gated) << cond.name << " hd " << r.hausdorff << " bad " << r.n_bad_faces;
    EXPECT_EQ(r.n_bad_faces, 0u);
    EXPECT_LT(r.hausdorff, 0.1);
    EXPECT_DOUBLE_EQ(r.total, 0.1 * static_cast<double>(r.n_quad_rings) +
                                  static_cast<double>(r.n_quad_lines * r.n_quad_lines));
  }
  EXPECT_EQ(task.conditions()[0].target.faces.size(), 6u);
  EXPECT_EQ(task.conditions()[1].target.faces.size(), 10u);
  EXPECT_THROW(toy_shape("sphere"), Error);
}

TEST(ToyTask, WindowMapsBlocksToDecodedFaces) {
  const ToyTask task(small_task());
  auto tokens = task.conditions()[1].tokens;
  // Block 0 becomes undecodable, so block b maps to decoded face b - 1.
  for (std::size_t i = 0; i < 12; ++i) tokens[i] = 24;
  const Window w{12, 24, tokens.size()};
  const auto r = task.score_window(1, tokens, w);
  EXPECT_FALSE(r.gated);
  EXPECT_EQ(r.total, 0.0);

  const std::vector<Token> middle(tokens.begin() + 12, tokens.begin() + 36);
  const Mesh piece = dequantize_unit(detokenize(TokenSequence{middle, 3}).mesh);
  const auto flow = quad_flow_analysis(piece);
  EXPECT_EQ(r.n_quad_rings, flow.rings);
  EXPECT_EQ(r.n_quad_lines, flow.lines);

  EXPECT_THROW(task.score_window(1, tokens, Window{6, 24, tokens.size()}), Error);
  EXPECT_THROW(task.score_window(1, tokens, Window{108, 24, tokens.size()}), Error);
}

TEST(ToyTask, FullWindowEqualsFullScore) {
  const ToyTask task(small_task());
  const auto& t = task.conditions()[0].tokens;
  const auto a = task.score(0, t);
  const auto b = task.score_window(0, t, Window{0, t.size(), t.size()});
  EXPECT_EQ(a.total, b.total);
  EXPECT_EQ(a.n_quad_rings, b.n_quad_rings);
}

TEST(ToyTask, GenerateGroupsShareOffsets) {
  const ToyTask task(small_task());
  ToyPolicy p = task.pretrain(task.blank_policy());
  p.version = 3;
  for (std::uint64_t ticket : {0u, 1u, 5u}) {
    const auto groups = task.generate(p, ticket);
    ASSERT_EQ(groups.size(), 4u);
    std::set<const std::vector<Token>*> seqs;
    for (const auto& g : groups) {
      EXPECT_EQ(g.condition, ticket % 2);
      EXPECT_EQ(g.version, 3u);
      ASSERT_EQ(g.samples.size(), 4u);
      EXPECT_NO_THROW(validate_group(g));
      for (const auto& s : g.samples) {
        EXPECT_EQ(s.window.m, g.samples[0].window.m);
        EXPECT_EQ(s.window.m % 12, 0u);
        EXPECT_EQ(s.window.w, 48u);
        EXPECT_EQ(s.window.length, task.sequence_length(g.condition));
        EXPECT_TRUE(std::isfinite(s.reward));
        seqs.insert(s.sequence.get());
      }
    }
    // K sequences are reused across the truncations.
    EXPECT_EQ(seqs.size(), 4u);
    const auto again = task.generate(p, ticket);
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(*groups[g].samples[k].sequence, *again[g].samples[k].sequence);
        EXPECT_EQ(groups[g].samples[k].reward, again[g].samples[k].reward);
      }
  }
}

TEST(ToyTask, PretrainingRaisesPassRate) {
  const ToyTask task(small_task());
  const auto blank = task.blank_policy();
  EXPECT_EQ(blank.vocab(), 25u);
  EXPECT_EQ(blank.period(), 120u);
  const auto e0 = task.evaluate(blank);
  const auto tuned = task.pretrain(blank);
  const auto e1 = task.evaluate(tuned);
  EXPECT_EQ(e0.gate_pass_rate, 0.0);
  EXPECT_GT(e1.gate_pass_rate, 0.0);
  EXPECT_GT(sequence_logprob(tuned, task.conditions()[0].tokens, 0),
            sequence_logprob(blank, task.conditions()[0].tokens, 0));
  const auto e2 = task.evaluate(tuned);
  EXPECT_EQ(e1.mean_reward, e2.mean_reward);
  EXPECT_EQ(e1.samples, 32u);
}

TEST(ToyRun, ShortRunPublishesIncreasingVersions) {
  ToyRunConfig cfg;
  cfg.task.eval_samples = 8;
  cfg.trainer.schedule = {.n1 = 50, .n2 = 10, .t = 1, .b = 8, .s1 = 40, .s2 = 8, .sigma = 8};
  cfg.trainer.learning_rate = 5.0;
  cfg.trainer.checkpoints = 4;
  const auto r = run_toy(cfg);
  ASSERT_EQ(r.checkpoints.size(), 5u);
  for (std::size_t i = 0; i < r.checkpoints.size(); ++i) EXPECT_EQ(r.checkpoints[i].version, i);
  EXPECT_EQ(r.run.log.checkpoints, (std::vector<std::uint64_t>{1, 2, 3, 4}));
  EXPECT_TRUE(r.version_consistent);
  EXPECT_EQ(r.run.rollout_failures, 0u);
}

TEST(ToyRun, DefaultRunImproves) {
  const auto r = run_toy(default_toy_run());
  ASSERT_EQ(r.checkpoints.size(), 6u);
  EXPECT_TRUE(r.version_consistent);
  EXPECT_GT(r.checkpoints[5].eval.mean_reward, r.checkpoints[1].eval.mean_reward);
  for (std::size_t v = 2; v <= 5; ++v)
    EXPECT_GE(r.checkpoints[v].eval.gate_pass_rate, r.checkpoints[v - 1].eval.gate_pass_rate);
}
