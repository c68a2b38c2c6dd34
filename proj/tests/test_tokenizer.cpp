#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "quadrl/error.hpp"
#include "quadrl/tokenizer.hpp"
#include "support.hpp"

using namespace quadrl;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

// Vertex i has coordinates (10 i, 10 i + 1, 10 i + 2).
std::vector<IVec3> ladder(int n) {
  std::vector<IVec3> v;
  for (int i = 0; i < n; ++i) v.push_back({10 * i, 10 * i + 1, 10 * i + 2});
  return v;
}

std::vector<Token> coords(const IVec3& v, Token offset = 0) {
  return {Token(v[0]) + offset, Token(v[1]) + offset, Token(v[2]) + offset};
}

FaceBlock block_of(std::initializer_list<std::vector<Token>> parts) {
  FaceBlock b{};
  std::size_t k = 0;
  for (const auto& p : parts)
    for (auto t : p) b[k++] = t;
  return b;
}

}  // namespace

TEST(SerializeFace, TrianglePadsWithThreeS) {
  const auto v = ladder(3);
  const FaceBlock b = serialize_face(Face::tri(0, 1, 2), v, 10);
  EXPECT_EQ(b, block_of({coords(v[0]), coords(v[1]), coords(v[2]), {3072, 3072, 3072}}));
}

TEST(SerializeFace, QuadBranches) {
  const auto v = ladder(4);
  // i_min = 0, f1 < f3
  EXPECT_EQ(serialize_face(Face::quad(0, 1, 2, 3), v, 10),
            block_of({coords(v[0]), coords(v[1]), coords(v[2]), coords(v[3])}));
  // i_min = 0, f1 > f3
  EXPECT_EQ(serialize_face(Face::quad(0, 3, 1, 2), v, 10),
            block_of({coords(v[0]), coords(v[1]), coords(v[2]), coords(v[3], 1024)}));
  // i_min = 1: order (f1, f2, f0, f3), flag 2
  EXPECT_EQ(serialize_face(Face::quad(2, 0, 1, 3), v, 10),
            block_of({coords(v[0]), coords(v[1]), coords(v[2]), coords(v[3], 2048)}));
  // i_min = 3: order (f3, f0, f2, f1), flag 2
  EXPECT_EQ(serialize_face(Face::quad(1, 3, 2, 0), v, 10),
            block_of({coords(v[0]), coords(v[1]), coords(v[2]), coords(v[3], 2048)}));
}

TEST(SerializeFace, Errors) {
  const auto v = ladder(3);
  EXPECT_EQ(code_of([&] { serialize_face(Face::tri(1, 0, 2), v, 10); }), ErrorCode::NonCanonicalFace);
  EXPECT_EQ(code_of([&] { serialize_face(Face::tri(0, 1, 1), v, 10); }), ErrorCode::NonCanonicalFace);
  std::vector<IVec3> bad = {{0, 0, 0}, {1024, 0, 0}, {1, 1, 1}};
  EXPECT_EQ(code_of([&] { serialize_face(Face::tri(0, 1, 2), bad, 10); }), ErrorCode::CoordinateOutOfRange);
}

TEST(Tokenize, EmptyAndComposition) {
  QuantizedMesh empty;
  EXPECT_TRUE(tokenize(empty).tokens.empty());

  QuantizedMesh m;
  m.vertices = ladder(5);
  m.faces = {Face::tri(0, 1, 4), Face::quad(1, 2, 3, 4)};
  const auto seq = tokenize(m);
  ASSERT_EQ(seq.tokens.size(), 24u);
  const auto a = serialize_face(m.faces[0], m.vertices, 10);
  const auto b = serialize_face(m.faces[1], m.vertices, 10);
  EXPECT_TRUE(std::equal(a.begin(), a.end(), seq.tokens.begin()));
  EXPECT_TRUE(std::equal(b.begin(), b.end(), seq.tokens.begin() + 12));
  EXPECT_EQ(seq.vocab_size(), 3073u);
}

TEST(Detokenize, TriangleAndFlagTwoBlocks) {
  const auto v = ladder(4);
  TokenSequence seq;
  const auto tri = block_of({coords(v[0]), coords(v[1]), coords(v[2]), {3072, 3072, 3072}});
  const auto quad = block_of({coords(v[0]), coords(v[1]), coords(v[2]), coords(v[3], 2048)});
  seq.tokens.assign(tri.begin(), tri.end());
  seq.tokens.insert(seq.tokens.end(), quad.begin(), quad.end());
  const auto res = detokenize(seq);
  ASSERT_EQ(res.mesh.faces.size(), 2u);
  EXPECT_EQ(res.mesh.faces[0], Face::tri(0, 1, 2));
  EXPECT_EQ(res.mesh.faces[1], Face::quad(2, 0, 1, 3));
}

TEST(Detokenize, RoundTripRandomMeshes) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = fixtures::random_canonical_mesh(rng, 80);
    ASSERT_TRUE(fixtures::round_trips(m)) << "trial " << trial;
    EXPECT_TRUE(validate_tokens(tokenize(m)).empty());
  }
}

TEST(Detokenize, NonCanonicalQuadRotationsRoundTripUpToRotation) {
  // Every rotation of a quad serializes to a block that decodes to the same cycle.
  const auto v = ladder(4);
  const Face base = Face::quad(0, 2, 3, 1);
  for (int r = 0; r < 4; ++r) {
    Face f = base;
    std::rotate(f.idx.begin(), f.idx.begin() + r, f.idx.begin() + 4);
    QuantizedMesh m;
    m.vertices = v;
    m.faces = {f};
    const auto back = detokenize(tokenize(m)).mesh;
    EXPECT_EQ(fixtures::face_cycles(back), fixtures::face_cycles(m));
  }
}

TEST(Detokenize, FlagComponentsAreConsistent) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto seq = tokenize(fixtures::random_canonical_mesh(rng, 40));
    for (std::size_t b = 0; b < seq.face_count(); ++b) {
      const Token* t = seq.tokens.data() + b * 12;
      if (t[11] == seq.padding()) continue;
      EXPECT_EQ(t[9] / seq.special(), t[10] / seq.special());
      EXPECT_EQ(t[9] / seq.special(), t[11] / seq.special());
      for (int k = 0; k < 9; ++k) EXPECT_LT(t[k], seq.special());
    }
  }
}

TEST(Detokenize, StrictErrors) {
  const auto v = ladder(4);
  TokenSequence seq;
  auto set = [&](FaceBlock b) { seq.tokens.assign(b.begin(), b.end()); };

  set(block_of({coords(v[0]), coords(v[1]), coords(v[2]), {3072, 5, 3072}}));
  EXPECT_EQ(code_of([&] { detokenize(seq); }), ErrorCode::MixedPadding);

  set(block_of({coords(v[0]), coords(v[1]), coords(v[2]), {30 + 1024, 31 + 2048, 32 + 2048}}));
  EXPECT_EQ(code_of([&] { detokenize(seq); }), ErrorCode::InconsistentFlag);

  set(block_of({coords(v[0]), coords(v[1]), coords(v[2]), {3073, 3073, 3073}}));
  EXPECT_EQ(code_of([&] { detokenize(seq); }), ErrorCode::TokenOutOfRange);

  // Tokens 0-8 of a block must be plain coordinates.
  set(block_of({{2000, 0, 0}, coords(v[1]), coords(v[2]), coords(v[3])}));
  EXPECT_EQ(code_of([&] { detokenize(seq); }), ErrorCode::TokenOutOfRange);

  seq.tokens.assign(13, 0);
  EXPECT_EQ(code_of([&] { detokenize(seq); }), ErrorCode::LengthNotMultipleOf12);
}

TEST(Detokenize, PermissiveSkipsAndCounts) {
  const auto v = ladder(4);
  TokenSequence seq;
  auto push = [&](FaceBlock b) { seq.tokens.insert(seq.tokens.end(), b.begin(), b.end()); };
  push(block_of({coords(v[0]), coords(v[1]), coords(v[2]), {3072, 3072, 3072}}));
  push(block_of({coords(v[0]), coords(v[1]), coords(v[2]), {3072, 5, 3072}}));
  push(block_of({coords(v[0]), coords(v[1]), coords(v[2]), {3073, 3073, 3073}}));
  seq.tokens.push_back(7);
  const auto res = detokenize(seq, Strictness::Permissive);
  EXPECT_EQ(res.mesh.faces.size(), 1u);
  EXPECT_EQ(res.dropped_faces, 2u);
  EXPECT_EQ(res.dropped_tokens, 1u);
}

TEST(Detokenize, PermissiveInconsistentFlagIsLastWins) {
  const auto v = ladder(4);
  TokenSequence seq;
  // Components decode flags (1, 2, 1): the last component sets flag 1.
  const auto b = block_of({coords(v[0]), coords(v[1]), coords(v[2]), {30 + 1024, 31 + 2048, 32 + 1024}});
  seq.tokens.assign(b.begin(), b.end());
  const auto res = detokenize(seq, Strictness::Permissive);
  ASSERT_EQ(res.mesh.faces.size(), 1u);
  EXPECT_EQ(res.dropped_faces, 0u);
  EXPECT_EQ(res.mesh.faces[0], Face::quad(0, 3, 1, 2));
}

TEST(ValidateTokens, Reports) {
  QuantizedMesh m;
  m.vertices = ladder(3);
  m.faces = {Face::tri(0, 1, 2)};
  auto seq = tokenize(m);
  EXPECT_TRUE(validate_tokens(seq).empty());

  auto bad = seq;
  bad.tokens[10] = 4;
  auto issues = validate_tokens(bad);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, TokenIssueKind::MixedPadding);
  EXPECT_EQ(issues[0].block, 0u);

  bad = seq;
  bad.tokens.push_back(0);
  issues = validate_tokens(bad);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, TokenIssueKind::LengthNotMultipleOf12);
}

TEST(TokenFiles, BinaryAndTextRoundTrip) {
  std::mt19937_64 rng(9);
  const auto seq = tokenize(fixtures::random_canonical_mesh(rng, 30));
  std::stringstream bin;
  write_qtok(bin, seq);
  EXPECT_EQ(bin.str().size(), 16 + 2 * seq.tokens.size());
  EXPECT_EQ(bin.str().substr(0, 4), "QTOK");
  const auto back = read_qtok(bin);
  EXPECT_EQ(back.tokens, seq.tokens);
  EXPECT_EQ(back.bits, seq.bits);

  std::stringstream text;
  write_token_text(text, seq);
  const auto back2 = read_token_text(text);
  EXPECT_EQ(back2.tokens, seq.tokens);
  EXPECT_EQ(back2.bits, seq.bits);
}

TEST(TokenFiles, RejectsBadMagic) {
  std::stringstream bin("XXXX0000000000000000");
  EXPECT_EQ(code_of([&] { read_qtok(bin); }), ErrorCode::Parse);
}
