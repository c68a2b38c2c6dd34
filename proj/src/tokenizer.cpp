#include "quadrl/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "quadrl/error.hpp"

namespace quadrl {
namespace {

void write_vertex(FaceBlock& block, std::size_t slot, const IVec3& v, Token offset) {
  for (int a = 0; a < 3; ++a) block[slot * 3 + a] = static_cast<Token>(v[a]) + offset;
}

const IVec3& vertex_at(std::span<const IVec3> vertices, std::uint32_t i, Token special) {
  if (i >= vertices.size()) throw Error(ErrorCode::NonCanonicalFace, "face index out of range");
  const IVec3& v = vertices[i];
  for (auto c : v)
    if (c < 0 || static_cast<Token>(c) >= special)
      throw Error(ErrorCode::CoordinateOutOfRange, "coordinate " + std::to_string(c));
  return v;
}

// Decodes the offset of a fourth-vertex component: 0 for [0,S), 1 for [S,2S),
// 2 for [2S,3S).
int component_flag(Token t, Token special) { return static_cast<int>(t / special); }

struct BlockDecode {
  bool triangle = false;
  std::array<IVec3, 4> v{};
  int flag = 0;
};

// Shared by detokenize and validate_tokens. Returns the first issue found, if
// any; `out` holds the decoded vertices either way (last-wins flag).
std::optional<TokenIssueKind> decode_block(std::span<const Token> b, Token special, BlockDecode& out) {
  const Token pad = 3 * special;
  for (auto t : b)
    if (t > pad) return TokenIssueKind::TokenOutOfRange;
  const int n_pad = static_cast<int>(std::count(b.begin() + 9, b.end(), pad));
  if (n_pad != 0 && n_pad != 3) return TokenIssueKind::MixedPadding;
  for (int i = 0; i < 9; ++i)
    if (b[i] >= special) return TokenIssueKind::CoordinateOutOfRange;
  for (int i = 0; i < 3; ++i)
    out.v[i] = {static_cast<std::int32_t>(b[3 * i]), static_cast<std::int32_t>(b[3 * i + 1]),
                static_cast<std::int32_t>(b[3 * i + 2])};
  if (n_pad == 3) {
    out.triangle = true;
    return std::nullopt;
  }
  out.triangle = false;
  std::optional<TokenIssueKind> issue;
  int first_flag = -1;
  out.flag = 0;
  for (int a = 0; a < 3; ++a) {
    const Token t = b[9 + a];
    const int f = component_flag(t, special);
    out.v[3][a] = static_cast<std::int32_t>(t - static_cast<Token>(f) * special);
    // Mirrors the reference decoder: a component below S leaves the flag alone.
    if (f > 0) out.flag = f;
    if (first_flag < 0) {
      first_flag = f;
    } else if (f != first_flag) {
      issue = TokenIssueKind::InconsistentFlag;
    }
  }
  return issue;
}

ErrorCode to_error(TokenIssueKind k) {
  switch (k) {
    case TokenIssueKind::LengthNotMultipleOf12: return ErrorCode::LengthNotMultipleOf12;
    case TokenIssueKind::TokenOutOfRange: return ErrorCode::TokenOutOfRange;
    case TokenIssueKind::CoordinateOutOfRange: return ErrorCode::TokenOutOfRange;
    case TokenIssueKind::MixedPadding: return ErrorCode::MixedPadding;
    case TokenIssueKind::InconsistentFlag: return ErrorCode::InconsistentFlag;
  }
  return ErrorCode::TokenOutOfRange;
}

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  if (!in.read(reinterpret_cast<char*>(b), 2)) throw Error(ErrorCode::Parse, "truncated token file");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorCode::Parse, "truncated token file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

constexpr std::uint16_t kQtokVersion = 1;

}  // namespace

std::string_view to_string(TokenIssueKind kind) {
  switch (kind) {
    case TokenIssueKind::LengthNotMultipleOf12: return "LengthNotMultipleOf12";
    case TokenIssueKind::TokenOutOfRange: return "TokenOutOfRange";
    case TokenIssueKind::CoordinateOutOfRange: return "CoordinateOutOfRange";
    case TokenIssueKind::MixedPadding: return "MixedPadding";
    case TokenIssueKind::InconsistentFlag: return "InconsistentFlag";
  }
  return "Unknown";
}

FaceBlock serialize_face(const Face& face, std::span<const IVec3> vertices, int bits) {
  const Token special = Token{1} << bits;
  FaceBlock block{};
  if (face.has_repeated_index()) throw Error(ErrorCode::NonCanonicalFace, "face repeats a vertex");
  if (face.arity == 3) {
    if (face.idx[0] != face.min_index())
      throw Error(ErrorCode::NonCanonicalFace, "triangle does not start at its minimum index");
    for (int i = 0; i < 3; ++i) write_vertex(block, i, vertex_at(vertices, face.idx[i], special), 0);
    block[9] = block[10] = block[11] = 3 * special;
    return block;
  }
  if (face.arity != 4) throw Error(ErrorCode::NonCanonicalFace, "arity must be 3 or 4");

  const auto& f = face.idx;
  const auto i_min = static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
  std::array<std::uint32_t, 4> order{};
  Token flag = 0;
  if (i_min == 0 && f[1] < f[3]) {
    order = {f[0], f[1], f[2], f[3]};
    flag = 0;
  } else if (i_min == 0) {
    order = {f[0], f[2], f[3], f[1]};
    flag = 1;
  } else if (i_min == 1) {
    order = {f[1], f[2], f[0], f[3]};
    flag = 2;
  } else {
    order = {f[3], f[0], f[2], f[1]};
    flag = 2;
  }
  for (int i = 0; i < 3; ++i) write_vertex(block, i, vertex_at(vertices, order[i], special), 0);
  write_vertex(block, 3, vertex_at(vertices, order[3], special), flag * special);
  return block;
}

TokenSequence tokenize(const QuantizedMesh& qmesh) {
  TokenSequence seq;
  seq.bits = qmesh.bits;
  seq.tokens.reserve(qmesh.faces.size() * kTokensPerFace);
  for (const Face& f : qmesh.faces) {
    const FaceBlock b = serialize_face(f, qmesh.vertices, qmesh.bits);
    seq.tokens.insert(seq.tokens.end(), b.begin(), b.end());
  }
  return seq;
}

DetokenizeResult detokenize(const TokenSequence& seq, Strictness strictness) {
  const bool strict = strictness == Strictness::Strict;
  const Token special = seq.special();
  DetokenizeResult res;
  res.mesh.bits = seq.bits;
  const std::size_t rem = seq.tokens.size() % kTokensPerFace;
  if (rem != 0) {
    if (strict)
      throw Error(ErrorCode::LengthNotMultipleOf12, "length " + std::to_string(seq.tokens.size()));
    res.dropped_tokens = rem;
  }

  // Faces are first collected against raw coordinates, then re-indexed into
  // a sorted, deduplicated vertex list.
  std::vector<std::array<IVec3, 4>> raw;
  std::vector<std::uint8_t> arity;
  const std::size_t blocks = seq.tokens.size() / kTokensPerFace;
  for (std::size_t bi = 0; bi < blocks; ++bi) {
    std::span<const Token> b(seq.tokens.data() + bi * kTokensPerFace, kTokensPerFace);
    BlockDecode d;
    const auto issue = decode_block(b, special, d);
    if (issue) {
      if (strict) throw Error(to_error(*issue), "face block " + std::to_string(bi));
      if (*issue != TokenIssueKind::InconsistentFlag) {
        ++res.dropped_faces;
        continue;
      }
    }
    std::array<IVec3, 4> f{};
    if (d.triangle) {
      f = {d.v[0], d.v[1], d.v[2], IVec3{}};
    } else if (d.flag == 0) {
      f = {d.v[0], d.v[1], d.v[2], d.v[3]};
    } else if (d.flag == 1) {
      f = {d.v[0], d.v[3], d.v[1], d.v[2]};
    } else {
      f = {d.v[2], d.v[0], d.v[1], d.v[3]};
    }
    const int n = d.triangle ? 3 : 4;
    bool repeated = false;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) repeated = repeated || f[i] == f[j];
    if (repeated) {
      if (strict) throw Error(ErrorCode::InvalidFace, "face block " + std::to_string(bi) + " repeats a vertex");
      ++res.dropped_faces;
      continue;
    }
    raw.push_back(f);
    arity.push_back(static_cast<std::uint8_t>(n));
  }

  auto& verts = res.mesh.vertices;
  for (std::size_t i = 0; i < raw.size(); ++i)
    for (int k = 0; k < arity[i]; ++k) verts.push_back(raw[i][k]);
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  auto index_of = [&](const IVec3& v) {
    return static_cast<std::uint32_t>(std::lower_bound(verts.begin(), verts.end(), v) - verts.begin());
  };
  res.mesh.faces.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Face face;
    face.arity = arity[i];
    for (int k = 0; k < arity[i]; ++k) face.idx[k] = index_of(raw[i][k]);
    res.mesh.faces.push_back(face);
  }
  return res;
}

std::vector<TokenIssue> validate_tokens(const TokenSequence& seq) {
  std::vector<TokenIssue> issues;
  const Token special = seq.special();
  const std::size_t blocks = seq.tokens.size() / kTokensPerFace;
  for (std::size_t bi = 0; bi < blocks; ++bi) {
    std::span<const Token> b(seq.tokens.data() + bi * kTokensPerFace, kTokensPerFace);
    BlockDecode d;
    if (auto issue = decode_block(b, special, d)) issues.push_back({*issue, bi});
  }
  if (seq.tokens.size() % kTokensPerFace != 0)
    issues.push_back({TokenIssueKind::LengthNotMultipleOf12, blocks});
  return issues;
}

void write_qtok(std::ostream& out, const TokenSequence& seq) {
  if (seq.bits > 14) throw Error(ErrorCode::InvalidArgument, "bits > 14 does not fit u16 tokens");
  out.write("QTOK", 4);
  put_u16(out, kQtokVersion);
  put_u16(out, static_cast<std::uint16_t>(seq.bits));
  put_u64(out, seq.tokens.size());
  for (Token t : seq.tokens) put_u16(out, static_cast<std::uint16_t>(t));
  if (!out) throw Error(ErrorCode::Io, "token write failed");
}

void write_qtok(const std::filesystem::path& path, const TokenSequence& seq) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_qtok(out, seq);
}

TokenSequence read_qtok(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "QTOK")
    throw Error(ErrorCode::Parse, "not a QTOK file");
  const auto version = get_u16(in);
  if (version != kQtokVersion) throw Error(ErrorCode::Parse, "unsupported QTOK version " + std::to_string(version));
  TokenSequence seq;
  seq.bits = get_u16(in);
  if (seq.bits < 2 || seq.bits > 14) throw Error(ErrorCode::Parse, "bad bit count");
  const auto count = get_u64(in);
  seq.tokens.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) seq.tokens.push_back(get_u16(in));
  return seq;
}

TokenSequence read_qtok(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_qtok(in);
}

void write_token_text(std::ostream& out, const TokenSequence& seq) {
  out << "# bits " << seq.bits << '\n';
  for (Token t : seq.tokens) out << t << '\n';
}

TokenSequence read_token_text(std::istream& in) {
  TokenSequence seq;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      int bits = 0;
      if (ls >> key >> bits && key == "bits") seq.bits = bits;
      continue;
    }
    try {
      seq.tokens.push_back(static_cast<Token>(std::stoul(line)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::Parse, "bad token line '" + line + "'");
    }
  }
  return seq;
}

}  // namespace quadrl
