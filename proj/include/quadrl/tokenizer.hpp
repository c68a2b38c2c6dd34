#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "quadrl/mesh.hpp"

namespace quadrl {

using Token = std::uint32_t;

inline constexpr std::size_t kTokensPerFace = 12;

/// Flat face-block token stream. Coordinates occupy [0, S); a quad's fourth
/// vertex carries a diagonal flag as an offset of flag * S; 3S pads triangles.
struct TokenSequence {
  std::vector<Token> tokens;
  int bits = 10;

  Token special() const { return Token{1} << bits; }
  Token padding() const { return 3 * special(); }
  std::size_t vocab_size() const { return 3 * special() + 1; }
  std::size_t face_count() const { return tokens.size() / kTokensPerFace; }
};

/// Which diagonal of a quad the fourth vertex closes; stored as 0, 1 or 2.
enum class DiagonalFlag : std::uint8_t { Zero = 0, One = 1, Two = 2 };

using FaceBlock = std::array<Token, kTokensPerFace>;

FaceBlock serialize_face(const Face& face, std::span<const IVec3> vertices, int bits);

TokenSequence tokenize(const QuantizedMesh& qmesh);

enum class Strictness { Strict, Permissive };

struct DetokenizeResult {
  QuantizedMesh mesh;
  std::size_t dropped_faces = 0;
  std::size_t dropped_tokens = 0;  // trailing partial block (permissive only)
};

DetokenizeResult detokenize(const TokenSequence& seq, Strictness strictness = Strictness::Strict);

enum class TokenIssueKind {
  LengthNotMultipleOf12,
  TokenOutOfRange,
  CoordinateOutOfRange,
  MixedPadding,
  InconsistentFlag,
};

std::string_view to_string(TokenIssueKind kind);

struct TokenIssue {
  TokenIssueKind kind;
  std::size_t block;  // face-block index; for the length issue, the partial block index
};

/// Empty when `seq` satisfies every TokenSequence invariant.
std::vector<TokenIssue> validate_tokens(const TokenSequence& seq);

// Binary token file: "QTOK", u16 version, u16 bits, u64 count, then u16
// tokens, all little-endian.
void write_qtok(std::ostream& out, const TokenSequence& seq);
void write_qtok(const std::filesystem::path& path, const TokenSequence& seq);
TokenSequence read_qtok(std::istream& in);
TokenSequence read_qtok(const std::filesystem::path& path);

// Debug text form: one token per line, preceded by a "# bits <n>" comment.
void write_token_text(std::ostream& out, const TokenSequence& seq);
TokenSequence read_token_text(std::istream& in);

}  // namespace quadrl
