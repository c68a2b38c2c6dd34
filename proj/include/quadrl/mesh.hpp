#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "quadrl/vec3.hpp"

namespace quadrl {

/// A triangle or quad as an ordered index tuple. `arity` is 3 or 4; the
/// unused fourth slot of a triangle is ignored.
struct Face {
  std::array<std::uint32_t, 4> idx{};
  std::uint8_t arity = 3;

  static Face tri(std::uint32_t a, std::uint32_t b, std::uint32_t c) { return {{a, b, c, 0}, 3}; }
  static Face quad(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
    return {{a, b, c, d}, 4};
  }

  bool is_quad() const { return arity == 4; }
  std::span<const std::uint32_t> indices() const { return {idx.data(), arity}; }
  std::uint32_t min_index() const;
  bool has_repeated_index() const;

  friend bool operator==(const Face& a, const Face& b);
  friend bool operator<(const Face& a, const Face& b);
};

/// Rotates the cycle so the minimum index comes first. Orientation is kept.
Face rotate_min_first(const Face& f);

/// True when `a` and `b` describe the same oriented cycle.
bool same_cycle(const Face& a, const Face& b);

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  Aabb bounds() const;
  std::size_t quad_count() const;
};

/// Throws InvalidFace when an index is out of range, repeated, or the arity
/// is not 3/4.
void validate(const Mesh& mesh);

using IVec3 = std::array<std::int32_t, 3>;

struct QuantizedMesh {
  std::vector<IVec3> vertices;
  std::vector<Face> faces;
  int bits = 10;
};

struct QuantizeResult {
  QuantizedMesh mesh;
  Vec3 v_min;
  Vec3 v_max;
  /// Axes whose extent was zero; every coordinate on them maps to 0.
  std::vector<int> degenerate_axes;
};

struct CanonicalizeResult {
  QuantizedMesh mesh;
  std::size_t dropped_faces = 0;
  std::size_t merged_vertices = 0;
};

/// Uniform scale + bbox-center shift so the longest axis spans [-0.95, 0.95].
Mesh normalize_mesh(const Mesh& mesh, double half_extent = 0.95);

/// Per-axis quantization round((v - min) / (max - min) * 2^bits), clamped to
/// [0, 2^bits - 1]. Rounding is half-away-from-zero.
QuantizeResult quantize_vertices(const Mesh& mesh, int bits = 10);

/// Inverse of quantize_vertices for a known per-axis range.
Mesh dequantize(const QuantizedMesh& qmesh, Vec3 v_min, Vec3 v_max);

/// Maps coordinates onto the fixed normalized cube [-0.95, 0.95) using the
/// same q / 2^bits convention. Used when the original range is unknown.
Mesh dequantize_unit(const QuantizedMesh& qmesh, double half_extent = 0.95);

CanonicalizeResult canonicalize(const QuantizedMesh& qmesh);

bool is_canonical(const QuantizedMesh& qmesh);

using EdgeKey = std::pair<std::uint32_t, std::uint32_t>;

inline EdgeKey make_edge(std::uint32_t a, std::uint32_t b) {
  return a < b ? EdgeKey{a, b} : EdgeKey{b, a};
}

/// Undirected edge -> incident faces. Edges iterate in ascending (min, max)
/// order, which is the canonical traversal order used elsewhere.
struct EdgeAdjacency {
  std::map<EdgeKey, std::vector<std::uint32_t>> edge_faces;
  std::vector<std::vector<EdgeKey>> face_edges;

  std::size_t edge_count() const { return edge_faces.size(); }
  bool is_boundary(const EdgeKey& e) const;
  std::size_t boundary_edge_count() const;
  /// Faces that own at least one boundary edge.
  std::vector<std::uint32_t> boundary_faces() const;
};

EdgeAdjacency build_edge_adjacency(std::span<const Face> faces);
inline EdgeAdjacency build_edge_adjacency(const Mesh& mesh) { return build_edge_adjacency(mesh.faces); }

/// Keeps only faces whose ids lie in [first, first + count) and the vertices
/// they reference.
Mesh submesh(const Mesh& mesh, std::size_t first, std::size_t count);

}  // namespace quadrl
