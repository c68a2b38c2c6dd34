#pragma once

#include <algorithm>
#include <array>
#include <random>
#include <set>
#include <vector>

#include "quadrl/mesh.hpp"
#include "quadrl/tokenizer.hpp"

namespace quadrl::fixtures {

/// Random canonical mixed mesh: distinct coordinates, every vertex used.
inline QuantizedMesh random_canonical_mesh(std::mt19937_64& rng, std::size_t max_faces, int bits = 10) {
  const std::int32_t top = (1 << bits) - 1;
  std::uniform_int_distribution<std::int32_t> coord(0, top);
  std::uniform_int_distribution<std::size_t> face_n(1, max_faces);
  const std::size_t faces = face_n(rng);
  const std::size_t verts = std::max<std::size_t>(4, faces + 3);
  std::set<IVec3> uniq;
  while (uniq.size() < verts) uniq.insert({coord(rng), coord(rng), coord(rng)});

  QuantizedMesh raw;
  raw.bits = bits;
  raw.vertices.assign(uniq.begin(), uniq.end());
  std::shuffle(raw.vertices.begin(), raw.vertices.end(), rng);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(verts - 1));
  std::bernoulli_distribution is_quad(0.6);
  for (std::size_t i = 0; i < faces; ++i) {
    std::array<std::uint32_t, 4> ids{};
    const int arity = is_quad(rng) ? 4 : 3;
    for (int k = 0; k < arity; ++k) {
      std::uint32_t v;
      do {
        v = pick(rng);
      } while (std::find(ids.begin(), ids.begin() + k, v) != ids.begin() + k);
      ids[k] = v;
    }
    raw.faces.push_back(arity == 4 ? Face::quad(ids[0], ids[1], ids[2], ids[3]) : Face::tri(ids[0], ids[1], ids[2]));
  }
  QuantizedMesh m = canonicalize(raw).mesh;
  // Drop unreferenced vertices so the round trip can compare vertex sets.
  std::vector<char> used(m.vertices.size(), 0);
  for (const auto& f : m.faces)
    for (auto v : f.indices()) used[v] = 1;
  QuantizedMesh out;
  out.bits = bits;
  std::vector<std::uint32_t> remap(m.vertices.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    if (!used[i]) continue;
    remap[i] = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.push_back(m.vertices[i]);
  }
  for (Face f : m.faces) {
    for (int k = 0; k < f.arity; ++k) f.idx[k] = remap[f.idx[k]];
    out.faces.push_back(f);
  }
  return out;
}

using CoordFace = std::vector<IVec3>;

/// Faces as coordinate cycles rotated to start at their smallest coordinate,
/// so two meshes compare equal up to indexing and cyclic rotation.
inline std::multiset<CoordFace> face_cycles(const QuantizedMesh& m) {
  std::multiset<CoordFace> out;
  for (const auto& f : m.faces) {
    CoordFace c;
    for (auto v : f.indices()) c.push_back(m.vertices[v]);
    std::rotate(c.begin(), std::min_element(c.begin(), c.end()), c.end());
    out.insert(c);
  }
  return out;
}

/// Triangles compared as exact tuples (no rotation allowed).
inline std::multiset<CoordFace> exact_triangles(const QuantizedMesh& m) {
  std::multiset<CoordFace> out;
  for (const auto& f : m.faces) {
    if (f.is_quad()) continue;
    CoordFace c;
    for (auto v : f.indices()) c.push_back(m.vertices[v]);
    out.insert(c);
  }
  return out;
}

inline std::set<IVec3> vertex_set(const QuantizedMesh& m) { return {m.vertices.begin(), m.vertices.end()}; }

/// True when detokenize(tokenize(m)) keeps vertices, triangles exactly and
/// quads up to rotation.
inline bool round_trips(const QuantizedMesh& m) {
  const auto back = detokenize(tokenize(m), Strictness::Strict).mesh;
  return vertex_set(back) == vertex_set(m) && exact_triangles(back) == exact_triangles(m) &&
         face_cycles(back) == face_cycles(m);
}

}  // namespace quadrl::fixtures
