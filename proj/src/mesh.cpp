#include "quadrl/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "quadrl/error.hpp"

namespace quadrl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::DegenerateBounds: return "DegenerateBounds";
    case ErrorCode::InvalidFace: return "InvalidFace";
    case ErrorCode::NonCanonicalFace: return "NonCanonicalFace";
    case ErrorCode::CoordinateOutOfRange: return "CoordinateOutOfRange";
    case ErrorCode::LengthNotMultipleOf12: return "LengthNotMultipleOf12";
    case ErrorCode::MixedPadding: return "MixedPadding";
    case ErrorCode::InconsistentFlag: return "InconsistentFlag";
    case ErrorCode::TokenOutOfRange: return "TokenOutOfRange";
    case ErrorCode::NoArea: return "NoArea";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::NonFiniteLogProb: return "NonFiniteLogProb";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::TokenOutOfVocab: return "TokenOutOfVocab";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::StarvationTimeout: return "StarvationTimeout";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

std::uint32_t Face::min_index() const {
  auto ix = indices();
  return *std::min_element(ix.begin(), ix.end());
}

bool Face::has_repeated_index() const {
  for (int i = 0; i < arity; ++i)
    for (int j = i + 1; j < arity; ++j)
      if (idx[i] == idx[j]) return true;
  return false;
}

bool operator==(const Face& a, const Face& b) {
  if (a.arity != b.arity) return false;
  return std::equal(a.idx.begin(), a.idx.begin() + a.arity, b.idx.begin());
}

bool operator<(const Face& a, const Face& b) {
  // Lexicographic on the used indices; a triangle that is a prefix of a quad
  // sorts first.
  return std::lexicographical_compare(a.idx.begin(), a.idx.begin() + a.arity, b.idx.begin(),
                                      b.idx.begin() + b.arity);
}

Face rotate_min_first(const Face& f) {
  auto ix = f.indices();
  const auto shift = static_cast<int>(std::min_element(ix.begin(), ix.end()) - ix.begin());
  Face out = f;
  for (int i = 0; i < f.arity; ++i) out.idx[i] = f.idx[(i + shift) % f.arity];
  return out;
}

bool same_cycle(const Face& a, const Face& b) {
  if (a.arity != b.arity) return false;
  for (int s = 0; s < a.arity; ++s) {
    bool ok = true;
    for (int i = 0; i < a.arity && ok; ++i) ok = a.idx[i] == b.idx[(i + s) % b.arity];
    if (ok) return true;
  }
  return false;
}

Aabb Mesh::bounds() const {
  Aabb box;
  for (const auto& v : vertices) box.expand(v);
  return box;
}

std::size_t Mesh::quad_count() const {
  return static_cast<std::size_t>(
      std::count_if(faces.begin(), faces.end(), [](const Face& f) { return f.is_quad(); }));
}

void validate(const Mesh& mesh) {
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const Face& f = mesh.faces[i];
    if (f.arity != 3 && f.arity != 4)
      throw Error(ErrorCode::InvalidFace, "face " + std::to_string(i) + " has arity " +
                                              std::to_string(f.arity));
    for (auto v : f.indices())
      if (v >= mesh.vertices.size())
        throw Error(ErrorCode::InvalidFace, "face " + std::to_string(i) + " index out of range");
    if (f.has_repeated_index())
      throw Error(ErrorCode::InvalidFace, "face " + std::to_string(i) + " repeats a vertex");
  }
}

Mesh normalize_mesh(const Mesh& mesh, double half_extent) {
  if (mesh.vertices.empty()) throw Error(ErrorCode::EmptyMesh, "normalize_mesh");
  const Aabb box = mesh.bounds();
  const Vec3 ext = box.extent();
  const double longest = std::max({ext.x, ext.y, ext.z});
  if (!(longest > 0.0)) throw Error(ErrorCode::DegenerateBounds, "all vertices coincide");
  const Vec3 c = box.center();
  const double scale = 2.0 * half_extent / longest;
  Mesh out;
  out.faces = mesh.faces;
  out.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) out.vertices.push_back((v - c) * scale);
  return out;
}

QuantizeResult quantize_vertices(const Mesh& mesh, int bits) {
  if (bits < 2 || bits > 14) throw Error(ErrorCode::InvalidArgument, "bits must be in [2, 14]");
  if (mesh.vertices.empty()) throw Error(ErrorCode::EmptyMesh, "quantize_vertices");
  const Aabb box = mesh.bounds();
  QuantizeResult res;
  res.v_min = box.lo;
  res.v_max = box.hi;
  res.mesh.bits = bits;
  res.mesh.faces = mesh.faces;
  const double levels = std::ldexp(1.0, bits);
  const auto top = static_cast<std::int32_t>(levels) - 1;
  for (int a = 0; a < 3; ++a)
    if (!(box.hi[a] > box.lo[a])) res.degenerate_axes.push_back(a);
  res.mesh.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) {
    IVec3 q{};
    for (int a = 0; a < 3; ++a) {
      const double range = box.hi[a] - box.lo[a];
      if (!(range > 0.0)) {
        q[a] = 0;
        continue;
      }
      // std::round rounds half away from zero.
      const double r = std::round((v[a] - box.lo[a]) / range * levels);
      q[a] = std::clamp(static_cast<std::int32_t>(r), 0, top);
    }
    res.mesh.vertices.push_back(q);
  }
  return res;
}

Mesh dequantize(const QuantizedMesh& qmesh, Vec3 v_min, Vec3 v_max) {
  const double levels = std::ldexp(1.0, qmesh.bits);
  Mesh out;
  out.faces = qmesh.faces;
  out.vertices.reserve(qmesh.vertices.size());
  for (const auto& q : qmesh.vertices) {
    Vec3 v;
    for (int a = 0; a < 3; ++a) v[a] = v_min[a] + q[a] / levels * (v_max[a] - v_min[a]);
    out.vertices.push_back(v);
  }
  return out;
}

Mesh dequantize_unit(const QuantizedMesh& qmesh, double half_extent) {
  return dequantize(qmesh, Vec3{-half_extent, -half_extent, -half_extent},
                    Vec3{half_extent, half_extent, half_extent});
}

CanonicalizeResult canonicalize(const QuantizedMesh& qmesh) {
  CanonicalizeResult res;
  res.mesh.bits = qmesh.bits;

  // Sorted unique coordinates define the new vertex order.
  std::vector<IVec3> uniq = qmesh.vertices;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  res.merged_vertices = qmesh.vertices.size() - uniq.size();

  std::vector<std::uint32_t> remap(qmesh.vertices.size());
  for (std::size_t i = 0; i < qmesh.vertices.size(); ++i) {
    auto it = std::lower_bound(uniq.begin(), uniq.end(), qmesh.vertices[i]);
    remap[i] = static_cast<std::uint32_t>(it - uniq.begin());
  }

  res.mesh.vertices = std::move(uniq);
  res.mesh.faces.reserve(qmesh.faces.size());
  for (const Face& f : qmesh.faces) {
    Face g = f;
    for (int i = 0; i < f.arity; ++i) g.idx[i] = remap.at(f.idx[i]);
    if (g.has_repeated_index()) {
      ++res.dropped_faces;
      continue;
    }
    res.mesh.faces.push_back(rotate_min_first(g));
  }
  std::sort(res.mesh.faces.begin(), res.mesh.faces.end());
  return res;
}

bool is_canonical(const QuantizedMesh& qmesh) {
  const std::int32_t top = (1 << qmesh.bits) - 1;
  for (const auto& v : qmesh.vertices)
    for (auto c : v)
      if (c < 0 || c > top) return false;
  for (std::size_t i = 1; i < qmesh.vertices.size(); ++i)
    if (!(qmesh.vertices[i - 1] < qmesh.vertices[i])) return false;
  for (std::size_t i = 0; i < qmesh.faces.size(); ++i) {
    const Face& f = qmesh.faces[i];
    if (f.arity != 3 && f.arity != 4) return false;
    if (f.has_repeated_index() || f.idx[0] != f.min_index()) return false;
    for (auto v : f.indices())
      if (v >= qmesh.vertices.size()) return false;
    if (i > 0 && qmesh.faces[i] < qmesh.faces[i - 1]) return false;
  }
  return true;
}

bool EdgeAdjacency::is_boundary(const EdgeKey& e) const {
  auto it = edge_faces.find(e);
  return it != edge_faces.end() && it->second.size() == 1;
}

std::size_t EdgeAdjacency::boundary_edge_count() const {
  return static_cast<std::size_t>(std::count_if(
      edge_faces.begin(), edge_faces.end(), [](const auto& kv) { return kv.second.size() == 1; }));
}

std::vector<std::uint32_t> EdgeAdjacency::boundary_faces() const {
  std::vector<std::uint32_t> out;
  for (const auto& [edge, faces] : edge_faces)
    if (faces.size() == 1) out.push_back(faces.front());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EdgeAdjacency build_edge_adjacency(std::span<const Face> faces) {
  EdgeAdjacency adj;
  adj.face_edges.resize(faces.size());
  for (std::size_t fi = 0; fi < faces.size(); ++fi) {
    const Face& f = faces[fi];
    for (int i = 0; i < f.arity; ++i) {
      const EdgeKey e = make_edge(f.idx[i], f.idx[(i + 1) % f.arity]);
      adj.face_edges[fi].push_back(e);
      auto& list = adj.edge_faces[e];
      // A face can only be listed once per edge even if it is degenerate.
      if (list.empty() || list.back() != fi) list.push_back(static_cast<std::uint32_t>(fi));
    }
  }
  return adj;
}

Mesh submesh(const Mesh& mesh, std::size_t first, std::size_t count) {
  Mesh out;
  const std::size_t last = std::min(mesh.faces.size(), first + count);
  std::unordered_map<std::uint32_t, std::uint32_t> remap;
  for (std::size_t fi = first; fi < last; ++fi) {
    Face f = mesh.faces[fi];
    for (int i = 0; i < f.arity; ++i) {
      auto [it, inserted] = remap.try_emplace(f.idx[i], static_cast<std::uint32_t>(out.vertices.size()));
      if (inserted) out.vertices.push_back(mesh.vertices.at(f.idx[i]));
      f.idx[i] = it->second;
    }
    out.faces.push_back(f);
  }
  return out;
}

}  // namespace quadrl
