#include "quadrl/shapes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>

#include "quadrl/error.hpp"

namespace quadrl::shapes {

Mesh box(double sx, double sy, double sz) {
  Mesh m;
  for (int i = 0; i < 8; ++i) m.vertices.push_back({sx * (i & 1), sy * ((i >> 1) & 1), sz * ((i >> 2) & 1)});
  m.faces = {
      Face::quad(0, 2, 3, 1),  // -Z
      Face::quad(4, 5, 7, 6),  // +Z
      Face::quad(0, 1, 5, 4),  // -Y
      Face::quad(2, 6, 7, 3),  // +Y
      Face::quad(0, 4, 6, 2),  // -X
      Face::quad(1, 3, 7, 5),  // +X
  };
  return m;
}

Mesh lattice_box(int nx, int ny, int nz) {
  if (nx < 1 || ny < 1 || nz < 1) throw Error(ErrorCode::InvalidArgument, "lattice box needs at least one cell");
  const std::array<int, 3> n{nx, ny, nz};
  Mesh m;
  std::map<std::array<int, 3>, std::uint32_t> ids;
  auto vertex = [&](std::array<int, 3> p) {
    auto [it, fresh] = ids.emplace(p, static_cast<std::uint32_t>(m.vertices.size()));
    if (fresh) m.vertices.push_back({double(p[0]), double(p[1]), double(p[2])});
    return it->second;
  };
  for (int a = 0; a < 3; ++a) {
    const int u = (a + 1) % 3;
    const int v = (a + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      for (int i = 0; i < n[u]; ++i) {
        for (int j = 0; j < n[v]; ++j) {
          std::array<std::array<int, 3>, 4> c{};
          const int du[4] = {0, 1, 1, 0};
          const int dv[4] = {0, 0, 1, 1};
          for (int k = 0; k < 4; ++k) {
            c[k][a] = side * n[a];
            c[k][u] = i + du[k];
            c[k][v] = j + dv[k];
          }
          // (u, v) order faces +a; reverse it on the low side.
          if (side == 0) std::swap(c[1], c[3]);
          m.faces.push_back(Face::quad(vertex(c[0]), vertex(c[1]), vertex(c[2]), vertex(c[3])));
        }
      }
    }
  }
  return m;
}

Mesh open_cube() { return remove_faces(box(), {5}); }

Mesh grid(int nx, int ny) {
  if (nx < 1 || ny < 1) throw Error(ErrorCode::InvalidArgument, "grid needs at least one cell");
  Mesh m;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) m.vertices.push_back({double(i), double(j), 0.0});
  const auto w = static_cast<std::uint32_t>(nx + 1);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const auto a = static_cast<std::uint32_t>(j) * w + static_cast<std::uint32_t>(i);
      m.faces.push_back(Face::quad(a, a + 1, a + w + 1, a + w));
    }
  }
  return m;
}

Mesh band(int segments) {
  if (segments < 3) throw Error(ErrorCode::InvalidArgument, "band needs at least 3 segments");
  Mesh m;
  const auto n = static_cast<std::uint32_t>(segments);
  for (int ring = 0; ring < 2; ++ring) {
    for (std::uint32_t i = 0; i < n; ++i) {
      const double a = 2.0 * std::numbers::pi * i / n;
      m.vertices.push_back({std::cos(a), std::sin(a), double(ring)});
    }
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    m.faces.push_back(Face::quad(i, j, n + j, n + i));
  }
  return m;
}

Mesh torus(int u, int v, double major_radius, double minor_radius) {
  if (u < 3 || v < 3) throw Error(ErrorCode::InvalidArgument, "torus needs at least 3 segments per direction");
  Mesh m;
  const auto nu = static_cast<std::uint32_t>(u);
  const auto nv = static_cast<std::uint32_t>(v);
  for (std::uint32_t i = 0; i < nu; ++i) {
    const double th = 2.0 * std::numbers::pi * i / nu;
    for (std::uint32_t j = 0; j < nv; ++j) {
      const double ph = 2.0 * std::numbers::pi * j / nv;
      const double r = major_radius + minor_radius * std::cos(ph);
      m.vertices.push_back({r * std::cos(th), r * std::sin(th), minor_radius * std::sin(ph)});
    }
  }
  auto id = [&](std::uint32_t i, std::uint32_t j) { return (i % nu) * nv + (j % nv); };
  for (std::uint32_t i = 0; i < nu; ++i)
    for (std::uint32_t j = 0; j < nv; ++j)
      m.faces.push_back(Face::quad(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)));
  return m;
}

Mesh icosphere(int levels) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  const std::uint32_t f[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                  {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                  {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                  {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7}, {9, 8, 1}};
  for (const auto& tri : f) m.faces.push_back(Face::tri(tri[0], tri[1], tri[2]));
  for (auto& p : m.vertices) p = normalized(p);

  for (int level = 0; level < levels; ++level) {
    std::map<EdgeKey, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = make_edge(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      const auto id = static_cast<std::uint32_t>(m.vertices.size());
      m.vertices.push_back(normalized((m.vertices[a] + m.vertices[b]) * 0.5));
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Face> next;
    next.reserve(m.faces.size() * 4);
    for (const auto& face : m.faces) {
      const auto a = face.idx[0], b = face.idx[1], c = face.idx[2];
      const auto ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      next.push_back(Face::tri(a, ab, ca));
      next.push_back(Face::tri(b, bc, ab));
      next.push_back(Face::tri(c, ca, bc));
      next.push_back(Face::tri(ab, bc, ca));
    }
    m.faces = std::move(next);
  }
  return m;
}

Mesh square_triangles() {
  Mesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  m.faces = {Face::tri(0, 1, 2), Face::tri(0, 2, 3)};
  return m;
}

Mesh flip_winding(const Mesh& mesh) {
  Mesh out = mesh;
  for (auto& f : out.faces) std::reverse(f.idx.begin(), f.idx.begin() + f.arity);
  return out;
}

Mesh remove_faces(const Mesh& mesh, const std::vector<std::size_t>& face_ids) {
  Mesh out;
  out.vertices = mesh.vertices;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i)
    if (std::find(face_ids.begin(), face_ids.end(), i) == face_ids.end()) out.faces.push_back(mesh.faces[i]);
  return out;
}

Mesh merge(const Mesh& a, const Mesh& b) {
  Mesh out = a;
  const auto offset = static_cast<std::uint32_t>(a.vertices.size());
  out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (Face f : b.faces) {
    for (int k = 0; k < f.arity; ++k) f.idx[k] += offset;
    out.faces.push_back(f);
  }
  return out;
}

Mesh translate(const Mesh& mesh, Vec3 offset) {
  Mesh out = mesh;
  for (auto& v : out.vertices) v = v + offset;
  return out;
}

Mesh scale(const Mesh& mesh, double factor) {
  Mesh out = mesh;
  for (auto& v : out.vertices) v = v * factor;
  return out;
}

}  // namespace quadrl::shapes
