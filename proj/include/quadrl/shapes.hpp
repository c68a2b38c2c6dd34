#pragma once

#include <cstddef>
#include <vector>

#include "quadrl/mesh.hpp"

namespace quadrl::shapes {

// Procedural meshes with counter-clockwise (outward) winding.

/// Axis-aligned all-quad box spanning [0, sx] x [0, sy] x [0, sz].
/// Vertex i sits at corner (i & 1, (i >> 1) & 1, (i >> 2) & 1).
Mesh box(double sx = 1.0, double sy = 1.0, double sz = 1.0);

/// Closed all-quad surface of an nx x ny x nz lattice of unit cells.
Mesh lattice_box(int nx, int ny, int nz);

/// Unit cube without its +X face.
Mesh open_cube();

/// nx by ny quads on the z = 0 plane covering [0, nx] x [0, ny], facing +Z.
Mesh grid(int nx, int ny);

/// Open tube of `segments` quads around the Z axis (radius 1, height 1).
Mesh band(int segments);

/// All-quad torus with `u` segments around the main circle and `v` around the tube.
Mesh torus(int u, int v, double major_radius = 0.6, double minor_radius = 0.25);

/// Icosahedron subdivided `levels` times and projected onto the unit sphere
/// (20 * 4^levels triangles).
Mesh icosphere(int levels);

/// Two triangles split from a unit square (a fan, both facing +Z).
Mesh square_triangles();

Mesh flip_winding(const Mesh& mesh);
Mesh remove_faces(const Mesh& mesh, const std::vector<std::size_t>& face_ids);

/// Concatenates meshes, offsetting indices.
Mesh merge(const Mesh& a, const Mesh& b);

Mesh translate(const Mesh& mesh, Vec3 offset);
Mesh scale(const Mesh& mesh, double factor);

}  // namespace quadrl::shapes
