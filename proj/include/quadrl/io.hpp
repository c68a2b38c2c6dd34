#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "quadrl/mesh.hpp"

namespace quadrl {

// Wavefront OBJ subset: `v x y z` and 3/4-index `f` records. Slashed forms
// (`f 1/2/3 ...`) are accepted; only the vertex index is kept. Negative
// (relative) indices are resolved. Other record types are ignored.
Mesh read_obj(std::istream& in);
Mesh read_obj(const std::filesystem::path& path);
void write_obj(std::ostream& out, const Mesh& mesh);
void write_obj(const std::filesystem::path& path, const Mesh& mesh);

// One "x y z" per line; blank lines and '#' comments are skipped.
std::vector<Vec3> read_xyz(std::istream& in);
std::vector<Vec3> read_xyz(const std::filesystem::path& path);
void write_xyz(std::ostream& out, const std::vector<Vec3>& points);
void write_xyz(const std::filesystem::path& path, const std::vector<Vec3>& points);

}  // namespace quadrl
