#include "quadrl/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "quadrl/error.hpp"

namespace quadrl {
namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

long parse_face_index(const std::string& token, std::size_t line_no) {
  const std::string head = token.substr(0, token.find('/'));
  long value = 0;
  auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
  if (ec != std::errc{} || ptr != head.data() + head.size() || value == 0)
    throw Error(ErrorCode::Parse, "bad face index '" + token + "' on line " + std::to_string(line_no));
  return value;
}

}  // namespace

Mesh read_obj(std::istream& in) {
  Mesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x >> v.y >> v.z))
        throw Error(ErrorCode::Parse, "bad vertex on line " + std::to_string(line_no));
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<std::uint32_t> ids;
      std::string tok;
      while (ls >> tok) {
        long v = parse_face_index(tok, line_no);
        const long n = static_cast<long>(mesh.vertices.size());
        if (v < 0) v = n + v + 1;
        if (v < 1 || v > n)
          throw Error(ErrorCode::Parse, "face index out of range on line " + std::to_string(line_no));
        ids.push_back(static_cast<std::uint32_t>(v - 1));
      }
      if (ids.size() == 3) {
        mesh.faces.push_back(Face::tri(ids[0], ids[1], ids[2]));
      } else if (ids.size() == 4) {
        mesh.faces.push_back(Face::quad(ids[0], ids[1], ids[2], ids[3]));
      } else {
        throw Error(ErrorCode::Parse, "only triangles and quads are supported (line " +
                                          std::to_string(line_no) + ")");
      }
    }
  }
  return mesh;
}

Mesh read_obj(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_obj(in);
}

void write_obj(std::ostream& out, const Mesh& mesh) {
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& f : mesh.faces) {
    out << 'f';
    for (auto i : f.indices()) out << ' ' << (i + 1);
    out << '\n';
  }
}

void write_obj(const std::filesystem::path& path, const Mesh& mesh) {
  auto out = open_out(path);
  write_obj(out, mesh);
}

std::vector<Vec3> read_xyz(std::istream& in) {
  std::vector<Vec3> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Vec3 p;
    if (!(ls >> p.x >> p.y >> p.z))
      throw Error(ErrorCode::Parse, "bad point on line " + std::to_string(line_no));
    pts.push_back(p);
  }
  return pts;
}

std::vector<Vec3> read_xyz(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_xyz(in);
}

void write_xyz(std::ostream& out, const std::vector<Vec3>& points) {
  out << std::setprecision(17);
  for (const auto& p : points) out << p.x << ' ' << p.y << ' ' << p.z << '\n';
}

void write_xyz(const std::filesystem::path& path, const std::vector<Vec3>& points) {
  auto out = open_out(path);
  write_xyz(out, points);
}

}  // namespace quadrl
