#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "quadrl/mesh.hpp"
#include "quadrl/vec3.hpp"

namespace quadrl {

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length

  /// Normalizes `dir`.
  static Ray toward(Vec3 origin, Vec3 dir) { return {origin, normalized(dir)}; }
};

struct RayHit {
  std::uint32_t face = 0;
  std::uint32_t triangle = 0;
  double t = 0.0;
  Vec3 normal;  // unit, counter-clockwise winding is the front side
};

/// Hits within this of perpendicular to the ray count as front hits.
inline constexpr double kGrazingTolerance = 1e-9;

/// n . (-d) < threshold, ignoring grazing hits.
bool is_back_facing(const RayHit& hit, const Ray& ray, double angle_threshold = 0.0);

struct Triangle {
  Vec3 a, b, c;
  Vec3 normal;  // unit, zero for degenerate triangles
  std::uint32_t face = 0;
};

/// Möller–Trumbore with inclusive edges. Returns t >= 0 on a hit.
std::optional<double> intersect(const Triangle& tri, const Ray& ray);

/// Triangle soup derived from a mesh (quads split along their 0-2 diagonal)
/// with a bounding-volume hierarchy. Immutable after construction.
class TriangulatedView {
 public:
  explicit TriangulatedView(const Mesh& mesh);

  std::span<const Triangle> triangles() const { return triangles_; }
  const Aabb& bounds() const { return bounds_; }
  std::size_t face_count() const { return face_count_; }

  std::optional<RayHit> first_hit(const Ray& ray) const;

 private:
  struct Node {
    Aabb box;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t first = 0;
    std::uint32_t count = 0;  // > 0 marks a leaf
  };

  std::uint32_t build(std::uint32_t first, std::uint32_t count);

  std::vector<Triangle> triangles_;
  std::vector<Node> nodes_;
  Aabb bounds_;
  std::size_t face_count_ = 0;
};

inline std::optional<RayHit> raycast_first_hit(const TriangulatedView& view, const Ray& ray) {
  return view.first_hit(ray);
}

/// Six planar grids (one per signed axis) of per_axis^2 origins placed
/// outside `bounds`. Each origin yields an axis-aligned ray followed by a
/// copy whose direction is perturbed by a random vector of length `jitter`
/// and renormalized. Total 12 * per_axis^2 rays.
std::vector<Ray> orthogonal_ray_grid(const Aabb& bounds, int per_axis, double jitter, std::uint64_t seed);

struct SurfaceSamples {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<std::uint32_t> faces;
};

/// Area-uniform samples; quads are split along their stored 0-2 diagonal.
SurfaceSamples sample_surface(const Mesh& mesh, std::size_t count, std::uint64_t seed);

inline std::vector<Vec3> sample_surface_points(const Mesh& mesh, std::size_t count, std::uint64_t seed) {
  return sample_surface(mesh, count, seed).points;
}

/// Static 3-D kd-tree with exact nearest-neighbour queries. Nodes split at
/// the median of their widest axis.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  struct Neighbor {
    std::uint32_t index;
    double distance;
  };

  /// Ties resolve to the lowest input index.
  Neighbor nearest(Vec3 query) const;
  /// True when some point lies within `radius` (inclusive) of `query`.
  bool any_within(Vec3 query, double radius) const;
  std::size_t size() const { return items_.size(); }

 private:
  void build(std::uint32_t lo, std::uint32_t hi);
  void search(std::uint32_t lo, std::uint32_t hi, Vec3 q, std::uint32_t& best, double& best_d2) const;
  bool probe(std::uint32_t lo, std::uint32_t hi, Vec3 q, double r2) const;

  struct Item {
    Vec3 p;
    std::uint32_t index;  // input position
    std::uint32_t axis;   // split axis of the node centred here
  };

  std::vector<Item> items_;
};

double hausdorff_distance(std::span<const Vec3> a, std::span<const Vec3> b);

/// Mean nearest-neighbour distance a->b plus mean b->a.
double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b);

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

F1Score f1_score(std::span<const Vec3> pred, std::span<const Vec3> gt, double threshold = 0.01);

/// Mean |n_pred . n_gt| over nearest-neighbour correspondences, averaged over
/// both directions.
double normal_consistency(const Mesh& pred, const Mesh& gt, std::size_t count, std::uint64_t seed);

}  // namespace quadrl
