#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "quadrl/geometry.hpp"
#include "quadrl/mesh.hpp"

namespace quadrl {

struct RewardConfig {
  double w_qr = 0.1;
  double theta_ray = 1.0;
  double theta_hd = 0.1;
  double theta_angle = 0.0;
  double theta_ratio = 0.0005;
  int per_axis = 32;                  // ray grid resolution for the pre-check
  double jitter = 0.02;               // direction perturbation of the pre-check grid
  int probe_count = 16;
  double probe_radius_fraction = 0.01;  // of the bounding-box diagonal
  double viewpoint_distance = 2.0;      // in bounding radii from the box center
  std::size_t hd_samples = 8192;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on negative thresholds or probe_count < 1.
  void validate() const;
};

struct PrecheckResult {
  double invalid_ratio = 0.0;
  bool passed = true;
  std::size_t hits = 0;
  std::size_t errors = 0;
};

/// Casts the orthogonal grid and counts back-facing first hits.
PrecheckResult global_integrity_precheck(const TriangulatedView& view, const RewardConfig& cfg);

/// Six points at center +- viewpoint_distance * R along each axis, where R is
/// half the bounding-box diagonal.
std::vector<Vec3> external_viewpoints(const Aabb& bounds, double distance_factor);

/// Vertices visible from some viewpoint whose neighbourhood probes strike a
/// back face. Sorted ascending.
std::vector<std::uint32_t> locate_bad_vertices(const Mesh& mesh, const TriangulatedView& view,
                                               const RewardConfig& cfg);

/// Faces incident to a bad vertex that also own a boundary edge. Sorted.
std::vector<std::uint32_t> identify_bad_faces(const Mesh& mesh, const EdgeAdjacency& adjacency,
                                              std::span<const std::uint32_t> bad_vertices);

/// Full pipeline: empty when the pre-check passes.
std::vector<std::uint32_t> find_bad_faces(const Mesh& mesh, const RewardConfig& cfg);

struct QuadFlow {
  std::size_t rings = 0;
  std::size_t lines = 0;
  std::size_t path_edges = 0;       // edges covered by rings and lines
  std::size_t untouched_edges = 0;  // edges with no incident quad
};

QuadFlow quad_flow_analysis(const Mesh& mesh);

struct RewardReport {
  std::size_t n_bad_faces = 0;
  double hausdorff = 0.0;
  std::size_t n_quad_rings = 0;
  std::size_t n_quad_lines = 0;
  bool gated = false;
  double total = 0.0;
};

/// w_qr * rings + lines^2 when both gates pass, else 0.
double gated_total(RewardReport& report, const RewardConfig& cfg);

RewardReport compute_reward(const Mesh& mesh, std::span<const Vec3> condition_points, const RewardConfig& cfg);

/// Full-mesh quantities shared by every window of one mesh.
struct RewardContext {
  std::vector<std::uint32_t> bad_faces;
  double hausdorff = 0.0;
};

RewardContext prepare_reward(const Mesh& mesh, std::span<const Vec3> condition_points, const RewardConfig& cfg);

/// Window report from a prepared context. An empty window is ungated.
RewardReport window_reward(const Mesh& mesh, const RewardContext& ctx, std::size_t first_face, std::size_t face_count,
                           const RewardConfig& cfg);

/// Bad faces and the Hausdorff distance come from the full mesh; only bad
/// faces inside [first_face, first_face + face_count) count, and quad flow
/// is measured on the window's sub-mesh.
RewardReport truncated_reward(const Mesh& mesh, std::size_t first_face, std::size_t face_count,
                              std::span<const Vec3> condition_points, const RewardConfig& cfg);

}  // namespace quadrl
