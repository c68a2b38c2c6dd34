#include "quadrl/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <optional>
#include <set>

#include "quadrl/error.hpp"
#include "quadrl/random.hpp"

namespace quadrl {

void RewardConfig::validate() const {
  if (w_qr < 0 || theta_ray < 0 || theta_hd < 0 || theta_ratio < 0 || jitter < 0 || probe_radius_fraction < 0)
    throw Error(ErrorCode::InvalidArgument, "reward thresholds must be non-negative");
  if (probe_count < 1) throw Error(ErrorCode::InvalidArgument, "probe_count must be >= 1");
  if (per_axis < 1) throw Error(ErrorCode::InvalidArgument, "per_axis must be >= 1");
  if (hd_samples < 1) throw Error(ErrorCode::InvalidArgument, "hd_samples must be >= 1");
}

PrecheckResult global_integrity_precheck(const TriangulatedView& view, const RewardConfig& cfg) {
  PrecheckResult r;
  if (view.triangles().empty()) return r;
  const auto rays = orthogonal_ray_grid(view.bounds(), cfg.per_axis, cfg.jitter, derive_seed(cfg.seed, {1}));
  for (const auto& ray : rays) {
    auto hit = view.first_hit(ray);
    if (!hit) continue;
    ++r.hits;
    if (is_back_facing(*hit, ray, cfg.theta_angle)) ++r.errors;
  }
  if (r.hits > 0) r.invalid_ratio = static_cast<double>(r.errors) / static_cast<double>(r.hits);
  r.passed = r.invalid_ratio <= cfg.theta_ratio;
  return r;
}

std::vector<Vec3> external_viewpoints(const Aabb& bounds, double distance_factor) {
  const Vec3 c = bounds.center();
  const double d = distance_factor * 0.5 * bounds.diagonal();
  std::vector<Vec3> pts;
  for (int axis = 0; axis < 3; ++axis) {
    for (double sign : {1.0, -1.0}) {
      Vec3 p = c;
      p[axis] += sign * d;
      pts.push_back(p);
    }
  }
  return pts;
}

namespace {

Vec3 random_in_ball(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  while (true) {
    const Vec3 p{uni(rng), uni(rng), uni(rng)};
    if (dot(p, p) <= 1.0) return p * radius;
  }
}

}  // namespace

std::vector<std::uint32_t> locate_bad_vertices(const Mesh& mesh, const TriangulatedView& view,
                                               const RewardConfig& cfg) {
  std::vector<std::uint32_t> bad;
  if (view.triangles().empty()) return bad;
  const Aabb& bounds = view.bounds();
  const auto viewpoints = external_viewpoints(bounds, cfg.viewpoint_distance);
  const double radius = cfg.probe_radius_fraction * bounds.diagonal();

  for (std::uint32_t vi = 0; vi < mesh.vertices.size(); ++vi) {
    const Vec3 v = mesh.vertices[vi];
    std::mt19937_64 rng(derive_seed(cfg.seed, {2, vi}));
    bool is_bad = false;
    for (const Vec3& p : viewpoints) {
      const double dist = distance(p, v);
      if (dist <= 0.0) continue;
      const Ray sight = Ray::toward(p, v - p);
      if (auto hit = view.first_hit(sight); hit && hit->t < dist - radius) continue;
      for (int k = 0; k < cfg.probe_count && !is_bad; ++k) {
        const Vec3 target = v + random_in_ball(rng, radius);
        if (target == p) continue;
        const Ray probe = Ray::toward(p, target - p);
        if (auto hit = view.first_hit(probe); hit && is_back_facing(*hit, probe, cfg.theta_angle)) is_bad = true;
      }
      if (is_bad) break;
    }
    if (is_bad) bad.push_back(vi);
  }
  return bad;
}

std::vector<std::uint32_t> identify_bad_faces(const Mesh& mesh, const EdgeAdjacency& adjacency,
                                              std::span<const std::uint32_t> bad_vertices) {
  std::vector<std::uint32_t> out;
  if (bad_vertices.empty()) return out;
  std::vector<char> is_bad(mesh.vertices.size(), 0);
  for (auto v : bad_vertices) {
    if (v < is_bad.size()) is_bad[v] = 1;
  }
  for (auto fi : adjacency.boundary_faces()) {
    const auto ids = mesh.faces[fi].indices();
    if (std::any_of(ids.begin(), ids.end(), [&](std::uint32_t v) { return is_bad[v] != 0; })) out.push_back(fi);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> find_bad_faces(const Mesh& mesh, const RewardConfig& cfg) {
  const TriangulatedView view(mesh);
  if (global_integrity_precheck(view, cfg).passed) return {};
  const auto bad_vertices = locate_bad_vertices(mesh, view, cfg);
  return identify_bad_faces(mesh, build_edge_adjacency(mesh), bad_vertices);
}

namespace {

EdgeKey opposite_edge(const Face& quad, const EdgeKey& e) {
  for (int k = 0; k < 4; ++k) {
    if (make_edge(quad.idx[k], quad.idx[(k + 1) % 4]) == e)
      return make_edge(quad.idx[(k + 2) % 4], quad.idx[(k + 3) % 4]);
  }
  throw Error(ErrorCode::InvalidFace, "edge is not on quad");
}

}  // namespace

QuadFlow quad_flow_analysis(const Mesh& mesh) {
  const EdgeAdjacency adj = build_edge_adjacency(mesh);
  QuadFlow flow;
  std::set<EdgeKey> processed;

  auto quads_on = [&](const EdgeKey& e) {
    std::vector<std::uint32_t> q;
    for (auto fi : adj.edge_faces.at(e))
      if (mesh.faces[fi].is_quad()) q.push_back(fi);
    return q;
  };

  for (const auto& [start, faces] : adj.edge_faces) {
    if (processed.count(start)) continue;
    if (quads_on(start).empty()) {
      ++flow.untouched_edges;
      continue;
    }
    processed.insert(start);
    std::size_t length = 1;
    std::set<std::uint32_t> used;
    EdgeKey cur = start;
    bool ring = false;
    while (true) {
      const auto quads = quads_on(cur);
      if (quads.size() > 2) break;
      std::optional<std::uint32_t> next_quad;
      for (auto q : quads) {
        if (!used.count(q)) {
          next_quad = q;
          break;
        }
      }
      if (!next_quad) break;
      used.insert(*next_quad);
      const EdgeKey next = opposite_edge(mesh.faces[*next_quad], cur);
      if (next == start) {
        ring = true;
        break;
      }
      if (processed.count(next)) break;
      processed.insert(next);
      ++length;
      cur = next;
    }
    flow.path_edges += length;
    if (ring)
      ++flow.rings;
    else
      ++flow.lines;
  }
  return flow;
}

double gated_total(RewardReport& report, const RewardConfig& cfg) {
  report.gated = static_cast<double>(report.n_bad_faces) < cfg.theta_ray && report.hausdorff < cfg.theta_hd;
  const double lines = static_cast<double>(report.n_quad_lines);
  report.total = report.gated ? cfg.w_qr * static_cast<double>(report.n_quad_rings) + lines * lines : 0.0;
  return report.total;
}

namespace {

double mesh_hausdorff(const Mesh& mesh, std::span<const Vec3> cloud, const RewardConfig& cfg) {
  try {
    const auto pts = sample_surface_points(mesh, cfg.hd_samples, derive_seed(cfg.seed, {3}));
    return hausdorff_distance(pts, cloud);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoArea) return std::numeric_limits<double>::infinity();
    throw;
  }
}

void check_inputs(const Mesh& mesh, std::span<const Vec3> cloud, const RewardConfig& cfg) {
  cfg.validate();
  validate(mesh);
  if (cloud.empty()) throw Error(ErrorCode::EmptySet, "condition point cloud is empty");
}

}  // namespace

RewardReport compute_reward(const Mesh& mesh, std::span<const Vec3> condition_points, const RewardConfig& cfg) {
  check_inputs(mesh, condition_points, cfg);
  RewardReport r;
  if (mesh.faces.empty()) {
    r.hausdorff = std::numeric_limits<double>::infinity();
    return r;
  }
  r.n_bad_faces = find_bad_faces(mesh, cfg).size();
  r.hausdorff = mesh_hausdorff(mesh, condition_points, cfg);
  const QuadFlow flow = quad_flow_analysis(mesh);
  r.n_quad_rings = flow.rings;
  r.n_quad_lines = flow.lines;
  gated_total(r, cfg);
  return r;
}

RewardContext prepare_reward(const Mesh& mesh, std::span<const Vec3> condition_points, const RewardConfig& cfg) {
  check_inputs(mesh, condition_points, cfg);
  RewardContext ctx;
  if (mesh.faces.empty()) {
    ctx.hausdorff = std::numeric_limits<double>::infinity();
    return ctx;
  }
  ctx.bad_faces = find_bad_faces(mesh, cfg);
  ctx.hausdorff = mesh_hausdorff(mesh, condition_points, cfg);
  return ctx;
}

RewardReport window_reward(const Mesh& mesh, const RewardContext& ctx, std::size_t first_face, std::size_t face_count,
                           const RewardConfig& cfg) {
  if (first_face > mesh.faces.size() || face_count > mesh.faces.size() - first_face)
    throw Error(ErrorCode::WindowOutOfRange, "face window exceeds the mesh");
  RewardReport r;
  if (face_count == 0) {
    r.hausdorff = std::numeric_limits<double>::infinity();
    return r;
  }
  r.n_bad_faces = static_cast<std::size_t>(
      std::count_if(ctx.bad_faces.begin(), ctx.bad_faces.end(),
                    [&](std::uint32_t f) { return f >= first_face && f < first_face + face_count; }));
  r.hausdorff = ctx.hausdorff;
  const QuadFlow flow = quad_flow_analysis(submesh(mesh, first_face, face_count));
  r.n_quad_rings = flow.rings;
  r.n_quad_lines = flow.lines;
  gated_total(r, cfg);
  return r;
}

RewardReport truncated_reward(const Mesh& mesh, std::size_t first_face, std::size_t face_count,
                              std::span<const Vec3> condition_points, const RewardConfig& cfg) {
  check_inputs(mesh, condition_points, cfg);
  if (first_face > mesh.faces.size() || face_count > mesh.faces.size() - first_face)
    throw Error(ErrorCode::WindowOutOfRange, "face window exceeds the mesh");
  if (face_count == 0) return window_reward(mesh, RewardContext{}, first_face, 0, cfg);
  return window_reward(mesh, prepare_reward(mesh, condition_points, cfg), first_face, face_count, cfg);
}

}  // namespace quadrl
