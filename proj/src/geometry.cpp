#include "quadrl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "quadrl/error.hpp"

namespace quadrl {
namespace {

constexpr std::uint32_t kLeafSize = 4;

Aabb triangle_box(const Triangle& t) {
  Aabb b;
  b.expand(t.a);
  b.expand(t.b);
  b.expand(t.c);
  return b;
}

Vec3 centroid(const Triangle& t) { return (t.a + t.b + t.c) / 3.0; }

// Slab test. Returns the entry distance or nullopt. Zero direction components
// are handled without producing NaNs.
std::optional<double> ray_box(const Aabb& box, const Ray& ray, double t_max) {
  double t0 = 0.0;
  double t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.direction[a];
    if (d == 0.0) {
      if (o < box.lo[a] || o > box.hi[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / d;
    double tn = (box.lo[a] - o) * inv;
    double tf = (box.hi[a] - o) * inv;
    if (tn > tf) std::swap(tn, tf);
    t0 = std::max(t0, tn);
    t1 = std::min(t1, tf);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

bool better(double t, std::uint32_t face, const std::optional<RayHit>& best) {
  return !best || t < best->t || (t == best->t && face < best->face);
}

}  // namespace

bool is_back_facing(const RayHit& hit, const Ray& ray, double angle_threshold) {
  const double facing = -dot(hit.normal, ray.direction);
  if (std::abs(facing) < kGrazingTolerance) return false;
  return facing < angle_threshold;
}

std::optional<double> intersect(const Triangle& tri, const Ray& ray) {
  const Vec3 e1 = tri.b - tri.a;
  const Vec3 e2 = tri.c - tri.a;
  const Vec3 p = cross(ray.direction, e2);
  const double det = dot(e1, p);
  if (det == 0.0 || !std::isfinite(det)) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - tri.a;
  const double u = dot(s, p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = cross(s, e1);
  const double v = dot(ray.direction, q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = dot(e2, q) * inv;
  if (!(t >= 0.0)) return std::nullopt;
  return t;
}

TriangulatedView::TriangulatedView(const Mesh& mesh) : face_count_(mesh.faces.size()) {
  validate(mesh);
  triangles_.reserve(mesh.faces.size() * 2);
  auto push = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t face) {
    Triangle t{mesh.vertices[a], mesh.vertices[b], mesh.vertices[c], {}, face};
    t.normal = normalized(cross(t.b - t.a, t.c - t.a));
    triangles_.push_back(t);
  };
  for (std::uint32_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Face& f = mesh.faces[fi];
    push(f.idx[0], f.idx[1], f.idx[2], fi);
    if (f.is_quad()) push(f.idx[0], f.idx[2], f.idx[3], fi);
  }
  for (const auto& t : triangles_) bounds_.expand(triangle_box(t));
  if (!triangles_.empty()) {
    nodes_.reserve(2 * triangles_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(triangles_.size()));
  }
}

std::uint32_t TriangulatedView::build(std::uint32_t first, std::uint32_t count) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  Aabb box;
  Aabb cbox;
  for (std::uint32_t i = first; i < first + count; ++i) {
    box.expand(triangle_box(triangles_[i]));
    cbox.expand(centroid(triangles_[i]));
  }
  // Pad so rays grazing a box face are not culled by rounding.
  const double pad = 1e-9 * (1.0 + box.diagonal());
  box.lo = box.lo - Vec3{pad, pad, pad};
  box.hi = box.hi + Vec3{pad, pad, pad};
  nodes_[id].box = box;

  const Vec3 ext = cbox.extent();
  if (count <= kLeafSize || std::max({ext.x, ext.y, ext.z}) <= 0.0) {
    nodes_[id].first = first;
    nodes_[id].count = count;
    return id;
  }
  const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
  const std::uint32_t mid = first + count / 2;
  std::nth_element(triangles_.begin() + first, triangles_.begin() + mid, triangles_.begin() + first + count,
                   [axis](const Triangle& l, const Triangle& r) { return centroid(l)[axis] < centroid(r)[axis]; });
  const std::uint32_t left = build(first, mid - first);
  const std::uint32_t right = build(mid, first + count - mid);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::optional<RayHit> TriangulatedView::first_hit(const Ray& ray) const {
  std::optional<RayHit> best;
  if (nodes_.empty()) return best;
  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    const double limit = best ? best->t : std::numeric_limits<double>::infinity();
    if (!ray_box(n.box, ray, limit)) continue;
    if (n.count > 0) {
      for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
        const Triangle& tri = triangles_[i];
        if (auto t = intersect(tri, ray); t && better(*t, tri.face, best)) {
          best = RayHit{tri.face, i, *t, tri.normal};
        }
      }
      continue;
    }
    stack[top++] = n.right;
    stack[top++] = n.left;
  }
  return best;
}

std::vector<Ray> orthogonal_ray_grid(const Aabb& bounds, int per_axis, double jitter, std::uint64_t seed) {
  if (per_axis < 1) throw Error(ErrorCode::InvalidArgument, "per_axis must be >= 1");
  if (jitter < 0.0) throw Error(ErrorCode::InvalidArgument, "jitter must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double margin = bounds.diagonal() + 1.0;
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(12) * per_axis * per_axis);
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    for (int sign : {+1, -1}) {
      Vec3 dir;
      dir[axis] = sign;
      for (int i = 0; i < per_axis; ++i) {
        for (int j = 0; j < per_axis; ++j) {
          Vec3 o;
          o[axis] = sign > 0 ? bounds.lo[axis] - margin : bounds.hi[axis] + margin;
          o[u] = bounds.lo[u] + (i + 0.5) / per_axis * (bounds.hi[u] - bounds.lo[u]);
          o[v] = bounds.lo[v] + (j + 0.5) / per_axis * (bounds.hi[v] - bounds.lo[v]);
          rays.push_back({o, dir});
          Vec3 r{gauss(rng), gauss(rng), gauss(rng)};
          r = normalized(r) * jitter;
          rays.push_back(Ray::toward(o, dir + r));
        }
      }
    }
  }
  return rays;
}

SurfaceSamples sample_surface(const Mesh& mesh, std::size_t count, std::uint64_t seed) {
  validate(mesh);
  std::vector<std::array<std::uint32_t, 3>> tris;
  std::vector<std::uint32_t> tri_face;
  std::vector<double> cumulative;
  double total = 0.0;
  auto add = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t face) {
    const Vec3& pa = mesh.vertices[a];
    const double area = 0.5 * norm(cross(mesh.vertices[b] - pa, mesh.vertices[c] - pa));
    if (!(area > 0.0)) return;
    tris.push_back({a, b, c});
    tri_face.push_back(face);
    total += area;
    cumulative.push_back(total);
  };
  for (std::uint32_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Face& f = mesh.faces[fi];
    add(f.idx[0], f.idx[1], f.idx[2], fi);
    if (f.is_quad()) add(f.idx[0], f.idx[2], f.idx[3], fi);
  }
  if (tris.empty()) throw Error(ErrorCode::NoArea, "mesh has no face with positive area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  SurfaceSamples out;
  out.points.reserve(count);
  out.normals.reserve(count);
  out.faces.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const double pick = uni(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const auto ti = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(it - cumulative.begin(), static_cast<std::ptrdiff_t>(tris.size()) - 1));
    const auto& t = tris[ti];
    const Vec3 a = mesh.vertices[t[0]];
    const Vec3 b = mesh.vertices[t[1]];
    const Vec3 c = mesh.vertices[t[2]];
    const double r1 = std::sqrt(uni(rng));
    const double r2 = uni(rng);
    out.points.push_back(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
    out.normals.push_back(normalized(cross(b - a, c - a)));
    out.faces.push_back(tri_face[ti]);
  }
  return out;
}

KdTree::KdTree(std::span<const Vec3> points) {
  items_.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) items_.push_back({points[i], static_cast<std::uint32_t>(i), 0});
  build(0, static_cast<std::uint32_t>(items_.size()));
}

void KdTree::build(std::uint32_t lo, std::uint32_t hi) {
  if (hi - lo <= 1) return;
  Aabb box;
  for (std::uint32_t i = lo; i < hi; ++i) box.expand(items_[i].p);
  const Vec3 ext = box.hi - box.lo;
  const std::uint32_t axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
  const std::uint32_t mid = lo + (hi - lo) / 2;
  std::nth_element(items_.begin() + lo, items_.begin() + mid, items_.begin() + hi,
                   [axis](const Item& a, const Item& b) { return a.p[axis] < b.p[axis]; });
  items_[mid].axis = axis;
  build(lo, mid);
  build(mid + 1, hi);
}

void KdTree::search(std::uint32_t lo, std::uint32_t hi, Vec3 q, std::uint32_t& best, double& best_d2) const {
  if (lo >= hi) return;
  const std::uint32_t mid = lo + (hi - lo) / 2;
  const Item& it = items_[mid];
  const Vec3 d = it.p - q;
  const double d2 = dot(d, d);
  if (d2 < best_d2 || (d2 == best_d2 && it.index < best)) {
    best_d2 = d2;
    best = it.index;
  }
  const double diff = q[it.axis] - it.p[it.axis];
  if (diff < 0.0) {
    search(lo, mid, q, best, best_d2);
    if (diff * diff <= best_d2) search(mid + 1, hi, q, best, best_d2);
  } else {
    search(mid + 1, hi, q, best, best_d2);
    if (diff * diff <= best_d2) search(lo, mid, q, best, best_d2);
  }
}

bool KdTree::probe(std::uint32_t lo, std::uint32_t hi, Vec3 q, double r2) const {
  if (lo >= hi) return false;
  const std::uint32_t mid = lo + (hi - lo) / 2;
  const Item& it = items_[mid];
  const Vec3 d = it.p - q;
  if (dot(d, d) <= r2) return true;
  const double diff = q[it.axis] - it.p[it.axis];
  if (diff < 0.0) return probe(lo, mid, q, r2) || (diff * diff <= r2 && probe(mid + 1, hi, q, r2));
  return probe(mid + 1, hi, q, r2) || (diff * diff <= r2 && probe(lo, mid, q, r2));
}

KdTree::Neighbor KdTree::nearest(Vec3 query) const {
  if (items_.empty()) throw Error(ErrorCode::EmptySet, "nearest on empty kd-tree");
  std::uint32_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  search(0, static_cast<std::uint32_t>(items_.size()), query, best, best_d2);
  return {best, std::sqrt(best_d2)};
}

bool KdTree::any_within(Vec3 query, double radius) const {
  return probe(0, static_cast<std::uint32_t>(items_.size()), query, radius * radius);
}

namespace {

std::vector<double> nn_distances(std::span<const Vec3> from, const KdTree& to) {
  std::vector<double> d;
  d.reserve(from.size());
  for (const auto& p : from) d.push_back(to.nearest(p).distance);
  return d;
}

void require_nonempty(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySet, "point set is empty");
}

}  // namespace

double hausdorff_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_nonempty(a, b);
  const KdTree ta(a);
  const KdTree tb(b);
  // A point whose neighbourhood of radius h is occupied cannot raise h.
  double h = 0.0;
  auto directed = [&h](std::span<const Vec3> from, const KdTree& to) {
    for (const auto& p : from)
      if (!to.any_within(p, h)) h = std::max(h, to.nearest(p).distance);
  };
  directed(a, tb);
  directed(b, ta);
  return h;
}

double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_nonempty(a, b);
  const KdTree ta(a);
  const KdTree tb(b);
  const auto ab = nn_distances(a, tb);
  const auto ba = nn_distances(b, ta);
  return std::accumulate(ab.begin(), ab.end(), 0.0) / static_cast<double>(ab.size()) +
         std::accumulate(ba.begin(), ba.end(), 0.0) / static_cast<double>(ba.size());
}

F1Score f1_score(std::span<const Vec3> pred, std::span<const Vec3> gt, double threshold) {
  require_nonempty(pred, gt);
  if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be > 0");
  const KdTree tp(pred);
  const KdTree tg(gt);
  auto within = [threshold](const std::vector<double>& d) {
    return static_cast<double>(std::count_if(d.begin(), d.end(), [&](double x) { return x <= threshold; })) /
           static_cast<double>(d.size());
  };
  F1Score s;
  s.precision = within(nn_distances(pred, tg));
  s.recall = within(nn_distances(gt, tp));
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

double normal_consistency(const Mesh& pred, const Mesh& gt, std::size_t count, std::uint64_t seed) {
  const SurfaceSamples sp = sample_surface(pred, count, seed);
  const SurfaceSamples sg = sample_surface(gt, count, seed);
  const KdTree tp(sp.points);
  const KdTree tg(sg.points);
  double acc = 0.0;
  for (std::size_t i = 0; i < sp.points.size(); ++i)
    acc += std::abs(dot(sp.normals[i], sg.normals[tg.nearest(sp.points[i]).index]));
  for (std::size_t i = 0; i < sg.points.size(); ++i)
    acc += std::abs(dot(sg.normals[i], sp.normals[tp.nearest(sg.points[i]).index]));
  return acc / static_cast<double>(sp.points.size() + sg.points.size());
}

}  // namespace quadrl
