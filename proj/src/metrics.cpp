#include "quadrl/metrics.hpp"

#include <algorithm>

#include "quadrl/error.hpp"
#include "quadrl/geometry.hpp"
#include "quadrl/random.hpp"

namespace quadrl {

void BrokenCheckConfig::validate() const {
  if (!(theta_succ > 0.0 && theta_succ < 1.0)) throw Error(ErrorCode::InvalidArgument, "theta_succ must be in (0, 1)");
  if (per_axis < 1) throw Error(ErrorCode::InvalidArgument, "per_axis must be >= 1");
  if (sigma_rand < 0.0) throw Error(ErrorCode::InvalidArgument, "sigma_rand must be >= 0");
}

BrokenScore broken_check(const Mesh& mesh, const BrokenCheckConfig& cfg) {
  cfg.validate();
  if (mesh.faces.empty()) throw Error(ErrorCode::EmptyMesh, "broken check on a mesh without faces");
  const Mesh unit = normalize_mesh(mesh, 0.5);
  const TriangulatedView view(unit);
  BrokenScore s;
  for (const auto& ray : orthogonal_ray_grid(view.bounds(), cfg.per_axis, cfg.sigma_rand, cfg.seed)) {
    auto hit = view.first_hit(ray);
    if (!hit) continue;
    ++s.hits;
    if (is_back_facing(*hit, ray, cfg.theta_angle)) ++s.errors;
  }
  if (s.hits == 0) return s;
  s.score = static_cast<double>(s.errors) / static_cast<double>(s.hits);
  s.is_broken = s.score > cfg.theta_succ;
  return s;
}

double broken_ratio(std::span<const Mesh> meshes, const BrokenCheckConfig& cfg) {
  if (meshes.empty()) throw Error(ErrorCode::EmptyCorpus, "broken ratio of an empty corpus");
  std::size_t broken = 0;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    BrokenCheckConfig c = cfg;
    c.seed = derive_seed(cfg.seed, {i});
    if (broken_check(meshes[i], c).is_broken) ++broken;
  }
  return static_cast<double>(broken) / static_cast<double>(meshes.size());
}

double broken_ratio_from_scores(std::span<const double> scores, double theta_succ) {
  if (scores.empty()) throw Error(ErrorCode::EmptyCorpus, "broken ratio of an empty corpus");
  const auto n = std::count_if(scores.begin(), scores.end(), [&](double s) { return s > theta_succ; });
  return static_cast<double>(n) / static_cast<double>(scores.size());
}

double quad_ratio(const Mesh& mesh) {
  if (mesh.faces.empty()) throw Error(ErrorCode::EmptyMesh, "quad ratio of a mesh without faces");
  return static_cast<double>(mesh.quad_count()) / static_cast<double>(mesh.faces.size());
}

}  // namespace quadrl
