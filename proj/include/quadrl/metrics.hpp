#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "quadrl/mesh.hpp"

namespace quadrl {

struct BrokenCheckConfig {
  double theta_angle = 0.0;
  double theta_succ = 0.01;
  double sigma_rand = 0.05;
  int per_axis = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BrokenScore {
  double score = 0.0;
  bool is_broken = false;
  std::size_t hits = 0;
  std::size_t errors = 0;
};

/// Normalizes into [-0.5, 0.5]^3, casts aligned and perturbed grids from the
/// six axis directions and scores the fraction of back-facing first hits.
BrokenScore broken_check(const Mesh& mesh, const BrokenCheckConfig& cfg);

/// Fraction of meshes judged broken. Mesh i uses a seed derived from
/// (cfg.seed, i).
double broken_ratio(std::span<const Mesh> meshes, const BrokenCheckConfig& cfg);

/// Fraction of precomputed scores strictly above `theta_succ`.
double broken_ratio_from_scores(std::span<const double> scores, double theta_succ);

double quad_ratio(const Mesh& mesh);

}  // namespace quadrl
