#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "levyrmt/panel.hpp"
#include "levyrmt/rng.hpp"

namespace levyrmt {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

struct WalkConfig {
  double alpha = 1.5;
  double s_min = 1.0;
  std::size_t n_steps = 7740;
  std::uint64_t seed = 0;

  /// 0 < alpha < 2, s_min > 0, n_steps >= 1.
  void validate() const;
};

/// One 2D trajectory starting at the origin. positions.size() == n_steps + 1.
struct WalkPath2D {
  std::vector<Vec2> positions;
  std::vector<double> step_lengths;
  WalkConfig config;

  std::size_t n_steps() const { return step_lengths.size(); }
};

enum class SeriesKind { DistanceFromOrigin, CumulativeLength };

/// Floor applied to derived price series, relative to s_min.
inline constexpr double kEpsilonPriceFactor = 1e-12;

/// One Lévy step: length s = s_min * U^(-1/alpha) with U on (0, 1], so
/// P(s > x) = (x / s_min)^-alpha; direction uniform on [0, 2*pi).
Vec2 sample_step(Rng& rng, double alpha, double s_min);

/// Lévy flight of config.n_steps Pareto steps driven by Rng(config.seed).
WalkPath2D generate_walk(const WalkConfig& config);

/// Path built from explicit displacements. Step lengths are recomputed from
/// consecutive positions.
WalkPath2D walk_from_steps(std::span<const Vec2> steps, const WalkConfig& config);

/// Diffusive control: isotropic Gaussian steps with per-axis std s_min.
WalkPath2D generate_gaussian_walk(const WalkConfig& config);

/// r(t) (distance from origin) or l(t) (cumulative length) for
/// t = 1..n_steps, floored at kEpsilonPriceFactor * s_min.
PriceSeries derive_series(const WalkPath2D& path, SeriesKind kind);

/// n_steps x n_walkers panel; walker i is generated from
/// child_seed(config.seed, i), so the result does not depend on `workers`.
PricePanel generate_ensemble(const WalkConfig& config, std::size_t n_walkers,
                             SeriesKind kind, unsigned workers = 1);

/// Walker paths for ensemble geometry, same seeding as generate_ensemble.
std::vector<WalkPath2D> generate_paths(const WalkConfig& config, std::size_t n_walkers,
                                       unsigned workers = 1);

const char* to_string(SeriesKind kind);

}  // namespace levyrmt
