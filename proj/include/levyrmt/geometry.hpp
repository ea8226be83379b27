#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "levyrmt/levy_walk.hpp"

namespace levyrmt {

struct ScalingPoint {
  std::size_t t = 0;
  double ell = 0.0;  // mean total length l(t)
  double rg = 0.0;   // mean gyration radius R_g(t)
};

struct ScalingCurve {
  std::vector<ScalingPoint> points;
  std::size_t n_samples = 0;
};

/// Least-squares scalar with its standard error and the abscissa range fitted.
struct ScalarFit {
  double value = 0.0;
  double stderr_ = 0.0;
  double range_lo = 0.0;
  double range_hi = 0.0;
  std::size_t n_points = 0;
};

/// sqrt((1/t) * sum_{k=1..t} r_k^2), r_k = |positions[k]|. Gyration is
/// measured about the origin, not the centroid. Requires 1 <= t <= n_steps.
double gyration_radius(const WalkPath2D& path, std::size_t t);

/// Path length l(t) = sum of the first t step lengths.
double path_length(const WalkPath2D& path, std::size_t t);

/// Joint trajectory of two price series in the plane, shifted so that it
/// starts at the origin. s_min is 0 for empirical paths.
WalkPath2D pair_stock_trajectory(std::span<const double> series_a, std::span<const double> series_b);

/// `count` log-spaced, distinct times in [1, n_steps].
std::vector<std::size_t> log_time_grid(std::size_t n_steps, std::size_t count = 50);

/// Ensemble means of l(t) and R_g(t) on t_grid.
ScalingCurve rg_vs_length_curve(std::span<const WalkPath2D> paths, std::span<const std::size_t> t_grid);
/// Same curve, with paths produced one at a time by make_path(i), i < n_paths,
/// so large pair ensembles never sit in memory together.
ScalingCurve rg_vs_length_curve(std::size_t n_paths, const std::function<WalkPath2D(std::size_t)>& make_path,
                                std::span<const std::size_t> t_grid);

/// d_f = 1/m where m is the OLS slope of log R_g against log l, fitted after
/// dropping the first `discard_fraction` of curve points. Needs >= 10 fitted
/// points spanning at least one decade in l.
ScalarFit fit_fractal_dimension(const ScalingCurve& curve, double discard_fraction = 0.1);

}  // namespace levyrmt
