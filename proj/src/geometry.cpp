#include "levyrmt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "levyrmt/error.hpp"
#include "levyrmt/statfit.hpp"

namespace levyrmt {

double gyration_radius(const WalkPath2D& path, std::size_t t) {
  if (t < 1 || t > path.n_steps())
    throw ValidationError("gyration_radius: t=" + std::to_string(t) + " outside [1, " +
                          std::to_string(path.n_steps()) + "]");
  double sum = 0.0;
  for (std::size_t k = 1; k <= t; ++k) {
    const Vec2 p = path.positions[k];
    sum += p.x * p.x + p.y * p.y;
  }
  return std::sqrt(sum / static_cast<double>(t));
}

double path_length(const WalkPath2D& path, std::size_t t) {
  if (t > path.n_steps()) throw ValidationError("path_length: t out of range");
  double total = 0.0;
  for (std::size_t k = 0; k < t; ++k) total += path.step_lengths[k];
  return total;
}

WalkPath2D pair_stock_trajectory(std::span<const double> series_a, std::span<const double> series_b) {
  if (series_a.size() != series_b.size())
    throw ValidationError("pair_stock_trajectory: series lengths differ (" +
                          std::to_string(series_a.size()) + " vs " + std::to_string(series_b.size()) + ")");
  if (series_a.size() < 2) throw ValidationError("pair_stock_trajectory: need at least 2 points");
  WalkPath2D path;
  path.config.alpha = 0.0;
  path.config.s_min = 0.0;
  path.config.n_steps = series_a.size() - 1;
  path.positions.resize(series_a.size());
  path.step_lengths.resize(series_a.size() - 1);
  for (std::size_t t = 0; t < series_a.size(); ++t)
    path.positions[t] = {series_a[t] - series_a[0], series_b[t] - series_b[0]};
  for (std::size_t k = 0; k + 1 < path.positions.size(); ++k) {
    const Vec2 a = path.positions[k];
    const Vec2 b = path.positions[k + 1];
    path.step_lengths[k] = std::hypot(b.x - a.x, b.y - a.y);
  }
  return path;
}

std::vector<std::size_t> log_time_grid(std::size_t n_steps, std::size_t count) {
  if (n_steps < 1 || count < 1) throw ValidationError("log_time_grid: empty range");
  std::vector<std::size_t> grid;
  const double top = std::log(static_cast<double>(n_steps));
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = count == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    auto t = static_cast<std::size_t>(std::llround(std::exp(frac * top)));
    t = std::clamp<std::size_t>(t, 1, n_steps);
    if (grid.empty() || grid.back() != t) grid.push_back(t);
  }
  return grid;
}

ScalingCurve rg_vs_length_curve(std::size_t n_paths, const std::function<WalkPath2D(std::size_t)>& make_path,
                                std::span<const std::size_t> t_grid) {
  if (n_paths == 0) throw ValidationError("rg_vs_length_curve: empty path collection");
  if (t_grid.empty()) throw ValidationError("rg_vs_length_curve: empty t_grid");
  if (!std::is_sorted(t_grid.begin(), t_grid.end()))
    throw ValidationError("rg_vs_length_curve: t_grid must be sorted");

  // Per-path values at each grid time, then pairwise means across paths.
  const std::size_t g = t_grid.size();
  std::vector<std::vector<double>> ell(g, std::vector<double>(n_paths));
  std::vector<std::vector<double>> rg(g, std::vector<double>(n_paths));
  for (std::size_t p = 0; p < n_paths; ++p) {
    const WalkPath2D path = make_path(p);
    if (t_grid.front() < 1 || t_grid.back() > path.n_steps())
      throw ValidationError("rg_vs_length_curve: t_grid outside [1, " + std::to_string(path.n_steps()) + "]");
    double sum_r2 = 0.0;
    double length = 0.0;
    std::size_t k = 0;
    for (std::size_t j = 0; j < g; ++j) {
      for (; k < t_grid[j]; ++k) {
        const Vec2 pos = path.positions[k + 1];
        sum_r2 += pos.x * pos.x + pos.y * pos.y;
        length += path.step_lengths[k];
      }
      ell[j][p] = length;
      rg[j][p] = std::sqrt(sum_r2 / static_cast<double>(t_grid[j]));
    }
  }
  ScalingCurve curve;
  curve.n_samples = n_paths;
  curve.points.reserve(g);
  for (std::size_t j = 0; j < g; ++j)
    curve.points.push_back({t_grid[j], pairwise_mean(ell[j]), pairwise_mean(rg[j])});
  return curve;
}

ScalingCurve rg_vs_length_curve(std::span<const WalkPath2D> paths, std::span<const std::size_t> t_grid) {
  return rg_vs_length_curve(paths.size(), [&](std::size_t i) { return paths[i]; }, t_grid);
}

ScalarFit fit_fractal_dimension(const ScalingCurve& curve, double discard_fraction) {
  if (!(discard_fraction >= 0.0 && discard_fraction < 1.0))
    throw ValidationError("fit_fractal_dimension: discard_fraction must be in [0, 1)");
  const auto skip = static_cast<std::size_t>(std::floor(discard_fraction * static_cast<double>(curve.points.size())));
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = skip; i < curve.points.size(); ++i) {
    const auto& pt = curve.points[i];
    if (!(pt.ell > 0.0 && pt.rg > 0.0))
      throw AnalysisError("fit_fractal_dimension: non-positive curve value at t=" + std::to_string(pt.t));
    x.push_back(std::log10(pt.ell));
    y.push_back(std::log10(pt.rg));
  }
  if (x.size() < 10) throw AnalysisError("fit_fractal_dimension: fewer than 10 points in fit range");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*hi - *lo < 1.0) throw AnalysisError("fit_fractal_dimension: fit range spans less than one decade in l");
  const LinearFit line = least_squares(x, y);
  if (!(line.slope > 0.0)) throw AnalysisError("fit_fractal_dimension: non-positive scaling slope");
  ScalarFit fit;
  fit.value = 1.0 / line.slope;
  fit.stderr_ = line.slope_stderr / (line.slope * line.slope);
  fit.range_lo = std::pow(10.0, *lo);
  fit.range_hi = std::pow(10.0, *hi);
  fit.n_points = x.size();
  return fit;
}

}  // namespace levyrmt
