#include "levyrmt/levy_walk.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "levyrmt/error.hpp"
#include "levyrmt/parallel.hpp"

namespace levyrmt {

void WalkConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 2.0)) throw ValidationError("alpha must lie in (0, 2)");
  if (!(s_min > 0.0) || !std::isfinite(s_min)) throw ValidationError("s_min must be > 0");
  if (n_steps < 1) throw ValidationError("n_steps must be >= 1");
}

std::vector<std::string> walker_labels(std::size_t n) {
  std::vector<std::string> labels(n);
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "W%04zu", i);
    labels[i] = buf;
  }
  return labels;
}

Vec2 sample_step(Rng& rng, double alpha, double s_min) {
  const double s = s_min * std::pow(rng.uniform_open0(), -1.0 / alpha);
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  return {s * std::cos(theta), s * std::sin(theta)};
}

namespace {

WalkPath2D accumulate(const WalkConfig& config, auto&& next_step) {
  WalkPath2D path;
  path.config = config;
  path.positions.reserve(config.n_steps + 1);
  path.step_lengths.reserve(config.n_steps);
  Vec2 pos{};
  path.positions.push_back(pos);
  for (std::size_t k = 0; k < config.n_steps; ++k) {
    const Vec2 d = next_step(k);
    const Vec2 next{pos.x + d.x, pos.y + d.y};
    path.step_lengths.push_back(std::hypot(next.x - pos.x, next.y - pos.y));
    path.positions.push_back(next);
    pos = next;
  }
  return path;
}

}  // namespace

WalkPath2D generate_walk(const WalkConfig& config) {
  config.validate();
  Rng rng(config.seed);
  return accumulate(config, [&](std::size_t) { return sample_step(rng, config.alpha, config.s_min); });
}

WalkPath2D walk_from_steps(std::span<const Vec2> steps, const WalkConfig& config) {
  WalkConfig c = config;
  c.n_steps = steps.size();
  return accumulate(c, [&](std::size_t k) { return steps[k]; });
}

WalkPath2D generate_gaussian_walk(const WalkConfig& config) {
  config.validate();
  Rng rng(config.seed);
  return accumulate(config, [&](std::size_t) {
    const double dx = config.s_min * rng.normal();
    const double dy = config.s_min * rng.normal();
    return Vec2{dx, dy};
  });
}

PriceSeries derive_series(const WalkPath2D& path, SeriesKind kind) {
  const double floor = kEpsilonPriceFactor * path.config.s_min;
  const std::size_t n = path.n_steps();
  PriceSeries out(n);
  if (kind == SeriesKind::DistanceFromOrigin) {
    for (std::size_t t = 1; t <= n; ++t) out[t - 1] = std::max(norm(path.positions[t]), floor);
  } else {
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      total += path.step_lengths[t];
      out[t] = std::max(total, floor);
    }
  }
  return out;
}

std::vector<WalkPath2D> generate_paths(const WalkConfig& config, std::size_t n_walkers,
                                       unsigned workers) {
  config.validate();
  if (n_walkers < 1) throw ValidationError("n_walkers must be >= 1");
  std::vector<WalkPath2D> paths(n_walkers);
  parallel_for(n_walkers, workers, [&](std::size_t i) {
    WalkConfig c = config;
    c.seed = child_seed(config.seed, i);
    paths[i] = generate_walk(c);
  });
  return paths;
}

PricePanel generate_ensemble(const WalkConfig& config, std::size_t n_walkers, SeriesKind kind,
                             unsigned workers) {
  config.validate();
  if (n_walkers < 1) throw ValidationError("n_walkers must be >= 1");
  PricePanel panel;
  panel.labels = walker_labels(n_walkers);
  panel.times.resize(config.n_steps);
  for (std::size_t t = 0; t < config.n_steps; ++t) panel.times[t] = static_cast<std::int64_t>(t);
  panel.values.resize(static_cast<Eigen::Index>(config.n_steps), static_cast<Eigen::Index>(n_walkers));
  parallel_for(n_walkers, workers, [&](std::size_t i) {
    WalkConfig c = config;
    c.seed = child_seed(config.seed, i);
    const PriceSeries series = derive_series(generate_walk(c), kind);
    for (std::size_t t = 0; t < series.size(); ++t)
      panel.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = series[t];
  });
  return panel;
}

const char* to_string(SeriesKind kind) {
  return kind == SeriesKind::DistanceFromOrigin ? "distance_from_origin" : "cumulative_length";
}

}  // namespace levyrmt
