#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace levyrmt {

/// Tail exponent alpha of P(x) ~ x^-(1+alpha) above x_min.
struct TailFit {
  double exponent = 0.0;
  double x_min = 0.0;
  std::size_t n_tail = 0;
  double stderr_ = 0.0;
  double ks = 0.0;  // KS distance between tail data and the fitted Pareto law
};

struct FrequencyBand {
  double lo = 0.0;
  double hi = 0.0;
};

/// Mean periodogram over one or more series. Frequencies in cycles/day,
/// DC bin excluded. power[k] = |DFT_k|^2 / length, averaged over series.
struct PsdEstimate {
  std::vector<double> freqs;
  std::vector<double> power;
  std::size_t length = 0;
  std::size_t n_series = 0;
  std::optional<double> beta;
  double beta_stderr = 0.0;
  FrequencyBand band;

  /// Integral of the two-sided density over (0, 1) cycles/day; equals the
  /// mean series variance (Parseval).
  double total_power() const;
};

struct TDistFit {
  double nu0 = 0.0;
  double location = 0.0;
  double scale = 0.0;
  double loglik = 0.0;
  bool at_upper_bound = false;  // nu0 pinned at the search ceiling: report as ">= 50"
};

struct TailComparison {
  TailFit power_law;
  double exp_rate = 0.0;  // rate of the exponential tail shifted to x_min
  double loglik_power_law = 0.0;
  double loglik_exponential = 0.0;
  double loglik_ratio = 0.0;  // power law minus exponential; > 0 favors the power law
  double vuong_z = 0.0;
  double p_value = 1.0;

  bool favors_power_law() const { return loglik_ratio > 0.0; }
};

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::vector<double> densities;
  std::size_t total = 0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t n = 0;
};

struct RankCorrelation {
  double rho = 0.0;
  double p_value = 1.0;  // two-sided, t approximation
};

inline constexpr double kTDistNuMin = 0.5;
inline constexpr double kTDistNuMax = 50.0;

// Small numerics shared by the estimators.

/// Pairwise (cascade) summation mean; order-independent up to rounding.
double pairwise_mean(std::span<const double> values);
LinearFit least_squares(std::span<const double> x, std::span<const double> y);
RankCorrelation spearman(std::span<const double> x, std::span<const double> y);

/// Hill MLE over tail values >= x_min: k / sum ln(x_i / x_min).
TailFit hill_estimate(std::span<const double> tail, double x_min);

/// Hill estimator with x_min at the empirical (1 - tail_fraction) quantile.
TailFit hill_tail_exponent(std::span<const double> samples, double tail_fraction = 0.1);

/// Scan x_min over sample quantiles, fit the Pareto MLE above each candidate
/// and keep the one with the smallest KS distance. Needs >= 500 samples and
/// at least one candidate with >= 50 tail points.
TailFit powerlaw_fit_ks(std::span<const double> samples);

/// Periodogram of each column (mean removed), averaged over columns.
PsdEstimate periodogram(const Eigen::MatrixXd& series_by_column);
PsdEstimate periodogram(std::span<const double> series);

/// Lowest two decades of positive frequencies.
FrequencyBand default_band(const PsdEstimate& psd);

/// beta = -slope of log power against log f over the band (>= 10 bins).
PsdEstimate fit_spectral_exponent(PsdEstimate psd, std::optional<FrequencyBand> band = std::nullopt);

/// Three-parameter Student-t MLE; nu0 profiled over [0.5, 50].
TDistFit student_t_fit(std::span<const double> samples);
double student_t_loglik(std::span<const double> samples, double nu, double location, double scale);

/// Power-law vs shifted-exponential tail above the KS-selected x_min.
TailComparison tail_model_comparison(std::span<const double> samples);

Histogram log_binned_histogram(std::span<const double> samples, int bins_per_decade);

/// OLS slope of log10 density against log10 bin centre over occupied bins
/// lying entirely inside [lo, hi].
LinearFit density_slope(const Histogram& h, double lo, double hi);

/// sup |F_a - F_b| between two empirical distributions.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// sup |F_n - F| for a continuous reference CDF.
double ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf);

}  // namespace levyrmt
