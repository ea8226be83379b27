#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "levyrmt/panel.hpp"
#include "levyrmt/rmt.hpp"
#include "levyrmt/rng.hpp"

namespace levyrmt {

enum class EvtFamily { Frechet, Gumbel, Weibull };

/// |shape| at or below this is classified Gumbel.
inline constexpr double kGumbelShapeTolerance = 0.05;

/// Exponent of the Q^x rescaling that maps the l(t) curve onto r(t).
inline constexpr double kLambdaMaxRescaleExponent = 0.44;

/// Generalized extreme-value fit, F(x) = exp(-(1 + shape*(x-location)/scale)^(-1/shape)).
struct EvtFit {
  double shape = 0.0;
  double location = 0.0;
  double scale = 1.0;
  double loglik = 0.0;
  double shape_stderr = 0.0;
  double location_stderr = 0.0;
  double scale_stderr = 0.0;
  std::size_t n = 0;
  EvtFamily family = EvtFamily::Gumbel;

  std::pair<double, double> shape_ci95() const {
    return {shape - 1.959963984540054 * shape_stderr, shape + 1.959963984540054 * shape_stderr};
  }
};

EvtFamily classify_shape(double shape, double tolerance = kGumbelShapeTolerance);
const char* to_string(EvtFamily family);

std::vector<double> max_eigenvalue_samples(std::span<const Spectrum> spectra);

/// Maximum-likelihood GEV fit (Nelder-Mead on location, log scale, shape;
/// standard errors from the observed information). Needs >= 100 maxima.
EvtFit gev_fit(std::span<const double> maxima);
double gev_loglik(std::span<const double> x, double shape, double location, double scale);
double gev_cdf(double x, double shape, double location, double scale);

/// exp(-((x-m)/s)^-a) for x > m, else 0.
double frechet_cdf(double x, double shape, double location, double scale);
/// exp(-exp(-(x-m)/s)).
double gumbel_cdf(double x, double location, double scale);

/// Empirical TW1 law: largest eigenvalues of GOE matrices (off-diagonal
/// variance 1), centred at 2*sqrt(n) and scaled by n^(1/6).
struct TwReference {
  std::size_t n_matrices = 0;
  std::size_t matrix_size = 0;
  std::uint64_t seed = 0;
  std::vector<double> samples;  // sorted ascending

  double cdf(double x) const;
  double mean() const;
};

struct TwReferenceOptions {
  std::optional<std::filesystem::path> cache_dir;
  double budget = 1e7;  // ceiling on n_matrices * matrix_size
  unsigned workers = 1;
};

/// Monte Carlo TW1 reference. Matrix m is drawn from child_seed(seed, m) in
/// the tridiagonal GOE form (same eigenvalue law as the dense ensemble).
/// Cached as CSV under cache_dir when given.
TwReference tracy_widom_goe_reference(std::size_t n_matrices, std::size_t matrix_size, std::uint64_t seed,
                                      const TwReferenceOptions& options = {});

/// Largest GOE eigenvalue, tridiagonal model + Sturm bisection.
double goe_largest_eigenvalue_tridiagonal(Rng& rng, std::size_t n);
/// Largest GOE eigenvalue from a dense (A + A^T)/sqrt(2) matrix.
double goe_largest_eigenvalue_dense(Rng& rng, std::size_t n);

/// (lambda_max - mu_TN) / sigma_TN with the real-Wishart edge centring
/// mu_TN = (sqrt(T-1) + sqrt(N))^2 / T and
/// sigma_TN = (sqrt(T-1) + sqrt(N)) / T * (1/sqrt(T-1) + 1/sqrt(N))^(1/3).
std::vector<double> rescale_to_tw(std::span<const double> maxima, std::size_t T, std::size_t N);

enum class CurveSource { Empirical, ModelR, ModelL, Shuffled };
const char* to_string(CurveSource source);

struct LambdaMaxPoint {
  double Q = 0.0;
  std::size_t T = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n_epochs = 0;
  bool flagged = false;  // fewer than kMinCurveEpochs epochs
};

inline constexpr std::size_t kMinCurveEpochs = 10;

struct LambdaMaxCurve {
  std::vector<LambdaMaxPoint> points;
  CurveSource source = CurveSource::ModelR;
  std::optional<double> rescale_exponent;
};

/// Mean largest eigenvalue per epoch length T across all panels. Overlapping
/// epochs (stride 1) when `overlap`; disjoint otherwise.
LambdaMaxCurve mean_lambda_max_curve(std::span<const ReturnPanel> sources, std::span<const std::size_t> T_grid,
                                     bool overlap, CurveSource source, unsigned workers = 1);

/// Multiplies every mean and stderr by Q^exponent.
/// Mean and standard error of one epoch length's maxima; flagged below kMinCurveEpochs.
LambdaMaxPoint lambda_max_point(std::span<const double> maxima, std::size_t T, std::size_t N);

LambdaMaxCurve rescale_curve(const LambdaMaxCurve& curve, double exponent = kLambdaMaxRescaleExponent);

}  // namespace levyrmt
