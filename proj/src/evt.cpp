#include "levyrmt/evt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "levyrmt/error.hpp"
#include "levyrmt/parallel.hpp"
#include "levyrmt/statfit.hpp"

namespace levyrmt {

EvtFamily classify_shape(double shape, double tolerance) {
  if (std::abs(shape) <= tolerance) return EvtFamily::Gumbel;
  return shape > 0.0 ? EvtFamily::Frechet : EvtFamily::Weibull;
}

const char* to_string(EvtFamily family) {
  switch (family) {
    case EvtFamily::Frechet: return "frechet";
    case EvtFamily::Gumbel: return "gumbel";
    case EvtFamily::Weibull: return "weibull";
  }
  return "unknown";
}

std::vector<double> max_eigenvalue_samples(std::span<const Spectrum> spectra) {
  if (spectra.empty()) throw ValidationError("max_eigenvalue_samples: no spectra");
  std::vector<double> out;
  out.reserve(spectra.size());
  for (const auto& s : spectra) {
    if (s.T != spectra.front().T || s.N != spectra.front().N)
      throw ValidationError("max_eigenvalue_samples: mixed epoch shapes (T, N)");
    out.push_back(s.largest());
  }
  return out;
}

// ---------------------------------------------------------------------------
// GEV

namespace {

constexpr double kGumbelLimit = 1e-8;

double gev_logpdf(double x, double shape, double location, double scale) {
  const double z = (x - location) / scale;
  if (std::abs(shape) < kGumbelLimit) return -std::log(scale) - z - std::exp(-z);
  const double t = 1.0 + shape * z;
  if (t <= 0.0) return -std::numeric_limits<double>::infinity();
  const double lt = std::log(t);
  return -std::log(scale) - (1.0 + 1.0 / shape) * lt - std::exp(-lt / shape);
}

using Vec3 = std::array<double, 3>;

// Nelder-Mead minimizer; returns the best vertex.
template <typename F>
Vec3 nelder_mead(F&& f, Vec3 start, Vec3 step, int max_iter, double tol, bool& converged) {
  std::array<Vec3, 4> p;
  std::array<double, 4> v;
  p[0] = start;
  for (int i = 0; i < 3; ++i) {
    p[i + 1] = start;
    p[i + 1][i] += step[i];
  }
  for (int i = 0; i < 4; ++i) v[i] = f(p[i]);
  converged = false;
  for (int it = 0; it < max_iter; ++it) {
    std::array<int, 4> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::array<Vec3, 4> ps;
    std::array<double, 4> vs;
    for (int i = 0; i < 4; ++i) {
      ps[i] = p[idx[i]];
      vs[i] = v[idx[i]];
    }
    p = ps;
    v = vs;
    if (std::abs(v[3] - v[0]) <= tol * (std::abs(v[0]) + 1e-12)) {
      double spread = 0.0;
      for (int i = 1; i < 4; ++i)
        for (int d = 0; d < 3; ++d) spread = std::max(spread, std::abs(p[i][d] - p[0][d]));
      if (spread < 1e-9) {
        converged = true;
        break;
      }
    }
    Vec3 c{};
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < 3; ++d) c[d] += p[i][d] / 3.0;
    auto along = [&](double t) {
      Vec3 r;
      for (int d = 0; d < 3; ++d) r[d] = c[d] + t * (p[3][d] - c[d]);
      return r;
    };
    const Vec3 xr = along(-1.0);
    const double fr = f(xr);
    if (fr < v[0]) {
      const Vec3 xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        p[3] = xe;
        v[3] = fe;
      } else {
        p[3] = xr;
        v[3] = fr;
      }
    } else if (fr < v[2]) {
      p[3] = xr;
      v[3] = fr;
    } else {
      const Vec3 xc = fr < v[3] ? along(-0.5) : along(0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, v[3])) {
        p[3] = xc;
        v[3] = fc;
      } else {
        for (int i = 1; i < 4; ++i) {
          for (int d = 0; d < 3; ++d) p[i][d] = p[0][d] + 0.5 * (p[i][d] - p[0][d]);
          v[i] = f(p[i]);
        }
      }
    }
  }
  int best = static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
  return p[best];
}

}  // namespace

double gev_loglik(std::span<const double> x, double shape, double location, double scale) {
  if (!(scale > 0.0)) return -std::numeric_limits<double>::infinity();
  double ll = 0.0;
  for (double v : x) {
    ll += gev_logpdf(v, shape, location, scale);
    if (!std::isfinite(ll)) return -std::numeric_limits<double>::infinity();
  }
  return ll;
}

double gev_cdf(double x, double shape, double location, double scale) {
  const double z = (x - location) / scale;
  if (std::abs(shape) < kGumbelLimit) return std::exp(-std::exp(-z));
  const double t = 1.0 + shape * z;
  if (t <= 0.0) return shape > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::pow(t, -1.0 / shape));
}

double frechet_cdf(double x, double shape, double location, double scale) {
  if (!(scale > 0.0) || !(shape > 0.0)) throw ValidationError("frechet_cdf: shape and scale must be positive");
  if (x <= location) return 0.0;
  return std::exp(-std::pow((x - location) / scale, -shape));
}

double gumbel_cdf(double x, double location, double scale) {
  if (!(scale > 0.0)) throw ValidationError("gumbel_cdf: scale must be positive");
  return std::exp(-std::exp(-(x - location) / scale));
}

EvtFit gev_fit(std::span<const double> maxima) {
  if (maxima.size() < 100) throw ValidationError("gev_fit: need >= 100 maxima");
  for (double v : maxima)
    if (!std::isfinite(v)) throw ValidationError("gev_fit: non-finite maximum");
  const double mean = pairwise_mean(maxima);
  double var = 0.0;
  for (double v : maxima) var += (v - mean) * (v - mean);
  var /= static_cast<double>(maxima.size() - 1);
  if (!(var > 0.0)) throw AnalysisError("gev_fit: degenerate (constant) maxima");
  const double sd = std::sqrt(var);

  // Work on standardized data so the simplex steps are well scaled.
  std::vector<double> z(maxima.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (maxima[i] - mean) / sd;
  auto objective = [&](const Vec3& p) {
    const double ll = gev_loglik(z, p[2], p[0], std::exp(p[1]));
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::max();
  };

  const double sigma0 = std::sqrt(6.0) / std::numbers::pi;
  const double mu0 = -0.5772156649015329 * sigma0;
  Vec3 best{};
  double best_val = std::numeric_limits<double>::max();
  bool any_converged = false;
  for (double xi0 : {-0.2, 0.1, 0.4}) {
    bool converged = false;
    Vec3 p = nelder_mead(objective, {mu0, std::log(sigma0), xi0}, {0.1, 0.1, 0.1}, 4000, 1e-12, converged);
    // Restart from the optimum to escape simplex collapse.
    p = nelder_mead(objective, p, {0.05, 0.05, 0.05}, 4000, 1e-13, converged);
    const double val = objective(p);
    if (val < best_val) {
      best_val = val;
      best = p;
      any_converged = converged;
    }
  }
  if (!any_converged || best_val == std::numeric_limits<double>::max())
    throw AnalysisError("gev_fit: likelihood maximization did not converge");

  EvtFit fit;
  fit.n = maxima.size();
  fit.shape = best[2];
  fit.location = mean + sd * best[0];
  fit.scale = sd * std::exp(best[1]);
  fit.loglik = gev_loglik(maxima, fit.shape, fit.location, fit.scale);
  fit.family = classify_shape(fit.shape);

  // Observed information in (location, scale, shape) on the standardized data.
  const Vec3 theta{best[0], std::exp(best[1]), best[2]};
  auto nll = [&](const Vec3& t) { return -gev_loglik(z, t[2], t[0], t[1]); };
  Eigen::Matrix3d hess;
  const Vec3 h{1e-4, 1e-4 * theta[1], 1e-4};
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      auto shifted = [&](double si, double sj) {
        Vec3 t = theta;
        t[i] += si * h[i];
        t[j] += sj * h[j];
        return nll(t);
      };
      const double v = (shifted(1, 1) - shifted(1, -1) - shifted(-1, 1) + shifted(-1, -1)) / (4.0 * h[i] * h[j]);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(hess);
  if (es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0 && std::isfinite(hess.sum())) {
    const Eigen::Matrix3d cov = hess.inverse();
    fit.location_stderr = sd * std::sqrt(cov(0, 0));
    fit.scale_stderr = sd * std::sqrt(cov(1, 1));
    fit.shape_stderr = std::sqrt(cov(2, 2));
  } else {
    fit.location_stderr = fit.scale_stderr = fit.shape_stderr = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Tracy-Widom GOE reference

double TwReference::cdf(double x) const {
  const auto it = std::upper_bound(samples.begin(), samples.end(), x);
  return static_cast<double>(it - samples.begin()) / static_cast<double>(samples.size());
}

double TwReference::mean() const { return pairwise_mean(samples); }

namespace {

// Number of eigenvalues of the symmetric tridiagonal (diag, off) below x.
std::size_t sturm_count(const std::vector<double>& diag, const std::vector<double>& off2, double x) {
  std::size_t count = 0;
  double q = diag[0] - x;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < diag.size(); ++i) {
    if (q == 0.0) q = std::numeric_limits<double>::epsilon() * (std::abs(x) + 1.0);
    q = diag[i] - x - off2[i - 1] / q;
    if (q < 0.0) ++count;
  }
  return count;
}

}  // namespace

double goe_largest_eigenvalue_tridiagonal(Rng& rng, std::size_t n) {
  if (n < 2) throw ValidationError("GOE matrix size must be >= 2");
  std::vector<double> diag(n);
  std::vector<double> off2(n - 1);
  double bound = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag[i] = std::numbers::sqrt2 * rng.normal();
  std::vector<double> off(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    off[i] = rng.chi(static_cast<double>(n - 1 - i));
    off2[i] = off[i] * off[i];
  }
  // Gershgorin bracket.
  double lo = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? off[i - 1] : 0.0) + (i + 1 < n ? off[i] : 0.0);
    bound = std::max(bound, diag[i] + r);
    lo = std::min(lo, diag[i] - r);
  }
  double hi = bound;
  // Bisection on "all n eigenvalues below x".
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(diag, off2, mid) == n) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double goe_largest_eigenvalue_dense(Rng& rng, std::size_t n) {
  if (n < 2) throw ValidationError("GOE matrix size must be >= 2");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = rng.normal();
  const Eigen::MatrixXd h = (a + a.transpose()) / std::numbers::sqrt2;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw AnalysisError("GOE eigensolver did not converge");
  return solver.eigenvalues().maxCoeff();
}

namespace {

std::string tw_header(std::size_t n_matrices, std::size_t matrix_size, std::uint64_t seed) {
  std::ostringstream os;
  os << "# tw1_goe_reference n_matrices=" << n_matrices << " matrix_size=" << matrix_size << " seed=" << seed;
  return os.str();
}

std::optional<TwReference> load_tw_cache(const std::filesystem::path& file, std::size_t n_matrices,
                                         std::size_t matrix_size, std::uint64_t seed) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line) || line != tw_header(n_matrices, matrix_size, seed)) return std::nullopt;
  TwReference ref{n_matrices, matrix_size, seed, {}};
  ref.samples.reserve(n_matrices);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ref.samples.push_back(std::strtod(line.c_str(), nullptr));
  }
  if (ref.samples.size() != n_matrices) return std::nullopt;
  return ref;
}

}  // namespace

TwReference tracy_widom_goe_reference(std::size_t n_matrices, std::size_t matrix_size, std::uint64_t seed,
                                      const TwReferenceOptions& options) {
  if (n_matrices < 1 || matrix_size < 2) throw ValidationError("tracy_widom_goe_reference: empty ensemble");
  if (static_cast<double>(n_matrices) * static_cast<double>(matrix_size) > options.budget)
    throw AnalysisError("tracy_widom_goe_reference: insufficient resources (n_matrices * matrix_size = " +
                        std::to_string(n_matrices * matrix_size) + " exceeds budget)");
  std::filesystem::path cache_file;
  if (options.cache_dir) {
    cache_file = *options.cache_dir / ("tw1_goe_m" + std::to_string(n_matrices) + "_n" +
                                       std::to_string(matrix_size) + "_s" + std::to_string(seed) + ".csv");
    if (auto cached = load_tw_cache(cache_file, n_matrices, matrix_size, seed)) return *cached;
  }

  TwReference ref{n_matrices, matrix_size, seed, std::vector<double>(n_matrices)};
  const double n = static_cast<double>(matrix_size);
  const double centre = 2.0 * std::sqrt(n);
  const double scale = std::pow(n, 1.0 / 6.0);
  parallel_for(n_matrices, options.workers, [&](std::size_t m) {
    Rng rng(child_seed(seed, m));
    ref.samples[m] = (goe_largest_eigenvalue_tridiagonal(rng, matrix_size) - centre) * scale;
  });
  std::sort(ref.samples.begin(), ref.samples.end());

  if (options.cache_dir) {
    std::filesystem::create_directories(*options.cache_dir);
    std::ofstream out(cache_file);
    if (!out) throw AnalysisError("cannot write TW reference cache " + cache_file.string());
    out << tw_header(n_matrices, matrix_size, seed) << '\n';
    char buf[40];
    for (double v : ref.samples) {
      std::snprintf(buf, sizeof buf, "%.17g\n", v);
      out << buf;
    }
  }
  return ref;
}

std::vector<double> rescale_to_tw(std::span<const double> maxima, std::size_t T, std::size_t N) {
  if (T < 2) throw ValidationError("rescale_to_tw: T must be >= 2");
  if (N < 1) throw ValidationError("rescale_to_tw: N must be >= 1");
  const double a = std::sqrt(static_cast<double>(T) - 1.0);
  const double b = std::sqrt(static_cast<double>(N));
  const double t = static_cast<double>(T);
  const double mu = (a + b) * (a + b) / t;
  const double sigma = (a + b) / t * std::cbrt(1.0 / a + 1.0 / b);
  std::vector<double> out(maxima.size());
  for (std::size_t i = 0; i < maxima.size(); ++i) out[i] = (maxima[i] - mu) / sigma;
  return out;
}

// ---------------------------------------------------------------------------
// <lambda_max>(Q)

const char* to_string(CurveSource source) {
  switch (source) {
    case CurveSource::Empirical: return "empirical";
    case CurveSource::ModelR: return "model_r";
    case CurveSource::ModelL: return "model_l";
    case CurveSource::Shuffled: return "shuffled";
  }
  return "unknown";
}

LambdaMaxPoint lambda_max_point(std::span<const double> lmax, std::size_t T, std::size_t N) {
  if (lmax.empty()) throw ValidationError("lambda_max_point: no maxima");
  LambdaMaxPoint pt;
  pt.T = T;
  pt.Q = static_cast<double>(T) / static_cast<double>(N);
  pt.n_epochs = lmax.size();
  pt.mean = pairwise_mean(lmax);
  if (lmax.size() > 1) {
    double var = 0.0;
    for (double v : lmax) var += (v - pt.mean) * (v - pt.mean);
    var /= static_cast<double>(lmax.size() - 1);
    pt.stderr_ = std::sqrt(var / static_cast<double>(lmax.size()));
  }
  pt.flagged = lmax.size() < kMinCurveEpochs;
  return pt;
}

LambdaMaxCurve mean_lambda_max_curve(std::span<const ReturnPanel> sources, std::span<const std::size_t> T_grid,
                                     bool overlap, CurveSource source, unsigned workers) {
  if (sources.empty()) throw ValidationError("mean_lambda_max_curve: no source panels");
  if (T_grid.empty()) throw ValidationError("mean_lambda_max_curve: empty Q grid");
  const auto n_assets = static_cast<std::size_t>(sources.front().cols());
  for (const auto& p : sources)
    if (static_cast<std::size_t>(p.cols()) != n_assets)
      throw ValidationError("mean_lambda_max_curve: panels differ in asset count");

  LambdaMaxCurve curve;
  curve.source = source;
  for (std::size_t T : T_grid) {
    std::vector<std::pair<std::size_t, std::size_t>> jobs;  // (panel, start)
    for (std::size_t p = 0; p < sources.size(); ++p)
      for (std::size_t s : epoch_starts(static_cast<std::size_t>(sources[p].rows()), T, overlap)) jobs.emplace_back(p, s);
    std::vector<double> lmax(jobs.size());
    parallel_for(jobs.size(), workers, [&](std::size_t j) {
      lmax[j] = largest_eigenvalue(epoch_at(sources[jobs[j].first], jobs[j].second, T));
    });
    const LambdaMaxPoint pt = lambda_max_point(lmax, T, n_assets);
    curve.points.push_back(pt);
  }
  return curve;
}

LambdaMaxCurve rescale_curve(const LambdaMaxCurve& curve, double exponent) {
  LambdaMaxCurve out = curve;
  for (auto& pt : out.points) {
    const double f = std::pow(pt.Q, exponent);
    pt.mean *= f;
    pt.stderr_ *= f;
  }
  out.rescale_exponent = curve.rescale_exponent.value_or(0.0) + exponent;
  return out;
}

}  // namespace levyrmt
