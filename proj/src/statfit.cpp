#include "levyrmt/statfit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/minima.hpp>
#include <fftw3.h>

#include "levyrmt/error.hpp"

namespace levyrmt {

namespace {

double pairwise_sum(const double* p, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(p, half) + pairwise_sum(p + half, n - half);
}

std::vector<double> sorted_positive(std::span<const double> samples, const char* who) {
  std::vector<double> x(samples.begin(), samples.end());
  for (double v : x)
    if (!(v > 0.0) || !std::isfinite(v))
      throw ValidationError(std::string(who) + ": samples must be positive and finite");
  std::sort(x.begin(), x.end());
  return x;
}

// KS distance between the sorted tail x[first..end) and the Pareto law with
// the given x_min and exponent. For long tails only `max_points` evenly
// spaced order statistics are checked; the result is then within
// 1/max_points of the exact statistic.
double pareto_ks(const std::vector<double>& x, std::size_t first, double x_min, double alpha,
                 std::size_t max_points = 4000) {
  const std::size_t k = x.size() - first;
  const double kd = static_cast<double>(k);
  const std::size_t stride = std::max<std::size_t>(1, k / max_points);
  double d = 0.0;
  auto check = [&](std::size_t i) {
    const double cdf = 1.0 - std::pow(x[first + i] / x_min, -alpha);
    d = std::max({d, std::abs(cdf - static_cast<double>(i) / kd), std::abs(static_cast<double>(i + 1) / kd - cdf)});
  };
  for (std::size_t i = 0; i < k; i += stride) check(i);
  check(k - 1);
  return d;
}

}  // namespace

double pairwise_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return pairwise_sum(values.data(), values.size()) / static_cast<double>(values.size());
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw ValidationError("least_squares: need >= 3 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = pairwise_mean(x);
  const double my = pairwise_mean(y);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw AnalysisError("least_squares: abscissa has zero spread");
  LinearFit fit;
  fit.n = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  fit.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

RankCorrelation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw ValidationError("spearman: need >= 3 paired points");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t m = i; m <= j; ++m) r[idx[m]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = pairwise_mean(rx);
  const double my = pairwise_mean(ry);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  RankCorrelation out;
  if (!(sxx > 0.0 && syy > 0.0)) return out;
  out.rho = sxy / std::sqrt(sxx * syy);
  const double dof = static_cast<double>(x.size()) - 2.0;
  const double denom = 1.0 - out.rho * out.rho;
  if (denom <= 0.0) {
    out.p_value = 0.0;
    return out;
  }
  const double t = out.rho * std::sqrt(dof / denom);
  boost::math::students_t dist(dof);
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return out;
}

TailFit hill_estimate(std::span<const double> tail, double x_min) {
  if (!(x_min > 0.0)) throw ValidationError("hill_estimate: x_min must be positive");
  double sum_log = 0.0;
  for (double v : tail) {
    if (v < x_min) throw ValidationError("hill_estimate: tail value below x_min");
    sum_log += std::log(v / x_min);
  }
  if (!(sum_log > 0.0)) throw AnalysisError("hill_estimate: zero log-spacing in tail (all values equal x_min)");
  TailFit fit;
  fit.n_tail = tail.size();
  fit.x_min = x_min;
  fit.exponent = static_cast<double>(tail.size()) / sum_log;
  fit.stderr_ = fit.exponent / std::sqrt(static_cast<double>(tail.size()));
  std::vector<double> sorted(tail.begin(), tail.end());
  std::sort(sorted.begin(), sorted.end());
  fit.ks = pareto_ks(sorted, 0, x_min, fit.exponent);
  return fit;
}

TailFit hill_tail_exponent(std::span<const double> samples, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 0.5))
    throw ValidationError("hill_tail_exponent: tail_fraction must be in (0, 0.5]");
  if (samples.size() < 100) throw ValidationError("hill_tail_exponent: need >= 100 samples");
  const auto x = sorted_positive(samples, "hill_tail_exponent");
  const auto k = static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(x.size())));
  if (k < 10) throw AnalysisError("hill_tail_exponent: fewer than 10 tail samples");
  const double x_min = x[x.size() - k - 1];
  return hill_estimate(std::span(x).last(k), x_min);
}

TailFit powerlaw_fit_ks(std::span<const double> samples) {
  constexpr std::size_t kMinTail = 50;
  constexpr std::size_t kCandidates = 400;
  if (samples.size() < 500) throw ValidationError("powerlaw_fit_ks: need >= 500 samples");
  const auto x = sorted_positive(samples, "powerlaw_fit_ks");
  const std::size_t n = x.size();

  // suffix[i] = sum_{j >= i} ln x_j, so the MLE above any x_min is O(1).
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + std::log(x[i]);

  std::optional<TailFit> best;
  std::size_t last_first = n;
  for (std::size_t c = 0; c < kCandidates; ++c) {
    auto first = static_cast<std::size_t>(static_cast<double>(c) / kCandidates * static_cast<double>(n));
    // Ties: the tail starts at the first occurrence of the candidate value.
    first = static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), x[first]) - x.begin());
    if (first == last_first) continue;
    last_first = first;
    const std::size_t k = n - first;
    if (k < kMinTail) break;
    const double x_min = x[first];
    const double sum_log = suffix[first] - static_cast<double>(k) * std::log(x_min);
    if (!(sum_log > 0.0)) continue;
    const double alpha = static_cast<double>(k) / sum_log;
    const double ks = pareto_ks(x, first, x_min, alpha);
    if (!best || ks < best->ks) {
      best = TailFit{alpha, x_min, k, alpha / std::sqrt(static_cast<double>(k)), ks};
    }
  }
  if (!best) throw AnalysisError("powerlaw_fit_ks: no x_min candidate with >= 50 tail points");
  return *best;
}

double PsdEstimate::total_power() const {
  if (length == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    const bool nyquist = (length % 2 == 0) && (k + 1 == power.size());
    sum += nyquist ? power[k] : 2.0 * power[k];
  }
  return sum / static_cast<double>(length);
}

PsdEstimate periodogram(const Eigen::MatrixXd& series_by_column) {
  const auto n = static_cast<std::size_t>(series_by_column.rows());
  const auto m = static_cast<std::size_t>(series_by_column.cols());
  if (n < 64) throw ValidationError("periodogram: series length must be >= 64");
  if (m < 1) throw ValidationError("periodogram: no series");
  const std::size_t n_freq = n / 2;  // bins 1..n/2

  std::vector<double> in(n);
  std::vector<fftw_complex> out(n / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(), FFTW_ESTIMATE);
  std::vector<double> acc(n_freq, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const auto col = series_by_column.col(static_cast<Eigen::Index>(j));
    const double mean = col.mean();
    for (std::size_t t = 0; t < n; ++t) in[t] = col(static_cast<Eigen::Index>(t)) - mean;
    fftw_execute(plan);
    for (std::size_t k = 1; k <= n_freq; ++k)
      acc[k - 1] += (out[k][0] * out[k][0] + out[k][1] * out[k][1]) / static_cast<double>(n);
  }
  fftw_destroy_plan(plan);

  PsdEstimate psd;
  psd.length = n;
  psd.n_series = m;
  psd.freqs.resize(n_freq);
  psd.power.resize(n_freq);
  for (std::size_t k = 1; k <= n_freq; ++k) {
    psd.freqs[k - 1] = static_cast<double>(k) / static_cast<double>(n);
    psd.power[k - 1] = acc[k - 1] / static_cast<double>(m);
  }
  return psd;
}

PsdEstimate periodogram(std::span<const double> series) {
  Eigen::Map<const Eigen::VectorXd> v(series.data(), static_cast<Eigen::Index>(series.size()));
  return periodogram(Eigen::MatrixXd(v));
}

FrequencyBand default_band(const PsdEstimate& psd) {
  if (psd.freqs.empty()) throw ValidationError("default_band: empty spectrum");
  return {psd.freqs.front(), 100.0 * psd.freqs.front()};
}

PsdEstimate fit_spectral_exponent(PsdEstimate psd, std::optional<FrequencyBand> band) {
  const FrequencyBand b = band.value_or(default_band(psd));
  std::vector<double> lx;
  std::vector<double> ly;
  // Relative slack so band edges computed as multiples of 1/n are inclusive.
  const double lo = b.lo * (1.0 - 1e-9);
  const double hi = b.hi * (1.0 + 1e-9);
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    const double f = psd.freqs[k];
    if (f < lo || f > hi) continue;
    if (!(psd.power[k] > 0.0)) throw AnalysisError("fit_spectral_exponent: zero power inside band");
    lx.push_back(std::log(f));
    ly.push_back(std::log(psd.power[k]));
  }
  if (lx.size() < 10)
    throw AnalysisError("fit_spectral_exponent: band holds " + std::to_string(lx.size()) + " bins (need >= 10)");
  const LinearFit line = least_squares(lx, ly);
  psd.beta = -line.slope;
  psd.beta_stderr = line.slope_stderr;
  psd.band = b;
  return psd;
}

double student_t_loglik(std::span<const double> samples, double nu, double location, double scale) {
  const double n = static_cast<double>(samples.size());
  const double c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) -
                   std::log(scale);
  double acc = 0.0;
  for (double x : samples) {
    const double z = (x - location) / scale;
    acc += std::log1p(z * z / nu);
  }
  return n * c - 0.5 * (nu + 1.0) * acc;
}

namespace {

struct LocScale {
  double location;
  double scale;
};

// EM for location/scale of a Student-t with fixed nu.
LocScale t_location_scale(std::span<const double> x, double nu, LocScale start) {
  constexpr int kMaxIter = 1000;
  constexpr double kTol = 1e-10;
  double mu = start.location;
  double sigma = start.scale;
  const double n = static_cast<double>(x.size());
  for (int it = 0; it < kMaxIter; ++it) {
    double sw = 0.0;
    double swx = 0.0;
    const double inv_s2 = 1.0 / (sigma * sigma);
    for (double v : x) {
      const double d = v - mu;
      const double w = (nu + 1.0) / (nu + d * d * inv_s2);
      sw += w;
      swx += w * v;
    }
    const double mu_new = swx / sw;
    double swd = 0.0;
    for (double v : x) {
      const double d = v - mu_new;
      const double w = (nu + 1.0) / (nu + (v - mu) * (v - mu) * inv_s2);
      swd += w * d * d;
    }
    const double sigma_new = std::sqrt(swd / n);
    const bool done = std::abs(mu_new - mu) <= kTol * sigma && std::abs(sigma_new - sigma) <= kTol * sigma;
    mu = mu_new;
    sigma = sigma_new;
    if (done) return {mu, sigma};
  }
  throw AnalysisError("student_t_fit: location/scale iteration did not converge at nu=" + std::to_string(nu));
}

}  // namespace

TDistFit student_t_fit(std::span<const double> samples) {
  if (samples.size() < 1000) throw ValidationError("student_t_fit: need >= 1000 samples");
  for (double v : samples)
    if (!std::isfinite(v)) throw ValidationError("student_t_fit: non-finite sample");

  // Robust start: median and scaled MAD.
  std::vector<double> tmp(samples.begin(), samples.end());
  auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
  std::nth_element(tmp.begin(), mid, tmp.end());
  const double median = *mid;
  for (double& v : tmp) v = std::abs(v - median);
  std::nth_element(tmp.begin(), mid, tmp.end());
  const double mad = *mid;
  if (!(mad > 0.0)) throw AnalysisError("student_t_fit: degenerate samples (zero spread)");
  LocScale warm{median, 1.4826 * mad};

  auto profile = [&](double log_nu) {
    const double nu = std::exp(log_nu);
    const LocScale ls = t_location_scale(samples, nu, warm);
    warm = ls;
    return -student_t_loglik(samples, nu, ls.location, ls.scale);
  };
  const auto [best_log_nu, best_neg] = boost::math::tools::brent_find_minima(
      profile, std::log(kTDistNuMin), std::log(kTDistNuMax), 30);

  TDistFit fit;
  fit.nu0 = std::exp(best_log_nu);
  const LocScale ls = t_location_scale(samples, fit.nu0, warm);
  fit.location = ls.location;
  fit.scale = ls.scale;
  fit.loglik = -best_neg;

  const LocScale at_max = t_location_scale(samples, kTDistNuMax, ls);
  const double ll_max = student_t_loglik(samples, kTDistNuMax, at_max.location, at_max.scale);
  if (ll_max >= fit.loglik || fit.nu0 > 0.99 * kTDistNuMax) {
    fit.nu0 = kTDistNuMax;
    fit.location = at_max.location;
    fit.scale = at_max.scale;
    fit.loglik = std::max(ll_max, fit.loglik);
    fit.at_upper_bound = true;
  }
  return fit;
}

TailComparison tail_model_comparison(std::span<const double> samples) {
  if (samples.size() < 1000) throw ValidationError("tail_model_comparison: need >= 1000 samples");
  TailComparison cmp;
  cmp.power_law = powerlaw_fit_ks(samples);
  const double x_min = cmp.power_law.x_min;
  const double alpha = cmp.power_law.exponent;

  std::vector<double> tail;
  for (double v : samples)
    if (v >= x_min) tail.push_back(v);
  double excess = 0.0;
  for (double v : tail) excess += v - x_min;
  if (!(excess > 0.0)) throw AnalysisError("tail_model_comparison: degenerate tail");
  const double k = static_cast<double>(tail.size());
  cmp.exp_rate = k / excess;

  std::vector<double> diff(tail.size());
  double ll_pl = 0.0;
  double ll_exp = 0.0;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    const double lp = std::log(alpha / x_min) - (1.0 + alpha) * std::log(tail[i] / x_min);
    const double le = std::log(cmp.exp_rate) - cmp.exp_rate * (tail[i] - x_min);
    ll_pl += lp;
    ll_exp += le;
    diff[i] = lp - le;
  }
  cmp.loglik_power_law = ll_pl;
  cmp.loglik_exponential = ll_exp;
  cmp.loglik_ratio = ll_pl - ll_exp;
  const double mean_d = cmp.loglik_ratio / k;
  double var = 0.0;
  for (double d : diff) var += (d - mean_d) * (d - mean_d);
  var /= k;
  if (var > 0.0) {
    cmp.vuong_z = cmp.loglik_ratio / std::sqrt(k * var);
    cmp.p_value = std::erfc(std::abs(cmp.vuong_z) / std::numbers::sqrt2);
  }
  return cmp;
}

Histogram log_binned_histogram(std::span<const double> samples, int bins_per_decade) {
  if (bins_per_decade < 2) throw ValidationError("log_binned_histogram: bins_per_decade must be >= 2");
  if (samples.empty()) throw ValidationError("log_binned_histogram: no samples");
  double lo_v = samples[0];
  double hi_v = samples[0];
  for (double v : samples) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ValidationError("log_binned_histogram: non-positive sample present");
    lo_v = std::min(lo_v, v);
    hi_v = std::max(hi_v, v);
  }
  const double bpd = bins_per_decade;
  const double lo = std::floor(std::log10(lo_v) * bpd);
  double hi = std::ceil(std::log10(hi_v) * bpd);
  if (hi <= lo) hi = lo + 1.0;
  const auto n_bins = static_cast<std::size_t>(hi - lo);

  Histogram h;
  h.total = samples.size();
  h.edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) h.edges[i] = std::pow(10.0, (lo + static_cast<double>(i)) / bpd);
  h.edges.front() = std::min(h.edges.front(), lo_v);
  h.edges.back() = std::max(h.edges.back(), hi_v);
  h.counts.assign(n_bins, 0);
  for (double v : samples) {
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
    auto bin = static_cast<std::size_t>(std::distance(h.edges.begin(), it));
    bin = std::clamp<std::size_t>(bin, 1, n_bins) - 1;
    ++h.counts[bin];
  }
  h.densities.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i)
    h.densities[i] = static_cast<double>(h.counts[i]) /
                     (static_cast<double>(h.total) * (h.edges[i + 1] - h.edges[i]));
  return h;
}

LinearFit density_slope(const Histogram& h, double lo, double hi) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (h.counts[i] == 0 || h.edges[i] < lo * (1.0 - 1e-12) || h.edges[i + 1] > hi * (1.0 + 1e-12)) continue;
    lx.push_back(0.5 * (std::log10(h.edges[i]) + std::log10(h.edges[i + 1])));
    ly.push_back(std::log10(h.densities[i]));
  }
  return least_squares(lx, ly);
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw ValidationError("ks_one_sample: empty sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace levyrmt
