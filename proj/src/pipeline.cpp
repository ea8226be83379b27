#include "levyrmt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "levyrmt/error.hpp"
#include "levyrmt/evt.hpp"
#include "levyrmt/geometry.hpp"
#include "levyrmt/parallel.hpp"
#include "levyrmt/returns.hpp"
#include "levyrmt/rmt.hpp"
#include "levyrmt/statfit.hpp"

namespace levyrmt {

using ojson = nlohmann::ordered_json;

namespace {

// Stream tags for child_seed(seed, tag); panel streams use small indices.
constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;  // "SHUFF"
constexpr std::uint64_t kTwStream = 0x545731ULL;           // "TW1"
constexpr std::uint64_t kPairStream = 0x50414952ULL;       // "PAIR"

}  // namespace

const char* to_string(SourceKind s) {
  switch (s) {
    case SourceKind::SimulateR: return "simulate_r";
    case SourceKind::SimulateL: return "simulate_l";
    case SourceKind::Empirical: return "empirical";
  }
  return "unknown";
}

const char* to_string(Analysis a) {
  switch (a) {
    case Analysis::Geometry: return "geometry";
    case Analysis::Psd: return "psd";
    case Analysis::ReturnsDist: return "returns_dist";
    case Analysis::Elements: return "elements";
    case Analysis::Spectra: return "spectra";
    case Analysis::Evt: return "evt";
    case Analysis::Shuffle: return "shuffle";
  }
  return "unknown";
}

SourceKind parse_source(const std::string& text) {
  if (text == "simulate_r") return SourceKind::SimulateR;
  if (text == "simulate_l") return SourceKind::SimulateL;
  if (text == "empirical") return SourceKind::Empirical;
  throw ValidationError("unknown source '" + text + "' (simulate_r, simulate_l, empirical)");
}

Analysis parse_analysis(const std::string& text) {
  for (Analysis a : {Analysis::Geometry, Analysis::Psd, Analysis::ReturnsDist, Analysis::Elements,
                     Analysis::Spectra, Analysis::Evt, Analysis::Shuffle})
    if (text == to_string(a)) return a;
  throw ValidationError("unknown analysis '" + text + "'");
}

TailEstimator parse_tail_estimator(const std::string& text) {
  if (text == "ks") return TailEstimator::KsScan;
  if (text == "hill") return TailEstimator::Hill;
  throw ValidationError("unknown tail estimator '" + text + "' (ks, hill)");
}

std::vector<std::size_t> default_T_grid() {
  std::vector<std::size_t> grid;
  for (std::size_t T = 10; T <= 260; T += 10) grid.push_back(T);
  return grid;
}

std::uint64_t panel_seed(std::uint64_t seed, std::size_t panel) { return child_seed(seed, panel); }
std::uint64_t shuffle_seed(std::uint64_t seed) { return child_seed(seed, kShuffleStream); }
std::uint64_t tw_seed(std::uint64_t seed) { return child_seed(seed, kTwStream); }

void RunConfig::validate() const {
  if (analyses.empty()) throw ValidationError("no analyses requested");
  if (is_model()) {
    WalkConfig{alpha, 1.0, n_steps, seed}.validate();
    if (n_walkers < 2) throw ValidationError("n_walkers must be >= 2");
    if (n_panels < 1) throw ValidationError("n_panels must be >= 1");
  } else {
    if (empirical_path.empty()) throw ValidationError("empirical source requires a data path");
    cleaning.validate();
  }
  if (T_grid.empty()) throw ValidationError("empty Q grid");
  for (std::size_t T : T_grid)
    if (T < 2) throw ValidationError("epoch lengths must be >= 2");
  if (!(tail_fraction > 0.0 && tail_fraction <= 0.5)) throw ValidationError("tail_fraction must be in (0, 0.5]");
  if (bins_per_decade < 2) throw ValidationError("bins_per_decade must be >= 2");
}

ojson config_to_json(const RunConfig& c) {
  ojson analyses = ojson::array();
  for (Analysis a : c.analyses) analyses.push_back(to_string(a));
  ojson j;
  j["source"] = to_string(c.source);
  j["empirical_path"] = c.empirical_path.string();
  j["alpha"] = c.alpha;
  j["n_steps"] = c.n_steps;
  j["n_walkers"] = c.n_walkers;
  j["n_panels"] = c.n_panels;
  j["T_grid"] = c.T_grid;
  j["seed"] = c.seed;
  j["analyses"] = analyses;
  j["tail_fraction"] = c.tail_fraction;
  j["headline_estimator"] = c.headline_estimator == TailEstimator::KsScan ? "ks" : "hill";
  j["bins_per_decade"] = c.bins_per_decade;
  j["max_pairs"] = c.max_pairs;
  j["evt_overlap"] = c.overlap_for_evt();
  j["shuffle_T"] = c.shuffle_T;
  j["tw_matrices"] = c.tw_matrices;
  j["tw_size"] = c.tw_size;
  j["cleaning"] = {{"max_missing_fraction", c.cleaning.max_missing_fraction},
                   {"drop_nonpositive", c.cleaning.drop_nonpositive}};
  // workers and output_dir are deliberately absent: they must not change the report.
  return j;
}

// ---------------------------------------------------------------------------

EpochSweep sweep_epochs(std::span<const ReturnPanel> panels, std::size_t T, const SweepOptions& options) {
  if (panels.empty()) throw ValidationError("sweep_epochs: no panels");
  EpochSweep out;
  out.T = T;
  out.N = static_cast<std::size_t>(panels.front().cols());
  struct Job {
    std::size_t panel;
    std::size_t start;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < panels.size(); ++p) {
    if (static_cast<std::size_t>(panels[p].cols()) != out.N)
      throw ValidationError("sweep_epochs: panels differ in asset count");
    for (std::size_t s : epoch_starts(static_cast<std::size_t>(panels[p].rows()), T, options.overlap))
      jobs.push_back({p, s});
  }
  out.n_epochs = jobs.size();
  out.lambda_max.resize(jobs.size());
  std::vector<std::vector<double>> elements(jobs.size());
  std::vector<std::vector<double>> nonzero(jobs.size());
  std::vector<char> bad_rank(jobs.size(), 0);
  std::vector<double> trace_err(jobs.size(), 0.0);
  parallel_for(jobs.size(), options.workers, [&](std::size_t j) {
    const EpochMatrix epoch = epoch_at(panels[jobs[j].panel], jobs[j].start, T);
    const bool want_elements = options.elements && !options.overlap && jobs[j].panel < options.element_panels;
    if (options.overlap || (!options.spectra && !want_elements)) {
      out.lambda_max[j] = largest_eigenvalue(epoch);
      return;
    }
    const WishartMatrix w = wishart(epoch);
    if (want_elements) {
      append_element_samples(w, elements[j]);
      for (double& v : elements[j]) v = std::abs(v);
    }
    const Spectrum s = eigenvalues(w);
    out.lambda_max[j] = s.largest();
    const double trace = w.values.trace();
    trace_err[j] = std::abs(pairwise_mean(s.eigenvalues) * static_cast<double>(s.eigenvalues.size()) - trace) / trace;
    if (options.spectra) {
      for (double v : s.eigenvalues)
        if (v > 0.0) nonzero[j].push_back(v);
      bad_rank[j] = nonzero[j].size() != std::min(T, out.N);
    }
  });
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    out.rank_violations += bad_rank[j];
    out.max_trace_error = std::max(out.max_trace_error, trace_err[j]);
  }
  for (auto& e : elements) {
    out.abs_elements.insert(out.abs_elements.end(), e.begin(), e.end());
    std::vector<double>().swap(e);
  }
  for (const auto& v : nonzero) out.nonzero_eigenvalues.insert(out.nonzero_eigenvalues.end(), v.begin(), v.end());
  return out;
}

std::vector<ReturnPanel> build_return_panels(const RunConfig& config, std::vector<PricePanel>* prices) {
  std::vector<ReturnPanel> out;
  if (config.is_model()) {
    const SeriesKind kind =
        config.source == SourceKind::SimulateR ? SeriesKind::DistanceFromOrigin : SeriesKind::CumulativeLength;
    for (std::size_t p = 0; p < config.n_panels; ++p) {
      WalkConfig wc{config.alpha, 1.0, config.n_steps, panel_seed(config.seed, p)};
      PricePanel panel = generate_ensemble(wc, config.n_walkers, kind, config.workers);
      out.push_back(normalize_cross_section(log_returns(panel)));
      if (prices) prices->push_back(std::move(panel));
    }
  } else {
    if (!std::filesystem::exists(config.empirical_path))
      throw ValidationError("price file not found: " + config.empirical_path.string());
    CleanedPanel cleaned = clean_panel(load_price_csv(config.empirical_path), config.cleaning);
    out.push_back(normalize_cross_section(log_returns(cleaned.panel)));
    if (prices) prices->push_back(std::move(cleaned.panel));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

class Manifest {
 public:
  explicit Manifest(std::filesystem::path dir) : dir_(std::move(dir)) { flush(); }
  void complete(const std::string& stage) {
    stages_.push_back(stage);
    flush();
  }
  const std::vector<std::string>& stages() const { return stages_; }

 private:
  void flush() const {
    std::string text = "# completed stages\n";
    for (const auto& s : stages_) text += s + "\n";
    write_text_file(dir_ / "MANIFEST.txt", text);
  }
  std::filesystem::path dir_;
  std::vector<std::string> stages_;
};

ojson tail_fit_or_error(auto&& fit_fn) {
  try {
    return ojson(fit_fn());
  } catch (const std::exception& e) {
    return ojson{{"error", e.what()}};
  }
}

ojson headline(const ojson& hill, const ojson& ks, TailEstimator which) {
  return which == TailEstimator::KsScan ? ks : hill;
}

ojson trend(const std::vector<double>& q, const std::vector<double>& values) {
  if (q.size() < 3) return nullptr;
  const RankCorrelation rc = spearman(q, values);
  return ojson{{"spearman_rho", rc.rho}, {"p_value", rc.p_value}};
}

std::string t_tag(std::size_t T) { return "T" + std::to_string(T); }

ojson run_geometry(const RunConfig& config, const std::vector<PricePanel>& prices, const std::filesystem::path& dir) {
  std::vector<double> steps;
  ScalingCurve curve;
  std::size_t n_paths = 0;
  if (config.is_model()) {
    WalkConfig wc{config.alpha, 1.0, config.n_steps, panel_seed(config.seed, 0)};
    const auto paths = generate_paths(wc, config.n_walkers, config.workers);
    for (const auto& p : paths) steps.insert(steps.end(), p.step_lengths.begin(), p.step_lengths.end());
    n_paths = paths.size();
    curve = rg_vs_length_curve(paths, log_time_grid(config.n_steps, 50));
  } else {
    const PricePanel& panel = prices.front();
    const auto n = static_cast<std::size_t>(panel.cols());
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
    if (config.max_pairs > 0 && pairs.size() > config.max_pairs) {
      Rng rng(child_seed(config.seed, kPairStream));
      for (std::size_t i = 0; i < config.max_pairs; ++i)
        std::swap(pairs[i], pairs[i + rng.below(pairs.size() - i)]);
      pairs.resize(config.max_pairs);
      std::sort(pairs.begin(), pairs.end());
    }
    n_paths = pairs.size();
    const auto make_pair_path = [&](std::size_t i) {
      const auto [a, b] = pairs[i];
      const auto ca = panel.values.col(static_cast<Eigen::Index>(a));
      const auto cb = panel.values.col(static_cast<Eigen::Index>(b));
      return pair_stock_trajectory(std::span(ca.data(), static_cast<std::size_t>(ca.size())),
                                   std::span(cb.data(), static_cast<std::size_t>(cb.size())));
    };
    curve = rg_vs_length_curve(n_paths, make_pair_path, log_time_grid(static_cast<std::size_t>(panel.rows()) - 1, 50));
    for (Eigen::Index j = 0; j < panel.values.cols(); ++j)
      for (Eigen::Index t = 1; t < panel.values.rows(); ++t) {
        const double s = std::abs(panel.values(t, j) - panel.values(t - 1, j));
        if (s > 0.0) steps.push_back(s);
      }
  }
  export_artifact(curve, dir / "geometry_curve.csv", ExportFormat::Csv);
  const Histogram steps_hist = log_binned_histogram(steps, config.bins_per_decade);
  export_artifact(steps_hist, dir / "step_length_hist.csv", ExportFormat::Csv);

  ojson j;
  j["n_paths"] = n_paths;
  j["d_f"] = tail_fit_or_error([&] { return fit_fractal_dimension(curve); });
  j["step_alpha_hill"] = tail_fit_or_error([&] { return hill_tail_exponent(steps, config.tail_fraction); });
  j["step_alpha_ks"] = tail_fit_or_error([&] { return powerlaw_fit_ks(steps); });
  return j;
}

ojson run_psd(const RunConfig& config, const std::vector<PricePanel>& prices, const std::filesystem::path& dir) {
  Eigen::MatrixXd all(prices.front().rows(), 0);
  for (const auto& p : prices) {
    Eigen::MatrixXd grown(all.rows(), all.cols() + p.cols());
    grown << all, p.values;
    all.swap(grown);
  }
  PsdEstimate psd = fit_spectral_exponent(periodogram(all));
  export_artifact(psd, dir / "psd.csv", ExportFormat::Csv);
  (void)config;
  return ojson{{"beta", *psd.beta},
               {"beta_stderr", psd.beta_stderr},
               {"band", {psd.band.lo, psd.band.hi}},
               {"n_series", psd.n_series},
               {"length", psd.length}};
}

ojson run_returns_dist(const RunConfig& config, const std::vector<ReturnPanel>& returns,
                       const std::filesystem::path& dir) {
  const Eigen::MatrixXd& v = returns.front().values;
  const std::span<const double> samples(v.data(), static_cast<std::size_t>(v.size()));
  const TDistFit fit = student_t_fit(samples);
  export_artifact(fit, dir / "returns_tfit.json", ExportFormat::Json);
  std::vector<double> mags;
  mags.reserve(samples.size());
  for (double x : samples)
    if (x != 0.0) mags.push_back(std::abs(x));
  export_artifact(log_binned_histogram(mags, config.bins_per_decade), dir / "returns_abs_hist.csv", ExportFormat::Csv);
  std::ostringstream display;
  if (fit.at_upper_bound) {
    display << ">= " << kTDistNuMax;
  } else {
    display << fit.nu0;
  }
  return ojson{{"t_fit", fit}, {"nu0_display", display.str()}, {"n_samples", samples.size()}};
}

}  // namespace

ojson run(const RunConfig& config) {
  config.validate();
  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);
  Manifest manifest(dir);
  const auto wants = [&](Analysis a) { return config.analyses.count(a) > 0; };

  ojson report;
  report["schema"] = "levyrmt.report/1";
  report["config"] = config_to_json(config);
  std::string stage = "source";
  try {
    std::vector<PricePanel> prices;
    const std::vector<ReturnPanel> returns = build_return_panels(config, &prices);
    const std::size_t N = static_cast<std::size_t>(returns.front().cols());
    ojson seeds;
    seeds["top"] = config.seed;
    if (config.is_model()) {
      ojson ps = ojson::array();
      for (std::size_t p = 0; p < config.n_panels; ++p) ps.push_back(panel_seed(config.seed, p));
      seeds["panels"] = ps;
    }
    seeds["shuffle"] = shuffle_seed(config.seed);
    seeds["tw_reference"] = tw_seed(config.seed);
    report["seeds"] = seeds;
    report["data"] = {{"N", N}, {"rows", returns.front().rows()}, {"n_panels", returns.size()}};
    manifest.complete(stage);

    if (wants(Analysis::Geometry)) {
      stage = "geometry";
      report["geometry"] = run_geometry(config, prices, dir);
      manifest.complete(stage);
    }
    if (wants(Analysis::Psd)) {
      stage = "psd";
      report["psd"] = run_psd(config, prices, dir);
      manifest.complete(stage);
    }
    if (wants(Analysis::ReturnsDist)) {
      stage = "returns_dist";
      report["returns_dist"] = run_returns_dist(config, returns, dir);
      manifest.complete(stage);
    }

    const bool epoch_work = wants(Analysis::Elements) || wants(Analysis::Spectra) || wants(Analysis::Evt);
    if (epoch_work) {
      stage = "epochs";
      ojson elements = ojson::array();
      ojson spectra = ojson::array();
      ojson evt = ojson::array();
      std::vector<double> qs;
      std::vector<double> nu_vals;
      std::vector<double> gamma_vals;
      std::vector<double> nu_q;
      std::vector<double> gamma_q;
      LambdaMaxCurve curve;
      curve.source = config.source == SourceKind::Empirical   ? CurveSource::Empirical
                     : config.source == SourceKind::SimulateR ? CurveSource::ModelR
                                                              : CurveSource::ModelL;
      const bool evt_overlap = config.overlap_for_evt();
      for (std::size_t T : config.T_grid) {
        if (T > static_cast<std::size_t>(returns.front().rows()))
          throw ValidationError("epoch length T=" + std::to_string(T) + " exceeds available rows");
        SweepOptions opts;
        opts.elements = wants(Analysis::Elements);
        opts.spectra = wants(Analysis::Spectra);
        opts.workers = config.workers;
        EpochSweep sweep;
        if (opts.elements || opts.spectra) sweep = sweep_epochs(returns, T, opts);
        const double Q = static_cast<double>(T) / static_cast<double>(N);
        if (opts.elements) {
          ojson hill = tail_fit_or_error([&] { return hill_tail_exponent(sweep.abs_elements, config.tail_fraction); });
          ojson ks = tail_fit_or_error([&] { return powerlaw_fit_ks(sweep.abs_elements); });
          ojson h = headline(hill, ks, config.headline_estimator);
          if (h.contains("exponent")) {
            nu_q.push_back(Q);
            nu_vals.push_back(h["exponent"].get<double>());
          }
          export_artifact(log_binned_histogram(sweep.abs_elements, config.bins_per_decade),
                          dir / ("elements_hist_" + t_tag(T) + ".csv"), ExportFormat::Csv);
          elements.push_back(ojson{{"T", T},
                                   {"Q", Q},
                                   {"n_samples", sweep.abs_elements.size()},
                                   {"nu", h},
                                   {"hill", hill},
                                   {"ks", ks}});
          std::vector<double>().swap(sweep.abs_elements);
        }
        if (opts.spectra) {
          ojson hill =
              tail_fit_or_error([&] { return hill_tail_exponent(sweep.nonzero_eigenvalues, config.tail_fraction); });
          ojson ks = tail_fit_or_error([&] { return powerlaw_fit_ks(sweep.nonzero_eigenvalues); });
          ojson cmp = tail_fit_or_error([&] { return tail_model_comparison(sweep.nonzero_eigenvalues); });
          ojson h = headline(hill, ks, config.headline_estimator);
          if (h.contains("exponent")) {
            gamma_q.push_back(Q);
            gamma_vals.push_back(h["exponent"].get<double>());
          }
          export_artifact(log_binned_histogram(sweep.nonzero_eigenvalues, config.bins_per_decade),
                          dir / ("eigenvalue_hist_" + t_tag(T) + ".csv"), ExportFormat::Csv);
          spectra.push_back(ojson{{"T", T},
                                  {"Q", Q},
                                  {"n_epochs", sweep.n_epochs},
                                  {"n_eigenvalues", sweep.nonzero_eigenvalues.size()},
                                  {"rank_violations", sweep.rank_violations},
                                  {"max_trace_error", sweep.max_trace_error},
                                  {"gamma", h},
                                  {"hill", hill},
                                  {"ks", ks},
                                  {"tail_comparison", cmp}});
        }
        if (wants(Analysis::Evt)) {
          std::vector<double> lmax;
          if ((opts.elements || opts.spectra) && !evt_overlap) {
            lmax = sweep.lambda_max;
          } else {
            SweepOptions eo;
            eo.overlap = evt_overlap;
            eo.workers = config.workers;
            lmax = sweep_epochs(returns, T, eo).lambda_max;
          }
          curve.points.push_back(lambda_max_point(lmax, T, N));
          ojson gev = nullptr;
          if (lmax.size() >= 100) gev = tail_fit_or_error([&] { return gev_fit(lmax); });
          ojson row{{"T", T}, {"Q", Q}, {"n_maxima", lmax.size()}, {"gev", gev}};
          if (gev.is_object() && gev.contains("shape") && !gev["shape_stderr"].is_null()) {
            const double xi = gev["shape"].get<double>();
            const double se = gev["shape_stderr"].get<double>();
            row["shape_ci95"] = {xi - 1.959963984540054 * se, xi + 1.959963984540054 * se};
          }
          evt.push_back(row);
        }
      }
      if (wants(Analysis::Elements)) {
        report["elements"] = {{"per_Q", elements}, {"trend", trend(nu_q, nu_vals)}};
        manifest.complete("elements");
      }
      if (wants(Analysis::Spectra)) {
        report["spectra"] = {{"per_Q", spectra}, {"trend", trend(gamma_q, gamma_vals)}};
        manifest.complete("spectra");
      }
      if (wants(Analysis::Evt)) {
        export_artifact(curve, dir / "lambda_max_curve.csv", ExportFormat::Csv);
        ojson e{{"overlap", evt_overlap}, {"per_Q", evt}, {"lambda_max_curve", curve}};
        if (config.source == SourceKind::SimulateL) {
          const LambdaMaxCurve rescaled = rescale_curve(curve);
          export_artifact(rescaled, dir / "lambda_max_curve_rescaled.csv", ExportFormat::Csv);
          e["rescaled_curve"] = rescaled;
        }
        report["evt"] = e;
        manifest.complete("evt");
      }
    }

    if (wants(Analysis::Shuffle)) {
      stage = "shuffle";
      TwReferenceOptions tw_opts;
      tw_opts.cache_dir = config.tw_cache_dir;
      tw_opts.workers = config.workers;
      const TwReference ref = tracy_widom_goe_reference(config.tw_matrices, config.tw_size, tw_seed(config.seed), tw_opts);
      ojson rows = ojson::array();
      std::uint64_t counter = 0;
      for (std::size_t T : config.shuffle_T) {
        struct Job {
          std::size_t panel;
          std::size_t start;
          std::uint64_t seed;
        };
        std::vector<Job> jobs;
        for (std::size_t p = 0; p < returns.size(); ++p)
          for (std::size_t s : epoch_starts(static_cast<std::size_t>(returns[p].rows()), T, false))
            jobs.push_back({p, s, child_seed(shuffle_seed(config.seed), counter++)});
        std::vector<double> lmax(jobs.size());
        parallel_for(jobs.size(), config.workers, [&](std::size_t j) {
          lmax[j] = largest_eigenvalue(shuffle_matrix(epoch_at(returns[jobs[j].panel], jobs[j].start, T), jobs[j].seed));
        });
        const double Q = static_cast<double>(T) / static_cast<double>(N);
        const double mean = pairwise_mean(lmax);
        const double edge = mp_edge(Q, 1.0);
        const auto rescaled = rescale_to_tw(lmax, T, N);
        rows.push_back(ojson{{"T", T},
                             {"Q", Q},
                             {"n_epochs", lmax.size()},
                             {"mean_lambda_max", mean},
                             {"mp_edge", edge},
                             {"relative_deviation", (mean - edge) / edge},
                             {"ks_tw", ks_two_sample(rescaled, ref.samples)}});
      }
      report["shuffle"] = {{"tw_reference",
                            {{"n_matrices", ref.n_matrices},
                             {"matrix_size", ref.matrix_size},
                             {"seed", ref.seed},
                             {"mean", ref.mean()}}},
                           {"per_Q", rows}};
      manifest.complete(stage);
    }

    stage = "report";
    report["stages"] = manifest.stages();
    write_text_file(dir / "report.json", report.dump(2) + "\n");
    manifest.complete(stage);
    return report;
  } catch (const std::exception& e) {
    const bool validation = dynamic_cast<const ValidationError*>(&e) != nullptr;
    ojson err{{"error",
               {{"stage", stage},
                {"kind", validation ? "validation" : "runtime"},
                {"message", e.what()},
                {"completed_stages", manifest.stages()}}}};
    write_text_file(dir / "error.json", err.dump(2) + "\n");
    throw;
  }
}

// ---------------------------------------------------------------------------

namespace {

struct Estimate {
  double value;
  double stderr_;
};

std::map<std::size_t, Estimate> collect(const ojson& report, const char* section, const char* key) {
  std::map<std::size_t, Estimate> out;
  if (!report.contains(section)) return out;
  for (const auto& row : report[section]["per_Q"]) {
    const auto& fit = row[key];
    if (fit.is_object() && fit.contains("exponent"))
      out[row["T"].get<std::size_t>()] = {fit["exponent"].get<double>(), fit["stderr"].get<double>()};
  }
  return out;
}

std::map<std::size_t, Estimate> collect_lambda(const ojson& report) {
  std::map<std::size_t, Estimate> out;
  if (!report.contains("evt")) return out;
  for (const auto& p : report["evt"]["lambda_max_curve"]["points"])
    if (!p["flagged"].get<bool>())
      out[p["T"].get<std::size_t>()] = {p["mean"].get<double>(), p["stderr"].get<double>()};
  return out;
}

}  // namespace

ojson compare(const ojson& report_a, const ojson& report_b) {
  ojson out;
  out["schema"] = "levyrmt.compare/1";
  bool any_overlap = false;
  auto quantity = [&](const char* name, const std::map<std::size_t, Estimate>& a,
                      const std::map<std::size_t, Estimate>& b) {
    ojson rows = ojson::array();
    std::size_t agree = 0;
    for (const auto& [T, ea] : a) {
      const auto it = b.find(T);
      if (it == b.end()) continue;
      const Estimate& eb = it->second;
      const double diff = ea.value - eb.value;
      const double joint = std::sqrt(ea.stderr_ * ea.stderr_ + eb.stderr_ * eb.stderr_);
      const bool ok = std::abs(diff) <= 2.0 * joint;
      agree += ok ? 1 : 0;
      rows.push_back(ojson{{"T", T}, {"a", ea.value}, {"b", eb.value}, {"diff", diff}, {"joint_stderr", joint},
                           {"agree_2sigma", ok}});
    }
    if (!rows.empty()) any_overlap = true;
    out[name] = {{"points", rows}, {"n_agree", agree}, {"n_points", rows.size()}};
  };
  quantity("nu", collect(report_a, "elements", "nu"), collect(report_b, "elements", "nu"));
  quantity("gamma", collect(report_a, "spectra", "gamma"), collect(report_b, "spectra", "gamma"));
  // Tail family per T: a gamma difference is only meaningful when both tails are power laws.
  {
    const auto families = [](const ojson& r) {
      std::map<std::size_t, bool> out;
      if (!r.contains("spectra")) return out;
      for (const auto& row : r["spectra"]["per_Q"]) {
        const auto& tc = row["tail_comparison"];
        if (tc.is_object() && tc.contains("loglik_ratio"))
          out[row["T"].get<std::size_t>()] = tc["loglik_ratio"].get<double>() > 0.0;
      }
      return out;
    };
    const auto fa = families(report_a);
    const auto fb = families(report_b);
    ojson rows = ojson::array();
    std::size_t agree = 0;
    for (const auto& [T, pa] : fa) {
      const auto it = fb.find(T);
      if (it == fb.end()) continue;
      agree += pa == it->second ? 1 : 0;
      rows.push_back(ojson{{"T", T},
                           {"a", pa ? "power_law" : "exponential"},
                           {"b", it->second ? "power_law" : "exponential"},
                           {"agree", pa == it->second}});
    }
    out["gamma_tail_family"] = {{"points", rows}, {"n_agree", agree}, {"n_points", rows.size()}};
  }
  quantity("lambda_max", collect_lambda(report_a), collect_lambda(report_b));
  if (!any_overlap) throw ValidationError("compare: reports share no analyses on a common Q grid");
  return out;
}

}  // namespace levyrmt
