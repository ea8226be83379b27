#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "levyrmt/ingest.hpp"
#include "levyrmt/levy_walk.hpp"

namespace levyrmt {

enum class SourceKind { SimulateR, SimulateL, Empirical };
enum class Analysis { Geometry, Psd, ReturnsDist, Elements, Spectra, Evt, Shuffle };
enum class TailEstimator { KsScan, Hill };

const char* to_string(SourceKind s);
const char* to_string(Analysis a);
SourceKind parse_source(const std::string& text);
Analysis parse_analysis(const std::string& text);
TailEstimator parse_tail_estimator(const std::string& text);

/// T = 10, 20, ..., 260.
std::vector<std::size_t> default_T_grid();

struct RunConfig {
  SourceKind source = SourceKind::SimulateR;
  std::filesystem::path empirical_path;
  CleaningPolicy cleaning;

  double alpha = 1.5;
  std::size_t n_steps = 7740;
  std::size_t n_walkers = 262;
  std::size_t n_panels = 1;  // independent model panels pooled for spectra and extremes

  std::vector<std::size_t> T_grid = default_T_grid();
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "levyrmt_out";
  std::set<Analysis> analyses;
  unsigned workers = 1;

  double tail_fraction = 0.1;
  TailEstimator headline_estimator = TailEstimator::KsScan;
  int bins_per_decade = 10;
  std::size_t max_pairs = 0;  // empirical geometry: pair subsample size (0 = all pairs)
  std::optional<bool> evt_overlap;  // default: on for empirical data, off for model panels
  std::vector<std::size_t> shuffle_T = {10, 100, 260};
  std::size_t tw_matrices = 2000;
  std::size_t tw_size = 400;
  std::optional<std::filesystem::path> tw_cache_dir;

  bool is_model() const { return source != SourceKind::Empirical; }
  bool overlap_for_evt() const { return evt_overlap.value_or(!is_model()); }
  void validate() const;
};

nlohmann::ordered_json config_to_json(const RunConfig& config);

/// Per-epoch-length results of one pass over the epochs of every panel.
struct EpochSweep {
  std::size_t T = 0;
  std::size_t N = 0;
  std::size_t n_epochs = 0;
  std::vector<double> abs_elements;         // |W_ij|, i <= j
  std::vector<double> nonzero_eigenvalues;  // pooled over epochs
  std::vector<double> lambda_max;           // one per epoch, job order
  std::size_t rank_violations = 0;          // epochs whose nonzero count != min(T, N)
  double max_trace_error = 0.0;             // max |sum(lambda) - tr W| / tr W
  double Q() const { return static_cast<double>(T) / static_cast<double>(N); }
};

struct SweepOptions {
  bool elements = false;
  bool spectra = false;
  bool overlap = false;  // stride-1 windows; lambda_max only
  std::size_t element_panels = 1;  // elements pooled from the first k panels
  unsigned workers = 1;
};

EpochSweep sweep_epochs(std::span<const ReturnPanel> panels, std::size_t T, const SweepOptions& options);

/// Normalized return panels for the configured source (one per model panel).
std::vector<ReturnPanel> build_return_panels(const RunConfig& config, std::vector<PricePanel>* prices = nullptr);

/// Seed of model panel p: child_seed(seed, p). Walker i of that panel uses
/// child_seed(panel_seed, i).
std::uint64_t panel_seed(std::uint64_t seed, std::size_t panel);
/// Independent streams for shuffling and the TW reference.
std::uint64_t shuffle_seed(std::uint64_t seed);
std::uint64_t tw_seed(std::uint64_t seed);

/// Runs the requested analyses, writing artifacts, report.json and
/// MANIFEST.txt under output_dir. Returns the report.
nlohmann::ordered_json run(const RunConfig& config);

/// Per-T differences of nu, gamma and <lambda_max> with joint standard
/// errors; a point agrees when |diff| <= 2 * joint stderr.
nlohmann::ordered_json compare(const nlohmann::ordered_json& report_a, const nlohmann::ordered_json& report_b);

}  // namespace levyrmt
