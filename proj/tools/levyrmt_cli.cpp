#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "levyrmt/error.hpp"
#include "levyrmt/evt.hpp"
#include "levyrmt/ingest.hpp"
#include "levyrmt/pipeline.hpp"

using namespace levyrmt;
using ojson = nlohmann::ordered_json;

namespace {

int report_error(const char* kind, const std::string& message, int code) {
  ojson err{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << err.dump(2) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Levy-walk market model and random-matrix analysis"};
  app.set_config("--config", "", "TOML/INI file supplying any flag; explicit flags win");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string series = "r";
  std::string estimator = "ks";
  std::vector<std::string> analyses;
  std::vector<std::size_t> T_grid;
  std::string tw_cache;
  std::string evt_overlap;

  app.add_option("--alpha", cfg.alpha, "Pareto tail index of step lengths")->capture_default_str();
  app.add_option("--n-steps", cfg.n_steps, "steps per walker")->capture_default_str();
  app.add_option("--n-walkers", cfg.n_walkers, "walkers per panel (N)")->capture_default_str();
  app.add_option("--n-panels", cfg.n_panels, "independent model panels")->capture_default_str();
  app.add_option("--T-grid", T_grid, "epoch lengths (default 10,20,...,260)")->delimiter(',');
  app.add_option("--seed", cfg.seed, "top-level seed")->capture_default_str();
  app.add_option("--output-dir", cfg.output_dir, "artifact directory")->capture_default_str();
  app.add_option("--analyses", analyses,
                 "subset of geometry,psd,returns_dist,elements,spectra,evt,shuffle (default all)")
      ->delimiter(',');
  app.add_option("--workers", cfg.workers, "worker threads")->capture_default_str();
  app.add_option("--tail-fraction", cfg.tail_fraction, "Hill tail fraction")->capture_default_str();
  app.add_option("--estimator", estimator, "headline tail estimator: ks or hill")->capture_default_str();
  app.add_option("--bins-per-decade", cfg.bins_per_decade)->capture_default_str();
  app.add_option("--max-pairs", cfg.max_pairs, "empirical geometry: random pair subsample size (0 = all pairs)")->capture_default_str();
  app.add_option("--evt-overlap", evt_overlap, "on/off; default on for empirical, off for model");
  app.add_option("--shuffle-T", cfg.shuffle_T, "epoch lengths for the shuffle control")->delimiter(',');
  app.add_option("--tw-matrices", cfg.tw_matrices)->capture_default_str();
  app.add_option("--tw-size", cfg.tw_size)->capture_default_str();
  app.add_option("--tw-cache-dir", tw_cache, "cache directory for the TW reference");
  app.add_option("--max-missing", cfg.cleaning.max_missing_fraction)->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "run analyses on a simulated ensemble")->fallthrough();
  sim->add_option("--series", series, "price series: r (distance) or l (path length)")
      ->check(CLI::IsMember({"r", "l"}))
      ->capture_default_str();

  auto* ana = app.add_subcommand("analyze", "run analyses on an empirical price CSV")->fallthrough();
  ana->add_option("--data", cfg.empirical_path, "price CSV (date column then one column per asset)")->required();

  std::string report_a, report_b, compare_out;
  auto* cmp = app.add_subcommand("compare", "compare two report.json files")->fallthrough();
  cmp->add_option("report_a", report_a)->required();
  cmp->add_option("report_b", report_b)->required();
  cmp->add_option("-o,--out", compare_out, "write the comparison here instead of stdout");

  std::string tw_out;
  auto* tw = app.add_subcommand("tw-reference", "sample the TW1 GOE reference distribution")->fallthrough();
  tw->add_option("-o,--out", tw_out, "directory for the cached sample file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("validation", e.what(), 1);
  }

  try {
    if (!T_grid.empty()) cfg.T_grid = T_grid;
    cfg.headline_estimator = parse_tail_estimator(estimator);
    if (!tw_cache.empty()) cfg.tw_cache_dir = tw_cache;
    if (!evt_overlap.empty()) {
      if (evt_overlap != "on" && evt_overlap != "off") throw ValidationError("--evt-overlap must be on or off");
      cfg.evt_overlap = evt_overlap == "on";
    }
    if (analyses.empty()) analyses = {"geometry", "psd", "returns_dist", "elements", "spectra", "evt", "shuffle"};
    for (const auto& a : analyses) cfg.analyses.insert(parse_analysis(a));

    if (*sim || *ana) {
      cfg.source = *ana ? SourceKind::Empirical : (series == "r" ? SourceKind::SimulateR : SourceKind::SimulateL);
      run(cfg);
      std::cout << (cfg.output_dir / "report.json").string() << "\n";
    } else if (*cmp) {
      const ojson a = ojson::parse(read_text_file(report_a));
      const ojson b = ojson::parse(read_text_file(report_b));
      const std::string text = compare(a, b).dump(2) + "\n";
      if (compare_out.empty()) {
        std::cout << text;
      } else {
        write_text_file(compare_out, text);
      }
    } else if (*tw) {
      TwReferenceOptions opts;
      opts.cache_dir = tw_out;
      opts.workers = cfg.workers;
      const TwReference ref = tracy_widom_goe_reference(cfg.tw_matrices, cfg.tw_size, tw_seed(cfg.seed), opts);
      std::cout << ojson{{"n_matrices", ref.n_matrices}, {"matrix_size", ref.matrix_size}, {"seed", ref.seed},
                         {"mean", ref.mean()}}
                       .dump(2)
                << "\n";
    }
  } catch (const ValidationError& e) {
    return report_error("validation", e.what(), 1);
  } catch (const nlohmann::json::exception& e) {
    return report_error("validation", e.what(), 1);
  } catch (const std::exception& e) {
    return report_error("runtime", e.what(), 2);
  }
  return 0;
}
