#include <gtest/gtest.h>

#include <filesystem>

#include "levyrmt/error.hpp"
#include "levyrmt/ingest.hpp"
#include "levyrmt/pipeline.hpp"

using namespace levyrmt;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

RunConfig small_config(const fs::path& out) {
  RunConfig c;
  c.source = SourceKind::SimulateR;
  c.n_walkers = 40;
  c.n_steps = 1200;
  c.n_panels = 2;
  c.T_grid = {10, 20, 40};
  c.shuffle_T = {20, 40};
  c.tw_matrices = 200;
  c.tw_size = 60;
  c.output_dir = out;
  c.analyses = {Analysis::Geometry, Analysis::Psd, Analysis::ReturnsDist, Analysis::Elements,
                Analysis::Spectra, Analysis::Evt, Analysis::Shuffle};
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("levyrmt_pipe_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> key_paths(const ojson& j, const std::string& prefix = "") {
  std::vector<std::string> out;
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      out.push_back(prefix + "/" + k);
      for (auto& s : key_paths(v, prefix + "/" + k)) out.push_back(s);
    }
  }
  return out;
}

}  // namespace

TEST(Pipeline, FullRunWritesArtifacts) {
  const fs::path out = scratch("full");
  const ojson report = run(small_config(out));
  for (const char* f : {"report.json", "MANIFEST.txt", "geometry_curve.csv", "psd.csv", "lambda_max_curve.csv",
                        "elements_hist_T10.csv", "eigenvalue_hist_T40.csv", "returns_tfit.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  for (const char* k : {"geometry", "psd", "returns_dist", "elements", "spectra", "evt", "shuffle", "seeds", "config"})
    EXPECT_TRUE(report.contains(k)) << k;
  EXPECT_EQ(report["spectra"]["per_Q"][0]["rank_violations"].get<int>(), 0);
  EXPECT_LT(report["spectra"]["per_Q"][2]["max_trace_error"].get<double>(), 1e-8);
  EXPECT_EQ(report["evt"]["per_Q"][0]["n_maxima"].get<int>(), 2 * 119);
  fs::remove_all(out);
}

TEST(Pipeline, DeterministicAcrossWorkers) {
  const fs::path a = scratch("w1");
  const fs::path b = scratch("w3");
  RunConfig ca = small_config(a);
  RunConfig cb = small_config(b);
  cb.workers = 3;
  run(ca);
  run(cb);
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename();
    ASSERT_TRUE(fs::exists(b / name)) << name;
    EXPECT_EQ(read_text_file(e.path()), read_text_file(b / name)) << name;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Pipeline, SchemaStableAcrossSeeds) {
  const fs::path a = scratch("s1");
  const fs::path b = scratch("s2");
  RunConfig ca = small_config(a);
  RunConfig cb = small_config(b);
  cb.seed = 99;
  EXPECT_EQ(key_paths(run(ca)), key_paths(run(cb)));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Pipeline, GeometryOnlySimulation) {
  const fs::path out = scratch("geom");
  RunConfig c = small_config(out);
  c.n_walkers = 100;
  c.n_steps = 2000;
  c.n_panels = 1;
  c.analyses = {Analysis::Geometry};
  const ojson r = run(c);
  EXPECT_NEAR(r["geometry"]["d_f"]["value"].get<double>(), 1.5, 0.15);
  EXPECT_FALSE(r.contains("spectra"));
  fs::remove_all(out);
}

TEST(Pipeline, MissingEmpiricalFileIsValidationErrorWithRecord) {
  const fs::path out = scratch("missing");
  RunConfig c = small_config(out);
  c.source = SourceKind::Empirical;
  c.empirical_path = "/no/such/prices.csv";
  try {
    run(c);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("/no/such/prices.csv"), std::string::npos);
  }
  const ojson err = ojson::parse(read_text_file(out / "error.json"));
  EXPECT_EQ(err["error"]["stage"], "source");
  EXPECT_TRUE(fs::exists(out / "MANIFEST.txt"));
  fs::remove_all(out);
}

TEST(Pipeline, ConfigValidation) {
  RunConfig c;
  EXPECT_THROW(c.validate(), ValidationError);  // no analyses
  c.analyses = {Analysis::Psd};
  c.validate();
  c.alpha = 2.5;
  EXPECT_THROW(c.validate(), ValidationError);
  c.alpha = 1.5;
  c.source = SourceKind::Empirical;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Pipeline, EmpiricalRunFromCsv) {
  const fs::path dir = scratch("emp");
  fs::create_directories(dir);
  PricePanel p = generate_ensemble({1.5, 1.0, 600, 5}, 30, SeriesKind::DistanceFromOrigin, 1);
  for (auto& t : p.times) t += 10000;
  export_artifact(p, dir / "prices.csv", ExportFormat::Csv);
  RunConfig c = small_config(dir / "out");
  c.source = SourceKind::Empirical;
  c.empirical_path = dir / "prices.csv";
  c.analyses = {Analysis::Geometry, Analysis::Evt};
  c.T_grid = {10, 30};
  const ojson r = run(c);
  EXPECT_EQ(r["geometry"]["n_paths"].get<int>(), 30 * 29 / 2);
  EXPECT_TRUE(r["evt"]["overlap"].get<bool>());
  EXPECT_EQ(r["evt"]["per_Q"][0]["n_maxima"].get<int>(), 599 - 10 + 1);
  fs::remove_all(dir);
}

TEST(Compare, SelfComparisonIsZero) {
  const fs::path out = scratch("cmp");
  RunConfig c = small_config(out);
  c.analyses = {Analysis::Elements, Analysis::Spectra, Analysis::Evt};
  const ojson r = run(c);
  const ojson cmp = compare(r, r);
  for (const char* q : {"nu", "gamma", "lambda_max"}) {
    ASSERT_GT(cmp[q]["n_points"].get<int>(), 0) << q;
    for (const auto& pt : cmp[q]["points"]) {
      EXPECT_EQ(pt["diff"].get<double>(), 0.0);
      EXPECT_TRUE(pt["agree_2sigma"].get<bool>());
    }
  }
  fs::remove_all(out);
}

TEST(Compare, DisjointGridsRejected) {
  ojson a{{"elements", {{"per_Q", {{{"T", 10}, {"nu", {{"exponent", 1.0}, {"stderr", 0.1}}}}}}}}};
  ojson b{{"elements", {{"per_Q", {{{"T", 20}, {"nu", {{"exponent", 1.0}, {"stderr", 0.1}}}}}}}}};
  EXPECT_THROW(compare(a, b), ValidationError);
}

TEST(Compare, TailFamilyDisagreementFlagged) {
  const auto spectra = [](double llr) {
    ojson r = ojson::parse(R"({"elements": {"per_Q": [{"T": 10, "nu": {"exponent": 1.0, "stderr": 0.1}}]},
                             "spectra": {"per_Q": [{"T": 10, "gamma": {"exponent": 2.0, "stderr": 0.1},
                                                    "tail_comparison": {}}]}})");
    r["spectra"]["per_Q"][0]["tail_comparison"]["loglik_ratio"] = llr;
    return r;
  };
  const ojson cmp = compare(spectra(3.0), spectra(-2.0));
  const auto& fam = cmp["gamma_tail_family"];
  ASSERT_EQ(fam["n_points"].get<int>(), 1);
  EXPECT_EQ(fam["n_agree"].get<int>(), 0);
  EXPECT_EQ(fam["points"][0]["a"], "power_law");
  EXPECT_EQ(fam["points"][0]["b"], "exponential");
  EXPECT_EQ(compare(spectra(3.0), spectra(1.0))["gamma_tail_family"]["n_agree"].get<int>(), 1);
}
