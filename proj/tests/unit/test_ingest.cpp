#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "levyrmt/error.hpp"
#include "levyrmt/ingest.hpp"
#include "levyrmt/levy_walk.hpp"
#include "levyrmt/returns.hpp"

using namespace levyrmt;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("levyrmt_ingest_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path file(const std::string& name, const std::string& text = "") const {
    const fs::path p = path_ / name;
    if (!text.empty()) std::ofstream(p) << text;
    return p;
  }

 private:
  fs::path path_;
};

}  // namespace

TEST(Dates, RoundTrip) {
  EXPECT_EQ(parse_iso_date("1970-01-01"), 0);
  EXPECT_EQ(parse_iso_date("2000-03-01"), 11017);
  EXPECT_EQ(format_iso_date(11017), "2000-03-01");
  EXPECT_THROW(parse_iso_date("2001-02-29"), ValidationError);
  EXPECT_THROW(parse_iso_date("01/02/2003"), ValidationError);
}

TEST(LoadCsv, ParsesWidePanel) {
  TempDir d;
  const auto p = d.file("p.csv", "date,AAA,BBB\n2020-01-02,10,20\n2020-01-03,,21.5\n2020-01-06,11,22\n");
  const RawPanel raw = load_price_csv(p);
  EXPECT_EQ(raw.labels, (std::vector<std::string>{"AAA", "BBB"}));
  ASSERT_EQ(raw.values.rows(), 3);
  EXPECT_TRUE(std::isnan(raw.values(1, 0)));
  EXPECT_DOUBLE_EQ(raw.values(1, 1), 21.5);
}

TEST(LoadCsv, ErrorsNameLine) {
  TempDir d;
  try {
    load_price_csv(d.file("bad.csv", "date,A\n2020-01-02,1\n2020-01-02,2\n"));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_price_csv(d.file("dup.csv", "date,A,A\n2020-01-02,1,2\n")), ValidationError);
  EXPECT_THROW(load_price_csv(d.file("num.csv", "date,A\n2020-01-02,abc\n")), ValidationError);
  EXPECT_THROW(load_price_csv(d.file("ragged.csv", "date,A,B\n2020-01-02,1\n")), ValidationError);
}

TEST(LoadCsv, MissingFileNamesPath) {
  try {
    load_price_csv("/nonexistent/prices.csv");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/prices.csv"), std::string::npos);
  }
}

TEST(Clean, ForwardFillAndDrops) {
  RawPanel raw;
  raw.labels = {"GOOD", "GAP", "LEAD", "NEG"};
  raw.times = {0, 1, 2, 3, 4};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  raw.values.resize(5, 4);
  raw.values << 1, 1, nan, 1,  //
      2, nan, 1, 1,            //
      3, nan, 1, -1,           //
      4, 4, 1, 1,              //
      5, 5, 1, 1;
  CleaningPolicy policy;
  policy.max_missing_fraction = 0.45;
  const CleanedPanel c = clean_panel(raw, policy);
  EXPECT_EQ(c.panel.labels, (std::vector<std::string>{"GOOD", "GAP"}));
  EXPECT_DOUBLE_EQ(c.panel.values(2, 1), 1.0);
  EXPECT_EQ(c.report.dropped_assets.size(), 2u);
  EXPECT_EQ(c.report.filled_cells.size(), 2u);

  policy.max_missing_fraction = 0.2;
  EXPECT_EQ(clean_panel(raw, policy).panel.labels, (std::vector<std::string>{"GOOD"}));
  policy.drop_nonpositive = false;
  EXPECT_THROW(clean_panel(raw, policy), ValidationError);
}

TEST(Export, PanelCsvRoundTripExact) {
  TempDir d;
  PricePanel p = generate_ensemble({1.5, 1.0, 30, 1}, 4, SeriesKind::DistanceFromOrigin, 1);
  p.times.clear();
  for (int t = 0; t < 30; ++t) p.times.push_back(18000 + t);
  export_artifact(p, d.file("p.csv"), ExportFormat::Csv);
  const PricePanel q = read_price_panel(d.file("p.csv"));
  EXPECT_EQ(q.labels, p.labels);
  EXPECT_EQ(q.times, p.times);
  EXPECT_TRUE(q.values == p.values);
}

TEST(Export, JsonRoundTrips) {
  TempDir d;
  TailFit f{1.6543210987654321, 0.123, 4567, 0.0123, 0.011};
  export_artifact(f, d.file("t.json"), ExportFormat::Json);
  const TailFit g = import_json<TailFit>(d.file("t.json"));
  EXPECT_EQ(g.exponent, f.exponent);
  EXPECT_EQ(g.n_tail, f.n_tail);
  const auto j = nlohmann::ordered_json::parse(read_text_file(d.file("t.json")));
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"exponent", "x_min", "n_tail", "stderr", "ks"}));

  EvtFit e;
  e.shape = 0.2;
  e.shape_stderr = std::numeric_limits<double>::quiet_NaN();
  e.family = EvtFamily::Frechet;
  export_artifact(e, d.file("e.json"), ExportFormat::Json);
  const EvtFit e2 = import_json<EvtFit>(d.file("e.json"));
  EXPECT_EQ(e2.shape, 0.2);
  EXPECT_TRUE(std::isnan(e2.shape_stderr));
  EXPECT_EQ(e2.family, EvtFamily::Frechet);

  ReturnPanel r = normalize_cross_section(log_returns(generate_ensemble({1.5, 1.0, 40, 2}, 5, SeriesKind::CumulativeLength, 1)));
  export_artifact(r, d.file("r.json"), ExportFormat::Json);
  EXPECT_TRUE(import_json<ReturnPanel>(d.file("r.json")).values == r.values);
}

TEST(Export, HistogramCsvHeader) {
  TempDir d;
  const Histogram h = log_binned_histogram(std::vector<double>{1, 2, 3, 50}, 5);
  export_artifact(h, d.file("h.csv"), ExportFormat::Csv);
  const std::string text = read_text_file(d.file("h.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n')), "edge_lo,edge_hi,count,density");
}

TEST(Export, UnwritablePathIsRuntimeError) {
  TailFit f;
  EXPECT_THROW(export_artifact(f, "/proc/levyrmt/none.json", ExportFormat::Json), AnalysisError);
}
