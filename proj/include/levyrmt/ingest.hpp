#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "levyrmt/evt.hpp"
#include "levyrmt/geometry.hpp"
#include "levyrmt/panel.hpp"
#include "levyrmt/rmt.hpp"
#include "levyrmt/statfit.hpp"

namespace levyrmt {

/// Wide CSV as loaded: one row per date, NaN marks an empty cell.
struct RawPanel {
  std::vector<std::string> labels;
  std::vector<std::int64_t> times;  // days since 1970-01-01
  Eigen::MatrixXd values;
};

struct CleaningPolicy {
  double max_missing_fraction = 0.02;
  bool drop_nonpositive = true;  // false: a non-positive price is an error

  void validate() const;
};

struct CleaningReport {
  struct Dropped {
    std::string label;
    std::string reason;
  };
  struct Filled {
    std::string label;
    std::size_t row = 0;
  };
  std::vector<Dropped> dropped_assets;
  std::vector<Filled> filled_cells;

  bool empty() const { return dropped_assets.empty() && filled_cells.empty(); }
};

struct CleanedPanel {
  PricePanel panel;
  CleaningReport report;
};

/// ISO-8601 calendar date <-> days since 1970-01-01.
std::int64_t parse_iso_date(const std::string& text);
std::string format_iso_date(std::int64_t days);

/// Reads a wide CSV (`date,TICKER1,TICKER2,...`). Throws ValidationError
/// naming the line for malformed rows, bad or non-increasing dates and
/// duplicate tickers. Empty cells load as NaN.
RawPanel load_price_csv(const std::filesystem::path& path);

/// Drops assets over the missing-data threshold, with unfillable leading
/// gaps, or (per policy) with non-positive prices; forward-fills the rest.
CleanedPanel clean_panel(const RawPanel& raw, const CleaningPolicy& policy = {});

/// load_price_csv + strict conversion: any missing cell is an error.
PricePanel read_price_panel(const std::filesystem::path& path);

enum class ExportFormat { Csv, Json };

// Every exporter writes numbers at 17 significant digits with a fixed
// column/key order. Throws AnalysisError if the path cannot be written.
void export_artifact(const PricePanel& panel, const std::filesystem::path& path, ExportFormat format);
void export_artifact(const ReturnPanel& panel, const std::filesystem::path& path, ExportFormat format);
void export_artifact(const Histogram& hist, const std::filesystem::path& path, ExportFormat format);
void export_artifact(const ScalingCurve& curve, const std::filesystem::path& path, ExportFormat format);
void export_artifact(const TailFit& fit, const std::filesystem::path& path, ExportFormat format);
void export_artifact(const EvtFit& fit, const std::filesystem::path& path, ExportFormat format);
void export_artifact(const TDistFit& fit, const std::filesystem::path& path, ExportFormat format);
void export_artifact(const PsdEstimate& psd, const std::filesystem::path& path, ExportFormat format);
void export_artifact(const LambdaMaxCurve& curve, const std::filesystem::path& path, ExportFormat format);
void export_artifact(const std::vector<Spectrum>& spectra, const std::filesystem::path& path, ExportFormat format);

/// Reads any artifact exported as JSON.
template <typename T>
T import_json(const std::filesystem::path& path);

/// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// "%.17g" rendering used by every CSV writer.
std::string format_number(double v);

// JSON schemas.
void to_json(nlohmann::ordered_json& j, const PricePanel& v);
void from_json(const nlohmann::ordered_json& j, PricePanel& v);
void to_json(nlohmann::ordered_json& j, const ReturnPanel& v);
void from_json(const nlohmann::ordered_json& j, ReturnPanel& v);
void to_json(nlohmann::ordered_json& j, const Histogram& v);
void from_json(const nlohmann::ordered_json& j, Histogram& v);
void to_json(nlohmann::ordered_json& j, const ScalingCurve& v);
void from_json(const nlohmann::ordered_json& j, ScalingCurve& v);
void to_json(nlohmann::ordered_json& j, const ScalarFit& v);
void from_json(const nlohmann::ordered_json& j, ScalarFit& v);
void to_json(nlohmann::ordered_json& j, const TailFit& v);
void from_json(const nlohmann::ordered_json& j, TailFit& v);
void to_json(nlohmann::ordered_json& j, const EvtFit& v);
void from_json(const nlohmann::ordered_json& j, EvtFit& v);
void to_json(nlohmann::ordered_json& j, const TDistFit& v);
void from_json(const nlohmann::ordered_json& j, TDistFit& v);
void to_json(nlohmann::ordered_json& j, const PsdEstimate& v);
void from_json(const nlohmann::ordered_json& j, PsdEstimate& v);
void to_json(nlohmann::ordered_json& j, const LambdaMaxCurve& v);
void from_json(const nlohmann::ordered_json& j, LambdaMaxCurve& v);
void to_json(nlohmann::ordered_json& j, const Spectrum& v);
void from_json(const nlohmann::ordered_json& j, Spectrum& v);
void to_json(nlohmann::ordered_json& j, const TailComparison& v);
void from_json(const nlohmann::ordered_json& j, TailComparison& v);

}  // namespace levyrmt
