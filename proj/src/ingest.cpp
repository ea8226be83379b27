#include "levyrmt/ingest.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "levyrmt/error.hpp"

namespace levyrmt {

using ojson = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double number_or_nan(const ojson& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

void write_json(const ojson& j, const std::filesystem::path& path) { write_text_file(path, j.dump(2) + "\n"); }

std::string csv_row(std::initializer_list<double> values) {
  std::string out;
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    out += format_number(v);
    first = false;
  }
  return out + "\n";
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AnalysisError("cannot write " + path.string());
  out << text;
  if (!out) throw AnalysisError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// CSV loading and cleaning

std::int64_t parse_iso_date(const std::string& text) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3)
    throw ValidationError("not an ISO-8601 date: '" + text + "'");
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw ValidationError("invalid calendar date: '" + text + "'");
  return std::chrono::sys_days(ymd).time_since_epoch().count();
}

std::string format_iso_date(std::int64_t days) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

RawPanel load_price_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open price file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 2) throw ValidationError(path.string() + ":1: header needs a date column and tickers");
  RawPanel raw;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].empty()) throw ValidationError(path.string() + ":1: empty ticker in column " + std::to_string(i + 1));
    if (!seen.insert(header[i]).second) throw ValidationError(path.string() + ":1: duplicate ticker " + header[i]);
    raw.labels.push_back(header[i]);
  }
  const std::size_t n = raw.labels.size();
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (cells.size() != n + 1)
      throw ValidationError(where + "expected " + std::to_string(n + 1) + " fields, found " +
                            std::to_string(cells.size()));
    std::int64_t day = 0;
    try {
      day = parse_iso_date(cells[0]);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    if (!raw.times.empty() && day <= raw.times.back())
      throw ValidationError(where + "date " + cells[0] + " is not after the previous row (duplicate or out of order)");
    raw.times.push_back(day);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& c = cells[i + 1];
      if (c.empty()) {
        row[i] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      char* end = nullptr;
      row[i] = std::strtod(c.c_str(), &end);
      if (end != c.c_str() + c.size() || !std::isfinite(row[i]))
        throw ValidationError(where + "malformed number '" + c + "' for " + raw.labels[i]);
    }
    rows.push_back(std::move(row));
  }
  raw.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t i = 0; i < n; ++i)
      raw.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = rows[t][i];
  return raw;
}

void CleaningPolicy::validate() const {
  if (!(max_missing_fraction >= 0.0 && max_missing_fraction < 1.0))
    throw ValidationError("max_missing_fraction must be in [0, 1)");
}

CleanedPanel clean_panel(const RawPanel& raw, const CleaningPolicy& policy) {
  policy.validate();
  CleanedPanel out;
  const Eigen::Index rows = raw.values.rows();
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < raw.values.cols(); ++j) {
    const std::string& label = raw.labels[static_cast<std::size_t>(j)];
    const auto col = raw.values.col(j);
    Eigen::Index missing = 0;
    bool nonpositive = false;
    for (Eigen::Index t = 0; t < rows; ++t) {
      if (std::isnan(col(t))) {
        ++missing;
      } else if (col(t) <= 0.0) {
        nonpositive = true;
      }
    }
    if (nonpositive) {
      if (!policy.drop_nonpositive) throw ValidationError("asset " + label + " has a non-positive price");
      out.report.dropped_assets.push_back({label, "non-positive price"});
      continue;
    }
    if (rows > 0 && static_cast<double>(missing) / static_cast<double>(rows) > policy.max_missing_fraction) {
      out.report.dropped_assets.push_back({label, "missing fraction above threshold"});
      continue;
    }
    if (rows > 0 && std::isnan(col(0))) {
      out.report.dropped_assets.push_back({label, "leading gap cannot be forward-filled"});
      continue;
    }
    kept.push_back(j);
  }
  if (kept.empty()) throw ValidationError("clean_panel: every asset was dropped");

  out.panel.times = raw.times;
  out.panel.values.resize(rows, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const Eigen::Index j = kept[k];
    const std::string& label = raw.labels[static_cast<std::size_t>(j)];
    out.panel.labels.push_back(label);
    double last = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index t = 0; t < rows; ++t) {
      double v = raw.values(t, j);
      if (std::isnan(v)) {
        v = last;
        out.report.filled_cells.push_back({label, static_cast<std::size_t>(t)});
      }
      out.panel.values(t, static_cast<Eigen::Index>(k)) = v;
      last = v;
    }
  }
  out.panel.validate();
  return out;
}

PricePanel read_price_panel(const std::filesystem::path& path) {
  const RawPanel raw = load_price_csv(path);
  for (Eigen::Index j = 0; j < raw.values.cols(); ++j)
    for (Eigen::Index t = 0; t < raw.values.rows(); ++t)
      if (std::isnan(raw.values(t, j)))
        throw ValidationError(path.string() + ": missing value for " + raw.labels[static_cast<std::size_t>(j)] +
                              " on " + format_iso_date(raw.times[static_cast<std::size_t>(t)]));
  PricePanel panel{raw.labels, raw.times, raw.values};
  panel.validate();
  return panel;
}

// ---------------------------------------------------------------------------
// JSON schemas

namespace {

ojson matrix_rows(const Eigen::MatrixXd& m) {
  ojson rows = ojson::array();
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(t, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_rows(const ojson& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.at(0).size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index t = 0; t < r; ++t) {
    const auto& row = rows.at(static_cast<std::size_t>(t));
    if (static_cast<Eigen::Index>(row.size()) != c) throw ValidationError("ragged matrix in JSON");
    for (Eigen::Index j = 0; j < c; ++j) m(t, j) = number_or_nan(row.at(static_cast<std::size_t>(j)));
  }
  return m;
}

}  // namespace

void to_json(ojson& j, const PricePanel& v) {
  j = ojson{{"labels", v.labels}, {"times", v.times}, {"values", matrix_rows(v.values)}};
}
void from_json(const ojson& j, PricePanel& v) {
  v.labels = j.at("labels").get<std::vector<std::string>>();
  v.times = j.at("times").get<std::vector<std::int64_t>>();
  v.values = matrix_from_rows(j.at("values"));
}

void to_json(ojson& j, const ReturnPanel& v) {
  j = ojson{{"labels", v.labels}, {"normalized", v.normalized}, {"values", matrix_rows(v.values)}};
}
void from_json(const ojson& j, ReturnPanel& v) {
  v.labels = j.at("labels").get<std::vector<std::string>>();
  v.normalized = j.at("normalized").get<bool>();
  v.values = matrix_from_rows(j.at("values"));
}

void to_json(ojson& j, const Histogram& v) {
  j = ojson{{"edges", v.edges}, {"counts", v.counts}, {"densities", v.densities}, {"total", v.total}};
}
void from_json(const ojson& j, Histogram& v) {
  v.edges = j.at("edges").get<std::vector<double>>();
  v.counts = j.at("counts").get<std::vector<std::size_t>>();
  v.densities = j.at("densities").get<std::vector<double>>();
  v.total = j.at("total").get<std::size_t>();
}

void to_json(ojson& j, const ScalingCurve& v) {
  ojson pts = ojson::array();
  for (const auto& p : v.points) pts.push_back(ojson{{"t", p.t}, {"ell", p.ell}, {"rg", p.rg}});
  j = ojson{{"n_samples", v.n_samples}, {"points", pts}};
}
void from_json(const ojson& j, ScalingCurve& v) {
  v.n_samples = j.at("n_samples").get<std::size_t>();
  v.points.clear();
  for (const auto& p : j.at("points"))
    v.points.push_back({p.at("t").get<std::size_t>(), p.at("ell").get<double>(), p.at("rg").get<double>()});
}

void to_json(ojson& j, const ScalarFit& v) {
  j = ojson{{"value", v.value}, {"stderr", v.stderr_}, {"range", {v.range_lo, v.range_hi}}, {"n_points", v.n_points}};
}
void from_json(const ojson& j, ScalarFit& v) {
  v.value = j.at("value").get<double>();
  v.stderr_ = j.at("stderr").get<double>();
  v.range_lo = j.at("range").at(0).get<double>();
  v.range_hi = j.at("range").at(1).get<double>();
  v.n_points = j.at("n_points").get<std::size_t>();
}

void to_json(ojson& j, const TailFit& v) {
  j = ojson{{"exponent", v.exponent}, {"x_min", v.x_min}, {"n_tail", v.n_tail}, {"stderr", v.stderr_}, {"ks", v.ks}};
}
void from_json(const ojson& j, TailFit& v) {
  v.exponent = j.at("exponent").get<double>();
  v.x_min = j.at("x_min").get<double>();
  v.n_tail = j.at("n_tail").get<std::size_t>();
  v.stderr_ = j.at("stderr").get<double>();
  v.ks = j.at("ks").get<double>();
}

void to_json(ojson& j, const EvtFit& v) {
  j = ojson{{"family", to_string(v.family)},
            {"shape", v.shape},
            {"location", v.location},
            {"scale", v.scale},
            {"loglik", v.loglik},
            {"shape_stderr", v.shape_stderr},
            {"location_stderr", v.location_stderr},
            {"scale_stderr", v.scale_stderr},
            {"n", v.n}};
}
void from_json(const ojson& j, EvtFit& v) {
  v.shape = j.at("shape").get<double>();
  v.location = j.at("location").get<double>();
  v.scale = j.at("scale").get<double>();
  v.loglik = j.at("loglik").get<double>();
  v.shape_stderr = number_or_nan(j.at("shape_stderr"));
  v.location_stderr = number_or_nan(j.at("location_stderr"));
  v.scale_stderr = number_or_nan(j.at("scale_stderr"));
  v.n = j.at("n").get<std::size_t>();
  const auto fam = j.at("family").get<std::string>();
  v.family = fam == "frechet" ? EvtFamily::Frechet : fam == "weibull" ? EvtFamily::Weibull : EvtFamily::Gumbel;
}

void to_json(ojson& j, const TDistFit& v) {
  j = ojson{{"nu0", v.nu0},
            {"location", v.location},
            {"scale", v.scale},
            {"loglik", v.loglik},
            {"at_upper_bound", v.at_upper_bound}};
}
void from_json(const ojson& j, TDistFit& v) {
  v.nu0 = j.at("nu0").get<double>();
  v.location = j.at("location").get<double>();
  v.scale = j.at("scale").get<double>();
  v.loglik = j.at("loglik").get<double>();
  v.at_upper_bound = j.at("at_upper_bound").get<bool>();
}

void to_json(ojson& j, const PsdEstimate& v) {
  j = ojson{{"length", v.length},
            {"n_series", v.n_series},
            {"beta", v.beta ? ojson(*v.beta) : ojson(nullptr)},
            {"beta_stderr", v.beta_stderr},
            {"band", {v.band.lo, v.band.hi}},
            {"freqs", v.freqs},
            {"power", v.power}};
}
void from_json(const ojson& j, PsdEstimate& v) {
  v.length = j.at("length").get<std::size_t>();
  v.n_series = j.at("n_series").get<std::size_t>();
  v.beta = j.at("beta").is_null() ? std::nullopt : std::optional<double>(j.at("beta").get<double>());
  v.beta_stderr = j.at("beta_stderr").get<double>();
  v.band = {j.at("band").at(0).get<double>(), j.at("band").at(1).get<double>()};
  v.freqs = j.at("freqs").get<std::vector<double>>();
  v.power = j.at("power").get<std::vector<double>>();
}

void to_json(ojson& j, const LambdaMaxCurve& v) {
  ojson pts = ojson::array();
  for (const auto& p : v.points)
    pts.push_back(ojson{{"Q", p.Q},
                        {"T", p.T},
                        {"mean", p.mean},
                        {"stderr", p.stderr_},
                        {"n_epochs", p.n_epochs},
                        {"flagged", p.flagged}});
  j = ojson{{"source", to_string(v.source)},
            {"rescale_exponent", v.rescale_exponent ? ojson(*v.rescale_exponent) : ojson(nullptr)},
            {"points", pts}};
}
void from_json(const ojson& j, LambdaMaxCurve& v) {
  const auto src = j.at("source").get<std::string>();
  v.source = src == "empirical" ? CurveSource::Empirical
             : src == "model_l" ? CurveSource::ModelL
             : src == "shuffled" ? CurveSource::Shuffled
                                 : CurveSource::ModelR;
  v.rescale_exponent = j.at("rescale_exponent").is_null()
                           ? std::nullopt
                           : std::optional<double>(j.at("rescale_exponent").get<double>());
  v.points.clear();
  for (const auto& p : j.at("points"))
    v.points.push_back({p.at("Q").get<double>(), p.at("T").get<std::size_t>(), p.at("mean").get<double>(),
                        p.at("stderr").get<double>(), p.at("n_epochs").get<std::size_t>(),
                        p.at("flagged").get<bool>()});
}

void to_json(ojson& j, const Spectrum& v) {
  j = ojson{{"start", v.start}, {"T", v.T}, {"N", v.N}, {"Q", v.Q()}, {"eigenvalues", v.eigenvalues}};
}
void from_json(const ojson& j, Spectrum& v) {
  v.start = j.at("start").get<std::size_t>();
  v.T = j.at("T").get<std::size_t>();
  v.N = j.at("N").get<std::size_t>();
  v.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
}

void to_json(ojson& j, const TailComparison& v) {
  j = ojson{{"power_law", v.power_law},
            {"exp_rate", v.exp_rate},
            {"loglik_power_law", v.loglik_power_law},
            {"loglik_exponential", v.loglik_exponential},
            {"loglik_ratio", v.loglik_ratio},
            {"vuong_z", v.vuong_z},
            {"p_value", v.p_value},
            {"favors", v.favors_power_law() ? "power_law" : "exponential"}};
}
void from_json(const ojson& j, TailComparison& v) {
  v.power_law = j.at("power_law").get<TailFit>();
  v.exp_rate = j.at("exp_rate").get<double>();
  v.loglik_power_law = j.at("loglik_power_law").get<double>();
  v.loglik_exponential = j.at("loglik_exponential").get<double>();
  v.loglik_ratio = j.at("loglik_ratio").get<double>();
  v.vuong_z = j.at("vuong_z").get<double>();
  v.p_value = j.at("p_value").get<double>();
}

template <typename T>
T import_json(const std::filesystem::path& path) {
  try {
    return ojson::parse(read_text_file(path)).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

template PricePanel import_json<PricePanel>(const std::filesystem::path&);
template ReturnPanel import_json<ReturnPanel>(const std::filesystem::path&);
template Histogram import_json<Histogram>(const std::filesystem::path&);
template ScalingCurve import_json<ScalingCurve>(const std::filesystem::path&);
template TailFit import_json<TailFit>(const std::filesystem::path&);
template EvtFit import_json<EvtFit>(const std::filesystem::path&);
template TDistFit import_json<TDistFit>(const std::filesystem::path&);
template PsdEstimate import_json<PsdEstimate>(const std::filesystem::path&);
template LambdaMaxCurve import_json<LambdaMaxCurve>(const std::filesystem::path&);
template std::vector<Spectrum> import_json<std::vector<Spectrum>>(const std::filesystem::path&);

// ---------------------------------------------------------------------------
// Exporters

void export_artifact(const PricePanel& panel, const std::filesystem::path& path, ExportFormat format) {
  if (format == ExportFormat::Json) return write_json(panel, path);
  std::string out = "date";
  for (const auto& l : panel.labels) out += "," + l;
  out += "\n";
  for (Eigen::Index t = 0; t < panel.values.rows(); ++t) {
    out += format_iso_date(panel.times[static_cast<std::size_t>(t)]);
    for (Eigen::Index j = 0; j < panel.values.cols(); ++j) out += "," + format_number(panel.values(t, j));
    out += "\n";
  }
  write_text_file(path, out);
}

void export_artifact(const ReturnPanel& panel, const std::filesystem::path& path, ExportFormat format) {
  if (format == ExportFormat::Json) return write_json(panel, path);
  std::string out;
  for (std::size_t j = 0; j < panel.labels.size(); ++j) out += (j ? "," : "") + panel.labels[j];
  out += "\n";
  for (Eigen::Index t = 0; t < panel.values.rows(); ++t) {
    for (Eigen::Index j = 0; j < panel.values.cols(); ++j) out += (j ? "," : "") + format_number(panel.values(t, j));
    out += "\n";
  }
  write_text_file(path, out);
}

void export_artifact(const Histogram& hist, const std::filesystem::path& path, ExportFormat format) {
  if (format == ExportFormat::Json) return write_json(hist, path);
  std::string out = "edge_lo,edge_hi,count,density\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    out += format_number(hist.edges[i]) + "," + format_number(hist.edges[i + 1]) + "," +
           std::to_string(hist.counts[i]) + "," + format_number(hist.densities[i]) + "\n";
  write_text_file(path, out);
}

void export_artifact(const ScalingCurve& curve, const std::filesystem::path& path, ExportFormat format) {
  if (format == ExportFormat::Json) return write_json(curve, path);
  std::string out = "t,ell,rg\n";
  for (const auto& p : curve.points)
    out += std::to_string(p.t) + "," + format_number(p.ell) + "," + format_number(p.rg) + "\n";
  write_text_file(path, out);
}

void export_artifact(const TailFit& fit, const std::filesystem::path& path, ExportFormat format) {
  if (format == ExportFormat::Json) return write_json(fit, path);
  write_text_file(path, "exponent,x_min,n_tail,stderr,ks\n" + format_number(fit.exponent) + "," +
                            format_number(fit.x_min) + "," + std::to_string(fit.n_tail) + "," +
                            format_number(fit.stderr_) + "," + format_number(fit.ks) + "\n");
}

void export_artifact(const EvtFit& fit, const std::filesystem::path& path, ExportFormat format) {
  if (format == ExportFormat::Json) return write_json(fit, path);
  std::string out = "family,shape,location,scale,loglik,shape_stderr,location_stderr,scale_stderr,n\n";
  out += std::string(to_string(fit.family)) + ",";
  for (double v : {fit.shape, fit.location, fit.scale, fit.loglik, fit.shape_stderr, fit.location_stderr,
                   fit.scale_stderr})
    out += format_number(v) + ",";
  out += std::to_string(fit.n) + "\n";
  write_text_file(path, out);
}

void export_artifact(const TDistFit& fit, const std::filesystem::path& path, ExportFormat format) {
  if (format == ExportFormat::Json) return write_json(fit, path);
  write_text_file(path, "nu0,location,scale,loglik,at_upper_bound\n" + format_number(fit.nu0) + "," +
                            format_number(fit.location) + "," + format_number(fit.scale) + "," +
                            format_number(fit.loglik) + "," + (fit.at_upper_bound ? "1" : "0") + "\n");
}

void export_artifact(const PsdEstimate& psd, const std::filesystem::path& path, ExportFormat format) {
  if (format == ExportFormat::Json) return write_json(psd, path);
  std::string out = "freq,power\n";
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) out += csv_row({psd.freqs[k], psd.power[k]});
  write_text_file(path, out);
}

void export_artifact(const LambdaMaxCurve& curve, const std::filesystem::path& path, ExportFormat format) {
  if (format == ExportFormat::Json) return write_json(curve, path);
  std::string out = "Q,T,mean,stderr,n_epochs,flagged\n";
  for (const auto& p : curve.points)
    out += format_number(p.Q) + "," + std::to_string(p.T) + "," + format_number(p.mean) + "," +
           format_number(p.stderr_) + "," + std::to_string(p.n_epochs) + "," + (p.flagged ? "1" : "0") + "\n";
  write_text_file(path, out);
}

void export_artifact(const std::vector<Spectrum>& spectra, const std::filesystem::path& path, ExportFormat format) {
  if (format == ExportFormat::Json) {
    ojson j = ojson::array();
    for (const auto& s : spectra) j.push_back(s);
    return write_json(j, path);
  }
  std::string out = "start,T,N,Q";
  const std::size_t width = spectra.empty() ? 0 : spectra.front().eigenvalues.size();
  for (std::size_t k = 1; k <= width; ++k) out += ",lambda_" + std::to_string(k);
  out += "\n";
  for (const auto& s : spectra) {
    out += std::to_string(s.start) + "," + std::to_string(s.T) + "," + std::to_string(s.N) + "," + format_number(s.Q());
    for (double v : s.eigenvalues) out += "," + format_number(v);
    out += "\n";
  }
  write_text_file(path, out);
}

}  // namespace levyrmt
