#include "levyrmt/returns.hpp"

#include <cmath>
#include <string>

#include "levyrmt/error.hpp"

namespace levyrmt {

void PricePanel::validate() const {
  if (values.cols() != static_cast<Eigen::Index>(labels.size()))
    throw ValidationError("price panel: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(values.cols()) + " columns");
  if (values.rows() != static_cast<Eigen::Index>(times.size()))
    throw ValidationError("price panel: " + std::to_string(times.size()) + " times for " +
                          std::to_string(values.rows()) + " rows");
  for (std::size_t t = 1; t < times.size(); ++t)
    if (times[t] <= times[t - 1])
      throw ValidationError("price panel: times not strictly increasing at row " + std::to_string(t));
  for (Eigen::Index j = 0; j < values.cols(); ++j)
    for (Eigen::Index t = 0; t < values.rows(); ++t) {
      const double v = values(t, j);
      if (!(v > 0.0) || !std::isfinite(v))
        throw ValidationError("price panel: non-positive or non-finite price at row " + std::to_string(t) +
                              ", asset " + labels[static_cast<std::size_t>(j)]);
    }
}

ReturnPanel log_returns(const PricePanel& panel) {
  panel.validate();
  if (panel.rows() < 2) throw ValidationError("log_returns: need at least 2 rows");
  ReturnPanel out;
  out.labels = panel.labels;
  // Scalar std::log: Eigen's packet log is not bit-identical to its tail loop.
  Eigen::MatrixXd logs(panel.values.rows(), panel.values.cols());
  for (Eigen::Index j = 0; j < logs.cols(); ++j)
    for (Eigen::Index t = 0; t < logs.rows(); ++t) logs(t, j) = std::log(panel.values(t, j));
  out.values = logs.bottomRows(logs.rows() - 1) - logs.topRows(logs.rows() - 1);
  out.normalized = false;
  return out;
}

ReturnPanel normalize_cross_section(const ReturnPanel& returns) {
  const Eigen::Index n = returns.cols();
  if (n < 2) throw ValidationError("normalize_cross_section: need at least 2 assets");
  ReturnPanel out;
  out.labels = returns.labels;
  out.values.resize(returns.rows(), n);
  for (Eigen::Index t = 0; t < returns.rows(); ++t) {
    const auto row = returns.values.row(t);
    const double mean = row.mean();
    // Two-pass variance: <x^2> - <x>^2 evaluated about the mean.
    const double var = (row.array() - mean).square().mean();
    const double sigma = std::sqrt(var);
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw AnalysisError("normalize_cross_section: row " + std::to_string(t) +
                          " has zero cross-sectional variance");
    out.values.row(t) = (row.array() - mean) / sigma;
  }
  out.normalized = true;
  return out;
}

std::vector<std::size_t> epoch_starts(std::size_t rows, std::size_t T, bool overlap) {
  if (T < 1) throw ValidationError("epoch length T must be >= 1");
  if (T > rows)
    throw ValidationError("epoch length T=" + std::to_string(T) + " exceeds " + std::to_string(rows) +
                          " available rows");
  std::vector<std::size_t> starts;
  if (overlap) {
    for (std::size_t s = 0; s + T <= rows; ++s) starts.push_back(s);
  } else {
    for (std::size_t b = 0; b < rows / T; ++b) starts.push_back(b * T);
  }
  return starts;
}

EpochMatrix epoch_at(const ReturnPanel& returns, std::size_t start, std::size_t T) {
  if (!returns.normalized) throw ValidationError("epoch matrices require a normalized return panel");
  if (start + T > static_cast<std::size_t>(returns.rows()))
    throw ValidationError("epoch [" + std::to_string(start) + ", " + std::to_string(start + T) +
                          ") exceeds panel rows");
  EpochMatrix e;
  e.values = returns.values.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(T));
  e.start = start;
  return e;
}

std::vector<EpochMatrix> epoch_matrices(const ReturnPanel& returns, std::size_t T, bool overlap) {
  if (!returns.normalized) throw ValidationError("epoch matrices require a normalized return panel");
  std::vector<EpochMatrix> out;
  for (std::size_t s : epoch_starts(static_cast<std::size_t>(returns.rows()), T, overlap))
    out.push_back(epoch_at(returns, s, T));
  return out;
}

}  // namespace levyrmt
