#pragma once

#include <cstddef>
#include <vector>

#include "levyrmt/panel.hpp"

namespace levyrmt {

/// T consecutive rows of a normalized return panel (the X of W = X^T X / T).
struct EpochMatrix {
  Eigen::MatrixXd values;
  std::size_t start = 0;

  std::size_t T() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t N() const { return static_cast<std::size_t>(values.cols()); }
  double Q() const { return static_cast<double>(T()) / static_cast<double>(N()); }
};

/// ln P(t+1) - ln P(t) per asset. Throws ValidationError on non-positive prices.
ReturnPanel log_returns(const PricePanel& panel);

/// Row-wise standardization: subtract the cross-asset mean and divide by the
/// cross-asset population standard deviation. Throws AnalysisError naming
/// the first row whose standard deviation is zero.
ReturnPanel normalize_cross_section(const ReturnPanel& returns);

/// Start rows of the epochs of length T: floor(rows/T) disjoint blocks, or
/// rows - T + 1 stride-1 windows when `overlap` is set.
std::vector<std::size_t> epoch_starts(std::size_t rows, std::size_t T, bool overlap);

/// Copies rows [start, start + T) of a normalized panel.
EpochMatrix epoch_at(const ReturnPanel& returns, std::size_t start, std::size_t T);

/// All epochs of length T. Leftover rows after disjoint slicing are dropped
/// from the end. Materializes every epoch; prefer epoch_starts + epoch_at
/// for long overlapping sweeps.
std::vector<EpochMatrix> epoch_matrices(const ReturnPanel& returns, std::size_t T, bool overlap);

}  // namespace levyrmt
