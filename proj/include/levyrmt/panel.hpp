#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace levyrmt {

using PriceSeries = std::vector<double>;

/// Dated T_total x N matrix of strictly positive prices; column i is asset
/// labels[i]. `times` are day numbers (days since 1970-01-01 for empirical
/// data, 0..T-1 for simulated panels).
struct PricePanel {
  std::vector<std::string> labels;
  std::vector<std::int64_t> times;
  Eigen::MatrixXd values;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  /// Throws ValidationError if shapes disagree, times are not strictly
  /// increasing, or any price is non-positive or non-finite.
  void validate() const;
};

/// (T_total - 1) x N matrix of returns.
struct ReturnPanel {
  std::vector<std::string> labels;
  Eigen::MatrixXd values;
  bool normalized = false;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Labels "W0000", "W0001", ... used for simulated assets.
std::vector<std::string> walker_labels(std::size_t n);

}  // namespace levyrmt
