#include "levyrmt/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Eigenvalues>

#include "levyrmt/error.hpp"
#include "levyrmt/rng.hpp"

namespace levyrmt {

WishartMatrix wishart(const EpochMatrix& epoch) {
  if (epoch.T() < 1 || epoch.N() < 1) throw ValidationError("wishart: empty epoch");
  WishartMatrix w;
  w.T = epoch.T();
  w.N = epoch.N();
  w.start = epoch.start;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(epoch.values.cols(), epoch.values.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(epoch.values.transpose(), 1.0 / static_cast<double>(w.T));
  // rankUpdate fills one triangle; mirror it so W is exactly symmetric.
  w.values = g.selfadjointView<Eigen::Lower>();
  return w;
}

Spectrum eigenvalues(const WishartMatrix& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(w.values, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw AnalysisError("eigensolver did not converge for epoch starting at row " + std::to_string(w.start));
  Spectrum s;
  s.T = w.T;
  s.N = w.N;
  s.start = w.start;
  const auto& ev = solver.eigenvalues();
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), std::greater<>());
  const double top = s.eigenvalues.empty() ? 0.0 : s.eigenvalues.front();
  for (double& v : s.eigenvalues)
    if (std::abs(v) < kZeroEigenvalueThreshold * top) v = 0.0;
  return s;
}

std::vector<double> nonzero_spectrum(const Spectrum& s) {
  std::vector<double> out;
  for (double v : s.eigenvalues)
    if (v > 0.0) out.push_back(v);
  const std::size_t expected = std::min(s.T, s.N);
  if (out.size() != expected)
    throw AnalysisError("unexpected rank " + std::to_string(out.size()) + " (expected " +
                        std::to_string(expected) + ") for epoch starting at row " + std::to_string(s.start));
  return out;
}

double largest_eigenvalue(const EpochMatrix& epoch) {
  const double inv_t = 1.0 / static_cast<double>(epoch.T());
  Eigen::MatrixXd g;
  if (epoch.T() < epoch.N()) {
    g = Eigen::MatrixXd::Zero(epoch.values.rows(), epoch.values.rows());
    g.selfadjointView<Eigen::Lower>().rankUpdate(epoch.values, inv_t);
  } else {
    g = Eigen::MatrixXd::Zero(epoch.values.cols(), epoch.values.cols());
    g.selfadjointView<Eigen::Lower>().rankUpdate(epoch.values.transpose(), inv_t);
  }
  Eigen::MatrixXd full = g.selfadjointView<Eigen::Lower>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(full, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw AnalysisError("eigensolver did not converge for epoch starting at row " +
                        std::to_string(epoch.start));
  return solver.eigenvalues().maxCoeff();
}

void append_element_samples(const WishartMatrix& w, std::vector<double>& out) {
  const Eigen::Index n = w.values.rows();
  out.reserve(out.size() + static_cast<std::size_t>(n * (n + 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) out.push_back(w.values(i, j));
}

std::vector<double> collect_element_samples(std::span<const WishartMatrix> ws) {
  if (ws.empty()) throw ValidationError("collect_element_samples: empty collection");
  std::vector<double> out;
  for (const auto& w : ws) append_element_samples(w, out);
  return out;
}

EpochMatrix shuffle_matrix(const EpochMatrix& epoch, std::uint64_t seed) {
  EpochMatrix out = epoch;
  double* data = out.values.data();
  const auto n = static_cast<std::uint64_t>(out.values.size());
  Rng rng(seed);
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = rng.below(i);
    std::swap(data[i - 1], data[j]);
  }
  return out;
}

double mp_edge(double Q, double sigma2) {
  if (!(Q > 0.0) || !(sigma2 > 0.0)) throw ValidationError("mp_edge: Q and sigma2 must be positive");
  const double a = 1.0 + 1.0 / std::sqrt(Q);
  return sigma2 * a * a;
}

}  // namespace levyrmt
