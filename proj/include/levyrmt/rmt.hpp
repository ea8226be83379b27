#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "levyrmt/returns.hpp"

namespace levyrmt {

/// W = X^T X / T for an epoch X (T x N).
struct WishartMatrix {
  Eigen::MatrixXd values;
  std::size_t T = 0;
  std::size_t N = 0;
  std::size_t start = 0;

  double Q() const { return static_cast<double>(T) / static_cast<double>(N); }
};

/// Eigenvalues of one Wishart matrix, sorted descending.
struct Spectrum {
  std::vector<double> eigenvalues;
  std::size_t T = 0;
  std::size_t N = 0;
  std::size_t start = 0;

  double Q() const { return static_cast<double>(T) / static_cast<double>(N); }
  double largest() const { return eigenvalues.front(); }
};

/// Eigenvalues below this fraction of the largest are set to exactly zero.
inline constexpr double kZeroEigenvalueThreshold = 1e-10;

WishartMatrix wishart(const EpochMatrix& epoch);

/// Full symmetric eigendecomposition (values only). Throws AnalysisError
/// naming the epoch start if the solver does not converge.
Spectrum eigenvalues(const WishartMatrix& w);

/// The strictly positive part of the spectrum. Expects rank min(T, N);
/// any other count after zero-clamping throws AnalysisError.
std::vector<double> nonzero_spectrum(const Spectrum& s);

/// Largest eigenvalue of X^T X / T via the smaller of the two Gram
/// matrices (X X^T / T shares the nonzero spectrum).
double largest_eigenvalue(const EpochMatrix& epoch);

/// Upper-triangle entries W_ij, i <= j, of every matrix, in order.
std::vector<double> collect_element_samples(std::span<const WishartMatrix> ws);
void append_element_samples(const WishartMatrix& w, std::vector<double>& out);

/// Uniform Fisher-Yates permutation of all T*N entries, driven by `seed`.
EpochMatrix shuffle_matrix(const EpochMatrix& epoch, std::uint64_t seed);

/// Marchenko-Pastur upper edge sigma2 * (1 + Q^-1/2)^2.
double mp_edge(double Q, double sigma2 = 1.0);

}  // namespace levyrmt
