#pragma once

#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

#include "lindyn/dataset.hpp"
#include "lindyn/matrix.hpp"

namespace lindyn {

struct CovarianceOptions {
  /// Divide by N. The analytic predictions always use the raw sum.
  bool normalize = false;
  /// Subtract the per-feature mean first.
  bool center = false;
};

/// Sum over samples of x x^T (unnormalized unless asked), symmetrized.
Matrix covariance(const Dataset& dataset, const CovarianceOptions& options = {});

/// Orthogonal eigenbasis (eigenvectors in columns) with eigenvalues sorted in
/// non-increasing order. Within a degenerate eigenvalue the vectors are one
/// valid basis of the eigenspace, not a canonical one; compare projectors.
struct Spectrum {
  Matrix eigenvectors;
  std::vector<double> eigenvalues;
  /// How many slightly negative eigenvalues were clamped to zero.
  std::size_t clamped = 0;
  /// Smallest eigenvalue before clamping.
  double min_raw_eigenvalue = 0.0;
  std::size_t sweeps = 0;

  std::size_t dim() const noexcept { return eigenvalues.size(); }
};

struct JacobiOptions {
  /// Stop when max |offdiag| <= tolerance * ||S||_F.
  double tolerance = 1e-12;
  std::size_t max_sweeps = 100;
  /// Eigenvalues in [-clamp_tolerance, 0) become 0. Negative means
  /// 1e-10 * max(1, ||S||_max).
  double clamp_tolerance = -1.0;
  /// Clamp every negative eigenvalue (the input is known to be PSD).
  bool clamp_all_negative = false;
  /// Max allowed |S - S^T| entry.
  double symmetry_tolerance = 1e-8;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Deterministic:
/// fixed sweep order, stable sort, and each eigenvector's largest-magnitude
/// component made positive.
Spectrum eigendecompose(const Matrix& s, const JacobiOptions& options = {});

/// eigendecompose(covariance(dataset)) with negative roundoff clamped.
Spectrum spectrum_of(const Dataset& dataset, const CovarianceOptions& options = {});

/// (W1 V, V^T W2).
std::pair<Matrix, Matrix> rotate_weights(const Matrix& w1, const Matrix& w2,
                                         const Spectrum& spectrum);

struct ProjectedDiagonal {
  std::vector<double> diagonal;
  /// max |[V^T W2 W1 V]_ij| over i != j; negative when not computed.
  double max_off_diagonal = -1.0;
};

/// Per-mode mapping values diag(V^T W2 W1 V). The off-diagonal report costs a
/// full D x D product and can be skipped.
ProjectedDiagonal projected_diagonal(const Matrix& w1, const Matrix& w2, const Spectrum& spectrum,
                                     bool with_off_diagonal = true);

/// Same, for weights already expressed in the eigenbasis (A = W1 V, B = V^T W2).
ProjectedDiagonal rotated_diagonal(const Matrix& a, const Matrix& b, bool with_off_diagonal);

/// "index,eigenvalue" with 1-based index.
void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum);
/// D x D eigenvector matrix, one row per line, no header.
void write_eigenvectors_csv(std::ostream& out, const Spectrum& spectrum);

}  // namespace lindyn
