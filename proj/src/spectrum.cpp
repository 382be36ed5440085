#include "lindyn/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "lindyn/csv.hpp"
#include "lindyn/errors.hpp"
#include "lindyn/kernels.hpp"

namespace lindyn {

std::string_view to_string(DataSource s) noexcept {
  switch (s) {
    case DataSource::synthetic: return "synthetic";
    case DataSource::mnist: return "mnist";
    case DataSource::cifar10: return "cifar10";
    case DataSource::file: return "file";
  }
  return "unknown";
}

Dataset::Dataset(Matrix samples, DataSource source) : samples_(std::move(samples)), source_(source) {
  if (samples_.rows() == 0 || samples_.cols() == 0)
    throw InvalidArgument("dataset needs N >= 1 and D >= 1");
  for (std::size_t i = 0; i < samples_.rows(); ++i)
    for (double v : samples_.row(i))
      if (!std::isfinite(v))
        throw InvalidArgument("non-finite value in sample " + std::to_string(i));
}

Matrix covariance(const Dataset& dataset, const CovarianceOptions& options) {
  Matrix s;
  if (options.center) {
    Matrix x = dataset.samples();
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) x(i, j) -= mean[j];
    s = kernels::gram(x);
  } else {
    s = kernels::gram(dataset.samples());
  }
  if (options.normalize) s *= 1.0 / static_cast<double>(dataset.n());
  return s;
}

namespace {

double max_off_diagonal(const Matrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
  return m;
}

// One two-sided rotation zeroing a(p,q). vt holds eigenvectors as rows.
void rotate(Matrix& a, Matrix& vt, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  const double app = a(p, p);
  const double aqq = a(q, q);
  const double theta = (aqq - app) / (2.0 * apq);
  double t;
  if (std::abs(theta) > 1e150) {
    t = 0.5 / theta;
  } else {
    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    if (theta < 0.0) t = -t;
  }
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t n = a.rows();

  double* rp = a.row(p).data();
  double* rq = a.row(q).data();
  for (std::size_t k = 0; k < n; ++k) {
    const double x = rp[k];
    const double y = rq[k];
    rp[k] = c * x - s * y;
    rq[k] = s * x + c * y;
  }
  for (std::size_t k = 0; k < n; ++k) {
    a(k, p) = rp[k];
    a(k, q) = rq[k];
  }
  a(p, p) = app - t * apq;
  a(q, q) = aqq + t * apq;
  a(p, q) = 0.0;
  a(q, p) = 0.0;

  double* vp = vt.row(p).data();
  double* vq = vt.row(q).data();
  for (std::size_t k = 0; k < n; ++k) {
    const double x = vp[k];
    const double y = vq[k];
    vp[k] = c * x - s * y;
    vq[k] = s * x + c * y;
  }
}

}  // namespace

Spectrum eigendecompose(const Matrix& s, const JacobiOptions& options) {
  if (s.rows() != s.cols()) throw InvalidArgument("eigendecompose needs a square matrix");
  if (s.empty()) throw InvalidArgument("eigendecompose needs a non-empty matrix");
  if (!all_finite(s)) throw InvalidArgument("eigendecompose input has non-finite entries");
  const double asym = max_asymmetry(s);
  if (asym > options.symmetry_tolerance)
    throw InvalidArgument("eigendecompose input not symmetric: max asymmetry " +
                          csv::number(asym));

  const std::size_t n = s.rows();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (s(i, j) + s(j, i));
  Matrix vt = Matrix::identity(n);

  const double threshold = options.tolerance * frobenius_norm(a);
  Spectrum out;
  std::size_t sweep = 0;
  while (max_off_diagonal(a) > threshold) {
    if (sweep == options.max_sweeps)
      throw Error("Jacobi did not converge in " + std::to_string(sweep) + " sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q)
        if (std::abs(a(p, q)) > threshold) rotate(a, vt, p, q);
    ++sweep;
  }
  out.sweeps = sweep;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t col = 0; col < n; ++col) {
    const std::size_t src = order[col];
    out.eigenvalues[col] = a(src, src);
    std::span<const double> v = vt.row(src);
    std::size_t big = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v[k]) > std::abs(v[big])) big = k;
    const double sign = v[big] < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.eigenvectors(k, col) = sign * v[k];
  }

  out.min_raw_eigenvalue = out.eigenvalues.back();
  const double clamp = options.clamp_tolerance >= 0.0
                           ? options.clamp_tolerance
                           : 1e-10 * std::max(1.0, max_abs(s));
  for (double& ev : out.eigenvalues) {
    if (ev < 0.0 && (options.clamp_all_negative || ev >= -clamp)) {
      ev = 0.0;
      ++out.clamped;
    }
  }
  return out;
}

Spectrum spectrum_of(const Dataset& dataset, const CovarianceOptions& options) {
  JacobiOptions jo;
  jo.clamp_all_negative = true;
  return eigendecompose(covariance(dataset, options), jo);
}

namespace {

void check_weights(const Matrix& w1, const Matrix& w2, std::size_t d) {
  if (w1.cols() != d || w2.rows() != d || w1.rows() != w2.cols())
    throw InvalidArgument("weight shapes (" + std::to_string(w1.rows()) + "x" +
                          std::to_string(w1.cols()) + ", " + std::to_string(w2.rows()) + "x" +
                          std::to_string(w2.cols()) + ") do not conform with dimension " +
                          std::to_string(d));
}

}  // namespace

std::pair<Matrix, Matrix> rotate_weights(const Matrix& w1, const Matrix& w2,
                                         const Spectrum& spectrum) {
  check_weights(w1, w2, spectrum.dim());
  return {kernels::matmul(w1, spectrum.eigenvectors),
          kernels::matmul_tn(spectrum.eigenvectors, w2)};
}

ProjectedDiagonal rotated_diagonal(const Matrix& a, const Matrix& b, bool with_off_diagonal) {
  if (a.rows() != b.cols() || a.cols() != b.rows())
    throw InvalidArgument("rotated weights do not conform");
  ProjectedDiagonal out;
  out.diagonal = kernels::diag_of_product(b, a);
  if (with_off_diagonal) {
    const Matrix m = kernels::matmul(b, a);
    double off = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j)
        if (i != j) off = std::max(off, std::abs(m(i, j)));
    out.max_off_diagonal = off;
  }
  return out;
}

ProjectedDiagonal projected_diagonal(const Matrix& w1, const Matrix& w2, const Spectrum& spectrum,
                                     bool with_off_diagonal) {
  auto [a, b] = rotate_weights(w1, w2, spectrum);
  return rotated_diagonal(a, b, with_off_diagonal);
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum) {
  out << "index,eigenvalue\n";
  for (std::size_t j = 0; j < spectrum.dim(); ++j)
    out << (j + 1) << ',' << csv::number(spectrum.eigenvalues[j]) << '\n';
}

void write_eigenvectors_csv(std::ostream& out, const Spectrum& spectrum) {
  const Matrix& v = spectrum.eigenvectors;
  for (std::size_t i = 0; i < v.rows(); ++i) {
    for (std::size_t j = 0; j < v.cols(); ++j) {
      if (j) out << ',';
      out << csv::number(v(i, j));
    }
    out << '\n';
  }
}

}  // namespace lindyn
