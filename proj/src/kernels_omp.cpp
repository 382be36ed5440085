#include <omp.h>

#include <algorithm>
#include <cstddef>

#include "lindyn/errors.hpp"
#include "lindyn/kernels.hpp"

namespace lindyn::kernels {

namespace {

constexpr std::ptrdiff_t kRowBlock = 4;

void check_inner(std::size_t a, std::size_t b, const char* op) {
  if (a != b) throw InvalidArgument(std::string("inner dimension mismatch in ") + op);
}

}  // namespace

int thread_count() { return omp_get_max_threads(); }

void set_thread_count(int n) { omp_set_num_threads(std::max(1, n)); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  Matrix c(a.rows(), n);
  const double* bp = b.data();

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ib = 0; ib < m; ib += kRowBlock) {
    const std::ptrdiff_t iend = std::min(ib + kRowBlock, m);
    if (iend - ib == kRowBlock) {
      double* c0 = c.row(ib).data();
      double* c1 = c.row(ib + 1).data();
      double* c2 = c.row(ib + 2).data();
      double* c3 = c.row(ib + 3).data();
      for (std::size_t p = 0; p < k; ++p) {
        const double a0 = a(ib, p), a1 = a(ib + 1, p), a2 = a(ib + 2, p), a3 = a(ib + 3, p);
        const double* br = bp + p * n;
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) {
          c0[j] += a0 * br[j];
          c1[j] += a1 * br[j];
          c2[j] += a2 * br[j];
          c3[j] += a3 * br[j];
        }
      }
    } else {
      for (std::ptrdiff_t i = ib; i < iend; ++i) {
        double* ci = c.row(i).data();
        for (std::size_t p = 0; p < k; ++p) {
          const double ai = a(i, p);
          const double* br = bp + p * n;
#pragma omp simd
          for (std::size_t j = 0; j < n; ++j) ci[j] += ai * br[j];
        }
      }
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn");
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.cols());
  const std::size_t k = a.rows();
  const std::size_t n = b.cols();
  Matrix c(a.cols(), n);
  const double* bp = b.data();

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ib = 0; ib < m; ib += kRowBlock) {
    const std::ptrdiff_t iend = std::min(ib + kRowBlock, m);
    if (iend - ib == kRowBlock) {
      double* c0 = c.row(ib).data();
      double* c1 = c.row(ib + 1).data();
      double* c2 = c.row(ib + 2).data();
      double* c3 = c.row(ib + 3).data();
      for (std::size_t p = 0; p < k; ++p) {
        const double a0 = a(p, ib), a1 = a(p, ib + 1), a2 = a(p, ib + 2), a3 = a(p, ib + 3);
        const double* br = bp + p * n;
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) {
          c0[j] += a0 * br[j];
          c1[j] += a1 * br[j];
          c2[j] += a2 * br[j];
          c3[j] += a3 * br[j];
        }
      }
    } else {
      for (std::ptrdiff_t i = ib; i < iend; ++i) {
        double* ci = c.row(i).data();
        for (std::size_t p = 0; p < k; ++p) {
          const double ai = a(p, i);
          const double* br = bp + p * n;
#pragma omp simd
          for (std::size_t j = 0; j < n; ++j) ci[j] += ai * br[j];
        }
      }
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt");
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t n = b.rows();
  const std::size_t k = a.cols();
  Matrix c(a.rows(), n);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const double* ar = a.row(i).data();
    double* ci = c.row(i).data();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b.row(j).data();
      const double* b1 = b.row(j + 1).data();
      const double* b2 = b.row(j + 2).data();
      const double* b3 = b.row(j + 3).data();
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
#pragma omp simd reduction(+ : s0, s1, s2, s3)
      for (std::size_t p = 0; p < k; ++p) {
        s0 += ar[p] * b0[p];
        s1 += ar[p] * b1[p];
        s2 += ar[p] * b2[p];
        s3 += ar[p] * b3[p];
      }
      ci[j] = s0;
      ci[j + 1] = s1;
      ci[j + 2] = s2;
      ci[j + 3] = s3;
    }
    for (; j < n; ++j) {
      const double* bj = b.row(j).data();
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * bj[p];
      ci[j] = s;
    }
  }
  return c;
}

Matrix gram(const Matrix& x) {
  Matrix g = matmul_tn(x, x);
  const std::size_t d = g.rows();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double s = 0.5 * (g(i, j) + g(j, i));
      g(i, j) = s;
      g(j, i) = s;
    }
  return g;
}

std::vector<double> diag_of_product(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "diag_of_product");
  if (a.rows() != b.cols()) throw InvalidArgument("diag_of_product needs a square product");
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.rows());
  std::vector<double> d(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, i);
    d[i] = s;
  }
  return d;
}

}  // namespace lindyn::kernels
