#pragma once

// Dense products used by every training loop. The parallel kernels split work
// over output rows only, so each output element is summed in the same order
// regardless of thread count. The serial namespace holds the plain triple-loop
// reference that tests and the benchmark compare against.

#include "lindyn/matrix.hpp"

namespace lindyn::kernels {

/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// x^T x, i.e. the sum of outer products of the rows of x. Exactly symmetric.
Matrix gram(const Matrix& x);
/// Diagonal of a * b without forming the product.
std::vector<double> diag_of_product(const Matrix& a, const Matrix& b);

/// Number of OpenMP threads the parallel kernels will use.
int thread_count();
void set_thread_count(int n);

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix gram(const Matrix& x);
}  // namespace serial

}  // namespace lindyn::kernels
