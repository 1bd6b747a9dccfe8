#pragma once

#include <cstddef>

namespace dropfilter::detail {

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C.
// Backed by OpenBLAS when it can be loaded at runtime, otherwise by a
// blocked native kernel. Both paths use a fixed summation order, so results
// are reproducible run-to-run for a given backend.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc);

// Name of the active backend ("openblas:<core>" or "native").
// Set DROPFILTER_NO_BLAS=1 to force the native kernel.
const char* gemm_backend();

} // namespace dropfilter::detail
