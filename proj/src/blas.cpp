#include "dropfilter/blas.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <omp.h>

#if defined(__unix__) || defined(__APPLE__)
#include <dlfcn.h>
#define DROPFILTER_HAS_DLOPEN 1
#endif

#if defined(__x86_64__)
#include <cpuid.h>
#endif

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace dropfilter::detail {

namespace {

// The training loop cycles multi-megabyte workspaces every batch; stop glibc
// from handing those pages back to the kernel between batches.
[[maybe_unused]] const bool malloc_tuned = [] {
#if defined(__GLIBC__)
    mallopt(M_MMAP_MAX, 0);
    mallopt(M_TRIM_THRESHOLD, -1);
#endif
    return true;
}();

using cblas_dgemm_fn = void (*)(int order, int trans_a, int trans_b, int m, int n, int k,
                                double alpha, const double* a, int lda, const double* b, int ldb,
                                double beta, double* c, int ldc);

constexpr int kCblasRowMajor = 101;
constexpr int kCblasNoTrans = 111;
constexpr int kCblasTrans = 112;

struct Backend {
    cblas_dgemm_fn dgemm = nullptr;
    std::string name = "native";
};

#if defined(__x86_64__)
// OpenBLAS's runtime detection reports a generic core on some hypervisors
// that hide the CPU model while still exposing AVX, which leaves its fastest
// kernels unused. Pin the core type from cpuid before the library loads;
// an explicit OPENBLAS_CORETYPE in the environment always wins.
void pin_openblas_coretype() {
    if (std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
    unsigned eax, ebx, ecx, edx;
    if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return;
    const bool avx512f = (ebx >> 16) & 1u;
    const bool avx2 = (ebx >> 5) & 1u;
    if (avx512f) {
        setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 0);
    } else if (avx2) {
        setenv("OPENBLAS_CORETYPE", "HASWELL", 0);
    }
}
#else
void pin_openblas_coretype() {}
#endif

Backend load_backend() {
    Backend be;
    const char* no_blas = std::getenv("DROPFILTER_NO_BLAS");
    if (no_blas != nullptr && std::strcmp(no_blas, "0") != 0) return be;
#ifdef DROPFILTER_HAS_DLOPEN
    pin_openblas_coretype();
    for (const char* lib : {"libopenblas.so.0", "libopenblas.so", "libopenblas.dylib"}) {
        void* handle = dlopen(lib, RTLD_NOW | RTLD_LOCAL);
        if (handle == nullptr) continue;
        auto fn = reinterpret_cast<cblas_dgemm_fn>(dlsym(handle, "cblas_dgemm"));
        if (fn == nullptr) {
            dlclose(handle);
            continue;
        }
        be.dgemm = fn;
        be.name = "openblas";
        // Single-threaded BLAS: parallelism comes from one OpenMP pool (the
        // gemm splitter below plus the layer glue). Two competing pools on a
        // small core count spend more time spin-waiting than computing.
        auto set_threads = reinterpret_cast<void (*)(int)>(
            dlsym(handle, "openblas_set_num_threads"));
        if (set_threads != nullptr) set_threads(1);
        auto corename = reinterpret_cast<const char* (*)()>(dlsym(handle, "openblas_get_corename"));
        if (corename != nullptr) be.name += std::string(":") + corename();
        break;
    }
#endif
    return be;
}

const Backend& backend() {
    static const Backend be = load_backend();
    return be;
}

// Blocked row-major fallback. op(A) is packed into a contiguous M x K buffer
// first so the inner loops are the same for all transpose combinations.
void native_gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
                 double alpha, const double* a, std::size_t lda, const double* b, std::size_t ldb,
                 double beta, double* c, std::size_t ldc) {
    std::vector<double> a_pack(m * k);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            a_pack[i * k + p] = trans_a ? a[p * lda + i] : a[i * lda + p];
        }
    }
    std::vector<double> b_pack(k * n);
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t j = 0; j < n; ++j) {
            b_pack[p * n + j] = trans_b ? b[j * ldb + p] : b[p * ldb + j];
        }
    }
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * ldc;
        if (beta == 0.0) {
            std::memset(crow, 0, n * sizeof(double));
        } else if (beta != 1.0) {
            for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
        }
        const double* arow = a_pack.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = alpha * arow[p];
            const double* brow = b_pack.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void blas_call(const Backend& be, bool trans_a, bool trans_b, std::size_t m, std::size_t n,
               std::size_t k, double alpha, const double* a, std::size_t lda, const double* b,
               std::size_t ldb, double beta, double* c, std::size_t ldc) {
    be.dgemm(kCblasRowMajor, trans_a ? kCblasTrans : kCblasNoTrans,
             trans_b ? kCblasTrans : kCblasNoTrans, static_cast<int>(m), static_cast<int>(n),
             static_cast<int>(k), alpha, a, static_cast<int>(lda), b, static_cast<int>(ldb), beta,
             c, static_cast<int>(ldc));
}

} // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc) {
    if (m == 0 || n == 0) return;
    const Backend& be = backend();
    if (be.dgemm == nullptr) {
        native_gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
        return;
    }
    // Split the output across the OpenMP pool by rows (or columns when the
    // row count is small). Each block is one plain single-threaded BLAS call
    // on a disjoint slab of C, so the per-element arithmetic never depends on
    // the split.
    const int max_threads = omp_get_max_threads();
    const std::size_t flops = 2 * m * n * k;
    if (max_threads <= 1 || flops < (1u << 21)) {
        blas_call(be, trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
        return;
    }
    const bool split_rows = m >= n;
    const std::size_t extent = split_rows ? m : n;
    const std::size_t pieces =
        std::min<std::size_t>(static_cast<std::size_t>(max_threads), (extent + 15) / 16);
    if (pieces <= 1) {
        blas_call(be, trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
        return;
    }
#pragma omp parallel for schedule(static)
    for (std::size_t piece = 0; piece < pieces; ++piece) {
        const std::size_t begin = extent * piece / pieces;
        const std::size_t end = extent * (piece + 1) / pieces;
        if (begin == end) continue;
        if (split_rows) {
            const double* a_part = trans_a ? a + begin : a + begin * lda;
            blas_call(be, trans_a, trans_b, end - begin, n, k, alpha, a_part, lda, b, ldb, beta,
                      c + begin * ldc, ldc);
        } else {
            const double* b_part = trans_b ? b + begin * ldb : b + begin;
            blas_call(be, trans_a, trans_b, m, end - begin, k, alpha, a, lda, b_part, ldb, beta,
                      c + begin, ldc);
        }
    }
}

const char* gemm_backend() { return backend().name.c_str(); }

} // namespace dropfilter::detail
