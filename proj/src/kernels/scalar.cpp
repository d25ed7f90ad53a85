// Reference kernels. This translation unit is built without
// auto-vectorization so it stays a plain in-order reference.

#include "variants.hpp"

namespace antic::kernels::detail {
namespace {

template <class T>
void gemm_ref(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
              const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = c + i * ldc;
        if (!accumulate)
            for (std::size_t j = 0; j < n; ++j) crow[j] = T(0);
        const T* arow = a + i * lda;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_f32(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
              const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
    gemm_ref(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void gemm_f64(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
              const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
    gemm_ref(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

double sum_sq_f32(const float* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(x[i]) * x[i];
    return s;
}

double dot_f32(const float* a, const float* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

}  // namespace

const KernelTable kScalarTable{Isa::Scalar, &gemm_f32, &gemm_f64, &sum_sq_f32, &dot_f32, &silu_ref};

}  // namespace antic::kernels::detail
