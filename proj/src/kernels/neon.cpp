// AArch64 NEON variants. NEON is mandatory on AArch64, so no runtime check.

#include "variants.hpp"

#if defined(ANTIC_HAVE_NEON)

#include <arm_neon.h>

namespace antic::kernels::detail {
namespace {

void gemm_f32(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
              const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        float* crow = c + i * ldc;
        const float* arow = a + i * lda;
        if (!accumulate)
            for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0f;
        std::size_t j = 0;
        for (; j + 8 <= n; j += 8) {
            float32x4_t r0 = vld1q_f32(crow + j);
            float32x4_t r1 = vld1q_f32(crow + j + 4);
            for (std::size_t p = 0; p < k; ++p) {
                const float32x4_t av = vdupq_n_f32(arow[p]);
                r0 = vfmaq_f32(r0, av, vld1q_f32(b + p * ldb + j));
                r1 = vfmaq_f32(r1, av, vld1q_f32(b + p * ldb + j + 4));
            }
            vst1q_f32(crow + j, r0);
            vst1q_f32(crow + j + 4, r1);
        }
        for (std::size_t p = 0; j < n && p < k; ++p) {
            const float av = arow[p];
            for (std::size_t jj = j; jj < n; ++jj) crow[jj] += av * b[p * ldb + jj];
        }
    }
}

void gemm_f64(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
              const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * ldc;
        const double* arow = a + i * lda;
        if (!accumulate)
            for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            float64x2_t r0 = vld1q_f64(crow + j);
            float64x2_t r1 = vld1q_f64(crow + j + 2);
            for (std::size_t p = 0; p < k; ++p) {
                const float64x2_t av = vdupq_n_f64(arow[p]);
                r0 = vfmaq_f64(r0, av, vld1q_f64(b + p * ldb + j));
                r1 = vfmaq_f64(r1, av, vld1q_f64(b + p * ldb + j + 2));
            }
            vst1q_f64(crow + j, r0);
            vst1q_f64(crow + j + 2, r1);
        }
        for (std::size_t p = 0; j < n && p < k; ++p) {
            const double av = arow[p];
            for (std::size_t jj = j; jj < n; ++jj) crow[jj] += av * b[p * ldb + jj];
        }
    }
}

double sum_sq_f32(const float* x, std::size_t n) {
    float64x2_t s0 = vdupq_n_f64(0.0), s1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t v = vld1q_f32(x + i);
        const float64x2_t lo = vcvt_f64_f32(vget_low_f32(v));
        const float64x2_t hi = vcvt_high_f64_f32(v);
        s0 = vfmaq_f64(s0, lo, lo);
        s1 = vfmaq_f64(s1, hi, hi);
    }
    double s = vaddvq_f64(vaddq_f64(s0, s1));
    for (; i < n; ++i) s += static_cast<double>(x[i]) * x[i];
    return s;
}

double dot_f32(const float* a, const float* b, std::size_t n) {
    float64x2_t s0 = vdupq_n_f64(0.0), s1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t va = vld1q_f32(a + i);
        const float32x4_t vb = vld1q_f32(b + i);
        s0 = vfmaq_f64(s0, vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
        s1 = vfmaq_f64(s1, vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
    }
    double s = vaddvq_f64(vaddq_f64(s0, s1));
    for (; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

}  // namespace

const KernelTable kNeonTable{Isa::Neon, &gemm_f32, &gemm_f64, &sum_sq_f32, &dot_f32, &silu_ref};

}  // namespace antic::kernels::detail

#endif
