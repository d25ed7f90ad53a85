// AVX2 + FMA variants. Functions carry target attributes so the rest of
// the library stays baseline x86-64; dispatch checks the CPU first.

#include "variants.hpp"

#if defined(ANTIC_HAVE_AVX2)

#include <immintrin.h>

#define ANTIC_AVX2 __attribute__((target("avx2,fma")))

namespace antic::kernels::detail {
namespace {

template <class T>
void zero_rows(std::size_t m, std::size_t n, T* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] = T(0);
}

// Scalar tail for columns [j0, n) of rows [i0, i1).
template <class T>
void tail_cols(std::size_t i0, std::size_t i1, std::size_t j0, std::size_t n, std::size_t k,
               const T* a, std::size_t lda, const T* b, std::size_t ldb, T* c,
               std::size_t ldc) {
    for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const T av = a[i * lda + p];
            for (std::size_t j = j0; j < n; ++j) c[i * ldc + j] += av * b[p * ldb + j];
        }
}

ANTIC_AVX2 void gemm_f32(std::size_t m, std::size_t n, std::size_t k, const float* a,
                         std::size_t lda, const float* b, std::size_t ldb, float* c,
                         std::size_t ldc, bool accumulate) {
    if (!accumulate) zero_rows(m, n, c, ldc);
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        float* c0 = c + (i + 0) * ldc;
        float* c1 = c + (i + 1) * ldc;
        float* c2 = c + (i + 2) * ldc;
        float* c3 = c + (i + 3) * ldc;
        const float* a0 = a + (i + 0) * lda;
        const float* a1 = a + (i + 1) * lda;
        const float* a2 = a + (i + 2) * lda;
        const float* a3 = a + (i + 3) * lda;
        std::size_t j = 0;
        for (; j + 16 <= n; j += 16) {
            __m256 r00 = _mm256_loadu_ps(c0 + j), r01 = _mm256_loadu_ps(c0 + j + 8);
            __m256 r10 = _mm256_loadu_ps(c1 + j), r11 = _mm256_loadu_ps(c1 + j + 8);
            __m256 r20 = _mm256_loadu_ps(c2 + j), r21 = _mm256_loadu_ps(c2 + j + 8);
            __m256 r30 = _mm256_loadu_ps(c3 + j), r31 = _mm256_loadu_ps(c3 + j + 8);
            for (std::size_t p = 0; p < k; ++p) {
                const __m256 b0 = _mm256_loadu_ps(b + p * ldb + j);
                const __m256 b1 = _mm256_loadu_ps(b + p * ldb + j + 8);
                __m256 av = _mm256_broadcast_ss(a0 + p);
                r00 = _mm256_fmadd_ps(av, b0, r00);
                r01 = _mm256_fmadd_ps(av, b1, r01);
                av = _mm256_broadcast_ss(a1 + p);
                r10 = _mm256_fmadd_ps(av, b0, r10);
                r11 = _mm256_fmadd_ps(av, b1, r11);
                av = _mm256_broadcast_ss(a2 + p);
                r20 = _mm256_fmadd_ps(av, b0, r20);
                r21 = _mm256_fmadd_ps(av, b1, r21);
                av = _mm256_broadcast_ss(a3 + p);
                r30 = _mm256_fmadd_ps(av, b0, r30);
                r31 = _mm256_fmadd_ps(av, b1, r31);
            }
            _mm256_storeu_ps(c0 + j, r00);
            _mm256_storeu_ps(c0 + j + 8, r01);
            _mm256_storeu_ps(c1 + j, r10);
            _mm256_storeu_ps(c1 + j + 8, r11);
            _mm256_storeu_ps(c2 + j, r20);
            _mm256_storeu_ps(c2 + j + 8, r21);
            _mm256_storeu_ps(c3 + j, r30);
            _mm256_storeu_ps(c3 + j + 8, r31);
        }
        for (; j + 8 <= n; j += 8) {
            __m256 r0 = _mm256_loadu_ps(c0 + j), r1 = _mm256_loadu_ps(c1 + j);
            __m256 r2 = _mm256_loadu_ps(c2 + j), r3 = _mm256_loadu_ps(c3 + j);
            for (std::size_t p = 0; p < k; ++p) {
                const __m256 bv = _mm256_loadu_ps(b + p * ldb + j);
                r0 = _mm256_fmadd_ps(_mm256_broadcast_ss(a0 + p), bv, r0);
                r1 = _mm256_fmadd_ps(_mm256_broadcast_ss(a1 + p), bv, r1);
                r2 = _mm256_fmadd_ps(_mm256_broadcast_ss(a2 + p), bv, r2);
                r3 = _mm256_fmadd_ps(_mm256_broadcast_ss(a3 + p), bv, r3);
            }
            _mm256_storeu_ps(c0 + j, r0);
            _mm256_storeu_ps(c1 + j, r1);
            _mm256_storeu_ps(c2 + j, r2);
            _mm256_storeu_ps(c3 + j, r3);
        }
        if (j < n) tail_cols(i, i + 4, j, n, k, a, lda, b, ldb, c, ldc);
    }
    for (; i < m; ++i) {
        float* crow = c + i * ldc;
        const float* arow = a + i * lda;
        std::size_t j = 0;
        for (; j + 8 <= n; j += 8) {
            __m256 r = _mm256_loadu_ps(crow + j);
            for (std::size_t p = 0; p < k; ++p)
                r = _mm256_fmadd_ps(_mm256_broadcast_ss(arow + p), _mm256_loadu_ps(b + p * ldb + j), r);
            _mm256_storeu_ps(crow + j, r);
        }
        if (j < n) tail_cols(i, i + 1, j, n, k, a, lda, b, ldb, c, ldc);
    }
}

ANTIC_AVX2 void gemm_f64(std::size_t m, std::size_t n, std::size_t k, const double* a,
                         std::size_t lda, const double* b, std::size_t ldb, double* c,
                         std::size_t ldc, bool accumulate) {
    if (!accumulate) zero_rows(m, n, c, ldc);
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        double* cr[4] = {c + i * ldc, c + (i + 1) * ldc, c + (i + 2) * ldc, c + (i + 3) * ldc};
        const double* ar[4] = {a + i * lda, a + (i + 1) * lda, a + (i + 2) * lda, a + (i + 3) * lda};
        std::size_t j = 0;
        for (; j + 8 <= n; j += 8) {
            __m256d r[4][2];
            for (int q = 0; q < 4; ++q) {
                r[q][0] = _mm256_loadu_pd(cr[q] + j);
                r[q][1] = _mm256_loadu_pd(cr[q] + j + 4);
            }
            for (std::size_t p = 0; p < k; ++p) {
                const __m256d b0 = _mm256_loadu_pd(b + p * ldb + j);
                const __m256d b1 = _mm256_loadu_pd(b + p * ldb + j + 4);
                for (int q = 0; q < 4; ++q) {
                    const __m256d av = _mm256_broadcast_sd(ar[q] + p);
                    r[q][0] = _mm256_fmadd_pd(av, b0, r[q][0]);
                    r[q][1] = _mm256_fmadd_pd(av, b1, r[q][1]);
                }
            }
            for (int q = 0; q < 4; ++q) {
                _mm256_storeu_pd(cr[q] + j, r[q][0]);
                _mm256_storeu_pd(cr[q] + j + 4, r[q][1]);
            }
        }
        if (j < n) tail_cols(i, i + 4, j, n, k, a, lda, b, ldb, c, ldc);
    }
    for (; i < m; ++i) {
        double* crow = c + i * ldc;
        const double* arow = a + i * lda;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            __m256d r = _mm256_loadu_pd(crow + j);
            for (std::size_t p = 0; p < k; ++p)
                r = _mm256_fmadd_pd(_mm256_broadcast_sd(arow + p), _mm256_loadu_pd(b + p * ldb + j), r);
            _mm256_storeu_pd(crow + j, r);
        }
        if (j < n) tail_cols(i, i + 1, j, n, k, a, lda, b, ldb, c, ldc);
    }
}

ANTIC_AVX2 double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

ANTIC_AVX2 double sum_sq_f32(const float* x, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d v0 = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        const __m256d v1 = _mm256_cvtps_pd(_mm_loadu_ps(x + i + 4));
        s0 = _mm256_fmadd_pd(v0, v0, s0);
        s1 = _mm256_fmadd_pd(v1, v1, s1);
    }
    double s = hsum(_mm256_add_pd(s0, s1));
    for (; i < n; ++i) s += static_cast<double>(x[i]) * x[i];
    return s;
}

ANTIC_AVX2 double dot_f32(const float* a, const float* b, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(a + i)),
                             _mm256_cvtps_pd(_mm_loadu_ps(b + i)), s0);
        s1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(a + i + 4)),
                             _mm256_cvtps_pd(_mm_loadu_ps(b + i + 4)), s1);
    }
    double s = hsum(_mm256_add_pd(s0, s1));
    for (; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

// Range reduction to r in [-ln2/2, ln2/2], then a degree-6 polynomial.
ANTIC_AVX2 __m256 exp_ps(__m256 x) {
    x = _mm256_min_ps(_mm256_max_ps(x, _mm256_set1_ps(-87.0f)), _mm256_set1_ps(88.0f));
    const __m256 n = _mm256_round_ps(_mm256_mul_ps(x, _mm256_set1_ps(1.44269504088896341f)),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256 r = _mm256_fnmadd_ps(n, _mm256_set1_ps(0.693359375f), x);
    r = _mm256_fnmadd_ps(n, _mm256_set1_ps(-2.12194440e-4f), r);
    __m256 p = _mm256_set1_ps(1.9875691500e-4f);
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.3981999507e-3f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(8.3334519073e-3f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(4.1665795894e-2f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.6666665459e-1f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(5.0000001201e-1f));
    p = _mm256_fmadd_ps(p, _mm256_mul_ps(r, r), _mm256_add_ps(r, _mm256_set1_ps(1.0f)));
    const __m256i e = _mm256_slli_epi32(_mm256_add_epi32(_mm256_cvtps_epi32(n), _mm256_set1_epi32(127)), 23);
    return _mm256_mul_ps(p, _mm256_castsi256_ps(e));
}

ANTIC_AVX2 void silu_f32(const float* x, float* y, float* sig, std::size_t n) {
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 sign = _mm256_set1_ps(-0.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        __m256 s = _mm256_div_ps(one, _mm256_add_ps(one, exp_ps(_mm256_xor_ps(v, sign))));
        // Below -87 the true value is under FLT_MIN; flush instead of clamping.
        s = _mm256_andnot_ps(_mm256_cmp_ps(v, _mm256_set1_ps(-87.0f), _CMP_LT_OQ), s);
        _mm256_storeu_ps(sig + i, s);
        _mm256_storeu_ps(y + i, _mm256_mul_ps(v, s));
    }
    silu_ref(x + i, y + i, sig + i, n - i);
}

}  // namespace

const KernelTable kAvx2Table{Isa::Avx2, &gemm_f32, &gemm_f64, &sum_sq_f32, &dot_f32, &silu_f32};

}  // namespace antic::kernels::detail

#endif
