#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation and, where the build and CPU allow it, SIMD variants
// (AVX2+FMA on x86-64, NEON on AArch64). The variant is picked once at
// first use; ANTIC_SIMD=scalar|avx2|neon in the environment overrides it.
//
// Results across variants agree to floating-point reassociation only, so
// bit-exact replay of a compressed chain requires the same variant on both
// ends (`antic compress` records it in the report).

#include <cstddef>
#include <span>
#include <string_view>
#include <type_traits>
#include <vector>

namespace antic::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
    Isa isa;

    /// C[m x n] = (accumulate ? C : 0) + A[m x k] * B[k x n], row-major with
    /// leading dimensions lda, ldb, ldc.
    void (*gemm_f32)(std::size_t m, std::size_t n, std::size_t k, const float* a,
                     std::size_t lda, const float* b, std::size_t ldb, float* c,
                     std::size_t ldc, bool accumulate);
    void (*gemm_f64)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                     std::size_t lda, const double* b, std::size_t ldb, double* c,
                     std::size_t ldc, bool accumulate);

    /// Sum of squares of float data accumulated in double.
    double (*sum_sq_f32)(const float* x, std::size_t n);
    /// Dot product of float data accumulated in double.
    double (*dot_f32)(const float* a, const float* b, std::size_t n);

    /// sig[i] = 1 / (1 + exp(-x[i])), y[i] = x[i] * sig[i]. SIMD variants use a
    /// polynomial exp accurate to a few ulp.
    void (*silu_f32)(const float* x, float* y, float* sig, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
/// nullptr when the variant is not compiled in or the CPU lacks it.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

/// Every variant usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

/// The variant used by the library.
const KernelTable& active() noexcept;

/// Replace the active variant (tests and benchmarks). Not thread-safe with
/// concurrent kernel calls.
void set_active(const KernelTable& table) noexcept;

template <class T>
inline void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
                 const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
    if constexpr (std::is_same_v<T, float>)
        active().gemm_f32(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
    else
        active().gemm_f64(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

inline void silu(const float* x, float* y, float* sig, std::size_t n) { active().silu_f32(x, y, sig, n); }

inline double sum_sq(std::span<const float> x) { return active().sum_sq_f32(x.data(), x.size()); }
inline double dot(std::span<const float> a, std::span<const float> b) {
    return active().dot_f32(a.data(), b.data(), a.size());
}

}  // namespace antic::kernels
