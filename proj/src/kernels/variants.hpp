#pragma once

#include <antic/kernels/kernels.hpp>

#include <cmath>

namespace antic::kernels::detail {

inline void silu_ref(const float* x, float* y, float* sig, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        sig[i] = s;
        y[i] = x[i] * s;
    }
}

extern const KernelTable kScalarTable;
#if defined(ANTIC_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(ANTIC_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif

}  // namespace antic::kernels::detail
