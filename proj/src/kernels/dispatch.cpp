#include "variants.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace antic::kernels {

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

const KernelTable& scalar_table() noexcept { return detail::kScalarTable; }

const KernelTable* avx2_table() noexcept {
#if defined(ANTIC_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &detail::kAvx2Table : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* neon_table() noexcept {
#if defined(ANTIC_HAVE_NEON)
    return &detail::kNeonTable;
#else
    return nullptr;
#endif
}

std::vector<const KernelTable*> available_tables() {
    std::vector<const KernelTable*> out{&scalar_table()};
    if (auto* t = avx2_table()) out.push_back(t);
    if (auto* t = neon_table()) out.push_back(t);
    return out;
}

namespace {

const KernelTable* pick_default() noexcept {
    const char* env = std::getenv("ANTIC_SIMD");
    const std::string_view want = env ? env : "";
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx2_table()) return avx2_table();
    if (want == "neon" && neon_table()) return neon_table();
    if (auto* t = avx2_table()) return t;
    if (auto* t = neon_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& slot() noexcept {
    static std::atomic<const KernelTable*> s{pick_default()};
    return s;
}

}  // namespace

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

void set_active(const KernelTable& table) noexcept {
    slot().store(&table, std::memory_order_relaxed);
}

}  // namespace antic::kernels
