#include <antic/kernels/kernels.hpp>
#include <antic/rng.hpp>

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace antic;
using namespace antic::kernels;

namespace {

template <class T>
std::vector<T> randv(Rng& rng, std::size_t n) {
    std::vector<T> v(n);
    for (T& x : v) x = static_cast<T>(rng.normal());
    return v;
}

// Triple loop in long double, independent of every kernel table.
template <class T>
std::vector<long double> naive(std::size_t m, std::size_t n, std::size_t k, const std::vector<T>& a,
                               const std::vector<T>& b, const std::vector<T>& c0, bool acc) {
    std::vector<long double> c(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            long double s = acc ? c0[i * n + j] : 0;
            for (std::size_t p = 0; p < k; ++p) s += static_cast<long double>(a[i * k + p]) * b[p * n + j];
            c[i * n + j] = s;
        }
    return c;
}

}  // namespace

TEST_CASE("scalar table is always available and listed first") {
    const auto tables = available_tables();
    REQUIRE(!tables.empty());
    CHECK(tables.front()->isa == Isa::Scalar);
    CHECK(isa_name(Isa::Avx2) == "avx2");
}

TEST_CASE("gemm variants agree with a long-double reference") {
    Rng rng(1);
    const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 16, 8},  {17, 33, 9},
                                     {64, 64, 64}, {5, 1, 300}, {1, 300, 5}, {130, 7, 65}};
    for (const KernelTable* t : available_tables()) {
        CAPTURE(isa_name(t->isa));
        for (const auto& s : shapes) {
            const std::size_t m = s[0], n = s[1], k = s[2];
            const auto a = randv<float>(rng, m * k), b = randv<float>(rng, k * n), c0 = randv<float>(rng, m * n);
            for (bool acc : {false, true}) {
                auto c = c0;
                t->gemm_f32(m, n, k, a.data(), k, b.data(), n, c.data(), n, acc);
                const auto ref = naive(m, n, k, a, b, c0, acc);
                for (std::size_t i = 0; i < m * n; ++i)
                    CHECK(std::abs(c[i] - static_cast<double>(ref[i])) <= 1e-4 * (1 + std::sqrt(double(k))));
            }
            const auto ad = randv<double>(rng, m * k), bd = randv<double>(rng, k * n);
            std::vector<double> cd(m * n, 0.0);
            t->gemm_f64(m, n, k, ad.data(), k, bd.data(), n, cd.data(), n, false);
            const auto refd = naive(m, n, k, ad, bd, cd, false);
            for (std::size_t i = 0; i < m * n; ++i) CHECK(std::abs(cd[i] - static_cast<double>(refd[i])) <= 1e-12 * (1 + k));
        }
    }
}

TEST_CASE("gemm honours leading dimensions") {
    Rng rng(2);
    for (const KernelTable* t : available_tables()) {
        // 3x4 window inside 5x9 storage.
        auto a = randv<float>(rng, 3 * 6), b = randv<float>(rng, 6 * 9);
        std::vector<float> c(5 * 9, 7.f);
        t->gemm_f32(3, 4, 5, a.data(), 6, b.data(), 9, c.data(), 9, false);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 9; ++j) {
                if (j >= 4) {
                    CHECK(c[i * 9 + j] == 7.f);
                    continue;
                }
                double s = 0;
                for (std::size_t p = 0; p < 5; ++p) s += double(a[i * 6 + p]) * b[p * 9 + j];
                CHECK(c[i * 9 + j] == doctest::Approx(s).epsilon(1e-5));
            }
        for (std::size_t i = 3; i < 5; ++i)
            for (std::size_t j = 0; j < 9; ++j) CHECK(c[i * 9 + j] == 7.f);
    }
}

TEST_CASE("reductions match across variants") {
    Rng rng(3);
    for (std::size_t n : {0ul, 1ul, 7ul, 8ul, 31ul, 1000ul, 4099ul}) {
        const auto x = randv<float>(rng, n), y = randv<float>(rng, n);
        long double ss = 0, dp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            ss += static_cast<long double>(x[i]) * x[i];
            dp += static_cast<long double>(x[i]) * y[i];
        }
        for (const KernelTable* t : available_tables()) {
            CHECK(t->sum_sq_f32(x.data(), n) == doctest::Approx(static_cast<double>(ss)).epsilon(1e-12));
            CHECK(t->dot_f32(x.data(), y.data(), n) == doctest::Approx(static_cast<double>(dp)).epsilon(1e-10));
        }
    }
}

TEST_CASE("silu matches a double-precision evaluation on every variant") {
    Rng rng(4);
    std::vector<float> x;
    for (float v : {0.f, -0.f, 1e-30f, -1e-30f, 87.f, -87.f, 100.f, -100.f, 1e30f, -1e30f}) x.push_back(v);
    for (int i = 0; i < 5000; ++i) x.push_back(static_cast<float>(rng.normal(0.0, 6.0)));
    const std::size_t n = x.size();
    for (const KernelTable* t : available_tables()) {
        CAPTURE(isa_name(t->isa));
        std::vector<float> y(n), s(n);
        t->silu_f32(x.data(), y.data(), s.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            const double sd = 1.0 / (1.0 + std::exp(-double(x[i])));
            CHECK(std::abs(s[i] - sd) <= 4e-7 * sd + 2e-38);
            CHECK(std::abs(y[i] - double(x[i]) * sd) <= 4e-7 * std::abs(double(x[i]) * sd) + 1e-37);
        }
    }
}

TEST_CASE("set_active switches the dispatched variant") {
    const KernelTable& before = active();
    for (const KernelTable* t : available_tables()) {
        set_active(*t);
        CHECK(active().isa == t->isa);
        const std::vector<float> v{3, 4};
        CHECK(sum_sq(v) == 25.0);
    }
    set_active(before);
}
