#include <antic/datagen.hpp>
#include <antic/metrics.hpp>

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace antic;

namespace {

Snapshot sin_sin(std::size_t n) {
    std::vector<float> v(n * n);
    const double h = 2 * std::numbers::pi / n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            v[i * n + j] = static_cast<float>(std::sin((j + 0.5) * h) * std::sin((i + 0.5) * h));
    return Snapshot({n, n}, v, periodic_box());
}

// Independent quadrature: integrate 1/2 w^2 over one fine grid in double
// from the closed form, no float storage.
double fine_quadrature(std::size_t n) {
    const double h = 2 * std::numbers::pi / n;
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double w = std::sin((j + 0.5) * h) * std::sin((i + 0.5) * h);
            s += w * w;
        }
    return 0.5 * s * h * h;
}

}  // namespace

TEST_CASE("enstrophy") {
    CHECK(enstrophy(testing::filled(8, 8, 0.f)) == 0.0);
    const double expect = std::numbers::pi * std::numbers::pi / 2;
    CHECK(std::abs(enstrophy(sin_sin(128)) - expect) < 1e-3);
    CHECK(std::abs(fine_quadrature(1024) - expect) < 1e-9);

    Rng rng(1);
    const auto s = testing::random_snapshot(rng, 9, 13);
    std::vector<float> twice(s.values().begin(), s.values().end());
    for (float& v : twice) v *= 2;
    CHECK(enstrophy(Snapshot(s.shape(), twice)) == 4 * enstrophy(s));
}

TEST_CASE("enstrophy is additive over disjoint subdomains") {
    Rng rng(2);
    const auto s = testing::random_snapshot(rng, 8, 8, Domain{0, 4, 0, 2});
    const auto v = s.values();
    std::vector<float> left, right;
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) (j < 4 ? left : right).push_back(v[i * 8 + j]);
    const double a = enstrophy(Snapshot({8, 4}, left, Domain{0, 2, 0, 2}));
    const double b = enstrophy(Snapshot({8, 4}, right, Domain{2, 4, 0, 2}));
    CHECK(a + b == doctest::Approx(enstrophy(s)).epsilon(1e-12));
    CHECK(enstrophy(s) >= 0.0);
}

TEST_CASE("enstrophy_diff") {
    const ActivitySeries s{{1, 3, 2}, "e"};
    CHECK(enstrophy_diff(s, 1) == 2.0);
    CHECK(enstrophy_diff(s, 2) == 1.0);
    CHECK_THROWS_AS(enstrophy_diff(s, 0), IndexError);
    CHECK_THROWS_AS(enstrophy_diff(s, 3), IndexError);
    const ActivitySeries flat{{5, 5, 5, 5}, "e"};
    for (std::size_t t = 1; t < 4; ++t) CHECK(enstrophy_diff(flat, t) == 0.0);

    Rng rng(9);
    ActivitySeries r{{}, "e"};
    for (int i = 0; i < 100; ++i) r.values.push_back(rng.normal());
    for (std::size_t t = 1; t < r.size(); ++t) CHECK(enstrophy_diff(r, t) == std::abs(r.values[t] - r.values[t - 1]));
}

TEST_CASE("jensen-shannon") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = testing::random_snapshot(rng, 16, 16);
        const auto b = testing::random_snapshot(rng, 16, 16);
        CHECK(jensen_shannon(a.values(), a.values()) == 0.0);
        const double ab = jensen_shannon(a.values(), b.values());
        CHECK(ab == doctest::Approx(jensen_shannon(b.values(), a.values())).epsilon(1e-12));
        CHECK(ab >= 0.0);
        CHECK(ab <= std::log(2.0) + 1e-12);
    }
    // Disjoint supports reach ln 2.
    std::vector<float> lo(64, 0.f), hi(64, 1.f);
    CHECK(jensen_shannon(lo, hi) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(baseline_saliency(SaliencyKind::JSD, testing::filled(4, 4, 2.f), testing::filled(4, 4, 2.f)) == 0.0);
}

TEST_CASE("mutual information") {
    Rng rng(5);
    const auto a = testing::random_snapshot(rng, 32, 32);
    CHECK(normalized_mutual_info(a.values(), a.values()) == doctest::Approx(1.0).epsilon(1e-12));
    for (int trial = 0; trial < 20; ++trial) {
        const auto b = testing::random_snapshot(rng, 32, 32);
        const double mi = normalized_mutual_info(a.values(), b.values());
        CHECK(mi >= 0.0);
        CHECK(mi <= 1.0);
    }
    CHECK(normalized_mutual_info(a.values(), testing::filled(32, 32, 1.f).values()) == 0.0);
}

TEST_CASE("spectral entropy") {
    // A single Fourier mode occupies one folded bin.
    const std::size_t n = 32;
    std::vector<float> v(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            v[i * n + j] = static_cast<float>(std::cos(2 * std::numbers::pi * (3.0 * j + 5.0 * i) / n) + 0.25);
    const Snapshot mode({n, n}, v);
    const auto power = folded_power_spectrum(mode);
    double total = 0, peak = 0;
    for (double p : power) {
        total += p;
        peak = std::max(peak, p);
    }
    CHECK(peak / total > 1 - 1e-9);
    CHECK(std::abs(spectral_entropy(mode)) < 1e-9);
    // Folding: (H*W - 1) non-DC bins pair up except the self-conjugate ones.
    CHECK(power.size() == (n * n - 4) / 2 + 3);

    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const double h = spectral_entropy(testing::random_snapshot(rng, 8 + trial, 8));
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>((8 + trial) * 8)));
    }
    CHECK(spectral_entropy(testing::filled(8, 8, 3.f)) == 0.0);
}

TEST_CASE("residual entropy") {
    Rng rng(8);
    const auto a = testing::random_snapshot(rng, 16, 16);
    CHECK(residual_entropy(a.values(), a.values()) == 0.0);
    // Residual of uniform noise on [0, 1): differential entropy near 0.
    std::vector<float> zero(20000, 0.f), u(20000);
    for (float& x : u) x = static_cast<float>(rng.uniform());
    CHECK(std::abs(residual_entropy(zero, u)) < 0.05);
    // Gaussian sd 1: 0.5 ln(2 pi e) = 1.4189.
    std::vector<float> g(20000);
    for (float& x : g) x = static_cast<float>(rng.normal());
    CHECK(residual_entropy(zero, g) == doctest::Approx(0.5 * std::log(2 * std::numbers::pi * std::exp(1.0))).epsilon(0.02));
}

TEST_CASE("momentum keeps caller state") {
    MomentumState st;
    const auto a = testing::filled(4, 4, 0.f), b = testing::filled(4, 4, 1.f);
    CHECK(baseline_saliency(SaliencyKind::Momentum, a, b, &st) == doctest::Approx(1.0));
    CHECK(baseline_saliency(SaliencyKind::Momentum, a, a, &st) == doctest::Approx(0.9));
    CHECK(baseline_saliency(SaliencyKind::Momentum, a, a, &st) == doctest::Approx(0.81));
    CHECK_THROWS_AS(baseline_saliency(SaliencyKind::Momentum, a, b), ConfigError);
}

TEST_CASE("saliency kinds") {
    for (SaliencyKind k : kAllSaliencyKinds) CHECK(parse_saliency_kind(to_string(k)) == k);
    CHECK(parse_saliency_kind("JSD") == SaliencyKind::JSD);
    CHECK_THROWS_AS(parse_saliency_kind("nope"), ConfigError);
    CHECK(is_physics_metric(SaliencyKind::Enstrophy));
    CHECK_FALSE(is_physics_metric(SaliencyKind::MutualInfo));
    CHECK_THROWS_AS(physics_metric(SaliencyKind::JSD, testing::filled(2, 2, 1)), ConfigError);
    CHECK_THROWS_AS(baseline_saliency(SaliencyKind::JSD, testing::filled(2, 2, 1), testing::filled(2, 3, 1)),
                    ShapeMismatchError);
}

TEST_CASE("metrics are deterministic") {
    Rng rng(10);
    const auto a = testing::random_snapshot(rng, 12, 12), b = testing::random_snapshot(rng, 12, 12);
    for (SaliencyKind k : kAllSaliencyKinds) {
        MomentumState s1, s2;
        CHECK(baseline_saliency(k, a, b, &s1) == baseline_saliency(k, a, b, &s2));
    }
}
