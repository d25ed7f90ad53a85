#include <antic/codec.hpp>

#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "support.hpp"

using namespace antic;

namespace {

nf::NfArchitecture random_arch(Rng& rng) {
    nf::NfArchitecture a;
    a.hidden_dim = 2 + rng.below(7);
    a.n_layers = 1 + rng.below(3);
    a.ffm_dim = 2 * (1 + rng.below(4));
    a.ffm_frequency = rng.uniform(0.5, 9.0);
    return a;
}

// Random bit patterns restricted to finite floats, including subnormals and
// signed zeros.
float random_finite(Rng& rng) {
    for (;;) {
        const auto bits = static_cast<std::uint32_t>(rng.next_u64());
        const float f = std::bit_cast<float>(bits);
        if (std::isfinite(f)) return f;
    }
}

template <class Tensors>
void scramble(Tensors&& ts, Rng& rng) {
    for (auto t : ts)
        for (float& v : t) v = random_finite(rng);
}

template <class A, class B>
bool bit_equal(const A& a, const B& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) return false;
        if (!a[i].empty() && std::memcmp(a[i].data(), b[i].data(), a[i].size() * sizeof(float)) != 0) return false;
    }
    return true;
}

UpdateRecord random_record(Rng& rng, UpdateKind kind) {
    const auto arch = random_arch(rng);
    const std::uint64_t ts = rng.next_u64() >> rng.below(64);
    auto p = nf::init_params<float>(arch, rng.next_u64());
    scramble(p.tensors(), rng);
    switch (kind) {
        case UpdateKind::BaseFull: return make_base(p, ts);
        case UpdateKind::FullDelta: {
            auto q = p;
            scramble(q.trainable(), rng);
            auto d = make_delta(p, q, ts);
            scramble(d.weights.trainable(), rng);
            return d;
        }
        case UpdateKind::LoraPair: {
            const std::size_t maxr = std::max<std::size_t>(1, std::min(arch.hidden_dim, arch.ffm_dim) / 2);
            auto ad = nf::init_adapter<float>(arch, 1 + rng.below(maxr), rng.next_u64());
            scramble(ad.tensors(), rng);
            return make_lora(arch, ad, ts);
        }
    }
    return make_base(p, ts);
}

}  // namespace

TEST_CASE("roundtrip is bit-exact for every kind") {
    Rng rng(31337);
    for (int i = 0; i < 1000; ++i) {
        const auto kind = static_cast<UpdateKind>(i % 3);
        const auto rec = random_record(rng, kind);
        const auto enc = serialize_update(rec);
        CHECK(enc.kind == kind);
        CHECK(enc.timestep == rec.timestep);
        CHECK(enc.stored_bytes() == enc.payload.size());
        CHECK(enc.param_count == rec.param_count());
        const auto dec = deserialize_update(enc.payload);
        CHECK(dec.kind == rec.kind);
        CHECK(dec.timestep == rec.timestep);
        CHECK(dec.arch() == rec.arch());
        if (kind == UpdateKind::LoraPair) {
            CHECK(dec.adapter.rank == rec.adapter.rank);
            CHECK(bit_equal(dec.adapter.tensors(), rec.adapter.tensors()));
        } else {
            CHECK(bit_equal(dec.weights.tensors(), rec.weights.tensors()));
        }
        CHECK(serialize_update(dec).payload == enc.payload);
    }
}

TEST_CASE("non-finite values are refused") {
    Rng rng(1);
    for (float bad : {std::numeric_limits<float>::infinity(), -std::numeric_limits<float>::infinity(),
                      std::numeric_limits<float>::quiet_NaN()}) {
        auto rec = random_record(rng, UpdateKind::BaseFull);
        rec.weights.head.bias[0] = bad;
        CHECK_THROWS_AS(serialize_update(rec), FormatError);
        auto lora = random_record(rng, UpdateKind::LoraPair);
        lora.adapter.factors[0].a[0] = bad;
        CHECK_THROWS_AS(serialize_update(lora), FormatError);
    }
}

TEST_CASE("malformed input is rejected") {
    Rng rng(2);
    const auto enc = serialize_update(random_record(rng, UpdateKind::FullDelta));
    auto bytes = enc.payload;
    CHECK_THROWS_AS(deserialize_update(std::span(bytes).first(bytes.size() - 1)), FormatError);
    CHECK_THROWS_AS(deserialize_update(std::span(bytes).first(10)), FormatError);
    bytes.push_back(0);
    CHECK_THROWS_AS(deserialize_update(bytes), FormatError);
    bytes = enc.payload;
    bytes[0] = 'X';
    CHECK_THROWS_AS(deserialize_update(bytes), FormatError);
    bytes = enc.payload;
    bytes[4] = 9;
    CHECK_THROWS_AS(deserialize_update(bytes), FormatError);
    bytes = enc.payload;
    bytes[6] = 7;  // kind
    CHECK_THROWS_AS(deserialize_update(bytes), FormatError);
}

TEST_CASE("update sizes") {
    const nf::NfArchitecture def;
    const auto p = nf::init_params<float>(def, 0);
    const auto base = serialize_update(make_base(p, 0));
    const auto delta = serialize_update(make_delta(p, p, 1));
    CHECK(base.param_count == nf::param_count(def));
    CHECK(delta.param_count == nf::param_count(def));
    // About 1.5 MiB of float32 for the 0.4M parameters.
    CHECK(std::abs(double(delta.stored_bytes()) / (1 << 20) - 1.5) < 0.1);

    std::size_t prev = 0;
    for (std::size_t r : {1, 2, 4, 8, 16, 32, 64, 128}) {
        const auto u = serialize_update(make_lora(def, nf::init_adapter<float>(def, r, 1), 2));
        CHECK(u.param_count == nf::adapter_count(def, r));
        CHECK(u.stored_bytes() > prev);
        prev = u.stored_bytes();
        if (r == 8) CHECK(std::abs(double(u.stored_bytes()) / 1024 - 98) < 2);
    }
}

TEST_CASE("delta application is exact on canonical weights") {
    Rng rng(3);
    const nf::NfArchitecture arch = random_arch(rng);
    auto prev = nf::init_params<float>(arch, 1), cur = nf::init_params<float>(arch, 2);
    const auto d = make_delta(prev, cur, 1);
    const auto canon = apply_delta(prev, d.weights);
    CHECK(bit_equal(apply_update(&prev, deserialize_update(serialize_update(d).payload)).tensors(), canon.tensors()));
    for (float v : d.weights.ffm) CHECK(v == 0.f);
    CHECK(bit_equal(canon.tensors()[0].size() ? std::vector{canon.tensors()[0]} : std::vector<std::span<const float>>{},
                    std::vector{prev.tensors()[0]}));
    CHECK_THROWS(apply_update(nullptr, d));
}

TEST_CASE("compression report") {
    SUBCASE("single update stored at raw size") {
        const std::vector<std::uint64_t> sizes{1000};
        const std::vector<UpdateKind> kinds{UpdateKind::BaseFull};
        const auto r = compression_report(1000, sizes, kinds, 1, 1);
        CHECK(r.sc == 1.0);
        CHECK(r.tc == 1.0);
        CHECK(r.tr == 1.0);
        CHECK(r.tc_amortized == r.tc);
    }
    SUBCASE("dense full retention") {
        const std::uint64_t raw = 17ull << 20, stored = 392ull << 10;
        const std::vector<std::uint64_t> sizes(40, stored);
        const std::vector<UpdateKind> kinds(40, UpdateKind::FullDelta);
        const auto r = compression_report(raw, sizes, kinds, 40, 40);
        CHECK(r.sc == doctest::Approx(44.408).epsilon(1e-4));
        CHECK(r.tc == r.sc);
    }
    SUBCASE("tc is raw total over stored total") {
        Rng rng(4);
        for (int i = 0; i < 200; ++i) {
            const std::size_t T = 1 + rng.below(500);
            const std::size_t n = 1 + rng.below(T);
            std::vector<std::uint64_t> sizes(n);
            std::vector<UpdateKind> kinds(n, UpdateKind::FullDelta);
            kinds[0] = UpdateKind::BaseFull;
            std::uint64_t total = 0, deltas = 0;
            for (std::size_t k = 0; k < n; ++k) {
                sizes[k] = 1 + rng.below(1 << 20);
                total += sizes[k];
                if (k) deltas += sizes[k];
            }
            const std::uint64_t raw = 1 + rng.below(1 << 24);
            const auto r = compression_report(raw, sizes, kinds, T, n);
            CHECK(r.stored_total == total);
            CHECK(r.delta_total == deltas);
            CHECK(r.tc == double(raw) * double(T) / double(total));
            CHECK(r.tr == double(n) / double(T));
            if (n > 1) CHECK(r.tc_amortized == double(raw) * double(T) / double(deltas));
            else CHECK(r.tc_amortized == r.tc);
            CHECK(r.sc == double(raw) / (double(total) / double(n)));
        }
    }
    SUBCASE("equal sizes give tc = sc / tr") {
        const std::vector<std::uint64_t> sizes(37, 4096);
        const std::vector<UpdateKind> kinds(37, UpdateKind::LoraPair);
        const auto r = compression_report(1 << 20, sizes, kinds, 100, 37);
        CHECK(r.tc == doctest::Approx(r.sc / r.tr).epsilon(1e-15));
    }
    SUBCASE("errors") {
        const std::vector<std::uint64_t> none, zero{0};
        const std::vector<UpdateKind> k0, k1{UpdateKind::BaseFull};
        CHECK_THROWS_AS(compression_report(10, none, k0, 5, 0), ConfigError);
        CHECK_THROWS_AS(compression_report(10, zero, k1, 5, 1), ConfigError);
        const std::vector<std::uint64_t> one{5};
        CHECK_THROWS_AS(compression_report(10, one, k1, 1, 2), ConfigError);
    }
    SUBCASE("from encoded updates") {
        Rng rng(5);
        std::vector<CompressedUpdate> us;
        for (int i = 0; i < 5; ++i) us.push_back(serialize_update(random_record(rng, static_cast<UpdateKind>(i % 3))));
        std::uint64_t total = 0;
        for (const auto& u : us) total += u.stored_bytes();
        const auto r = compression_report(4096, us, 10, 5);
        CHECK(r.stored_total == total);
    }
}

TEST_CASE("lora accounting makes sc fall as rank grows") {
    const nf::NfArchitecture def;
    const std::uint64_t raw = 4ull * 256 * 256;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t r : {1, 2, 4, 8, 16, 32}) {
        const std::vector<std::uint64_t> sizes{serialize_update(make_lora(def, nf::init_adapter<float>(def, r, 0), 1)).stored_bytes()};
        const std::vector<UpdateKind> kinds{UpdateKind::LoraPair};
        const double sc = compression_report(raw, sizes, kinds, 1, 1).sc;
        CHECK(sc < prev);
        prev = sc;
    }
}

TEST_CASE("file roundtrip") {
    testing::TempDir dir("codec");
    Rng rng(6);
    const auto rec = random_record(rng, UpdateKind::LoraPair);
    const auto enc = serialize_update(rec);
    const auto path = dir.path() / update_filename(rec.timestep % 1000);
    save_update(path, enc);
    CHECK(std::filesystem::file_size(path) == enc.stored_bytes());
    CHECK(serialize_update(load_update(path)).payload == enc.payload);
    CHECK(update_filename(42) == "update_000042.antw");
    CHECK_THROWS_AS(load_update(dir.path() / "missing.antw"), FormatError);
}

TEST_CASE("quantize and deflate baseline") {
    Rng rng(7);
    const auto noise = testing::random_snapshot(rng, 64, 64);
    const auto lossless = baseline_quantize_deflate(noise, 23);
    CHECK(lossless.rel_l2 == 0.0);
    CHECK(baseline_inflate(lossless.bytes, noise.size()) == std::vector<float>(noise.values().begin(), noise.values().end()));

    const auto flat = baseline_quantize_deflate(testing::filled(64, 64, 1.2345f), 23);
    CHECK(double(flat.bytes.size()) < 0.01 * double(flat.raw_bytes));

    CHECK(baseline_quantize_deflate(noise, 10).ratio() < 4.0);

    double prev = std::numeric_limits<double>::infinity();
    for (int bits = 1; bits <= 23; ++bits) {
        const auto q = baseline_quantize_deflate(noise, bits);
        CHECK(q.rel_l2 <= prev);
        CHECK(baseline_inflate(q.bytes, noise.size()).size() == noise.size());
        prev = q.rel_l2;
    }
    CHECK_THROWS_AS(baseline_quantize_deflate(noise, 0), ConfigError);
    CHECK_THROWS_AS(baseline_quantize_deflate(noise, 24), ConfigError);
}
