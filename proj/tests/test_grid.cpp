#include <antic/grid.hpp>
#include <antic/snapshot_io.hpp>

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"

using namespace antic;

TEST_CASE("snapshot invariants") {
    CHECK_THROWS_AS(Snapshot({1, 4}, std::vector<float>(4)), InvalidShapeError);
    CHECK_THROWS_AS(Snapshot({2, 2}, std::vector<float>(3)), ShapeMismatchError);
    CHECK_THROWS_AS(Snapshot({2, 2}, {0.f, NAN, 0.f, 0.f}), NumericInstabilityError);
    CHECK_THROWS_AS(Snapshot({2, 2}, {0.f, INFINITY, 0.f, 0.f}), NumericInstabilityError);
    CHECK_THROWS_AS(Snapshot({2, 2}, std::vector<float>(4), Domain{1, 1, 0, 1}), InvalidShapeError);
    const Snapshot s({2, 4}, std::vector<float>(8, 1.f), Domain{0, 2, 0, 1}, 3, 0.5);
    CHECK(s.dx() == doctest::Approx(0.5));
    CHECK(s.dy() == doctest::Approx(0.5));
    CHECK(s.timestep() == 3);
}

TEST_CASE("make_lattice") {
    SUBCASE("corners of a 2x2 grid, row-major") {
        const auto lat = make_lattice({2, 2});
        const std::vector<float> expect{-1, -1, 1, -1, -1, 1, 1, 1};
        CHECK(std::vector<float>(lat.points().begin(), lat.points().end()) == expect);
    }
    SUBCASE("3x3 centre is the origin") {
        const auto p = make_lattice({3, 3}).point(4);
        CHECK(p[0] == 0.0f);
        CHECK(p[1] == 0.0f);
    }
    SUBCASE("2x5 x coordinates") {
        const auto lat = make_lattice({2, 5});
        const float xs[] = {-1.f, -0.5f, 0.f, 0.5f, 1.f};
        for (std::size_t j = 0; j < 5; ++j) CHECK(lat.point(j)[0] == xs[j]);
    }
    SUBCASE("bad shapes") {
        CHECK_THROWS_AS(make_lattice({1, 5}), InvalidShapeError);
        CHECK_THROWS_AS(make_lattice({5, 0}), InvalidShapeError);
    }
    SUBCASE("size, bounds, determinism across shapes") {
        for (std::size_t h = 2; h < 40; h += 5)
            for (std::size_t w = 2; w < 70; w += 7) {
                const auto a = make_lattice({h, w});
                const auto b = make_lattice({h, w});
                REQUIRE(a.size() == h * w);
                CHECK(std::equal(a.points().begin(), a.points().end(), b.points().begin()));
                for (float v : a.points()) CHECK((v >= -1.f && v <= 1.f));
                CHECK(a.point(h * w - 1)[0] == 1.f);
                CHECK(a.point(h * w - 1)[1] == 1.f);
                CHECK(a.point(0)[0] == -1.f);
            }
    }
}

TEST_CASE("pearson") {
    Rng rng(7);
    const auto a = testing::random_snapshot(rng, 8, 8);
    std::vector<float> neg(a.values().begin(), a.values().end());
    for (float& v : neg) v = -v;
    CHECK(pearson(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson(a, Snapshot(a.shape(), neg)) == doctest::Approx(-1.0).epsilon(1e-12));

    const Snapshot x({2, 2}, {1, 2, 3, 4}), y({2, 2}, {2, 4, 5, 9});
    // cov 11, variances 5 and 26.
    CHECK(pearson(x, y) == doctest::Approx(11.0 / std::sqrt(130.0)).epsilon(1e-12));

    CHECK_THROWS_AS(pearson(a, testing::random_snapshot(rng, 4, 16)), ShapeMismatchError);
    CHECK_THROWS_AS(pearson(a, testing::filled(8, 8, 2.f)), DegenerateInputError);
}

TEST_CASE("pearson properties over random fields") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t h = 2 + rng.below(10), w = 2 + rng.below(10);
        const auto a = testing::random_snapshot(rng, h, w);
        const auto b = testing::random_snapshot(rng, h, w);
        const double r = pearson(a, b);
        CHECK(std::abs(r) <= 1.0);
        // Positive affine maps in double precision leave the value unchanged
        // up to float rounding of the transformed samples.
        const float scale = static_cast<float>(rng.uniform(0.5, 4.0));
        const float shift = static_cast<float>(rng.uniform(-3.0, 3.0));
        std::vector<float> t(a.values().begin(), a.values().end());
        for (float& v : t) v = scale * v + shift;
        CHECK(pearson(Snapshot(a.shape(), t), b) == doctest::Approx(r).epsilon(1e-5));
    }
}

TEST_CASE("rel_l2 and mae") {
    const std::vector<float> truth{3, 4}, recon{3, 5};
    CHECK(rel_l2(recon, truth) == doctest::Approx(0.2));
    CHECK(mean_abs_error(recon, truth) == doctest::Approx(0.5));
    CHECK_THROWS_AS(rel_l2(std::vector<float>{1}, truth), ShapeMismatchError);
}

TEST_CASE("trajectory invariants") {
    std::vector<Snapshot> good{testing::filled(2, 2, 1, 0), testing::filled(2, 2, 1, 2)};
    VectorSource src(good);
    CheckedTrajectory t(src);
    CHECK(collect(t).size() == 2);
    CHECK(t.pulled() == 2);

    SUBCASE("must start at 0") {
        VectorSource s({testing::filled(2, 2, 1, 1)});
        CheckedTrajectory c(s);
        CHECK_THROWS_AS(c.next(), FormatError);
    }
    SUBCASE("strictly increasing") {
        VectorSource s({testing::filled(2, 2, 1, 0), testing::filled(2, 2, 1, 0)});
        CheckedTrajectory c(s);
        c.next();
        CHECK_THROWS_AS(c.next(), FormatError);
    }
    SUBCASE("one shape") {
        VectorSource s({testing::filled(2, 2, 1, 0), testing::filled(2, 3, 1, 1)});
        CheckedTrajectory c(s);
        c.next();
        CHECK_THROWS_AS(c.next(), ShapeMismatchError);
    }
}

TEST_CASE("snapshot file format") {
    Rng rng(3);
    const auto s = testing::random_snapshot(rng, 5, 7, Domain{-1, 2, 0.5, 4}, 42);
    std::stringstream buf;
    write_snapshot(buf, s);
    CHECK(buf.str().size() == 62 + 4 * 35);
    CHECK(buf.str().substr(0, 4) == "ANTC");
    const auto back = read_snapshot(buf);
    REQUIRE(back);
    CHECK(back->shape() == s.shape());
    CHECK(back->domain() == s.domain());
    CHECK(back->timestep() == 42);
    CHECK(std::equal(s.values().begin(), s.values().end(), back->values().begin()));
    CHECK_FALSE(read_snapshot(buf));

    std::stringstream bad("XXXX0000000000000000000000000000000000000000000000000000000000000000");
    CHECK_THROWS_AS(read_snapshot(bad), FormatError);
    std::stringstream trunc(buf.str().substr(0, 10));
    CHECK_THROWS_AS(read_snapshot(trunc), FormatError);
}

TEST_CASE("csv import") {
    std::istringstream in("1,2,3\n4,5,6\n");
    const auto s = read_snapshot_csv(in);
    CHECK(s.rows() == 2);
    CHECK(s.cols() == 3);
    CHECK(s.at(1, 2) == 6.f);
    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS_AS(read_snapshot_csv(ragged), FormatError);
}

TEST_CASE("file source over a directory and a concatenated file") {
    testing::TempDir dir("grid");
    Rng rng(5);
    std::vector<Snapshot> snaps;
    for (std::uint64_t t = 0; t < 4; ++t) snaps.push_back(testing::random_snapshot(rng, 3, 3, {}, t));
    for (const auto& s : snaps) save_snapshot(dir.path() / snapshot_filename(s.timestep()), s);
    FileSource src(dir.path());
    CHECK(src.length_hint() == 4);
    const auto got = collect(src);
    REQUIRE(got.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(got[i].timestep() == i);

    const auto file = dir.path() / "all.bin";
    {
        std::ofstream out(file, std::ios::binary);
        for (const auto& s : snaps) write_snapshot(out, s);
    }
    FileSource one(file);
    CHECK(collect(one).size() == 4);
}
