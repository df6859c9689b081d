#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "etpa/dataset.hpp"
#include "etpa/errors.hpp"

using namespace etpa;
using namespace etpa::data;

namespace {

GeneratorConfig small_config(int per_class = 6) {
    GeneratorConfig c;
    c.per_class = per_class;
    c.n_samples = 64;
    c.seed = 99;
    return c;
}

bool on_grid(double value, const std::vector<double>& grid) {
    return std::find(grid.begin(), grid.end(), value) != grid.end();
}

} // namespace

TEST_CASE("level grid") {
    auto g1 = level_grid({835.0, 845.0, 1.0});
    REQUIRE(g1.size() == 11);
    CHECK(g1.front() == 835.0);
    CHECK(g1.back() == 845.0);
    CHECK(g1[3] == 838.0);
    CHECK(level_grid({835.0, 845.0, 0.5}).size() == 21);
    const auto g3 = level_grid({820.0, 860.0, 0.1});
    CHECK(g3.size() == 401);
    CHECK(g3.back() == 860.0);
    for (std::size_t i = 1; i < g3.size(); ++i)
        CHECK(g3[i] - g3[i - 1] == doctest::Approx(0.1).epsilon(1e-9));

    CHECK_THROWS_AS(level_grid({835.0, 845.0, 0.3}), ValidationError);
    CHECK_THROWS_AS(level_grid({845.0, 835.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(level_grid({835.0, 845.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(level_grid({835.0, 845.0, -1.0}), ValidationError);
}

TEST_CASE("sample system") {
    const LevelBand band{835.0, 845.0, 1.0};
    const auto grid = level_grid(band);

    SUBCASE("one level") {
        Rng rng(1);
        const auto s = sample_system(band, 1, rng);
        REQUIRE(s.level_count() == 1);
        CHECK(on_grid(s.level_wavelengths[0], grid));
        CHECK(s.dipole_products == std::vector<double>{1.0});
    }

    SUBCASE("four distinct sorted grid levels") {
        Rng rng(2);
        for (int i = 0; i < 200; ++i) {
            const auto s = sample_system(band, 4, rng);
            REQUIRE(s.level_count() == 4);
            CHECK(std::is_sorted(s.level_wavelengths.begin(), s.level_wavelengths.end()));
            for (std::size_t j = 1; j < 4; ++j)
                CHECK(s.level_wavelengths[j] - s.level_wavelengths[j - 1] >= 1.0 - 1e-9);
            for (double w : s.level_wavelengths) CHECK(on_grid(w, grid));
        }
    }

    SUBCASE("deterministic for a fixed seed") {
        Rng a(77), b(77);
        CHECK(sample_system(band, 3, a) == sample_system(band, 3, b));
    }

    SUBCASE("every grid point is reachable") {
        Rng rng(5);
        std::set<double> seen;
        for (int i = 0; i < 500; ++i)
            seen.insert(sample_system(band, 1, rng).level_wavelengths[0]);
        CHECK(seen.size() == grid.size());
    }

    SUBCASE("too many levels for the grid") {
        Rng rng(1);
        CHECK_THROWS_AS(sample_system({835.0, 837.0, 1.0}, 4, rng), ValidationError);
        CHECK_THROWS_AS(sample_system(band, 5, rng), ValidationError);
        CHECK_THROWS_AS(sample_system(band, 0, rng), ValidationError);
    }
}

TEST_CASE("generate dataset") {
    SUBCASE("class balance and labels") {
        const auto d = generate_dataset(small_config(6));
        REQUIRE(d.size() == 24);
        std::array<int, 4> counts{};
        for (const auto& r : d.records) {
            REQUIRE(r.class_index >= 1);
            REQUIRE(r.class_index <= 4);
            ++counts[static_cast<std::size_t>(r.class_index - 1)];
            CHECK(r.features.size() == 64);
            for (double v : r.features) CHECK(v >= 0.0);
        }
        CHECK(counts == std::array<int, 4>{6, 6, 6, 6});
    }

    SUBCASE("one per class") {
        const auto d = generate_dataset(small_config(1));
        REQUIRE(d.size() == 4);
        for (int k = 0; k < 4; ++k) CHECK(d.records[static_cast<std::size_t>(k)].class_index == k + 1);
    }

    SUBCASE("deterministic and independent of thread count") {
        const auto a = generate_dataset(small_config(8), 1);
        const auto b = generate_dataset(small_config(8), 1);
        const auto c = generate_dataset(small_config(8), 4);
        CHECK(a == b);
        CHECK(a == c);
        auto other = small_config(8);
        other.seed = 100;
        CHECK_FALSE(generate_dataset(other) == a);
    }

    SUBCASE("normalized mode peaks at one") {
        auto c = small_config(4);
        c.normalize = true;
        for (const auto& r : generate_dataset(c).records)
            CHECK(*std::max_element(r.features.begin(), r.features.end()) == 1.0);
    }

    SUBCASE("absolute mode is the normalized trace times its peak") {
        auto c = small_config(3);
        const auto raw = generate_dataset(c);
        c.normalize = true;
        const auto norm = generate_dataset(c);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const auto& x = raw.records[i].features;
            const double peak = *std::max_element(x.begin(), x.end());
            CHECK(peak > 1.0);
            for (std::size_t f = 0; f < x.size(); ++f)
                CHECK(x[f] / peak == doctest::Approx(norm.records[i].features[f]).epsilon(1e-15));
        }
    }

    SUBCASE("absolute level grows with the level count") {
        // coherent sum of k unit pathways: mean peak increases with k
        auto c = small_config(40);
        const auto d = generate_dataset(c);
        std::array<double, 4> mean_peak{};
        for (const auto& r : d.records)
            mean_peak[static_cast<std::size_t>(r.class_index - 1)] += *std::max_element(r.features.begin(), r.features.end()) / 40.0;
        CHECK(mean_peak[0] < mean_peak[1]);
        CHECK(mean_peak[1] < mean_peak[2]);
        CHECK(mean_peak[2] < mean_peak[3]);
    }

    SUBCASE("optional noise and random dipoles stay deterministic") {
        auto c = small_config(3);
        c.noise_sigma = 0.05;
        c.random_dipoles = true;
        const auto a = generate_dataset(c);
        CHECK(a == generate_dataset(c, 3));
        CHECK_FALSE(a == generate_dataset(small_config(3)));
        for (const auto& r : a.records)
            for (double v : r.features) CHECK(v >= 0.0);
    }

    SUBCASE("bad configs") {
        auto c = small_config();
        c.band.step = 0.3;
        CHECK_THROWS_AS(generate_dataset(c), ValidationError);
        c = small_config();
        c.band = {835.0, 837.0, 1.0};
        CHECK_THROWS_AS(generate_dataset(c), ValidationError);
        c = small_config();
        c.per_class = 0;
        CHECK_THROWS_AS(generate_dataset(c), ValidationError);
    }
}

TEST_CASE("one-hot encoding") {
    CHECK(one_hot_encode(1) == std::array<double, 4>{1, 0, 0, 0});
    CHECK(one_hot_encode(4) == std::array<double, 4>{0, 0, 0, 1});
    for (int k = 1; k <= 4; ++k) {
        const auto v = one_hot_encode(k);
        CHECK(v[0] + v[1] + v[2] + v[3] == 1.0);
    }
    CHECK_THROWS_AS(one_hot_encode(0), ValidationError);
    CHECK_THROWS_AS(one_hot_encode(5), ValidationError);
}

TEST_CASE("split") {
    auto count = [](const std::vector<Subset>& s, Subset which) {
        return std::count(s.begin(), s.end(), which);
    };

    Rng rng(3);
    const auto big = split_dataset(2000, {}, rng);
    CHECK(count(big, Subset::train) == 1400);
    CHECK(count(big, Subset::validation) == 300);
    CHECK(count(big, Subset::test) == 300);

    const auto hundred = split_dataset(100, {}, rng);
    CHECK(count(hundred, Subset::train) == 70);
    CHECK(count(hundred, Subset::validation) == 15);
    CHECK(count(hundred, Subset::test) == 15);

    // partition sizes for every n in a range
    for (std::size_t n = 20; n < 300; n += 7) {
        const auto s = split_dataset(n, {}, rng);
        REQUIRE(s.size() == n);
        const auto tr = static_cast<std::size_t>(count(s, Subset::train));
        const auto va = static_cast<std::size_t>(count(s, Subset::validation));
        CHECK(tr == static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(n) + 1e-9)));
        CHECK(va == static_cast<std::size_t>(std::floor(0.15 * static_cast<double>(n) + 1e-9)));
        CHECK(tr + va + static_cast<std::size_t>(count(s, Subset::test)) == n);
    }

    Rng a(9), b(9), c(10);
    CHECK(split_dataset(500, {}, a) == split_dataset(500, {}, b));
    CHECK_FALSE(split_dataset(500, {}, a) == split_dataset(500, {}, c));

    CHECK_THROWS_AS(split_dataset(19, {}, rng), ValidationError);
    CHECK_THROWS_AS(split_dataset(100, {0.5, 0.2, 0.2}, rng), ValidationError);
}

TEST_CASE("feature scaling") {
    Dataset d;
    d.records = {{{0.0, 3.0, 5.0}, 1}, {{1.0, 3.0, 9.0}, 2}, {{0.5, 3.0, 7.0}, 3}, {{4.0, -2.0, 100.0}, 4}};
    d.split = {Subset::train, Subset::train, Subset::train, Subset::test};

    const auto [scaled, s] = scale_features(d);
    CHECK(s.min == std::vector<double>{0.0, 3.0, 5.0});
    CHECK(s.max == std::vector<double>{1.0, 3.0, 9.0});
    CHECK(scaled(0, 0) == -1.0);
    CHECK(scaled(1, 0) == 1.0);
    CHECK(scaled(2, 0) == 0.0);
    // constant training column maps to zero, even for other subsets
    for (int r = 0; r < 4; ++r) CHECK(scaled(r, 1) == 0.0);
    // test rows may leave [-1, 1]
    CHECK(scaled(3, 0) == 7.0);

    SUBCASE("round trip") {
        for (int r = 0; r < 4; ++r)
            for (std::size_t f : {0u, 2u})
                CHECK(s.unscale(f, scaled(r, static_cast<Eigen::Index>(f))) ==
                      doctest::Approx(d.records[static_cast<std::size_t>(r)].features[f]).epsilon(1e-12));
    }

    SUBCASE("no leakage from non-training rows") {
        auto mutated = d;
        mutated.records[3].features = {-50.0, 80.0, 1e6};
        CHECK(fit_scaling(mutated) == s);
    }

    SUBCASE("requires a split") {
        Dataset unsplit;
        unsplit.records = d.records;
        CHECK_THROWS_AS(fit_scaling(unsplit), ValidationError);
    }

    SUBCASE("batch carries one-hot targets") {
        const std::vector<std::size_t> rows{3, 0};
        const auto b = make_batch(d, rows, s);
        CHECK(b.size() == 2);
        CHECK(b.labels == std::vector<int>{4, 1});
        CHECK(b.targets(0, 3) == 1.0);
        CHECK(b.targets.row(0).sum() == 1.0);
        CHECK(b.targets(1, 0) == 1.0);
        CHECK(b.features(1, 0) == -1.0);
    }
}

TEST_CASE("assign split fits scaling on the new training rows") {
    auto d = generate_dataset(small_config(10));
    Rng rng(4);
    assign_split(d, rng);
    REQUIRE(d.scaling.has_value());
    CHECK(d.split.size() == 40);
    CHECK(*d.scaling == fit_scaling(d, d.indices(Subset::train)));
}
