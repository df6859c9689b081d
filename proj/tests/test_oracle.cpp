#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "etpa/errors.hpp"
#include "etpa/oracle.hpp"
#include "etpa/physics.hpp"

using namespace etpa;
using namespace etpa::physics;

namespace {

MolecularSystem random_band_system(std::mt19937_64& rng, double low, double high) {
    std::uniform_int_distribution<int> k(1, 4);
    std::uniform_real_distribution<double> lambda(low, high);
    std::vector<double> levels;
    const int n = k(rng);
    while (static_cast<int>(levels.size()) < n) {
        const double l = lambda(rng);
        if (std::find(levels.begin(), levels.end(), l) == levels.end())
            levels.push_back(l);
    }
    return MolecularSystem::with_unit_dipoles(levels);
}

double max_abs_diff(const SignalTrace& a, const SignalTrace& b) {
    double worst = 0.0;
    for (std::size_t n = 0; n < a.values.size(); ++n)
        worst = std::max(worst, std::abs(a.values[n] - b.values[n]));
    return worst;
}

} // namespace

TEST_CASE("oracle agrees with the closed form inside the correlation window") {
    const auto grid = tau_grid({}, 500);
    std::mt19937_64 rng(2024);

    SUBCASE("degenerate pair, levels in (835, 845) nm, T_e = 63 fs") {
        const auto source = PhotonSource::degenerate(810.0, 63.0);
        for (int i = 0; i < 10; ++i) {
            const auto system = random_band_system(rng, 835.0, 845.0);
            const auto closed = signal_trace(system, source, {}, 500, true);
            const auto oracle = oracle_trace(system, source, grid);
            CHECK(max_abs_diff(closed, oracle) < 1e-3);
        }
    }

    SUBCASE("non-degenerate pair and signed dipoles") {
        const PhotonSource source{800.0, 822.0, 63.0, 10.0};
        for (int i = 0; i < 5; ++i) {
            auto system = random_band_system(rng, 825.0, 855.0);
            std::uniform_real_distribution<double> d(-1.0, 1.0);
            for (double& v : system.dipole_products) v = d(rng);
            const auto closed = signal_trace(system, source, {}, 500, true);
            const auto oracle = oracle_trace(system, source, grid);
            CHECK(max_abs_diff(closed, oracle) < 1e-3);
        }
    }

    SUBCASE("a level exactly on the pair frequency") {
        const auto source = PhotonSource::degenerate(810.0, 63.0);
        const auto system = MolecularSystem::with_unit_dipoles({810.0, 840.0});
        CHECK(max_abs_diff(signal_trace(system, source, {}, 500, true), oracle_trace(system, source, grid)) < 1e-3);
    }
}

TEST_CASE("oracle edge cases") {
    const auto source = PhotonSource::degenerate(810.0, 63.0);
    const auto grid = tau_grid({}, 201);

    SUBCASE("zero dipoles give an all-zero trace") {
        const auto t = oracle_trace(MolecularSystem{{838.0, 842.0}, {0.0, 0.0}}, source, grid);
        CHECK(t.degenerate);
        for (double v : t.values) CHECK(v == 0.0);
    }

    SUBCASE("degenerate source gives a symmetric trace") {
        const auto t = oracle_trace(MolecularSystem::with_unit_dipoles({836.0, 843.0, 844.0}), source, grid);
        for (std::size_t n = 0; n < grid.size(); ++n)
            CHECK(t.values[n] == doctest::Approx(t.values[grid.size() - 1 - n]).epsilon(1e-9));
        CHECK(*std::max_element(t.values.begin(), t.values.end()) == 1.0);
    }

    SUBCASE("coarse step is refused") {
        const auto system = MolecularSystem::with_unit_dipoles({845.0});
        // fastest detuning ~0.096 rad/fs, period ~65 fs, so 1/50 period is ~1.3 fs
        CHECK_THROWS_AS(oracle_trace(system, source, grid, {.step_fs = 5.0}), ResolutionError);
        CHECK_THROWS_AS(oracle_trace(system, source, grid, {.step_fs = 0.0, .points_per_period = 10.0}),
                        ResolutionError);
        CHECK_NOTHROW(oracle_trace(system, source, grid, {.step_fs = 1.0}));
    }

    SUBCASE("outside |tau| <= 2 T_e the closed form is an extrapolation") {
        // T_e = 7.16 fs: at tau = 60 fs only one photon ordering overlaps
        const auto short_source = PhotonSource::degenerate(810.0, 7.16);
        const auto system = MolecularSystem::with_unit_dipoles({838.0});
        const std::vector<double> taus{-60.0, 0.0, 60.0};
        const auto oracle = oracle_trace(system, short_source, taus);
        const auto closed = signal_trace(system, short_source, {-60.0, 60.0}, 3, true);
        CHECK(std::abs(oracle.values[0] - closed.values[0]) > 1e-2);
    }
}
