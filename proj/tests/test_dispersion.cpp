#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "surfkern/dispersion.hpp"
#include "surfkern/errors.hpp"
#include "test_models.hpp"

using namespace surfkern;

TEST_SUITE("dispersion") {

TEST_CASE("period grid") {
    const PeriodGrid g = standard_period_grid();
    CHECK(g.size() == 40);
    CHECK(g[0] == 2.0);
    CHECK(g[39] == 60.0);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    CHECK_THROWS_AS(PeriodGrid({1.0, 5.0}), DomainError);
    CHECK_THROWS_AS(PeriodGrid({5.0, 5.0}), DomainError);
    CHECK_THROWS_AS(PeriodGrid({5.0, 70.0}), DomainError);
}

TEST_CASE("independent cubic oracle values") {
    // Frozen from the cubic, independently of the solver.
    CHECK(testmodels::rayleigh_ratio(3.0) == doctest::Approx(0.9194016867).epsilon(1e-9));
    CHECK(testmodels::rayleigh_ratio(1.73 * 1.73) == doctest::Approx(0.9192553459).epsilon(1e-9));
}

TEST_CASE("homogeneous half-space Rayleigh velocity") {
    const auto m = testmodels::homogeneous(3.0);
    const double exact = 3.0 * testmodels::rayleigh_ratio(1.73 * 1.73);
    const auto curve = dispersion_curve(m, standard_period_grid(), WaveType::rayleigh);
    CHECK(curve.phase_velocity.size() == 40);
    const auto [lo, hi] = std::minmax_element(curve.phase_velocity.begin(), curve.phase_velocity.end());
    CHECK(*hi - *lo < 5e-3);
    for (double c : curve.phase_velocity) {
        CHECK(std::abs(c - 0.9194 * 3.0) < 2e-3);
        CHECK(std::abs(c - exact) < 1e-5);
    }
    for (auto v : curve.mask) CHECK(v == 1);
}

TEST_CASE("homogeneous half-space has no Love root") {
    const auto m = testmodels::homogeneous(3.0);
    CHECK_THROWS_AS(phase_velocity(m, 10.0, WaveType::love), NoRootError);
    try {
        dispersion_curve(m, standard_period_grid(), WaveType::love);
        FAIL("expected NoRootError");
    } catch (const NoRootError& e) {
        CHECK(e.period() == 2.0);
    }
}

TEST_CASE("two-layer Love oracle") {
    const auto m = testmodels::two_layer();
    const double frozen[][2] = {{2, 3.0300645624}, {5, 3.1626620138}, {10, 3.4854399452},
                                {20, 3.8396516601}, {60, 3.9824855174}};
    for (const auto& [t, c] : frozen) CHECK(testmodels::two_layer_love(t) == doctest::Approx(c).epsilon(1e-9));
    for (double t : {2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0, 45.0, 60.0}) {
        CHECK(std::abs(phase_velocity(m, t, WaveType::love) - testmodels::two_layer_love(t)) < 1e-4);
    }
    const auto curve = dispersion_curve(m, standard_period_grid(), WaveType::love);
    for (std::size_t i = 1; i < curve.phase_velocity.size(); ++i) {
        CHECK(curve.phase_velocity[i] > curve.phase_velocity[i - 1]);
    }
    CHECK(4.0 - curve.phase_velocity.back() < 0.25);
}

TEST_CASE("secular function is small at a refined root") {
    for (std::uint64_t k = 0; k < 10; ++k) {
        const auto m = testmodels::weak_model(k);
        for (WaveType w : {WaveType::rayleigh, WaveType::love}) {
            for (double t : {2.0, 10.0, 40.0}) {
                const double c = phase_velocity(m, t, w);
                const double lo = std::floor((c - scan_range(m, w).c_lo) / kScanStep);
                const double a = scan_range(m, w).c_lo + lo * kScanStep;
                const double b = a + kScanStep;
                const double fa = dispersion_function(m, t, a, w);
                const double fb = dispersion_function(m, t, b, w);
                CHECK(std::signbit(fa) != std::signbit(fb));
                const double edge = std::max(std::abs(fa), std::abs(fb));
                CHECK(std::abs(dispersion_function(m, t, c, w)) < 1e-6 * edge);
                const double d = 1e-5;
                CHECK(std::signbit(dispersion_function(m, t, c - d, w)) !=
                      std::signbit(dispersion_function(m, t, c + d, w)));
            }
        }
    }
}

TEST_CASE("dense scan finds exactly one root in the bracket") {
    const auto m = testmodels::weak_model(3);
    const double c = phase_velocity(m, 8.0, WaveType::rayleigh);
    const auto fine = all_roots(m, 8.0, WaveType::rayleigh, 1e-4);
    REQUIRE_FALSE(fine.empty());
    CHECK(std::abs(fine.front() - c) < 1e-6);
    const double a = scan_range(m, WaveType::rayleigh).c_lo +
                     std::floor((c - scan_range(m, WaveType::rayleigh).c_lo) / kScanStep) * kScanStep;
    const auto inside = std::count_if(fine.begin(), fine.end(),
                                      [&](double r) { return r > a && r < a + kScanStep; });
    CHECK(inside == 1);
}

TEST_CASE("fundamental mode is the lowest root of a dense scan") {
    for (std::uint64_t k = 0; k < 50; ++k) {
        const auto m = testmodels::weak_model(100 + k);
        for (WaveType w : {WaveType::rayleigh, WaveType::love}) {
            const double t = 2.0 + static_cast<double>(k % 10) * 6.0;
            double c = 0.0;
            try {
                c = phase_velocity(m, t, w);
            } catch (const NoRootError&) {
                continue;
            }
            const auto roots = all_roots(m, t, w, 5e-4);
            REQUIRE_FALSE(roots.empty());
            CHECK(std::abs(roots.front() - c) < 1e-6);
            const auto range = scan_range(m, w);
            CHECK(c > range.c_lo);
            CHECK(c < m.halfspace_vs());
            CHECK(c > 0.7 * m.min_vs());
        }
    }
}

TEST_CASE("phase velocity is continuous in layer Vs") {
    for (std::uint64_t k = 0; k < 5; ++k) {
        const auto m = testmodels::weak_model(200 + k);
        for (std::size_t layer : {0u, 12u, 25u, 36u}) {
            const auto p = m.with_layer_vs(layer, m.vs(layer) + 1e-4);
            for (WaveType w : {WaveType::rayleigh, WaveType::love}) {
                CHECK(std::abs(phase_velocity(p, 20.0, w) - phase_velocity(m, 20.0, w)) < 1e-3);
            }
        }
    }
}

TEST_CASE("deterministic evaluation") {
    const auto m = testmodels::weak_model(9);
    CHECK(rayleigh_dispersion_function(m, 5.0, 3.1) == rayleigh_dispersion_function(m, 5.0, 3.1));
    CHECK(love_dispersion_function(m, 5.0, 3.1) == love_dispersion_function(m, 5.0, 3.1));
    CHECK(phase_velocity(m, 33.0, WaveType::love) == phase_velocity(m, 33.0, WaveType::love));
}

TEST_CASE("singular trial velocity") {
    const auto m = testmodels::two_layer();
    CHECK_THROWS_AS(rayleigh_dispersion_function(m, 5.0, 3.0), EvaluationSingularity);
    CHECK_THROWS_AS(love_dispersion_function(m, 5.0, 4.0), EvaluationSingularity);
}

TEST_CASE("curve validation") {
    DispersionCurve c = dispersion_curve(testmodels::two_layer(), standard_period_grid(), WaveType::rayleigh);
    CHECK_NOTHROW(c.validate());
    c.phase_velocity[3] = 9.0;
    CHECK_THROWS(c.validate());
    c.phase_velocity.pop_back();
    CHECK_THROWS_AS(c.validate(), ShapeError);
}

}
