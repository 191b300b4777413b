#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "surfkern/errors.hpp"
#include "surfkern/reference_kernels.hpp"
#include "test_models.hpp"

using namespace surfkern;

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double relative_l2(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0, n = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] - b[i]) * (a[i] - b[i]);
        n += b[i] * b[i];
    }
    return std::sqrt(d / n);
}

}  // namespace

TEST_SUITE("reference_kernels") {

TEST_CASE("homogeneous half-space: kernel integral matches the scaling law") {
    const auto m = testmodels::homogeneous(3.0);
    for (double t : {5.0, 30.0}) {
        const auto k = fd_kernel(m, t, WaveType::rayleigh);
        double total = halfspace_partial(m, t, WaveType::rayleigh);
        for (std::size_t i = 0; i < k.values.size(); ++i) total += k.values[i] * m.grid().thickness(i);
        CHECK(std::abs(total - 0.9194) < 1e-2);
    }
}

TEST_CASE("short-period Rayleigh kernels vanish below 50 km") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto m = testmodels::weak_model(s);
        const auto k = fd_kernel(m, 2.0, WaveType::rayleigh);
        const double peak = max_abs(k.values);
        for (std::size_t i = 0; i < k.values.size(); ++i) {
            if (m.grid().top(i) > 50.0) CHECK(std::abs(k.values[i]) < 0.01 * peak);
        }
    }
}

TEST_CASE("short-period Love kernel tail") {
    const auto m = testmodels::weak_model(1);
    const auto k = fd_kernel(m, 2.0, WaveType::love);
    const double peak = max_abs(k.values);
    for (std::size_t i = 0; i < k.values.size(); ++i) {
        if (m.grid().top(i) > 30.0) CHECK(std::abs(k.values[i]) < 0.02 * peak);
    }
}

TEST_CASE("first-order Taylor check") {
    for (std::uint64_t s = 0; s < 4; ++s) {
        const auto m = testmodels::weak_model(40 + s);
        Rng rng = make_stream(99, StreamTag::noise, s);
        std::vector<double> dvs(m.layer_count());
        for (double& d : dvs) d = 0.01 * uniform(rng, 0.0, 1.0);
        std::vector<double> vs(m.vs().begin(), m.vs().end());
        for (std::size_t i = 0; i < vs.size(); ++i) vs[i] += dvs[i];
        const LayeredModel p(m.grid(), vs, m.halfspace_vs());
        for (WaveType w : {WaveType::rayleigh, WaveType::love}) {
            for (double t : {4.0, 25.0}) {
                const auto k = fd_kernel(m, t, w);
                double predicted = 0.0;
                for (std::size_t i = 0; i < dvs.size(); ++i) predicted += k.values[i] * dvs[i] * m.grid().thickness(i);
                const double actual = phase_velocity(p, t, w) - phase_velocity(m, t, w);
                CHECK(std::abs(predicted - actual) <= 0.05 * std::abs(actual));
            }
        }
    }
}

TEST_CASE("step-size robustness") {
    for (std::uint64_t s = 0; s < 3; ++s) {
        const auto m = testmodels::weak_model(60 + s);
        for (WaveType w : {WaveType::rayleigh, WaveType::love}) {
            const auto a = fd_kernel(m, 12.0, w, 5e-4);
            const auto b = fd_kernel(m, 12.0, w, 2e-3);
            CHECK(relative_l2(a.values, b.values) < 0.02);
        }
    }
}

TEST_CASE("epsilon range") {
    const auto m = testmodels::weak_model(0);
    CHECK_THROWS_AS(fd_kernel(m, 10.0, WaveType::rayleigh, 1e-5), DomainError);
    CHECK_THROWS_AS(fd_kernel(m, 10.0, WaveType::rayleigh, 0.1), DomainError);
}

TEST_CASE("kernel matrix shape and homogeneous rows") {
    const auto m = testmodels::homogeneous(3.0);
    const auto km = kernel_matrix(m, standard_period_grid(), WaveType::rayleigh);
    REQUIRE(km.period_count() == 40);
    REQUIRE(km.layer_count() == 38);
    // Depth profiles scale with wavelength; what the dispersionless case keeps
    // fixed is the depth-integrated row (the half-space rides on the last layer).
    std::vector<double> integrals;
    for (const auto& row : km.rows) {
        double total = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) total += row[i] * m.grid().thickness(i);
        integrals.push_back(total);
    }
    for (double v : integrals) CHECK(std::abs(v - integrals.front()) < 1e-3);
}

TEST_CASE("peak depth deepens with period on a monotone model") {
    const auto m = testmodels::monotone_reference();
    for (WaveType w : {WaveType::rayleigh, WaveType::love}) {
        const auto km = kernel_matrix(m, standard_period_grid(), w, kDefaultKernelStep,
                                      HalfspaceCoupling::separate);
        std::size_t last = 0;
        for (const auto& row : km.rows) {
            const std::size_t p = peak_layer(row);
            CHECK(p >= last);
            last = std::max(last, p);
        }
    }
}

TEST_CASE("kernel matrix reports the failing period") {
    const auto m = testmodels::homogeneous(3.0);
    try {
        kernel_matrix(m, standard_period_grid(), WaveType::love);
        FAIL("expected an error");
    } catch (const KernelEvaluationError& e) {
        CHECK(e.period_index() == 0);
    } catch (const NoRootError&) {
        // The unperturbed model already has no Love root.
    }
}

}
