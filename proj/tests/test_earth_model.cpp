#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "surfkern/earth_model.hpp"
#include "surfkern/errors.hpp"

using namespace surfkern;

TEST_SUITE("earth_model") {

TEST_CASE("standard depth grid layout") {
    const DepthGrid g = standard_depth_grid();
    CHECK(g.size() == 38);
    CHECK(g.total_depth() == doctest::Approx(150.0));
    CHECK(g.top(10) == doctest::Approx(10.0));
    CHECK(g.top(20) == doctest::Approx(30.0));
    CHECK(g.top(32) == doctest::Approx(90.0));
    CHECK(g.thickness(37) == doctest::Approx(10.0));
}

TEST_CASE("vp and density coupling") {
    auto a = derive_vp_density(3.0);
    CHECK(a.vp == doctest::Approx(5.19).epsilon(1e-12));
    CHECK(a.rho == doctest::Approx(2.4308).epsilon(1e-12));
    auto b = derive_vp_density(4.5);
    CHECK(b.vp == doctest::Approx(7.785).epsilon(1e-12));
    CHECK(b.rho == doctest::Approx(3.2612).epsilon(1e-12));
    CHECK_THROWS_AS(derive_vp_density(0.0), DomainError);
    CHECK_THROWS_AS(derive_vp_density(-1.0), DomainError);
}

TEST_CASE("layered model validation") {
    const DepthGrid g = standard_depth_grid();
    CHECK_THROWS_AS(LayeredModel(g, std::vector<double>(37, 3.0), 4.0), ShapeError);
    std::vector<double> vs(38, 3.0);
    vs[5] = 7.0;
    CHECK_THROWS_AS(LayeredModel(g, vs, 4.0), DomainError);
    const auto m = LayeredModel::from_model_vector(g, std::vector<double>(38, 3.5));
    CHECK(m.halfspace_vs() == 3.5);
}

TEST_CASE("weak prior stays in bounds and is deterministic") {
    const DepthGrid g = standard_depth_grid();
    for (std::uint64_t s = 0; s < 200; ++s) {
        Rng a = make_stream(s, StreamTag::model, 0);
        Rng b = make_stream(s, StreamTag::model, 0);
        const auto ma = sample_weak_prior(a, g);
        const auto mb = sample_weak_prior(b, g);
        CHECK(ma == mb);
        for (double v : ma.vs()) {
            CHECK(v >= kVsMin);
            CHECK(v <= kVsMax);
        }
    }
}

TEST_CASE("weak prior spread exceeds 0.3 km/s at every depth") {
    const DepthGrid g = standard_depth_grid();
    std::vector<LayeredModel> models;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        Rng rng = make_stream(7, StreamTag::model, i);
        models.push_back(sample_weak_prior(rng, g));
    }
    const std::vector<double> probs = {0.1, 0.9};
    const auto pct = ensemble_percentiles(models, probs);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(pct[1][i] - pct[0][i] > 0.3);
}

TEST_CASE("strong LVZ prior") {
    const DepthGrid g = standard_depth_grid();
    Rng wrong(1);
    CHECK_THROWS_AS(sample_strong_lvz_prior(wrong, g, PriorConfig::weak()), ConfigError);

    // Index of the layer immediately above 55 km.
    std::size_t above = 0;
    while (g.top(above + 1) < 55.0) ++above;
    std::vector<double> centers;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        Rng rng = make_stream(3, StreamTag::model, i);
        const LvzDraw d = sample_strong_lvz_prior_detailed(rng, g, PriorConfig::strong_lvz());
        centers.push_back(d.lvz_center);
        double min_in = 1e9;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double z = g.midpoint(k);
            if (z >= 55.0 && z <= 90.0) min_in = std::min(min_in, d.model.vs(k));
        }
        CHECK(min_in < d.model.vs(above));
        CHECK(d.moho_depth >= 25.0);
        CHECK(d.moho_depth <= 55.0);
    }
    double mean = 0.0;
    for (double c : centers) mean += c;
    mean /= static_cast<double>(centers.size());
    CHECK(std::abs(mean - 70.0) < 1.0);
}

TEST_CASE("ensemble median shows an LVZ only under the strong prior") {
    const DepthGrid g = standard_depth_grid();
    auto median_profile = [&](const PriorConfig& cfg) {
        std::vector<LayeredModel> models;
        for (std::uint64_t i = 0; i < 2000; ++i) {
            Rng rng = make_stream(11, StreamTag::model, i);
            models.push_back(sample_prior(rng, g, cfg));
        }
        const std::vector<double> probs = {0.5};
        return ensemble_percentiles(models, probs)[0];
    };
    const auto weak = median_profile(PriorConfig::weak());
    for (std::size_t i = 1; i < weak.size(); ++i) CHECK(weak[i] >= weak[i - 1] - 0.01);

    const auto strong = median_profile(PriorConfig::strong_lvz());
    bool local_min = false;
    for (std::size_t i = 1; i + 1 < strong.size(); ++i) {
        const double z = g.midpoint(i);
        if (z >= 55.0 && z <= 90.0 && strong[i] < strong[i - 1] && strong[i] <= strong[i + 1]) {
            local_min = true;
        }
    }
    CHECK(local_min);
}

TEST_CASE("ensemble percentiles") {
    const DepthGrid g = standard_depth_grid();
    std::vector<double> vs(38);
    for (std::size_t i = 0; i < vs.size(); ++i) vs[i] = 2.5 + 0.05 * static_cast<double>(i);
    const auto m = LayeredModel::from_model_vector(g, vs);
    const std::vector<LayeredModel> same(100, m);
    const std::vector<double> probs = {0.1, 0.25, 0.75, 0.9};
    for (const auto& row : ensemble_percentiles(same, probs)) {
        for (std::size_t i = 0; i < vs.size(); ++i) CHECK(row[i] == doctest::Approx(vs[i]));
    }
    CHECK(quantile({2.0, 3.0, 4.0}, 0.5) == doctest::Approx(3.0));
    CHECK(quantile({4.0, 2.0, 3.0, 1.0}, 0.25) == doctest::Approx(1.75));

    std::vector<LayeredModel> mixed;
    for (std::uint64_t i = 0; i < 300; ++i) {
        Rng rng = make_stream(5, StreamTag::model, i);
        mixed.push_back(sample_weak_prior(rng, g));
    }
    const auto p = ensemble_percentiles(mixed, probs);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(p[0][i] <= p[1][i]);
        CHECK(p[1][i] <= p[2][i]);
        CHECK(p[2][i] <= p[3][i]);
    }
    CHECK_THROWS_AS(ensemble_percentiles(std::vector<LayeredModel>{}, probs), EmptyEnsembleError);
}

TEST_CASE("prior config validation") {
    PriorConfig c = PriorConfig::strong_lvz();
    c.lvz_half_width = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(prior_kind_from_string("strong_lvz") == PriorKind::strong_lvz);
    CHECK_THROWS_AS(prior_kind_from_string("nope"), ConfigError);
}

TEST_CASE("seed streams are independent of sample count") {
    Rng a = make_stream(42, StreamTag::model, 17);
    Rng b = make_stream(42, StreamTag::model, 17);
    Rng c = make_stream(42, StreamTag::mask, 17);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
}

}
