#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "surfkern/earth_model.hpp"
#include "surfkern/rng.hpp"

namespace testmodels {

inline surfkern::LayeredModel homogeneous(double vs) {
    const auto g = surfkern::standard_depth_grid();
    return surfkern::LayeredModel(g, std::vector<double>(g.size(), vs), vs);
}

/// 10 km of Vs 3 km/s over Vs 4 km/s (the first ten 1-km layers form the top layer).
inline surfkern::LayeredModel two_layer() {
    const auto g = surfkern::standard_depth_grid();
    std::vector<double> vs(g.size(), 4.0);
    for (std::size_t i = 0; i < 10; ++i) vs[i] = 3.0;
    return surfkern::LayeredModel(g, vs, 4.0);
}

inline surfkern::LayeredModel weak_model(std::uint64_t index, std::uint64_t seed = 2024) {
    surfkern::Rng rng = surfkern::make_stream(seed, surfkern::StreamTag::model, index);
    return surfkern::sample_weak_prior(rng, surfkern::standard_depth_grid());
}

/// Smooth Vs increase with depth, no LVZ.
inline surfkern::LayeredModel monotone_reference() {
    const auto g = surfkern::standard_depth_grid();
    std::vector<double> vs(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) vs[i] = 2.8 + 1.9 * (1.0 - std::exp(-g.midpoint(i) / 40.0));
    return surfkern::LayeredModel(g, vs, vs.back());
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// c/Vs of a homogeneous half-space from the Rayleigh cubic in ξ = (c/Vs)²,
/// with k2 = (Vp/Vs)².
inline double rayleigh_ratio(double k2) {
    auto cubic = [k2](double x) {
        return x * x * x - 8 * x * x + (24 - 16 / k2) * x - 16 * (1 - 1 / k2);
    };
    return std::sqrt(bisect(cubic, 0.5, 0.99));
}

/// Fundamental Love root of the two-layer model from the closed-form equation.
inline double two_layer_love(double period, double h = 10.0, double b1 = 3.0, double b2 = 4.0) {
    const double w = 2 * std::numbers::pi / period;
    const double mu1 = surfkern::derive_vp_density(b1).rho * b1 * b1;
    const double mu2 = surfkern::derive_vp_density(b2).rho * b2 * b2;
    auto f = [&](double c) {
        const double q1 = std::sqrt(1 / (b1 * b1) - 1 / (c * c));
        const double q2 = std::sqrt(1 / (c * c) - 1 / (b2 * b2));
        return std::tan(w * h * q1) - mu2 * q2 / (mu1 * q1);
    };
    // First tangent branch: w h q1 < pi / 2.
    const double qmax = std::numbers::pi / (2 * w * h);
    const double s = 1 / (b1 * b1) - qmax * qmax;
    const double hi = std::min(s > 0 ? 1 / std::sqrt(s) : b2, b2) * (1 - 1e-13);
    return bisect(f, b1 * (1 + 1e-13), hi);
}

}  // namespace testmodels
