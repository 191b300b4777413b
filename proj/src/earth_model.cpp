#include "surfkern/earth_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "surfkern/errors.hpp"

namespace surfkern {

DepthGrid::DepthGrid(std::vector<double> thicknesses) : thicknesses_(std::move(thicknesses)) {
    if (thicknesses_.empty()) {
        throw DomainError("depth grid needs at least one layer");
    }
    tops_.reserve(thicknesses_.size());
    double depth = 0.0;
    for (double h : thicknesses_) {
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw DomainError("layer thickness must be positive");
        }
        tops_.push_back(depth);
        depth += h;
    }
    total_depth_ = depth;
}

DepthGrid standard_depth_grid() {
    std::vector<double> h;
    h.reserve(kStandardLayerCount);
    h.insert(h.end(), 10, 1.0);
    h.insert(h.end(), 10, 2.0);
    h.insert(h.end(), 12, 5.0);
    h.insert(h.end(), 6, 10.0);
    return DepthGrid(std::move(h));
}

ElasticParameters derive_vp_density(double vs) {
    if (!(vs > 0.0)) {
        throw DomainError("Vs must be positive");
    }
    const double vp = 1.73 * vs;
    return {vp, 0.32 * vp + 0.77};
}

namespace {

void check_vs(double v) {
    if (!(v >= kVsMin && v <= kVsMax)) {
        throw DomainError("Vs " + std::to_string(v) + " km/s outside [0.5, 6.0]");
    }
}

}  // namespace

LayeredModel::LayeredModel(DepthGrid grid, std::vector<double> vs, double halfspace_vs)
    : grid_(std::move(grid)), vs_(std::move(vs)), halfspace_vs_(halfspace_vs) {
    if (vs_.size() != grid_.size()) {
        throw ShapeError("Vs profile length does not match the depth grid");
    }
    std::for_each(vs_.begin(), vs_.end(), check_vs);
    check_vs(halfspace_vs_);
}

LayeredModel LayeredModel::from_model_vector(DepthGrid grid, std::span<const double> vs) {
    if (vs.empty()) {
        throw ShapeError("empty model vector");
    }
    return LayeredModel(std::move(grid), std::vector<double>(vs.begin(), vs.end()), vs.back());
}

double LayeredModel::min_vs() const {
    return std::min(*std::min_element(vs_.begin(), vs_.end()), halfspace_vs_);
}

LayeredModel LayeredModel::with_layer_vs(std::size_t i, double value) const {
    LayeredModel out = *this;
    check_vs(value);
    out.vs_.at(i) = value;
    return out;
}

LayeredModel LayeredModel::with_halfspace_vs(double value) const {
    LayeredModel out = *this;
    check_vs(value);
    out.halfspace_vs_ = value;
    return out;
}

std::string_view to_string(PriorKind kind) {
    return kind == PriorKind::weak ? "weak" : "strong_lvz";
}

PriorKind prior_kind_from_string(std::string_view text) {
    if (text == "weak") return PriorKind::weak;
    if (text == "strong_lvz") return PriorKind::strong_lvz;
    throw ConfigError("unknown prior kind '" + std::string(text) + "'");
}

PriorConfig PriorConfig::weak() { return PriorConfig{}; }

PriorConfig PriorConfig::strong_lvz() {
    PriorConfig cfg;
    cfg.kind = PriorKind::strong_lvz;
    return cfg;
}

void PriorConfig::validate() const {
    if (control_points.size() < 2) {
        throw ConfigError("prior needs at least two control depths");
    }
    for (std::size_t i = 0; i < control_points.size(); ++i) {
        const auto& cp = control_points[i];
        if (i > 0 && !(cp.depth > control_points[i - 1].depth)) {
            throw ConfigError("control depths must increase");
        }
        if (!(cp.vs_lo <= cp.vs_hi) || cp.vs_lo < kVsMin || cp.vs_hi > kVsMax) {
            throw ConfigError("control-point Vs bounds invalid");
        }
    }
    if (layer_noise_sd < 0.0 || moho_depth_sd < 0.0 || lvz_center_sd < 0.0) {
        throw ConfigError("standard deviations must be non-negative");
    }
    if (kind == PriorKind::strong_lvz) {
        const auto [lo, hi] = lvz_reduction_range;
        if (!(lo > 0.0 && hi < 0.3 && lo <= hi)) {
            throw ConfigError("LVZ reduction fractions must lie in (0, 0.3)");
        }
        if (!(lvz_half_width > 0.0)) {
            throw ConfigError("LVZ half-width must be positive");
        }
    }
}

namespace {

double interpolate(const std::vector<ControlPoint>& cps, const std::vector<double>& values,
                   double depth) {
    if (depth <= cps.front().depth) return values.front();
    if (depth >= cps.back().depth) return values.back();
    std::size_t k = 1;
    while (cps[k].depth < depth) ++k;
    const double t = (depth - cps[k - 1].depth) / (cps[k].depth - cps[k - 1].depth);
    return values[k - 1] + t * (values[k] - values[k - 1]);
}

std::vector<double> sample_base_profile(Rng& rng, const DepthGrid& grid, const PriorConfig& cfg) {
    std::vector<double> control(cfg.control_points.size());
    for (std::size_t k = 0; k < control.size(); ++k) {
        control[k] = uniform(rng, cfg.control_points[k].vs_lo, cfg.control_points[k].vs_hi);
    }
    std::vector<double> vs(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        vs[i] = interpolate(cfg.control_points, control, grid.midpoint(i));
        if (cfg.layer_noise_sd > 0.0) {
            vs[i] += gaussian(rng, 0.0, cfg.layer_noise_sd);
        }
        vs[i] = std::clamp(vs[i], kVsMin, kVsMax);
    }
    return vs;
}

double clipped_normal(Rng& rng, double mean, double sd, std::pair<double, double> clip) {
    const double v = sd > 0.0 ? gaussian(rng, mean, sd) : mean;
    return std::clamp(v, clip.first, clip.second);
}

// The LVZ is visible when the slowest layer inside the LVZ window is slower
// than the layer directly above the window.
bool lvz_expressed(const DepthGrid& grid, const std::vector<double>& vs, double window_top,
                   double window_bottom) {
    std::size_t above = grid.size();
    double min_inside = kVsMax + 1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double mid = grid.midpoint(i);
        if (mid < window_top) above = i;
        if (mid >= window_top && mid <= window_bottom) min_inside = std::min(min_inside, vs[i]);
    }
    return above < grid.size() && min_inside < vs[above];
}

}  // namespace

LayeredModel prior_center_model(const DepthGrid& grid, const PriorConfig& cfg) {
    cfg.validate();
    std::vector<double> control;
    for (const auto& cp : cfg.control_points) control.push_back(0.5 * (cp.vs_lo + cp.vs_hi));
    std::vector<double> vs(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        vs[i] = interpolate(cfg.control_points, control, grid.midpoint(i));
    }
    const double halfspace = vs.back();
    return LayeredModel(grid, std::move(vs), halfspace);
}

LayeredModel sample_weak_prior(Rng& rng, const DepthGrid& grid, const PriorConfig& cfg) {
    std::vector<double> vs = sample_base_profile(rng, grid, cfg);
    const double halfspace = vs.back();
    return LayeredModel(grid, std::move(vs), halfspace);
}

LvzDraw sample_strong_lvz_prior_detailed(Rng& rng, const DepthGrid& grid, const PriorConfig& cfg) {
    if (cfg.kind != PriorKind::strong_lvz) {
        throw ConfigError("strong-LVZ sampler called with a non-LVZ prior config");
    }
    cfg.validate();
    // The structural parameters are drawn once; only the base profile is
    // redrawn when it hides the LVZ, so the center distribution stays as stated.
    const double moho = clipped_normal(rng, cfg.moho_depth_mean, cfg.moho_depth_sd, cfg.moho_depth_clip);
    const double center = clipped_normal(rng, cfg.lvz_center_mean, cfg.lvz_center_sd, cfg.lvz_center_clip);
    const double reduction = uniform(rng, cfg.lvz_reduction_range.first, cfg.lvz_reduction_range.second);
    // Gaussian with half-width at half-maximum equal to lvz_half_width.
    const double k = std::log(2.0) / (cfg.lvz_half_width * cfg.lvz_half_width);
    constexpr int kMaxRedraws = 10000;
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        std::vector<double> vs = sample_base_profile(rng, grid, cfg);
        double running_max = 0.0;
        for (std::size_t i = 0; i < grid.size() && grid.midpoint(i) < moho; ++i) {
            running_max = std::max(running_max, vs[i]);
            vs[i] = running_max;
        }
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double dz = grid.midpoint(i) - center;
            vs[i] = std::clamp(vs[i] * (1.0 - reduction * std::exp(-k * dz * dz)), kVsMin, kVsMax);
        }
        if (!lvz_expressed(grid, vs, cfg.lvz_center_clip.first, cfg.lvz_center_clip.second)) {
            continue;
        }
        const double halfspace = vs.back();
        return {LayeredModel(grid, std::move(vs), halfspace), moho, center, reduction, attempt};
    }
    throw ConfigError("strong-LVZ prior never produced a visible low-velocity zone");
}

LayeredModel sample_strong_lvz_prior(Rng& rng, const DepthGrid& grid, const PriorConfig& cfg) {
    return sample_strong_lvz_prior_detailed(rng, grid, cfg).model;
}

LayeredModel sample_prior(Rng& rng, const DepthGrid& grid, const PriorConfig& cfg) {
    return cfg.kind == PriorKind::weak ? sample_weak_prior(rng, grid, cfg)
                                       : sample_strong_lvz_prior(rng, grid, cfg);
}

double quantile(std::vector<double> values, double prob) {
    if (values.empty()) {
        throw EmptyEnsembleError("quantile of an empty sample");
    }
    if (!(prob > 0.0 && prob < 1.0)) {
        throw DomainError("quantile probability must lie in (0, 1)");
    }
    std::sort(values.begin(), values.end());
    const double h = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<std::vector<double>> ensemble_percentiles(std::span<const LayeredModel> models,
                                                      std::span<const double> probs) {
    if (models.empty()) {
        throw EmptyEnsembleError("percentiles of an empty ensemble");
    }
    const std::size_t n_layers = models.front().layer_count();
    std::vector<std::vector<double>> out(probs.size(), std::vector<double>(n_layers));
    std::vector<double> column(models.size());
    for (std::size_t layer = 0; layer < n_layers; ++layer) {
        for (std::size_t m = 0; m < models.size(); ++m) {
            column[m] = models[m].vs(layer);
        }
        for (std::size_t k = 0; k < probs.size(); ++k) {
            out[k][layer] = quantile(column, probs[k]);
        }
    }
    return out;
}

}  // namespace surfkern
