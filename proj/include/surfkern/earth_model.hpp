#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "surfkern/rng.hpp"

namespace surfkern {

inline constexpr double kVsMin = 0.5;
inline constexpr double kVsMax = 6.0;
inline constexpr std::size_t kStandardLayerCount = 38;
inline constexpr double kStandardTotalDepth = 150.0;

/// Layer thicknesses (km) of a 1-D model above a half-space.
class DepthGrid {
public:
    DepthGrid() = default;
    explicit DepthGrid(std::vector<double> thicknesses);

    std::size_t size() const noexcept { return thicknesses_.size(); }
    std::span<const double> thicknesses() const noexcept { return thicknesses_; }
    std::span<const double> layer_tops() const noexcept { return tops_; }
    double thickness(std::size_t i) const { return thicknesses_.at(i); }
    double top(std::size_t i) const { return tops_.at(i); }
    double midpoint(std::size_t i) const { return tops_.at(i) + 0.5 * thicknesses_.at(i); }
    double total_depth() const noexcept { return total_depth_; }

    bool operator==(const DepthGrid& other) const = default;

private:
    std::vector<double> thicknesses_;
    std::vector<double> tops_;
    double total_depth_ = 0.0;
};

/// 10 x 1 km, 10 x 2 km, 12 x 5 km, 6 x 10 km down to 150 km.
DepthGrid standard_depth_grid();

struct ElasticParameters {
    double vp;
    double rho;
};

/// Vp = 1.73 Vs, rho = 0.32 Vp + 0.77. Throws DomainError for vs <= 0.
ElasticParameters derive_vp_density(double vs);

/// Layered shear-velocity profile over a half-space. Vp and density follow
/// from Vs through derive_vp_density.
class LayeredModel {
public:
    LayeredModel() = default;
    LayeredModel(DepthGrid grid, std::vector<double> vs, double halfspace_vs);

    /// Builds a model whose half-space shares the deepest layer's Vs.
    static LayeredModel from_model_vector(DepthGrid grid, std::span<const double> vs);

    const DepthGrid& grid() const noexcept { return grid_; }
    std::size_t layer_count() const noexcept { return vs_.size(); }
    std::span<const double> vs() const noexcept { return vs_; }
    double vs(std::size_t i) const { return vs_.at(i); }
    double halfspace_vs() const noexcept { return halfspace_vs_; }
    double vp(std::size_t i) const { return derive_vp_density(vs_.at(i)).vp; }
    double rho(std::size_t i) const { return derive_vp_density(vs_.at(i)).rho; }
    double min_vs() const;

    /// The surrogate input: the 38 layer values (half-space folded into the last).
    std::vector<double> model_vector() const { return vs_; }

    LayeredModel with_layer_vs(std::size_t i, double value) const;
    LayeredModel with_halfspace_vs(double value) const;

    bool operator==(const LayeredModel& other) const = default;

private:
    DepthGrid grid_;
    std::vector<double> vs_;
    double halfspace_vs_ = 0.0;
};

enum class PriorKind { weak, strong_lvz };

std::string_view to_string(PriorKind kind);
PriorKind prior_kind_from_string(std::string_view text);

struct ControlPoint {
    double depth;   // km
    double vs_lo;   // km/s
    double vs_hi;   // km/s
};

struct PriorConfig {
    PriorKind kind = PriorKind::weak;
    std::vector<ControlPoint> control_points = {
        {0.0, 2.0, 3.6},   {10.0, 2.8, 4.0},  {30.0, 3.2, 4.4},
        {60.0, 3.8, 4.8},  {100.0, 4.0, 5.0}, {150.0, 4.2, 5.2},
    };
    double layer_noise_sd = 0.05;

    double moho_depth_mean = 40.0;
    double moho_depth_sd = 5.0;
    std::pair<double, double> moho_depth_clip = {25.0, 55.0};

    double lvz_center_mean = 70.0;
    double lvz_center_sd = 8.0;
    std::pair<double, double> lvz_center_clip = {55.0, 90.0};
    double lvz_half_width = 15.0;
    std::pair<double, double> lvz_reduction_range = {0.05, 0.10};

    static PriorConfig weak();
    static PriorConfig strong_lvz();

    /// Throws ConfigError when a field violates its range.
    void validate() const;
};

/// Broad prior: Vs at the control depths drawn uniformly, interpolated onto the
/// grid, plus independent per-layer Gaussian noise.
LayeredModel sample_weak_prior(Rng& rng, const DepthGrid& grid,
                               const PriorConfig& cfg = PriorConfig::weak());

/// Noise-free profile through the centers of the control-point ranges.
LayeredModel prior_center_model(const DepthGrid& grid, const PriorConfig& cfg = PriorConfig::weak());

struct LvzDraw {
    LayeredModel model;
    double moho_depth;
    double lvz_center;
    double lvz_reduction;
    int redraws;  // draws rejected because the LVZ was masked by the base profile
};

/// Weak-prior base with a monotone crust above a random Moho and a Gaussian
/// low-velocity zone in the upper mantle. Throws ConfigError unless
/// cfg.kind == strong_lvz.
LvzDraw sample_strong_lvz_prior_detailed(Rng& rng, const DepthGrid& grid,
                                         const PriorConfig& cfg);
LayeredModel sample_strong_lvz_prior(Rng& rng, const DepthGrid& grid,
                                     const PriorConfig& cfg);

/// Dispatches on cfg.kind.
LayeredModel sample_prior(Rng& rng, const DepthGrid& grid, const PriorConfig& cfg);

/// Linear-interpolation quantile of an unsorted sample (Hyndman-Fan type 7).
double quantile(std::vector<double> values, double prob);

/// result[k][layer] is the probs[k] quantile of Vs at that layer.
std::vector<std::vector<double>> ensemble_percentiles(std::span<const LayeredModel> models,
                                                      std::span<const double> probs);

}  // namespace surfkern
