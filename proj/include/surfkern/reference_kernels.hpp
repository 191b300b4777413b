#pragma once

#include <vector>

#include "surfkern/dispersion.hpp"
#include "surfkern/earth_model.hpp"

namespace surfkern {

/// Per-layer derivative of phase velocity with respect to layer Vs, divided by
/// layer thickness (units: 1/km).
struct SensitivityKernel {
    WaveType wave = WaveType::rayleigh;
    double period = 0.0;
    std::vector<double> values;
    DepthGrid grid;
};

/// How the deepest layer relates to the half-space when it is perturbed.
/// `folded` moves the half-space together with the last layer, which matches
/// the surrogate's 38-value input vector.
enum class HalfspaceCoupling { separate, folded };

inline constexpr double kDefaultKernelStep = 1e-3;

/// Centered-difference kernel along the coupled Vs/Vp/rho parameterization.
/// Throws DomainError for epsilon outside [1e-4, 1e-2] and
/// KernelEvaluationError when a perturbed model has no root.
SensitivityKernel fd_kernel(const LayeredModel& model, double period, WaveType wave,
                            double epsilon = kDefaultKernelStep,
                            HalfspaceCoupling coupling = HalfspaceCoupling::separate);

/// dc/dVs of the half-space alone (not thickness-normalized).
double halfspace_partial(const LayeredModel& model, double period, WaveType wave,
                         double epsilon = kDefaultKernelStep);

/// Kernel rows for every period, row-major periods x layers.
struct KernelMatrix {
    WaveType wave = WaveType::rayleigh;
    PeriodGrid periods;
    DepthGrid grid;
    std::vector<std::vector<double>> rows;

    std::size_t period_count() const noexcept { return rows.size(); }
    std::size_t layer_count() const noexcept { return rows.empty() ? 0 : rows.front().size(); }
};

KernelMatrix kernel_matrix(const LayeredModel& model, const PeriodGrid& periods, WaveType wave,
                           double epsilon = kDefaultKernelStep,
                           HalfspaceCoupling coupling = HalfspaceCoupling::folded);

/// Layer of the main sensitivity lobe: the deepest local maximum that reaches
/// a quarter of the largest value. Coupled Rayleigh kernels carry a shallow
/// lobe from the Vp term that can outgrow the main lobe at long periods; this
/// skips it.
std::size_t peak_layer(const std::vector<double>& kernel);

}  // namespace surfkern
