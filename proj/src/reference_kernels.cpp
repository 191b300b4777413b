#include "surfkern/reference_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "surfkern/errors.hpp"

namespace surfkern {

namespace {

void check_epsilon(double epsilon) {
    if (!(epsilon >= 1e-4 && epsilon <= 1e-2)) {
        throw DomainError("kernel step must lie in [1e-4, 1e-2] km/s");
    }
}

double perturbed_velocity(const LayeredModel& model, double period, WaveType wave, double base) {
    try {
        return phase_velocity_near(model, period, wave, base);
    } catch (const NoRootError& e) {
        throw KernelEvaluationError(std::string("perturbed model: ") + e.what());
    }
}

LayeredModel shift_layer(const LayeredModel& model, std::size_t i, double delta,
                         HalfspaceCoupling coupling) {
    LayeredModel out = model.with_layer_vs(i, model.vs(i) + delta);
    if (coupling == HalfspaceCoupling::folded && i + 1 == model.layer_count()) {
        out = out.with_halfspace_vs(model.halfspace_vs() + delta);
    }
    return out;
}

}  // namespace

SensitivityKernel fd_kernel(const LayeredModel& model, double period, WaveType wave,
                            double epsilon, HalfspaceCoupling coupling) {
    check_epsilon(epsilon);
    double base = 0.0;
    try {
        base = phase_velocity(model, period, wave);
    } catch (const NoRootError& e) {
        throw KernelEvaluationError(e.what());
    }
    SensitivityKernel k;
    k.wave = wave;
    k.period = period;
    k.grid = model.grid();
    k.values.resize(model.layer_count());
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const double up = perturbed_velocity(shift_layer(model, i, epsilon, coupling), period, wave, base);
        const double down =
            perturbed_velocity(shift_layer(model, i, -epsilon, coupling), period, wave, base);
        k.values[i] = (up - down) / (2.0 * epsilon * model.grid().thickness(i));
    }
    return k;
}

double halfspace_partial(const LayeredModel& model, double period, WaveType wave, double epsilon) {
    check_epsilon(epsilon);
    const double hs = model.halfspace_vs();
    double base = 0.0;
    try {
        base = phase_velocity(model, period, wave);
    } catch (const NoRootError& e) {
        throw KernelEvaluationError(e.what());
    }
    const double up = perturbed_velocity(model.with_halfspace_vs(hs + epsilon), period, wave, base);
    const double down =
        perturbed_velocity(model.with_halfspace_vs(hs - epsilon), period, wave, base);
    return (up - down) / (2.0 * epsilon);
}

KernelMatrix kernel_matrix(const LayeredModel& model, const PeriodGrid& periods, WaveType wave,
                           double epsilon, HalfspaceCoupling coupling) {
    KernelMatrix km;
    km.wave = wave;
    km.periods = periods;
    km.grid = model.grid();
    km.rows.reserve(periods.size());
    for (std::size_t p = 0; p < periods.size(); ++p) {
        try {
            km.rows.push_back(fd_kernel(model, periods[p], wave, epsilon, coupling).values);
        } catch (const KernelEvaluationError& e) {
            throw KernelEvaluationError(e.what(), static_cast<int>(p));
        }
    }
    return km;
}

std::size_t peak_layer(const std::vector<double>& kernel) {
    if (kernel.empty()) throw ShapeError("empty kernel");
    const double top = *std::max_element(kernel.begin(), kernel.end());
    std::size_t best = 0;
    for (std::size_t i = 0; i < kernel.size(); ++i) {
        const bool local_max = (i == 0 || kernel[i] >= kernel[i - 1]) &&
                               (i + 1 == kernel.size() || kernel[i] >= kernel[i + 1]);
        if (local_max && kernel[i] >= 0.25 * top) best = i;
    }
    return best;
}

}  // namespace surfkern
