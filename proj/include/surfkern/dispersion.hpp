#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "surfkern/earth_model.hpp"

namespace surfkern {

enum class WaveType { rayleigh, love };

std::string_view to_string(WaveType wave);
WaveType wave_type_from_string(std::string_view text);

inline constexpr double kMinPeriod = 2.0;
inline constexpr double kMaxPeriod = 60.0;
inline constexpr std::size_t kStandardPeriodCount = 40;

/// Strictly increasing periods (s) inside [2, 60].
class PeriodGrid {
public:
    PeriodGrid() = default;
    explicit PeriodGrid(std::vector<double> periods);

    std::size_t size() const noexcept { return periods_.size(); }
    std::span<const double> periods() const noexcept { return periods_; }
    double operator[](std::size_t i) const { return periods_.at(i); }

    bool operator==(const PeriodGrid& other) const = default;

private:
    std::vector<double> periods_;
};

/// `count` log-spaced periods, both ends included.
PeriodGrid log_period_grid(double lo, double hi, std::size_t count);

/// 40 log-spaced periods from 2 to 60 s inclusive.
PeriodGrid standard_period_grid();

struct DispersionCurve {
    WaveType wave = WaveType::rayleigh;
    PeriodGrid periods;
    std::vector<double> phase_velocity;  // km/s
    std::vector<std::uint8_t> mask;      // 1 = observed

    /// Throws DomainError or ShapeError when an invariant fails.
    void validate() const;
};

/// Reduced delta-matrix (Dunkin) P-SV secular function. Its sign changes at
/// modal phase velocities. Throws EvaluationSingularity when c is within 1e-9
/// of a layer Vs or Vp.
double rayleigh_dispersion_function(const LayeredModel& model, double period, double c);

/// SH propagator secular function for Love waves.
double love_dispersion_function(const LayeredModel& model, double period, double c);

double dispersion_function(const LayeredModel& model, double period, double c, WaveType wave);

struct ScanRange {
    double c_lo;
    double c_hi;
};

/// Velocity interval scanned for the fundamental mode.
ScanRange scan_range(const LayeredModel& model, WaveType wave);

inline constexpr double kScanStep = 0.005;
inline constexpr double kRootTolerance = 1e-6;

/// Fundamental-mode phase velocity: the first sign change of the secular
/// function on a 0.005 km/s scan from c_lo, refined inside the bracket.
/// Throws NoRootError when the scan finds no sign change.
double phase_velocity(const LayeredModel& model, double period, WaveType wave);

/// The fundamental-mode root of a slightly perturbed model, found by
/// bracketing around `guess` (the unperturbed root) instead of a full scan.
/// Falls back to phase_velocity when no sign change is found nearby.
double phase_velocity_near(const LayeredModel& model, double period, WaveType wave, double guess,
                           double half_width = 2e-3);

/// Every sign change of the secular function on a uniform scan of
/// [c_lo, c_hi] with the given step, refined to roots. Used for mode checks.
std::vector<double> all_roots(const LayeredModel& model, double period, WaveType wave,
                              double step);

/// Phase velocity at every period; NoRootError carries the failing period.
DispersionCurve dispersion_curve(const LayeredModel& model, const PeriodGrid& grid,
                                 WaveType wave);

}  // namespace surfkern
