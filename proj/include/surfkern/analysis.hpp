#pragma once

#include <span>
#include <string>
#include <vector>

#include "surfkern/dispersion.hpp"
#include "surfkern/earth_model.hpp"

namespace surfkern {

double mae(std::span<const double> pred, std::span<const double> truth);
/// Percent. Throws DomainError for a zero truth entry.
double mape(std::span<const double> pred, std::span<const double> truth);
/// Throws DomainError when either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
/// Throws DomainError when either vector is constant.
double pearson(std::span<const double> a, std::span<const double> b);

struct PeriodBand {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const PeriodBand&) const = default;
};

/// 2-5, 5-10, 10-20, 20-30, 30-45, 45-60 s.
std::vector<PeriodBand> standard_bands();

/// Bands are half-open [lo, hi) except the last, which is closed. Throws
/// DomainError for a period outside all bands.
std::size_t band_index(double period, std::span<const PeriodBand> bands);

/// One (sample, wave, period) comparison. Kernel vectors may be left empty
/// when only the dispersion prediction is being scored.
struct PeriodRecord {
    WaveType wave = WaveType::rayleigh;
    double period = 0.0;
    double predicted = 0.0;
    double truth = 0.0;
    std::vector<double> surrogate_kernel;
    std::vector<double> reference_kernel;
};

struct BandReport {
    WaveType wave = WaveType::rayleigh;
    PeriodBand band;
    double mae = 0.0;
    double mape = 0.0;
    double cosine = 0.0;       // NaN when the band has no kernel pairs
    double correlation = 0.0;  // NaN when the band has no kernel pairs
    std::size_t n = 0;
};

/// Rayleigh rows first, bands in order. Bands without samples are left out.
std::vector<BandReport> band_report(std::span<const PeriodRecord> records,
                                    std::span<const PeriodBand> bands);
std::vector<BandReport> band_report(std::span<const PeriodRecord> records);

inline constexpr std::string_view kBandReportCsvHeader =
    "wave,period_band,mae_km_s,mape_percent,cosine,correlation,n";
std::string band_report_csv(std::span<const BandReport> rows);

struct DepthWindow {
    double top = 40.0;
    double bottom = 110.0;
};

struct ArtifactScore {
    double score = 0.0;
    bool no_artifact = false;
    double modal_depth = 0.0;  // km
    std::vector<double> periods;
    std::vector<double> extremum_depths;      // km, one per selected period
    std::vector<double> extremum_magnitudes;  // |surrogate - reference| at that depth
    double kernel_peak = 0.0;                 // max |reference| over the selected rows
};

/// Persistence of the surrogate-minus-reference residual peak across periods of
/// at least `min_period`. Rows of both matrices follow `periods`; columns follow
/// the grid's layers. Layers count as inside the window when their midpoint is.
ArtifactScore prior_artifact_score(const std::vector<std::vector<double>>& surrogate,
                                   const std::vector<std::vector<double>>& reference,
                                   const DepthGrid& grid, std::span<const double> periods,
                                   DepthWindow window = {}, double min_period = 20.0);

std::string artifact_summary(const ArtifactScore& s);

}  // namespace surfkern
