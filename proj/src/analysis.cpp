#include "surfkern/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "surfkern/errors.hpp"
#include "surfkern/io.hpp"

namespace surfkern {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, std::size_t min_len) {
    if (a.size() != b.size()) {
        throw ShapeError("length mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    }
    if (a.size() < min_len) throw ShapeError("need at least " + std::to_string(min_len) + " values");
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
    check_lengths(pred, truth, 1);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
    return s / static_cast<double>(pred.size());
}

double mape(std::span<const double> pred, std::span<const double> truth) {
    check_lengths(pred, truth, 1);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] == 0.0) throw DomainError("MAPE undefined for a zero truth value");
        s += std::abs(pred[i] - truth[i]) / std::abs(truth[i]);
    }
    return 100.0 * s / static_cast<double>(pred.size());
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    check_lengths(a, b, 1);
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) throw DomainError("cosine similarity of a zero vector");
    return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

double pearson(std::span<const double> a, std::span<const double> b) {
    check_lengths(a, b, 2);
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        ab += da * db;
        aa += da * da;
        bb += db * db;
    }
    if (aa == 0.0 || bb == 0.0) throw DomainError("correlation of a constant vector");
    return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

std::vector<PeriodBand> standard_bands() {
    return {{2, 5}, {5, 10}, {10, 20}, {20, 30}, {30, 45}, {45, 60}};
}

std::size_t band_index(double period, std::span<const PeriodBand> bands) {
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const bool last = b + 1 == bands.size();
        if (period >= bands[b].lo && (period < bands[b].hi || (last && period == bands[b].hi))) {
            return b;
        }
    }
    throw DomainError("period " + format_double(period) + " s lies outside the reporting bands");
}

std::vector<BandReport> band_report(std::span<const PeriodRecord> records,
                                    std::span<const PeriodBand> bands) {
    struct Acc {
        std::vector<double> pred, truth;
        double cos_sum = 0.0, corr_sum = 0.0;
        std::size_t kernel_pairs = 0;
    };
    std::map<std::pair<int, std::size_t>, Acc> acc;
    for (const auto& r : records) {
        const std::size_t b = band_index(r.period, bands);
        Acc& a = acc[{static_cast<int>(r.wave), b}];
        a.pred.push_back(r.predicted);
        a.truth.push_back(r.truth);
        if (!r.surrogate_kernel.empty() || !r.reference_kernel.empty()) {
            a.cos_sum += cosine_similarity(r.surrogate_kernel, r.reference_kernel);
            a.corr_sum += pearson(r.surrogate_kernel, r.reference_kernel);
            ++a.kernel_pairs;
        }
    }
    std::vector<BandReport> out;
    for (const auto& [key, a] : acc) {
        BandReport rep;
        rep.wave = static_cast<WaveType>(key.first);
        rep.band = bands[key.second];
        rep.mae = mae(a.pred, a.truth);
        rep.mape = mape(a.pred, a.truth);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rep.cosine = a.kernel_pairs ? a.cos_sum / static_cast<double>(a.kernel_pairs) : nan;
        rep.correlation = a.kernel_pairs ? a.corr_sum / static_cast<double>(a.kernel_pairs) : nan;
        rep.n = a.pred.size();
        out.push_back(rep);
    }
    return out;
}

std::vector<BandReport> band_report(std::span<const PeriodRecord> records) {
    const auto bands = standard_bands();
    return band_report(records, bands);
}

std::string band_report_csv(std::span<const BandReport> rows) {
    std::string out(kBandReportCsvHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += std::string(to_string(r.wave)) + "," + format_double(r.band.lo) + "-" +
               format_double(r.band.hi) + "," + format_double(r.mae) + "," + format_double(r.mape) +
               "," + format_double(r.cosine) + "," + format_double(r.correlation) + "," +
               std::to_string(r.n) + "\n";
    }
    return out;
}

ArtifactScore prior_artifact_score(const std::vector<std::vector<double>>& surrogate,
                                   const std::vector<std::vector<double>>& reference,
                                   const DepthGrid& grid, std::span<const double> periods,
                                   DepthWindow window, double min_period) {
    if (surrogate.size() != periods.size() || reference.size() != periods.size()) {
        throw ShapeError("kernel matrices need one row per period");
    }
    std::vector<std::size_t> layers;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double z = grid.midpoint(i);
        if (z >= window.top && z <= window.bottom) layers.push_back(i);
    }
    if (layers.empty()) throw DomainError("depth window contains no layers");

    ArtifactScore s;
    std::vector<std::size_t> extremum_layer;
    for (std::size_t p = 0; p < periods.size(); ++p) {
        if (surrogate[p].size() != grid.size() || reference[p].size() != grid.size()) {
            throw ShapeError("kernel row length does not match the depth grid");
        }
        if (periods[p] < min_period) continue;
        for (double v : reference[p]) s.kernel_peak = std::max(s.kernel_peak, std::abs(v));
        std::size_t best = layers.front();
        double best_mag = -1.0;
        for (std::size_t i : layers) {
            const double mag = std::abs(surrogate[p][i] - reference[p][i]);
            if (mag > best_mag) {
                best_mag = mag;
                best = i;
            }
        }
        s.periods.push_back(periods[p]);
        s.extremum_depths.push_back(grid.midpoint(best));
        s.extremum_magnitudes.push_back(best_mag);
        extremum_layer.push_back(best);
    }
    if (s.periods.empty()) throw DomainError("no periods at or above the minimum period");

    const double largest =
        *std::max_element(s.extremum_magnitudes.begin(), s.extremum_magnitudes.end());
    if (!(largest >= 0.01 * s.kernel_peak) || largest == 0.0) {
        s.no_artifact = true;
        s.score = 0.0;
        return s;
    }

    auto within = [&](double center) {
        std::size_t k = 0;
        for (double z : s.extremum_depths) k += std::abs(z - center) <= 10.0;
        return k;
    };
    // Most frequent extremum layer; ties go to the one with more company
    // within 10 km, then to the shallower one.
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t l : extremum_layer) ++counts[l];
    std::size_t mode = counts.begin()->first;
    std::size_t mode_count = 0, mode_near = 0;
    for (const auto& [layer, count] : counts) {
        const std::size_t near = within(grid.midpoint(layer));
        if (count > mode_count || (count == mode_count && near > mode_near)) {
            mode = layer;
            mode_count = count;
            mode_near = near;
        }
    }
    s.modal_depth = grid.midpoint(mode);
    s.score = static_cast<double>(mode_near) / static_cast<double>(s.periods.size());
    return s;
}

std::string artifact_summary(const ArtifactScore& s) {
    std::ostringstream out;
    out << "score " << format_double(s.score) << "\n";
    out << "no_artifact " << (s.no_artifact ? "true" : "false") << "\n";
    out << "modal_depth_km " << format_double(s.modal_depth) << "\n";
    out << "kernel_peak " << format_double(s.kernel_peak) << "\n";
    out << "period_s,extremum_depth_km,extremum_magnitude\n";
    for (std::size_t i = 0; i < s.periods.size(); ++i) {
        out << format_double(s.periods[i]) << "," << format_double(s.extremum_depths[i]) << ","
            << format_double(s.extremum_magnitudes[i]) << "\n";
    }
    return out.str();
}

}  // namespace surfkern
