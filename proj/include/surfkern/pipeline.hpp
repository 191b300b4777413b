#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "surfkern/analysis.hpp"
#include "surfkern/dispersion.hpp"
#include "surfkern/earth_model.hpp"
#include "surfkern/inversion.hpp"
#include "surfkern/surrogate.hpp"

namespace surfkern {

struct PeriodGridSpec {
    double min_period = kMinPeriod;
    double max_period = kMaxPeriod;
    std::size_t count = kStandardPeriodCount;

    PeriodGrid build() const { return log_period_grid(min_period, max_period, count); }
    bool is_standard() const { return build() == standard_period_grid(); }
};

struct RunConfig {
    std::uint64_t seed = 0;
    PriorConfig prior;
    std::size_t dataset_size = 1000;
    TrainingConfig training;
    PeriodGridSpec periods;
    std::filesystem::path output_dir = "out";
    bool deterministic = false;
    unsigned threads = 1;
    InversionConfig inversion;
    double noise_sigma = 0.01;  // km/s, used by invert
    bool add_noise = false;     // perturb observations with seeded Gaussian noise before inverting

    /// Worker count after applying the deterministic flag.
    unsigned effective_threads() const { return deterministic ? 1u : std::max(1u, threads); }
    /// Throws ConfigError.
    void validate() const;
};

std::string run_config_to_json(const RunConfig& cfg);
/// Missing keys keep their defaults. Throws ConfigError on malformed input.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Every command writes into cfg.output_dir (created if missing) and reports
// progress on `log`.

struct GenerateSummary {
    std::string fingerprint;
    std::size_t count = 0;
    std::size_t rejections = 0;
};
/// models.ndjson, curves.csv, dataset.json
GenerateSummary cmd_generate(const RunConfig& cfg, std::ostream& log);

struct TrainSummary {
    std::filesystem::path checkpoint;
    double train_loss = 0.0;
    double validation_loss = 0.0;  // at the best epoch, which is the one saved
    std::size_t best_epoch = 0;
};
/// Reads models.ndjson and curves.csv from `dataset_dir`; writes checkpoint.json.
/// The training seed is cfg.seed.
TrainSummary cmd_train(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                       std::ostream& log);

struct KernelsSummary {
    std::size_t models = 0;
    std::size_t rows = 0;  // per kernel file, excluding the header
};
/// kernels_surrogate.csv, kernels_reference.csv, predictions.csv, kernels_meta.json
KernelsSummary cmd_kernels(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                           const std::filesystem::path& models_file, std::ostream& log);

inline constexpr std::string_view kPredictionCsvHeader =
    "model_index,wave,period_s,predicted_km_s,reference_km_s";

struct CompareSummary {
    std::vector<BandReport> bands;
    std::vector<std::string> warnings;
    struct Artifact {
        std::size_t model_index = 0;
        WaveType wave = WaveType::rayleigh;
        ArtifactScore score;
    };
    std::vector<Artifact> artifacts;
};
/// band_report.csv, artifact_scores.csv, compare_summary.txt
CompareSummary cmd_compare(const RunConfig& cfg, const std::filesystem::path& surrogate_kernels,
                           const std::filesystem::path& reference_kernels,
                           const std::filesystem::path& predictions, std::ostream& log);

struct InvertSummary {
    std::vector<std::size_t> model_indices;
    std::vector<InversionResult> results;
};
/// One inversion per model_index in the observation CSV (curve layout), started
/// from the prior center profile. Writes inversion_<i>.json and
/// inversion_<i>_fit.csv.
InvertSummary cmd_invert(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                         const std::filesystem::path& observations, std::ostream& log);

/// Process exit code for an exception escaping a command: 2 configuration or
/// input error, 3 numerical failure, 4 I/O error, 1 anything else.
int exit_code_for(const std::exception& e);

}  // namespace surfkern
