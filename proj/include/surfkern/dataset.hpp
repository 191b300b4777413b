#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "surfkern/dispersion.hpp"
#include "surfkern/earth_model.hpp"
#include "surfkern/io.hpp"
#include "surfkern/surrogate.hpp"

namespace surfkern {

/// One generated model with its solver curves and observation mask.
struct DatasetEntry {
    ModelRecord record;
    DispersionCurve rayleigh;
    DispersionCurve love;
    std::vector<std::uint8_t> mask;  // kOutputCount entries
};

struct GeneratedDataset {
    std::vector<DatasetEntry> entries;
    std::size_t rejections = 0;  // models redrawn because the solver found no root

    std::string models_ndjson() const;
    std::string curves_csv() const;
    /// SHA-256 over the model and curve files.
    std::string fingerprint() const;
};

struct GenerationOptions {
    std::uint64_t master_seed = 0;
    PriorConfig prior;
    std::size_t count = 0;
    std::size_t first_index = 0;  // sample indices [first_index, first_index + count)
    PeriodGrid periods = standard_period_grid();
    MaskPolicy mask_policy;
    unsigned threads = 1;
};

/// Sample i draws from the stream mix_seed(master, model, i); models for which
/// the solver finds no root are redrawn from the same stream. Results do not
/// depend on the thread count.
GeneratedDataset generate_dataset(const GenerationOptions& options);

/// Rebuilds a dataset from its model and curve files (masks come from the
/// curve file's mask column). Throws ShapeError on inconsistent files.
GeneratedDataset dataset_from_text(const std::string& models_ndjson, const std::string& curves_csv);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write to
/// per-index slots so the result is independent of scheduling.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Rayleigh then Love, 40 periods each.
std::vector<double> stacked_velocities(const DispersionCurve& rayleigh, const DispersionCurve& love);

MaskedSample to_masked_sample(const DatasetEntry& entry);
std::vector<MaskedSample> to_masked_samples(const GeneratedDataset& data);

}  // namespace surfkern
