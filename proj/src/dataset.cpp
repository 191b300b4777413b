#include "surfkern/dataset.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "surfkern/errors.hpp"

namespace surfkern {

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    workers.clear();
    if (failure) std::rethrow_exception(failure);
}

GeneratedDataset generate_dataset(const GenerationOptions& options) {
    options.prior.validate();
    const DepthGrid grid = standard_depth_grid();
    GeneratedDataset data;
    data.entries.resize(options.count);
    std::vector<std::size_t> rejected(options.count, 0);

    parallel_for(options.count, options.threads, [&](std::size_t k) {
        const std::uint64_t index = options.first_index + k;
        const std::uint64_t seed = mix_seed(options.master_seed, StreamTag::model, index);
        Rng rng(seed);
        constexpr std::size_t kMaxRedraws = 1000;
        for (std::size_t attempt = 0;; ++attempt) {
            LayeredModel model = sample_prior(rng, grid, options.prior);
            try {
                DatasetEntry e;
                e.rayleigh = dispersion_curve(model, options.periods, WaveType::rayleigh);
                e.love = dispersion_curve(model, options.periods, WaveType::love);
                e.record = {seed, options.prior.kind, std::move(model)};
                Rng mask_rng = make_stream(options.master_seed, StreamTag::mask, index);
                e.mask = sample_mask(mask_rng, options.mask_policy);
                data.entries[k] = std::move(e);
                rejected[k] = attempt;
                return;
            } catch (const NoRootError&) {
                if (attempt + 1 >= kMaxRedraws) throw;
            }
        }
    });
    for (std::size_t r : rejected) data.rejections += r;
    return data;
}

std::string GeneratedDataset::models_ndjson() const {
    std::string out;
    for (const auto& e : entries) {
        out += model_record_line(e.record);
        out += '\n';
    }
    return out;
}

std::string GeneratedDataset::curves_csv() const {
    std::string out(kCurveCsvHeader);
    out += '\n';
    for (std::size_t i = 0; i < entries.size(); ++i) {
        DispersionCurve r = entries[i].rayleigh;
        DispersionCurve l = entries[i].love;
        const std::size_t np = r.periods.size();
        for (std::size_t p = 0; p < np; ++p) {
            r.mask[p] = entries[i].mask[p];
            l.mask[p] = entries[i].mask[np + p];
        }
        append_curve_rows(out, i, r);
        append_curve_rows(out, i, l);
    }
    return out;
}

std::string GeneratedDataset::fingerprint() const {
    return sha256_hex(models_ndjson() + curves_csv());
}

GeneratedDataset dataset_from_text(const std::string& models_ndjson, const std::string& curves_csv) {
    const DepthGrid grid = standard_depth_grid();
    const auto records = models_from_ndjson(models_ndjson, grid);
    const auto curves = curves_from_csv(curves_csv);
    if (curves.size() != 2 * records.size()) {
        throw ShapeError("curve file does not hold one Rayleigh and one Love curve per model");
    }
    GeneratedDataset data;
    data.entries.resize(records.size());
    std::vector<std::uint8_t> seen(records.size(), 0);
    for (const auto& ic : curves) {
        if (ic.model_index >= records.size()) throw ShapeError("curve refers to an unknown model");
        DatasetEntry& e = data.entries[ic.model_index];
        (ic.curve.wave == WaveType::rayleigh ? e.rayleigh : e.love) = ic.curve;
        seen[ic.model_index] |= ic.curve.wave == WaveType::rayleigh ? 1 : 2;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (seen[i] != 3) throw ShapeError("model " + std::to_string(i) + " lacks a curve");
        DatasetEntry& e = data.entries[i];
        e.record = records[i];
        e.mask = e.rayleigh.mask;
        e.mask.insert(e.mask.end(), e.love.mask.begin(), e.love.mask.end());
        e.rayleigh.mask.assign(e.rayleigh.mask.size(), 1);
        e.love.mask.assign(e.love.mask.size(), 1);
    }
    return data;
}

std::vector<double> stacked_velocities(const DispersionCurve& rayleigh, const DispersionCurve& love) {
    std::vector<double> v(rayleigh.phase_velocity);
    v.insert(v.end(), love.phase_velocity.begin(), love.phase_velocity.end());
    return v;
}

MaskedSample to_masked_sample(const DatasetEntry& entry) {
    MaskedSample s;
    s.model_vector = entry.record.model.model_vector();
    s.target = stacked_velocities(entry.rayleigh, entry.love);
    s.mask = entry.mask;
    if (s.target.size() != s.mask.size()) throw ShapeError("mask length does not match the curves");
    return s;
}

std::vector<MaskedSample> to_masked_samples(const GeneratedDataset& data) {
    std::vector<MaskedSample> out;
    out.reserve(data.entries.size());
    for (const auto& e : data.entries) out.push_back(to_masked_sample(e));
    return out;
}

}  // namespace surfkern
