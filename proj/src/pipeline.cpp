#include "surfkern/pipeline.hpp"

#include <cmath>
#include <map>
#include <ostream>

#include "json.hpp"
#include "surfkern/dataset.hpp"
#include "surfkern/errors.hpp"
#include "surfkern/io.hpp"
#include "surfkern/json_io.hpp"
#include "surfkern/reference_kernels.hpp"

namespace surfkern {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
    prior.validate();
    training.validate();
    inversion.validate();
    if (dataset_size == 0) throw ConfigError("dataset_size must be positive");
    if (threads == 0) throw ConfigError("threads must be positive");
    if (!(noise_sigma > 0.0)) throw ConfigError("noise_sigma must be positive");
    try {
        periods.build();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid period grid: ") + e.what());
    }
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j{{"seed", cfg.seed},
           {"prior", cfg.prior},
           {"dataset_size", cfg.dataset_size},
           {"training", cfg.training},
           {"periods", {{"min", cfg.periods.min_period}, {"max", cfg.periods.max_period}, {"count", cfg.periods.count}}},
           {"output_dir", cfg.output_dir.string()},
           {"deterministic", cfg.deterministic},
           {"threads", cfg.threads},
           {"inversion", cfg.inversion},
           {"noise_sigma", cfg.noise_sigma},
           {"add_noise", cfg.add_noise}};
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
    RunConfig cfg;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ConfigError("run config must be a JSON object");
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("prior")) {
            // A bare string selects one of the preset priors.
            const auto& p = j.at("prior");
            cfg.prior = p.is_string() ? (prior_kind_from_string(p.get<std::string>()) == PriorKind::weak
                                             ? PriorConfig::weak()
                                             : PriorConfig::strong_lvz())
                                      : p.get<PriorConfig>();
        }
        cfg.dataset_size = j.value("dataset_size", cfg.dataset_size);
        if (j.contains("training")) cfg.training = j.at("training").get<TrainingConfig>();
        if (j.contains("periods")) {
            const auto& p = j.at("periods");
            cfg.periods.min_period = p.value("min", cfg.periods.min_period);
            cfg.periods.max_period = p.value("max", cfg.periods.max_period);
            cfg.periods.count = p.value("count", cfg.periods.count);
        }
        cfg.output_dir = j.value("output_dir", cfg.output_dir.string());
        cfg.deterministic = j.value("deterministic", cfg.deterministic);
        cfg.threads = j.value("threads", cfg.threads);
        if (j.contains("inversion")) cfg.inversion = j.at("inversion").get<InversionConfig>();
        cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
        cfg.add_noise = j.value("add_noise", cfg.add_noise);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed run config: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid run config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const fs::path& path) { return run_config_from_json(read_file(path)); }

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void require_standard_surrogate(const RunConfig& cfg, const SurrogateCheckpoint& ckpt) {
    if (!cfg.periods.is_standard()) {
        throw ConfigError("the surrogate works on the standard 40-period grid (2-60 s)");
    }
    if (ckpt.input_size() != kStandardLayerCount || ckpt.output_size() != kOutputCount) {
        throw ConfigError("checkpoint shape does not match the standard depth and period grids");
    }
}

std::size_t wave_offset(WaveType w) { return w == WaveType::rayleigh ? 0 : kStandardPeriodCount; }

}  // namespace

GenerateSummary cmd_generate(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    ensure_dir(cfg.output_dir);
    GenerationOptions opt;
    opt.master_seed = cfg.seed;
    opt.prior = cfg.prior;
    opt.count = cfg.dataset_size;
    opt.periods = cfg.periods.build();
    opt.mask_policy = cfg.training.mask_policy;
    opt.threads = cfg.effective_threads();
    const GeneratedDataset data = generate_dataset(opt);
    for (const auto& e : data.entries) {
        e.rayleigh.validate();
        e.love.validate();
    }
    GenerateSummary s{data.fingerprint(), data.entries.size(), data.rejections};
    write_file(cfg.output_dir / "models.ndjson", data.models_ndjson());
    write_file(cfg.output_dir / "curves.csv", data.curves_csv());
    const json meta{{"fingerprint", s.fingerprint},
                    {"count", s.count},
                    {"rejections", s.rejections},
                    {"seed", cfg.seed},
                    {"prior", cfg.prior}};
    write_file(cfg.output_dir / "dataset.json", meta.dump(2) + "\n");
    log << "generated " << s.count << " models (" << s.rejections << " redrawn), fingerprint "
        << s.fingerprint << "\n";
    return s;
}

TrainSummary cmd_train(const RunConfig& cfg, const fs::path& dataset_dir, std::ostream& log) {
    cfg.validate();
    if (!cfg.periods.is_standard()) {
        throw ConfigError("training requires the standard 40-period grid (2-60 s)");
    }
    TrainingConfig tc = cfg.training;
    tc.seed = cfg.seed;
    if (tc.layer_sizes.front() != kStandardLayerCount || tc.layer_sizes.back() != kOutputCount) {
        throw ConfigError("network layer sizes must start at 38 and end at 80");
    }
    const GeneratedDataset data =
        dataset_from_text(read_file(dataset_dir / "models.ndjson"), read_file(dataset_dir / "curves.csv"));
    const PeriodGrid grid = cfg.periods.build();
    for (const auto& e : data.entries) {
        if (!(e.rayleigh.periods == grid) || !(e.love.periods == grid)) {
            throw ConfigError("dataset periods differ from the configured period grid");
        }
    }
    const auto samples = to_masked_samples(data);
    if (samples.size() < 2 * tc.batch_size) {
        throw ConfigError("dataset has " + std::to_string(samples.size()) +
                          " samples; training needs at least twice the batch size");
    }
    ensure_dir(cfg.output_dir);
    SurrogateCheckpoint ckpt = train(samples, tc);
    ckpt.dataset_fingerprint = data.fingerprint();
    TrainSummary s;
    s.checkpoint = cfg.output_dir / "checkpoint.json";
    s.best_epoch = ckpt.best_epoch;
    s.train_loss = ckpt.history.train.at(ckpt.best_epoch - 1);
    s.validation_loss = ckpt.history.validation.at(ckpt.best_epoch - 1);
    save_checkpoint(ckpt, s.checkpoint);
    log << "trained " << tc.epochs << " epochs on " << samples.size() << " samples; best epoch "
        << s.best_epoch << " train loss " << format_double(s.train_loss) << " validation loss "
        << format_double(s.validation_loss) << "\n";
    return s;
}

KernelsSummary cmd_kernels(const RunConfig& cfg, const fs::path& checkpoint,
                           const fs::path& models_file, std::ostream& log) {
    cfg.validate();
    const SurrogateCheckpoint ckpt = load_checkpoint(checkpoint);
    require_standard_surrogate(cfg, ckpt);
    const DepthGrid grid = standard_depth_grid();
    const PeriodGrid periods = cfg.periods.build();
    const auto records = models_from_ndjson(read_file(models_file), grid);

    struct Slot {
        std::string surrogate, reference, predictions;
    };
    std::vector<Slot> slots(records.size());
    parallel_for(records.size(), cfg.effective_threads(), [&](std::size_t m) {
        const LayeredModel& model = records[m].model;
        const auto mv = model.model_vector();
        const Eigen::VectorXd pred = forward(ckpt, mv);
        for (WaveType w : {WaveType::rayleigh, WaveType::love}) {
            const KernelMatrix ref = kernel_matrix(model, periods, w);
            KernelMatrix sur{w, periods, grid, {}};
            const DispersionCurve truth = dispersion_curve(model, periods, w);
            for (std::size_t p = 0; p < periods.size(); ++p) {
                const std::size_t out = wave_offset(w) + p;
                sur.rows.push_back(surrogate_kernel(ckpt, grid, mv, out));
                slots[m].predictions += std::to_string(m) + "," + std::string(to_string(w)) + "," +
                                        format_double(periods[p]) + "," +
                                        format_double(pred[static_cast<Eigen::Index>(out)]) + "," +
                                        format_double(truth.phase_velocity[p]) + "\n";
            }
            append_kernel_rows(slots[m].surrogate, m, sur);
            append_kernel_rows(slots[m].reference, m, ref);
        }
    });
    std::string sur(kKernelCsvHeader), ref(kKernelCsvHeader), pred(kPredictionCsvHeader);
    sur += '\n';
    ref += '\n';
    pred += '\n';
    for (const auto& s : slots) {
        sur += s.surrogate;
        ref += s.reference;
        pred += s.predictions;
    }
    ensure_dir(cfg.output_dir);
    write_file(cfg.output_dir / "kernels_surrogate.csv", sur);
    write_file(cfg.output_dir / "kernels_reference.csv", ref);
    write_file(cfg.output_dir / "predictions.csv", pred);
    const json meta{{"checkpoint_sha256", sha256_hex(read_file(checkpoint))},
                    {"dataset_fingerprint", ckpt.dataset_fingerprint},
                    {"models_sha256", sha256_hex(read_file(models_file))},
                    {"seed", cfg.seed}};
    write_file(cfg.output_dir / "kernels_meta.json", meta.dump(2) + "\n");
    KernelsSummary s{records.size(), records.size() * 2 * periods.size() * grid.size()};
    log << "kernels for " << s.models << " models written to " << cfg.output_dir.string() << "\n";
    return s;
}

CompareSummary cmd_compare(const RunConfig& cfg, const fs::path& surrogate_kernels,
                           const fs::path& reference_kernels, const fs::path& predictions,
                           std::ostream& log) {
    cfg.validate();
    const DepthGrid grid = standard_depth_grid();
    const auto sur = kernels_from_csv(read_file(surrogate_kernels), grid);
    const auto ref = kernels_from_csv(read_file(reference_kernels), grid);
    if (sur.size() != ref.size()) throw ShapeError("kernel files hold different model sets");

    struct Pred {
        double predicted, reference;
    };
    std::map<std::tuple<std::size_t, WaveType, double>, Pred> preds;
    {
        const std::string text = read_file(predictions);
        std::size_t start = 0;
        bool header = true;
        while (start < text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string::npos) end = text.size();
            const std::string_view line(text.data() + start, end - start);
            start = end + 1;
            if (line.empty()) continue;
            if (header) {
                if (line != kPredictionCsvHeader) throw ShapeError("unexpected predictions CSV header");
                header = false;
                continue;
            }
            const auto f = split_csv_line(line);
            if (f.size() != 5) throw ShapeError("predictions CSV row needs 5 fields");
            preds[{static_cast<std::size_t>(std::stoull(f[0])), wave_type_from_string(f[1]),
                   parse_double(f[2])}] = {parse_double(f[3]), parse_double(f[4])};
        }
    }

    std::vector<PeriodRecord> records;
    CompareSummary summary;
    for (std::size_t k = 0; k < sur.size(); ++k) {
        const auto& s = sur[k];
        const auto& r = ref[k];
        if (s.model_index != r.model_index || s.kernels.wave != r.kernels.wave ||
            !(s.kernels.periods == r.kernels.periods)) {
            throw ShapeError("surrogate and reference kernel files are not aligned");
        }
        const auto periods = s.kernels.periods.periods();
        for (std::size_t p = 0; p < periods.size(); ++p) {
            const auto it = preds.find({s.model_index, s.kernels.wave, periods[p]});
            if (it == preds.end()) throw ShapeError("prediction missing for a kernel row");
            PeriodRecord rec;
            rec.wave = s.kernels.wave;
            rec.period = periods[p];
            rec.predicted = it->second.predicted;
            rec.truth = it->second.reference;
            rec.surrogate_kernel = s.kernels.rows[p];
            rec.reference_kernel = r.kernels.rows[p];
            records.push_back(std::move(rec));
        }
        if (periods.back() >= 20.0) {
            summary.artifacts.push_back(
                {s.model_index, s.kernels.wave,
                 prior_artifact_score(s.kernels.rows, r.kernels.rows, grid, periods)});
        } else {
            summary.warnings.push_back("model " + std::to_string(s.model_index) + " " +
                                       std::string(to_string(s.kernels.wave)) +
                                       ": no periods of 20 s or more, artifact score skipped");
        }
    }
    const auto bands = standard_bands();
    summary.bands = band_report(records, bands);
    for (WaveType w : {WaveType::rayleigh, WaveType::love}) {
        for (const auto& b : bands) {
            const bool present = std::any_of(summary.bands.begin(), summary.bands.end(),
                                             [&](const BandReport& r) { return r.wave == w && r.band == b; });
            if (!present) {
                summary.warnings.push_back("no samples for " + std::string(to_string(w)) + " " +
                                           format_double(b.lo) + "-" + format_double(b.hi) + " s");
            }
        }
    }
    for (const auto& w : summary.warnings) log << "warning: " << w << "\n";

    std::string scores = "model_index,wave,score,no_artifact,modal_depth_km\n";
    for (const auto& a : summary.artifacts) {
        scores += std::to_string(a.model_index) + "," + std::string(to_string(a.wave)) + "," +
                  format_double(a.score.score) + "," + (a.score.no_artifact ? "1" : "0") + "," +
                  format_double(a.score.modal_depth) + "\n";
    }
    std::string text = "seed " + std::to_string(cfg.seed) + "\n";
    const fs::path meta_path = surrogate_kernels.parent_path() / "kernels_meta.json";
    if (fs::exists(meta_path)) {
        const json meta = json::parse(read_file(meta_path), nullptr, false);
        if (meta.is_object()) {
            text += "dataset_fingerprint " + meta.value("dataset_fingerprint", std::string()) + "\n";
            text += "checkpoint_sha256 " + meta.value("checkpoint_sha256", std::string()) + "\n";
        }
    }
    text += "\n";
    for (const auto& r : summary.bands) {
        text += std::string(to_string(r.wave)) + " " + format_double(r.band.lo) + "-" +
                format_double(r.band.hi) + " s: MAE " + format_double(r.mae) + " km/s, MAPE " +
                format_double(r.mape) + " %, cosine " + format_double(r.cosine) + ", correlation " +
                format_double(r.correlation) + ", N " + std::to_string(r.n) + "\n";
    }
    for (const auto& a : summary.artifacts) {
        text += "\nmodel " + std::to_string(a.model_index) + " " + std::string(to_string(a.wave)) + "\n" +
                artifact_summary(a.score);
    }
    ensure_dir(cfg.output_dir);
    write_file(cfg.output_dir / "band_report.csv", band_report_csv(summary.bands));
    write_file(cfg.output_dir / "artifact_scores.csv", scores);
    write_file(cfg.output_dir / "compare_summary.txt", text);
    log << "compared " << records.size() << " period records from " << sur.size() << " kernel sets\n";
    return summary;
}

InvertSummary cmd_invert(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& observations,
                         std::ostream& log) {
    cfg.validate();
    const SurrogateCheckpoint ckpt = load_checkpoint(checkpoint);
    require_standard_surrogate(cfg, ckpt);
    const PeriodGrid periods = cfg.periods.build();
    const DepthGrid grid = standard_depth_grid();

    std::map<std::size_t, std::pair<std::vector<double>, std::vector<std::uint8_t>>> sets;
    for (const auto& c : curves_from_csv(read_file(observations))) {
        if (!(c.curve.periods == periods)) throw ShapeError("observation periods differ from the period grid");
        auto& [obs, mask] = sets[c.model_index];
        if (obs.empty()) {
            obs.assign(kOutputCount, 0.0);
            mask.assign(kOutputCount, 0);
        }
        const std::size_t off = wave_offset(c.curve.wave);
        for (std::size_t p = 0; p < periods.size(); ++p) {
            obs[off + p] = c.curve.phase_velocity[p];
            mask[off + p] = c.curve.mask[p];
        }
    }
    InvertSummary s;
    for (const auto& kv : sets) s.model_indices.push_back(kv.first);
    s.results.resize(s.model_indices.size());

    const NoiseModel noise = NoiseModel::uniform(kOutputCount, cfg.noise_sigma);
    const std::vector<double> m0 = prior_center_model(grid, cfg.prior).model_vector();
    parallel_for(s.model_indices.size(), cfg.effective_threads(), [&](std::size_t k) {
        auto obs = sets.at(s.model_indices[k]).first;
        const auto& mask = sets.at(s.model_indices[k]).second;
        if (cfg.add_noise) {
            Rng rng = make_stream(cfg.seed, StreamTag::noise, s.model_indices[k]);
            for (double& v : obs) v += gaussian(rng, 0.0, cfg.noise_sigma);
        }
        s.results[k] = invert(ckpt, obs, mask, m0, noise, cfg.inversion);
        sets.at(s.model_indices[k]).first = std::move(obs);
    });

    ensure_dir(cfg.output_dir);
    for (std::size_t k = 0; k < s.results.size(); ++k) {
        const std::size_t idx = s.model_indices[k];
        const auto& r = s.results[k];
        const auto& [obs, mask] = sets.at(idx);
        write_file(cfg.output_dir / ("inversion_" + std::to_string(idx) + ".json"), inversion_result_to_json(r));
        std::string fit = "wave,period_s,observed_km_s,mask,initial_km_s,final_km_s\n";
        for (WaveType w : {WaveType::rayleigh, WaveType::love}) {
            for (std::size_t p = 0; p < periods.size(); ++p) {
                const std::size_t i = wave_offset(w) + p;
                fit += std::string(to_string(w)) + "," + format_double(periods[p]) + "," +
                       format_double(obs[i]) + "," + (mask[i] ? "1" : "0") + "," +
                       format_double(r.initial_prediction[i]) + "," + format_double(r.final_prediction[i]) + "\n";
            }
        }
        write_file(cfg.output_dir / ("inversion_" + std::to_string(idx) + "_fit.csv"), fit);
        log << "model " << idx << ": " << r.iterations << " iterations, chi-square "
            << format_double(r.misfit.front()) << " -> " << format_double(r.misfit.back())
            << (r.converged ? " (converged)" : " (not converged)") << "\n";
    }
    return s;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ShapeError*>(&e) ||
        dynamic_cast<const DomainError*>(&e)) {
        return 2;
    }
    if (dynamic_cast<const NumericalError*>(&e)) return 3;
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const CheckpointFormatError*>(&e)) return 4;
    return 1;
}

}  // namespace surfkern
