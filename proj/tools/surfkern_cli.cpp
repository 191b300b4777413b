#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "surfkern/errors.hpp"
#include "surfkern/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool deterministic = false;
    std::optional<unsigned> threads;
};

surfkern::RunConfig resolve(const CommonOptions& o) {
    surfkern::RunConfig cfg = o.config.empty() ? surfkern::RunConfig{} : surfkern::load_run_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.deterministic) cfg.deterministic = true;
    if (o.threads) cfg.threads = *o.threads;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surface-wave dispersion surrogate and sensitivity kernel laboratory"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonOptions common;
    app.add_option("--config", common.config, "run configuration (JSON)");
    app.add_option("--seed", common.seed, "master seed");
    app.add_option("--out", common.out, "output directory");
    app.add_flag("--deterministic", common.deterministic, "sequential execution, bit-identical reruns");
    app.add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);

    std::optional<std::string> prior;
    std::optional<std::size_t> size;
    auto* generate = app.add_subcommand("generate", "sample models and compute dispersion curves");
    generate->add_option("--prior", prior, "weak or strong_lvz")->check(CLI::IsMember({"weak", "strong_lvz"}));
    generate->add_option("--size", size, "number of models")->check(CLI::PositiveNumber);

    std::string data_dir;
    auto* train = app.add_subcommand("train", "train the surrogate on a generated dataset");
    train->add_option("--data", data_dir, "dataset directory")->required();

    std::string checkpoint, models;
    auto* kernels = app.add_subcommand("kernels", "surrogate and reference kernels for a model file");
    kernels->add_option("--checkpoint", checkpoint)->required();
    kernels->add_option("--models", models, "model ensemble (NDJSON)")->required();

    std::string sur, ref, preds;
    auto* compare = app.add_subcommand("compare", "band statistics and prior-artifact scores");
    compare->add_option("--surrogate", sur, "surrogate kernel CSV")->required();
    compare->add_option("--reference", ref, "reference kernel CSV")->required();
    compare->add_option("--predictions", preds, "prediction CSV")->required();

    std::string observations;
    auto* invert = app.add_subcommand("invert", "invert dispersion observations with the surrogate");
    invert->add_option("--checkpoint", checkpoint)->required();
    invert->add_option("--observations", observations, "dispersion CSV")->required();
    invert->add_flag("--add-noise", "perturb observations with seeded noise");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        surfkern::RunConfig cfg = resolve(common);
        if (*generate) {
            if (prior) {
                cfg.prior = *prior == "weak" ? surfkern::PriorConfig::weak() : surfkern::PriorConfig::strong_lvz();
            }
            if (size) cfg.dataset_size = *size;
            surfkern::cmd_generate(cfg, std::cout);
        } else if (*train) {
            surfkern::cmd_train(cfg, data_dir, std::cout);
        } else if (*kernels) {
            surfkern::cmd_kernels(cfg, checkpoint, models, std::cout);
        } else if (*compare) {
            surfkern::cmd_compare(cfg, sur, ref, preds, std::cout);
        } else if (*invert) {
            if (invert->count("--add-noise") > 0) cfg.add_noise = true;
            surfkern::cmd_invert(cfg, checkpoint, observations, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return surfkern::exit_code_for(e);
    }
    return 0;
}
