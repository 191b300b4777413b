#include "surfkern/json_io.hpp"

#include <string>

#include "surfkern/errors.hpp"

namespace surfkern {

using nlohmann::json;

void to_json(json& j, const MaskPolicy& p) {
    j = json{{"branch_drop_probability", p.branch_drop_probability},
             {"interval_probability", p.interval_probability},
             {"interval_min_fraction", p.interval_min_fraction},
             {"interval_max_fraction", p.interval_max_fraction},
             {"min_observed", p.min_observed}};
}

void from_json(const json& j, MaskPolicy& p) {
    MaskPolicy d;
    p.branch_drop_probability = j.value("branch_drop_probability", d.branch_drop_probability);
    p.interval_probability = j.value("interval_probability", d.interval_probability);
    p.interval_min_fraction = j.value("interval_min_fraction", d.interval_min_fraction);
    p.interval_max_fraction = j.value("interval_max_fraction", d.interval_max_fraction);
    p.min_observed = j.value("min_observed", d.min_observed);
}

void to_json(json& j, const TrainingConfig& c) {
    j = json{{"layer_sizes", c.layer_sizes},
             {"learning_rate", c.learning_rate},
             {"final_learning_rate", c.final_learning_rate},
             {"beta1", c.beta1},
             {"beta2", c.beta2},
             {"adam_epsilon", c.adam_epsilon},
             {"batch_size", c.batch_size},
             {"epochs", c.epochs},
             {"seed", c.seed},
             {"validation_fraction", c.validation_fraction},
             {"mask_policy", c.mask_policy}};
}

void from_json(const json& j, TrainingConfig& c) {
    TrainingConfig d;
    c.layer_sizes = j.value("layer_sizes", d.layer_sizes);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.final_learning_rate = j.value("final_learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", d.beta1);
    c.beta2 = j.value("beta2", d.beta2);
    c.adam_epsilon = j.value("adam_epsilon", d.adam_epsilon);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.epochs = j.value("epochs", d.epochs);
    c.seed = j.value("seed", d.seed);
    c.validation_fraction = j.value("validation_fraction", d.validation_fraction);
    c.mask_policy = j.value("mask_policy", d.mask_policy);
}

void to_json(json& j, const PriorConfig& c) {
    json cps = json::array();
    for (const auto& cp : c.control_points) {
        cps.push_back({{"depth", cp.depth}, {"vs_lo", cp.vs_lo}, {"vs_hi", cp.vs_hi}});
    }
    j = json{{"kind", std::string(to_string(c.kind))},
             {"control_points", cps},
             {"layer_noise_sd", c.layer_noise_sd},
             {"moho_depth_mean", c.moho_depth_mean},
             {"moho_depth_sd", c.moho_depth_sd},
             {"moho_depth_clip", {c.moho_depth_clip.first, c.moho_depth_clip.second}},
             {"lvz_center_mean", c.lvz_center_mean},
             {"lvz_center_sd", c.lvz_center_sd},
             {"lvz_center_clip", {c.lvz_center_clip.first, c.lvz_center_clip.second}},
             {"lvz_half_width", c.lvz_half_width},
             {"lvz_reduction_range", {c.lvz_reduction_range.first, c.lvz_reduction_range.second}}};
}

void from_json(const json& j, PriorConfig& c) {
    const PriorKind kind = prior_kind_from_string(j.value("kind", std::string("weak")));
    c = kind == PriorKind::weak ? PriorConfig::weak() : PriorConfig::strong_lvz();
    if (j.contains("control_points")) {
        c.control_points.clear();
        for (const auto& cp : j.at("control_points")) {
            c.control_points.push_back(
                {cp.at("depth").get<double>(), cp.at("vs_lo").get<double>(), cp.at("vs_hi").get<double>()});
        }
    }
    auto pair = [&](const char* key, std::pair<double, double>& out) {
        if (j.contains(key)) out = {j.at(key).at(0).get<double>(), j.at(key).at(1).get<double>()};
    };
    c.layer_noise_sd = j.value("layer_noise_sd", c.layer_noise_sd);
    c.moho_depth_mean = j.value("moho_depth_mean", c.moho_depth_mean);
    c.moho_depth_sd = j.value("moho_depth_sd", c.moho_depth_sd);
    pair("moho_depth_clip", c.moho_depth_clip);
    c.lvz_center_mean = j.value("lvz_center_mean", c.lvz_center_mean);
    c.lvz_center_sd = j.value("lvz_center_sd", c.lvz_center_sd);
    pair("lvz_center_clip", c.lvz_center_clip);
    c.lvz_half_width = j.value("lvz_half_width", c.lvz_half_width);
    pair("lvz_reduction_range", c.lvz_reduction_range);
}

void to_json(json& j, const InversionConfig& c) {
    j = json{{"max_iterations", c.max_iterations}, {"initial_damping", c.initial_damping},
             {"damping_down", c.damping_down},     {"damping_up", c.damping_up},
             {"max_retries", c.max_retries},       {"tolerance", c.tolerance},
             {"vs_min", c.vs_min},                 {"vs_max", c.vs_max},
             {"step_cap", c.step_cap}};
}

void from_json(const json& j, InversionConfig& c) {
    InversionConfig d;
    c.max_iterations = j.value("max_iterations", d.max_iterations);
    c.initial_damping = j.value("initial_damping", d.initial_damping);
    c.damping_down = j.value("damping_down", d.damping_down);
    c.damping_up = j.value("damping_up", d.damping_up);
    c.max_retries = j.value("max_retries", d.max_retries);
    c.tolerance = j.value("tolerance", d.tolerance);
    c.vs_min = j.value("vs_min", d.vs_min);
    c.vs_max = j.value("vs_max", d.vs_max);
    c.step_cap = j.value("step_cap", d.step_cap);
}

namespace {

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.begin(), v.end()); }

Eigen::VectorXd vector_from(const json& j, std::size_t expected, const char* what) {
    const auto values = j.get<std::vector<double>>();
    if (values.size() != expected) {
        throw CheckpointFormatError(std::string(what) + " has " + std::to_string(values.size()) +
                                    " entries, expected " + std::to_string(expected));
    }
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

json checkpoint_to_json(const SurrogateCheckpoint& ckpt) {
    json layers = json::array();
    for (std::size_t l = 0; l < ckpt.mlp.layer_count(); ++l) {
        const auto w = ckpt.mlp.weight(l);
        std::vector<double> row_major;
        row_major.reserve(static_cast<std::size_t>(w.size()));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) row_major.push_back(w(r, c));
        }
        layers.push_back({{"rows", w.rows()},
                          {"cols", w.cols()},
                          {"weight", row_major},
                          {"bias", vector_json(ckpt.mlp.bias(l))}});
    }
    const auto& n = ckpt.normalizer;
    return json{
        {"format", "surfkern-checkpoint"},
        {"version", kCheckpointVersion},
        {"layer_sizes", ckpt.mlp.layer_sizes()},
        {"hidden_activation", ckpt.mlp.hidden_activation() == Activation::tanh ? "tanh" : "identity"},
        {"layers", layers},
        {"normalizer",
         {{"input_mean", vector_json(n.input_mean)},
          {"input_sd", vector_json(n.input_sd)},
          {"output_mean", vector_json(n.output_mean)},
          {"output_sd", vector_json(n.output_sd)}}},
        {"training_config", ckpt.config},
        {"history", {{"train", ckpt.history.train}, {"validation", ckpt.history.validation}}},
        {"best_epoch", ckpt.best_epoch},
        {"dataset_fingerprint", ckpt.dataset_fingerprint},
    };
}

SurrogateCheckpoint checkpoint_from_json(const json& doc) {
    try {
        if (!doc.is_object() || doc.value("format", std::string()) != "surfkern-checkpoint") {
            throw CheckpointFormatError("not a surfkern checkpoint");
        }
        const int version = doc.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw CheckpointFormatError("checkpoint version " + std::to_string(version) +
                                        " is not supported (expected " +
                                        std::to_string(kCheckpointVersion) + ")");
        }
        const auto sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
        const std::string act = doc.at("hidden_activation").get<std::string>();
        if (act != "tanh" && act != "identity") throw CheckpointFormatError("unknown activation");

        SurrogateCheckpoint ckpt;
        ckpt.mlp = Mlp(sizes, act == "tanh" ? Activation::tanh : Activation::identity);
        const auto& layers = doc.at("layers");
        if (layers.size() != ckpt.mlp.layer_count()) {
            throw CheckpointFormatError("layer count does not match layer_sizes");
        }
        for (std::size_t l = 0; l < ckpt.mlp.layer_count(); ++l) {
            auto w = ckpt.mlp.weight(l);
            const auto flat = layers[l].at("weight").get<std::vector<double>>();
            if (flat.size() != static_cast<std::size_t>(w.size())) {
                throw CheckpointFormatError("weight array of layer " + std::to_string(l) + " is truncated");
            }
            std::size_t k = 0;
            for (Eigen::Index r = 0; r < w.rows(); ++r) {
                for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[k++];
            }
            ckpt.mlp.bias(l) = vector_from(layers[l].at("bias"), sizes[l + 1], "bias");
        }
        const auto& n = doc.at("normalizer");
        ckpt.normalizer.input_mean = vector_from(n.at("input_mean"), sizes.front(), "input_mean");
        ckpt.normalizer.input_sd = vector_from(n.at("input_sd"), sizes.front(), "input_sd");
        ckpt.normalizer.output_mean = vector_from(n.at("output_mean"), sizes.back(), "output_mean");
        ckpt.normalizer.output_sd = vector_from(n.at("output_sd"), sizes.back(), "output_sd");
        ckpt.config = doc.at("training_config").get<TrainingConfig>();
        ckpt.history.train = doc.at("history").at("train").get<std::vector<double>>();
        ckpt.history.validation = doc.at("history").at("validation").get<std::vector<double>>();
        ckpt.best_epoch = doc.at("best_epoch").get<std::size_t>();
        ckpt.dataset_fingerprint = doc.at("dataset_fingerprint").get<std::string>();
        return ckpt;
    } catch (const json::exception& e) {
        throw CheckpointFormatError(std::string("malformed checkpoint: ") + e.what());
    } catch (const ConfigError& e) {
        throw CheckpointFormatError(std::string("malformed checkpoint: ") + e.what());
    }
}

}  // namespace surfkern
