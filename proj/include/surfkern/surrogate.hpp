#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "surfkern/dispersion.hpp"
#include "surfkern/rng.hpp"

namespace surfkern {

inline constexpr std::size_t kOutputCount = 2 * kStandardPeriodCount;  // Rayleigh then Love
inline constexpr int kCheckpointVersion = 1;

enum class Activation { tanh, identity };

/// Fully connected network. Hidden layers use `hidden_activation`; the output
/// layer is affine. All weights live in one parameter vector so the optimizer
/// can treat them uniformly.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<std::size_t> layer_sizes,
                 Activation hidden_activation = Activation::tanh);

    /// Gaussian init with sd 1/sqrt(fan_in), zero biases.
    static Mlp initialized(std::vector<std::size_t> layer_sizes, Rng& rng,
                           Activation hidden_activation = Activation::tanh);

    const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    std::size_t input_size() const { return sizes_.front(); }
    std::size_t output_size() const { return sizes_.back(); }
    std::size_t layer_count() const noexcept { return sizes_.size() - 1; }
    Activation hidden_activation() const noexcept { return activation_; }

    Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
    Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer);
    Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
    Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);

    const Eigen::VectorXd& parameters() const noexcept { return params_; }
    Eigen::VectorXd& parameters() noexcept { return params_; }

    /// Network output for normalized inputs, one column per sample.
    Eigen::MatrixXd forward_normalized(const Eigen::MatrixXd& x) const;

    /// Positions of a layer's weights (column-major, outputs x inputs) and
    /// biases inside parameters().
    std::size_t weight_offset(std::size_t layer) const;
    std::size_t bias_offset(std::size_t layer) const;

    bool operator==(const Mlp& other) const {
        return sizes_ == other.sizes_ && activation_ == other.activation_ &&
               params_ == other.params_;
    }

private:
    std::vector<std::size_t> sizes_;
    Activation activation_ = Activation::tanh;
    Eigen::VectorXd params_;
};

/// Per-channel affine standardization of inputs and outputs.
struct Normalizer {
    Eigen::VectorXd input_mean, input_sd;
    Eigen::VectorXd output_mean, output_sd;

    static Normalizer identity(std::size_t inputs, std::size_t outputs);

    Eigen::VectorXd normalize_input(const Eigen::VectorXd& x) const;
    Eigen::VectorXd denormalize_input(const Eigen::VectorXd& z) const;
    Eigen::VectorXd normalize_output(const Eigen::VectorXd& y) const;
    Eigen::VectorXd denormalize_output(const Eigen::VectorXd& z) const;

    bool operator==(const Normalizer& other) const {
        return input_mean == other.input_mean && input_sd == other.input_sd &&
               output_mean == other.output_mean && output_sd == other.output_sd;
    }
};

/// One training example: 38 Vs values, 80 phase velocities (Rayleigh periods
/// first, then Love) and the observation mask.
struct MaskedSample {
    std::vector<double> model_vector;
    std::vector<double> target;
    std::vector<std::uint8_t> mask;

    std::size_t observed() const;
};

struct MaskPolicy {
    double branch_drop_probability = 0.3;
    double interval_probability = 0.5;
    double interval_min_fraction = 0.1;
    double interval_max_fraction = 0.5;
    std::size_t min_observed = 8;
};

/// Random observation mask over kOutputCount channels: possibly drop a whole
/// wave branch, possibly mask a contiguous period interval of what remains.
std::vector<std::uint8_t> sample_mask(Rng& rng, const MaskPolicy& policy);

struct TrainingConfig {
    std::vector<std::size_t> layer_sizes = {kStandardLayerCount, 256, 256, 256, kOutputCount};
    double learning_rate = 1e-3;
    double final_learning_rate = 1e-3;  // exponential decay towards this value
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t batch_size = 128;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
    double validation_fraction = 0.1;
    MaskPolicy mask_policy;

    /// Throws ConfigError.
    void validate() const;
};

struct LossHistory {
    std::vector<double> train;
    std::vector<double> validation;
};

struct SurrogateCheckpoint {
    Mlp mlp;
    Normalizer normalizer;
    TrainingConfig config;
    LossHistory history;
    std::size_t best_epoch = 0;  // 1-based
    std::string dataset_fingerprint;

    std::size_t input_size() const { return mlp.input_size(); }
    std::size_t output_size() const { return mlp.output_size(); }
};

/// Mean and sd over the dataset; output statistics use observed entries only.
/// Throws NormalizationError when a channel has zero variance.
Normalizer fit_normalizer(std::span<const MaskedSample> samples);

/// Σ mask (pred - target)^2 / Σ mask in normalized output space.
double masked_loss(const Mlp& mlp, const Normalizer& norm, std::span<const MaskedSample> samples);

/// Deterministic split into (train, validation) by a seeded shuffle.
struct DatasetSplit {
    std::vector<MaskedSample> train;
    std::vector<MaskedSample> validation;
};
DatasetSplit split_dataset(std::span<const MaskedSample> dataset, double validation_fraction,
                           std::uint64_t seed);

/// Adam on the masked MSE. Returns the parameters of the epoch with the lowest
/// validation loss. When `fixed_normalizer` is given it replaces fit_normalizer.
SurrogateCheckpoint train(std::span<const MaskedSample> dataset, const TrainingConfig& cfg,
                          const std::optional<Normalizer>& fixed_normalizer = std::nullopt,
                          bool verbose = false);

/// Denormalized prediction. Throws DomainError for non-finite input.
Eigen::VectorXd forward(const Mlp& mlp, const Normalizer& norm, std::span<const double> model_vector);
Eigen::VectorXd forward(const SurrogateCheckpoint& ckpt, std::span<const double> model_vector);

/// Reverse-mode gradient of output `output_index` with respect to the raw Vs
/// vector, chained through both normalizers.
Eigen::VectorXd backward_gradient(const SurrogateCheckpoint& ckpt,
                                  std::span<const double> model_vector,
                                  std::size_t output_index);
Eigen::VectorXd backward_gradient(const Mlp& mlp, const Normalizer& norm,
                                  std::span<const double> model_vector,
                                  std::size_t output_index);

/// outputs x inputs; row k is backward_gradient(.., k).
Eigen::MatrixXd surrogate_jacobian(const SurrogateCheckpoint& ckpt,
                                   std::span<const double> model_vector);

/// Surrogate kernel for one output: gradient divided by layer thickness.
std::vector<double> surrogate_kernel(const SurrogateCheckpoint& ckpt, const DepthGrid& grid,
                                     std::span<const double> model_vector,
                                     std::size_t output_index);

void save_checkpoint(const SurrogateCheckpoint& ckpt, const std::filesystem::path& path);
/// Throws CheckpointFormatError for unreadable, truncated or mismatched files.
SurrogateCheckpoint load_checkpoint(const std::filesystem::path& path);

std::string checkpoint_to_string(const SurrogateCheckpoint& ckpt);
SurrogateCheckpoint checkpoint_from_string(const std::string& text);

}  // namespace surfkern
