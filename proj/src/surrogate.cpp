#include "surfkern/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "surfkern/errors.hpp"
#include "surfkern/json_io.hpp"

namespace surfkern {

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::vector<std::size_t> layer_sizes, Activation hidden_activation)
    : sizes_(std::move(layer_sizes)), activation_(hidden_activation) {
    if (sizes_.size() < 2) {
        throw ConfigError("network needs an input and an output layer");
    }
    if (std::any_of(sizes_.begin(), sizes_.end(), [](std::size_t s) { return s == 0; })) {
        throw ConfigError("layer sizes must be positive");
    }
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        count += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
    }
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count));
}

Mlp Mlp::initialized(std::vector<std::size_t> layer_sizes, Rng& rng, Activation hidden_activation) {
    Mlp mlp(std::move(layer_sizes), hidden_activation);
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        auto w = mlp.weight(l);
        const double sd = 1.0 / std::sqrt(static_cast<double>(w.cols()));
        std::normal_distribution<double> dist(0.0, sd);
        // Row-major fill so the draw order does not depend on storage layout.
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
        }
    }
    return mlp;
}

std::size_t Mlp::weight_offset(std::size_t layer) const {
    if (layer >= layer_count()) throw ShapeError("layer index out of range");
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) off += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
    return off;
}

std::size_t Mlp::bias_offset(std::size_t layer) const {
    return weight_offset(layer) + sizes_[layer] * sizes_[layer + 1];
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t layer) const {
    return {params_.data() + weight_offset(layer), static_cast<Eigen::Index>(sizes_[layer + 1]),
            static_cast<Eigen::Index>(sizes_[layer])};
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(std::size_t layer) {
    return {params_.data() + weight_offset(layer), static_cast<Eigen::Index>(sizes_[layer + 1]),
            static_cast<Eigen::Index>(sizes_[layer])};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t layer) const {
    return {params_.data() + bias_offset(layer), static_cast<Eigen::Index>(sizes_[layer + 1])};
}

Eigen::Map<Eigen::VectorXd> Mlp::bias(std::size_t layer) {
    return {params_.data() + bias_offset(layer), static_cast<Eigen::Index>(sizes_[layer + 1])};
}

namespace {

// Activations of every layer, a[0] = input. Kept for the reverse sweep.
struct Tape {
    std::vector<Eigen::MatrixXd> a;
};

Tape record_forward(const Mlp& mlp, const Eigen::MatrixXd& x) {
    Tape tape;
    tape.a.reserve(mlp.layer_count() + 1);
    tape.a.push_back(x);
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        Eigen::MatrixXd z = mlp.weight(l) * tape.a.back();
        z.colwise() += mlp.bias(l);
        const bool hidden = l + 1 < mlp.layer_count();
        if (hidden && mlp.hidden_activation() == Activation::tanh) {
            z = z.array().tanh().matrix();
        }
        tape.a.push_back(std::move(z));
    }
    return tape;
}

// Reverse sweep. `delta` is dLoss/dOutput (one column per sample). Adds
// parameter gradients into `grad` when given and returns dLoss/dInput.
Eigen::MatrixXd reverse_sweep(const Mlp& mlp, const Tape& tape, Eigen::MatrixXd delta,
                              Eigen::VectorXd* grad) {
    for (std::size_t l = mlp.layer_count(); l-- > 0;) {
        const bool hidden = l + 1 < mlp.layer_count();
        if (hidden && mlp.hidden_activation() == Activation::tanh) {
            delta.array() *= 1.0 - tape.a[l + 1].array().square();
        }
        if (grad != nullptr) {
            const auto rows = static_cast<Eigen::Index>(mlp.layer_sizes()[l + 1]);
            const auto cols = static_cast<Eigen::Index>(mlp.layer_sizes()[l]);
            Eigen::Map<Eigen::MatrixXd> gw(grad->data() + mlp.weight_offset(l), rows, cols);
            Eigen::Map<Eigen::VectorXd> gb(grad->data() + mlp.bias_offset(l), rows);
            gw.noalias() += delta * tape.a[l].transpose();
            gb.noalias() += delta.rowwise().sum();
        }
        delta = mlp.weight(l).transpose() * delta;
    }
    return delta;
}

}  // namespace

Eigen::MatrixXd Mlp::forward_normalized(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.rows()) != input_size()) {
        throw ShapeError("network input has the wrong length");
    }
    return record_forward(*this, x).a.back();
}

// ---------------------------------------------------------------------------
// Normalizer

Normalizer Normalizer::identity(std::size_t inputs, std::size_t outputs) {
    const auto ni = static_cast<Eigen::Index>(inputs);
    const auto no = static_cast<Eigen::Index>(outputs);
    return {Eigen::VectorXd::Zero(ni), Eigen::VectorXd::Ones(ni), Eigen::VectorXd::Zero(no),
            Eigen::VectorXd::Ones(no)};
}

Eigen::VectorXd Normalizer::normalize_input(const Eigen::VectorXd& x) const {
    return ((x - input_mean).array() / input_sd.array()).matrix();
}

Eigen::VectorXd Normalizer::denormalize_input(const Eigen::VectorXd& z) const {
    return (z.array() * input_sd.array()).matrix() + input_mean;
}

Eigen::VectorXd Normalizer::normalize_output(const Eigen::VectorXd& y) const {
    return ((y - output_mean).array() / output_sd.array()).matrix();
}

Eigen::VectorXd Normalizer::denormalize_output(const Eigen::VectorXd& z) const {
    return (z.array() * output_sd.array()).matrix() + output_mean;
}

Normalizer fit_normalizer(std::span<const MaskedSample> samples) {
    if (samples.empty()) throw NormalizationError("cannot normalize an empty dataset");
    const std::size_t ni = samples.front().model_vector.size();
    const std::size_t no = samples.front().target.size();
    Normalizer n;
    n.input_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ni));
    n.input_sd = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ni));
    n.output_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(no));
    n.output_sd = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(no));

    for (std::size_t i = 0; i < ni; ++i) {
        double sum = 0.0;
        for (const auto& s : samples) sum += s.model_vector[i];
        const double mean = sum / static_cast<double>(samples.size());
        double ss = 0.0;
        for (const auto& s : samples) ss += (s.model_vector[i] - mean) * (s.model_vector[i] - mean);
        const double sd = std::sqrt(ss / static_cast<double>(samples.size()));
        if (!(sd > 0.0)) throw NormalizationError("input channel " + std::to_string(i) + " is constant");
        n.input_mean[static_cast<Eigen::Index>(i)] = mean;
        n.input_sd[static_cast<Eigen::Index>(i)] = sd;
    }
    for (std::size_t k = 0; k < no; ++k) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& s : samples) {
            if (s.mask[k]) {
                sum += s.target[k];
                ++count;
            }
        }
        if (count == 0) throw NormalizationError("output channel " + std::to_string(k) + " never observed");
        const double mean = sum / static_cast<double>(count);
        double ss = 0.0;
        for (const auto& s : samples) {
            if (s.mask[k]) ss += (s.target[k] - mean) * (s.target[k] - mean);
        }
        const double sd = std::sqrt(ss / static_cast<double>(count));
        if (!(sd > 0.0)) {
            throw NormalizationError("output channel " + std::to_string(k) + " has zero variance");
        }
        n.output_mean[static_cast<Eigen::Index>(k)] = mean;
        n.output_sd[static_cast<Eigen::Index>(k)] = sd;
    }
    return n;
}

// ---------------------------------------------------------------------------
// Masks and samples

std::size_t MaskedSample::observed() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::vector<std::uint8_t> sample_mask(Rng& rng, const MaskPolicy& policy) {
    constexpr std::size_t np = kStandardPeriodCount;
    for (;;) {
        std::vector<std::uint8_t> mask(kOutputCount, 1);
        if (bernoulli(rng, policy.branch_drop_probability)) {
            const std::size_t branch = bernoulli(rng, 0.5) ? 1 : 0;
            std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(branch * np), np, 0);
        }
        if (bernoulli(rng, policy.interval_probability)) {
            const double frac =
                uniform(rng, policy.interval_min_fraction, policy.interval_max_fraction);
            const auto len = std::clamp<std::size_t>(
                static_cast<std::size_t>(std::lround(frac * static_cast<double>(np))), 1, np);
            const auto start = std::uniform_int_distribution<std::size_t>(0, np - len)(rng);
            for (std::size_t b = 0; b < 2; ++b) {
                for (std::size_t p = start; p < start + len; ++p) mask[b * np + p] = 0;
            }
        }
        if (static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)) >= policy.min_observed) {
            return mask;
        }
    }
}

void TrainingConfig::validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("layer_sizes needs at least two entries");
    if (!(learning_rate > 0.0) || !(final_learning_rate > 0.0)) {
        throw ConfigError("learning rates must be positive");
    }
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) || !(adam_epsilon > 0.0)) {
        throw ConfigError("Adam moments must lie in (0, 1)");
    }
    if (batch_size == 0 || epochs == 0) throw ConfigError("batch size and epochs must be positive");
    if (!(validation_fraction > 0.0 && validation_fraction <= 0.5)) {
        throw ConfigError("validation fraction must lie in (0, 0.5]");
    }
}

namespace {

void check_sample(const MaskedSample& s, std::size_t ni, std::size_t no) {
    if (s.model_vector.size() != ni || s.target.size() != no || s.mask.size() != no) {
        throw ShapeError("sample does not match the network shape");
    }
}

// Normalized inputs, targets and mask for a list of sample indices.
struct Batch {
    Eigen::MatrixXd x, y, m;
    double observed = 0.0;
};

Batch make_batch(std::span<const MaskedSample> samples, std::span<const std::size_t> idx,
                 const Normalizer& norm) {
    const auto ni = norm.input_mean.size();
    const auto no = norm.output_mean.size();
    const auto nb = static_cast<Eigen::Index>(idx.size());
    Batch b{Eigen::MatrixXd(ni, nb), Eigen::MatrixXd(no, nb), Eigen::MatrixXd(no, nb), 0.0};
    for (Eigen::Index j = 0; j < nb; ++j) {
        const MaskedSample& s = samples[idx[static_cast<std::size_t>(j)]];
        for (Eigen::Index i = 0; i < ni; ++i) {
            b.x(i, j) = (s.model_vector[static_cast<std::size_t>(i)] - norm.input_mean[i]) /
                        norm.input_sd[i];
        }
        for (Eigen::Index k = 0; k < no; ++k) {
            const bool obs = s.mask[static_cast<std::size_t>(k)] != 0;
            b.m(k, j) = obs ? 1.0 : 0.0;
            // Masked targets may hold anything; they must not leak into the loss.
            b.y(k, j) = obs ? (s.target[static_cast<std::size_t>(k)] - norm.output_mean[k]) /
                                  norm.output_sd[k]
                            : 0.0;
            b.observed += b.m(k, j);
        }
    }
    return b;
}

// Sum of masked squared errors for a batch and the residual matrix.
double batch_sse(const Eigen::MatrixXd& pred, const Batch& b, Eigen::MatrixXd* residual) {
    Eigen::MatrixXd r = ((pred - b.y).array() * b.m.array()).matrix();
    const double sse = r.squaredNorm();
    if (residual != nullptr) *residual = std::move(r);
    return sse;
}

}  // namespace

double masked_loss(const Mlp& mlp, const Normalizer& norm, std::span<const MaskedSample> samples) {
    if (samples.empty()) throw ShapeError("loss of an empty sample set");
    constexpr std::size_t kChunk = 512;
    double sse = 0.0, observed = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < samples.size(); start += kChunk) {
        const std::size_t end = std::min(samples.size(), start + kChunk);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        for (std::size_t i : idx) check_sample(samples[i], mlp.input_size(), mlp.output_size());
        const Batch b = make_batch(samples, idx, norm);
        sse += batch_sse(mlp.forward_normalized(b.x), b, nullptr);
        observed += b.observed;
    }
    if (!(observed > 0.0)) throw ShapeError("no observed entries");
    return sse / observed;
}

DatasetSplit split_dataset(std::span<const MaskedSample> dataset, double validation_fraction,
                           std::uint64_t seed) {
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_stream(seed, StreamTag::split, 0);
    std::shuffle(order.begin(), order.end(), rng);
    auto n_val = static_cast<std::size_t>(
        std::llround(validation_fraction * static_cast<double>(dataset.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, dataset.size() - 1);
    DatasetSplit split;
    split.validation.reserve(n_val);
    split.train.reserve(dataset.size() - n_val);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_val ? split.validation : split.train).push_back(dataset[order[i]]);
    }
    return split;
}

SurrogateCheckpoint train(std::span<const MaskedSample> dataset, const TrainingConfig& cfg,
                          const std::optional<Normalizer>& fixed_normalizer, bool verbose) {
    cfg.validate();
    if (dataset.size() < 2 * cfg.batch_size) {
        throw ConfigError("dataset needs at least two batches of samples");
    }
    const std::size_t ni = cfg.layer_sizes.front();
    const std::size_t no = cfg.layer_sizes.back();
    for (const auto& s : dataset) check_sample(s, ni, no);

    const DatasetSplit split = split_dataset(dataset, cfg.validation_fraction, cfg.seed);
    SurrogateCheckpoint ckpt;
    ckpt.config = cfg;
    ckpt.normalizer = fixed_normalizer ? *fixed_normalizer : fit_normalizer(split.train);

    Rng init_rng = make_stream(cfg.seed, StreamTag::init, 0);
    Mlp mlp = Mlp::initialized(cfg.layer_sizes, init_rng);
    const auto np = mlp.parameters().size();
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(np);
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(np);
    Eigen::VectorXd grad(np);

    std::vector<std::size_t> order(split.train.size());
    std::iota(order.begin(), order.end(), 0);

    double best_val = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_params = mlp.parameters();
    std::uint64_t step = 0;
    const double decay = cfg.epochs > 1
                             ? std::log(cfg.final_learning_rate / cfg.learning_rate) /
                                   static_cast<double>(cfg.epochs - 1)
                             : 0.0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate * std::exp(decay * static_cast<double>(epoch));
        Rng shuffle_rng = make_stream(cfg.seed, StreamTag::shuffle, epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_sse = 0.0, epoch_obs = 0.0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const Batch b = make_batch(split.train,
                                       std::span<const std::size_t>(order).subspan(start, end - start),
                                       ckpt.normalizer);
            if (!(b.observed > 0.0)) continue;
            const Tape tape = record_forward(mlp, b.x);
            Eigen::MatrixXd residual;
            epoch_sse += batch_sse(tape.a.back(), b, &residual);
            epoch_obs += b.observed;

            grad.setZero();
            reverse_sweep(mlp, tape, (2.0 / b.observed) * residual, &grad);

            ++step;
            m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * grad;
            m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            mlp.parameters().array() -=
                lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + cfg.adam_epsilon);
        }

        const double train_loss = epoch_sse / epoch_obs;
        const double val_loss = masked_loss(mlp, ckpt.normalizer, split.validation);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
            throw NumericalError("training diverged at epoch " + std::to_string(epoch + 1));
        }
        ckpt.history.train.push_back(train_loss);
        ckpt.history.validation.push_back(val_loss);
        if (val_loss < best_val) {
            best_val = val_loss;
            best_params = mlp.parameters();
            ckpt.best_epoch = epoch + 1;
        }
        if (verbose) {
            std::cerr << "epoch " << epoch + 1 << "/" << cfg.epochs << " lr " << lr << " train "
                      << train_loss << " val " << val_loss << '\n';
        }
    }
    mlp.parameters() = best_params;
    ckpt.mlp = std::move(mlp);
    return ckpt;
}

// ---------------------------------------------------------------------------
// Inference and gradients

namespace {

Eigen::VectorXd normalized_input(const Mlp& mlp, const Normalizer& norm,
                                 std::span<const double> model_vector) {
    if (model_vector.size() != mlp.input_size()) {
        throw ShapeError("model vector has " + std::to_string(model_vector.size()) +
                         " entries, network expects " + std::to_string(mlp.input_size()));
    }
    for (double v : model_vector) {
        if (!std::isfinite(v)) throw DomainError("non-finite model vector entry");
    }
    const Eigen::Map<const Eigen::VectorXd> x(model_vector.data(),
                                              static_cast<Eigen::Index>(model_vector.size()));
    return norm.normalize_input(x);
}

Eigen::VectorXd gradient_from_tape(const Mlp& mlp, const Normalizer& norm, const Tape& tape,
                                   std::size_t output_index) {
    if (output_index >= mlp.output_size()) throw ShapeError("output index out of range");
    const auto k = static_cast<Eigen::Index>(output_index);
    Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mlp.output_size()), 1);
    seed(k, 0) = norm.output_sd[k];
    const Eigen::MatrixXd dx = reverse_sweep(mlp, tape, std::move(seed), nullptr);
    return (dx.col(0).array() / norm.input_sd.array()).matrix();
}

}  // namespace

Eigen::VectorXd forward(const Mlp& mlp, const Normalizer& norm, std::span<const double> model_vector) {
    const Eigen::VectorXd z = normalized_input(mlp, norm, model_vector);
    return norm.denormalize_output(mlp.forward_normalized(z).col(0));
}

Eigen::VectorXd forward(const SurrogateCheckpoint& ckpt, std::span<const double> model_vector) {
    return forward(ckpt.mlp, ckpt.normalizer, model_vector);
}

Eigen::VectorXd backward_gradient(const Mlp& mlp, const Normalizer& norm,
                                  std::span<const double> model_vector, std::size_t output_index) {
    const Tape tape = record_forward(mlp, normalized_input(mlp, norm, model_vector));
    return gradient_from_tape(mlp, norm, tape, output_index);
}

Eigen::VectorXd backward_gradient(const SurrogateCheckpoint& ckpt,
                                  std::span<const double> model_vector, std::size_t output_index) {
    return backward_gradient(ckpt.mlp, ckpt.normalizer, model_vector, output_index);
}

Eigen::MatrixXd surrogate_jacobian(const SurrogateCheckpoint& ckpt,
                                   std::span<const double> model_vector) {
    const Mlp& mlp = ckpt.mlp;
    const Tape tape = record_forward(mlp, normalized_input(mlp, ckpt.normalizer, model_vector));
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(mlp.output_size()),
                        static_cast<Eigen::Index>(mlp.input_size()));
    for (std::size_t k = 0; k < mlp.output_size(); ++k) {
        jac.row(static_cast<Eigen::Index>(k)) =
            gradient_from_tape(mlp, ckpt.normalizer, tape, k).transpose();
    }
    return jac;
}

std::vector<double> surrogate_kernel(const SurrogateCheckpoint& ckpt, const DepthGrid& grid,
                                     std::span<const double> model_vector,
                                     std::size_t output_index) {
    if (grid.size() != ckpt.input_size()) {
        throw ConfigError("depth grid does not match the checkpoint input size");
    }
    const Eigen::VectorXd g = backward_gradient(ckpt, model_vector, output_index);
    std::vector<double> k(grid.size());
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = g[static_cast<Eigen::Index>(i)] / grid.thickness(i);
    return k;
}

// ---------------------------------------------------------------------------
// Checkpoint files

std::string checkpoint_to_string(const SurrogateCheckpoint& ckpt) {
    return checkpoint_to_json(ckpt).dump(1);
}

SurrogateCheckpoint checkpoint_from_string(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointFormatError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    return checkpoint_from_json(doc);
}

void save_checkpoint(const SurrogateCheckpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << checkpoint_to_string(ckpt) << '\n';
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

SurrogateCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointFormatError("cannot open checkpoint " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_string(buf.str());
}

}  // namespace surfkern
