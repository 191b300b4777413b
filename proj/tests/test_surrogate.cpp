#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "surfkern/errors.hpp"
#include "surfkern/io.hpp"
#include "surfkern/surrogate.hpp"
#include "test_models.hpp"

using namespace surfkern;

namespace {

// Synthetic smooth targets so tests do not depend on the solver.
MaskedSample synthetic_sample(Rng& rng, const MaskPolicy& policy) {
    MaskedSample s;
    s.model_vector.resize(kStandardLayerCount);
    for (double& v : s.model_vector) v = uniform(rng, 2.5, 4.8);
    s.target.resize(kOutputCount);
    for (std::size_t k = 0; k < kOutputCount; ++k) {
        const double w = 0.5 + 0.5 * static_cast<double>(k % 40) / 39.0;
        double acc = 0.0;
        for (std::size_t i = 0; i < kStandardLayerCount; ++i) {
            acc += s.model_vector[i] * std::exp(-std::abs(static_cast<double>(i) - 38.0 * w) / 6.0);
        }
        s.target[k] = 0.15 * acc;
    }
    s.mask = sample_mask(rng, policy);
    return s;
}

std::vector<MaskedSample> synthetic_dataset(std::size_t n, std::uint64_t seed) {
    Rng rng = make_stream(seed, StreamTag::model, 0);
    std::vector<MaskedSample> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(synthetic_sample(rng, MaskPolicy{}));
    return out;
}

Mlp random_mlp(std::uint64_t seed, std::vector<std::size_t> sizes = {38, 32, 32, 80}) {
    Rng rng = make_stream(seed, StreamTag::init, 0);
    return Mlp::initialized(std::move(sizes), rng);
}

Normalizer test_normalizer() {
    Normalizer n = Normalizer::identity(38, 80);
    for (Eigen::Index i = 0; i < 38; ++i) {
        n.input_mean[i] = 3.5 + 0.01 * static_cast<double>(i);
        n.input_sd[i] = 0.4 + 0.005 * static_cast<double>(i);
    }
    for (Eigen::Index k = 0; k < 80; ++k) {
        n.output_mean[k] = 3.2 + 0.01 * static_cast<double>(k);
        n.output_sd[k] = 0.2 + 0.003 * static_cast<double>(k);
    }
    return n;
}

SurrogateCheckpoint checkpoint_of(Mlp mlp, Normalizer norm) {
    SurrogateCheckpoint c;
    c.config.layer_sizes = mlp.layer_sizes();
    c.mlp = std::move(mlp);
    c.normalizer = std::move(norm);
    c.history.train = {0.5, 0.25};
    c.history.validation = {0.6, 0.3};
    c.best_epoch = 2;
    c.dataset_fingerprint = "abc";
    return c;
}

double max_relative_error(const Eigen::VectorXd& g, const Eigen::VectorXd& fd) {
    const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-12);
    return (g - fd).cwiseAbs().maxCoeff() / scale;
}

Eigen::VectorXd fd_gradient(const SurrogateCheckpoint& c, const std::vector<double>& x, std::size_t k,
                            double h = 1e-4) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[static_cast<Eigen::Index>(i)] =
            (forward(c, xp)[static_cast<Eigen::Index>(k)] - forward(c, xm)[static_cast<Eigen::Index>(k)]) / (2 * h);
    }
    return g;
}

}  // namespace

TEST_SUITE("surrogate") {

TEST_CASE("network shapes and initialization") {
    const Mlp a = random_mlp(1, {38, 256, 256, 256, 80});
    CHECK(a.parameters().size() == 38 * 256 + 256 + 2 * (256 * 256 + 256) + 256 * 80 + 80);
    CHECK(a.weight(0).rows() == 256);
    CHECK(a.weight(0).cols() == 38);
    CHECK(a.bias(3).size() == 80);
    CHECK(a.bias(1).cwiseAbs().maxCoeff() == 0.0);
    const Mlp b = random_mlp(1, {38, 256, 256, 256, 80});
    CHECK(a == b);
    const double sd = std::sqrt(a.weight(1).array().square().mean());
    CHECK(sd == doctest::Approx(1.0 / 16.0).epsilon(0.05));
}

TEST_CASE("zero network returns the output means") {
    Mlp mlp = random_mlp(2);
    mlp.parameters().setZero();
    const Normalizer n = test_normalizer();
    const std::vector<double> x(38, 3.7);
    const Eigen::VectorXd y = forward(mlp, n, x);
    for (Eigen::Index k = 0; k < 80; ++k) CHECK(y[k] == doctest::Approx(n.output_mean[k]).epsilon(1e-15));
}

TEST_CASE("forward is deterministic and rejects bad input") {
    const auto c = checkpoint_of(random_mlp(3), test_normalizer());
    const std::vector<double> x(38, 3.9);
    CHECK(forward(c, x) == forward(c, x));
    auto bad = x;
    bad[4] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(forward(c, bad), DomainError);
    CHECK_THROWS_AS(forward(c, std::vector<double>(37, 3.0)), ShapeError);
}

TEST_CASE("normalizer round trip") {
    const Normalizer n = test_normalizer();
    Eigen::VectorXd x(38);
    for (Eigen::Index i = 0; i < 38; ++i) x[i] = 2.0 + 0.07 * static_cast<double>(i);
    const Eigen::VectorXd back = n.denormalize_input(n.normalize_input(x));
    for (Eigen::Index i = 0; i < 38; ++i) CHECK(std::abs(back[i] - x[i]) <= 1e-12 * std::abs(x[i]));
    Eigen::VectorXd y = Eigen::VectorXd::Constant(80, 3.3);
    const Eigen::VectorXd yb = n.denormalize_output(n.normalize_output(y));
    for (Eigen::Index k = 0; k < 80; ++k) CHECK(std::abs(yb[k] - y[k]) <= 1e-12 * std::abs(y[k]));
}

TEST_CASE("fit_normalizer rejects constant channels") {
    auto data = synthetic_dataset(20, 4);
    for (auto& s : data) s.target[7] = 3.0;
    for (auto& s : data) s.mask.assign(80, 1);
    CHECK_THROWS_AS(fit_normalizer(data), NormalizationError);
}

TEST_CASE("mask sampling") {
    Rng rng = make_stream(5, StreamTag::mask, 0);
    const MaskPolicy policy;
    std::size_t drops = 0;
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) {
        const auto m = sample_mask(rng, policy);
        REQUIRE(m.size() == 80);
        CHECK(std::count(m.begin(), m.end(), 1) >= 8);
        const bool r_gone = std::all_of(m.begin(), m.begin() + 40, [](auto v) { return v == 0; });
        const bool l_gone = std::all_of(m.begin() + 40, m.end(), [](auto v) { return v == 0; });
        drops += r_gone || l_gone;
    }
    CHECK(std::abs(static_cast<double>(drops) / n - 0.30) < 0.02);

    MaskPolicy none;
    none.branch_drop_probability = 0.0;
    none.interval_probability = 0.0;
    const auto all = sample_mask(rng, none);
    CHECK(std::count(all.begin(), all.end(), 1) == 80);
}

TEST_CASE("masked loss ignores masked channels") {
    const Mlp mlp = random_mlp(6);
    const Normalizer n = test_normalizer();
    auto data = synthetic_dataset(5, 6);
    data[0].mask[10] = 0;
    const double before = masked_loss(mlp, n, data);
    data[0].target[10] += 100.0;
    CHECK(masked_loss(mlp, n, data) == before);
    data[0].target[11] += 1.0;
    if (data[0].mask[11]) CHECK(masked_loss(mlp, n, data) != before);
}

TEST_CASE("reverse-mode gradient matches finite differences") {
    const auto c = checkpoint_of(random_mlp(7, {38, 64, 64, 80}), test_normalizer());
    Rng rng = make_stream(7, StreamTag::noise, 0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x(38);
        for (double& v : x) v = uniform(rng, 2.5, 4.8);
        for (std::size_t k : {0u, 17u, 45u, 79u}) {
            CHECK(max_relative_error(backward_gradient(c, x, k), fd_gradient(c, x, k)) < 1e-4);
        }
    }
}

TEST_CASE("linear network gradient is the scaled weight row") {
    const auto c = checkpoint_of(random_mlp(8, {38, 80}), test_normalizer());
    const std::vector<double> x(38, 3.6);
    for (std::size_t k : {0u, 33u, 79u}) {
        const Eigen::VectorXd g = backward_gradient(c, x, k);
        const auto kk = static_cast<Eigen::Index>(k);
        for (Eigen::Index i = 0; i < 38; ++i) {
            const double expected = c.mlp.weight(0)(kk, i) * c.normalizer.output_sd[kk] / c.normalizer.input_sd[i];
            CHECK(g[i] == doctest::Approx(expected).epsilon(1e-13));
        }
    }
}

TEST_CASE("Jacobian rows, shape and Taylor check") {
    const auto c = checkpoint_of(random_mlp(9, {38, 64, 64, 80}), test_normalizer());
    std::vector<double> x(38);
    for (std::size_t i = 0; i < 38; ++i) x[i] = 2.8 + 0.05 * static_cast<double>(i);
    const Eigen::MatrixXd J = surrogate_jacobian(c, x);
    CHECK(J.rows() == 80);
    CHECK(J.cols() == 38);
    for (std::size_t k : {0u, 40u, 79u}) {
        CHECK(J.row(static_cast<Eigen::Index>(k)).transpose() == backward_gradient(c, x, k));
    }
    Rng rng = make_stream(9, StreamTag::noise, 1);
    Eigen::VectorXd dm(38);
    for (Eigen::Index i = 0; i < 38; ++i) dm[i] = uniform(rng, -1.0, 1.0);
    dm *= 1e-3 / dm.norm();
    auto xp = x;
    for (std::size_t i = 0; i < 38; ++i) xp[i] += dm[static_cast<Eigen::Index>(i)];
    const Eigen::VectorXd actual = forward(c, xp) - forward(c, x);
    const Eigen::VectorXd predicted = J * dm;
    CHECK((predicted - actual).norm() <= 0.05 * actual.norm());
}

TEST_CASE("surrogate kernel divides by thickness") {
    const auto c = checkpoint_of(random_mlp(10), test_normalizer());
    const auto grid = standard_depth_grid();
    const std::vector<double> x(38, 3.9);
    const auto k = surrogate_kernel(c, grid, x, 12);
    const Eigen::VectorXd g = backward_gradient(c, x, 12);
    for (std::size_t i = 0; i < 38; ++i) CHECK(k[i] == g[static_cast<Eigen::Index>(i)] / grid.thickness(i));
}

TEST_CASE("training config validation") {
    TrainingConfig c;
    CHECK_NOTHROW(c.validate());
    c.validation_fraction = 0.6;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainingConfig{};
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainingConfig{};
    c.batch_size = 100;
    const auto small = synthetic_dataset(150, 1);
    CHECK_THROWS_AS(train(small, c), ConfigError);
}

TEST_CASE("training is deterministic and keeps the best epoch") {
    const auto data = synthetic_dataset(400, 11);
    TrainingConfig cfg;
    cfg.layer_sizes = {38, 32, 32, 80};
    cfg.batch_size = 32;
    cfg.epochs = 6;
    cfg.seed = 21;
    const auto a = train(data, cfg);
    const auto b = train(data, cfg);
    CHECK(a.history.train == b.history.train);
    CHECK(a.history.validation == b.history.validation);
    CHECK(a.mlp == b.mlp);
    REQUIRE(a.best_epoch >= 1);
    CHECK(a.history.validation[a.best_epoch - 1] <= a.history.validation.front());
    const auto split = split_dataset(data, cfg.validation_fraction, cfg.seed);
    CHECK(std::abs(masked_loss(a.mlp, a.normalizer, split.validation) -
                   a.history.validation[a.best_epoch - 1]) <= 1e-10);
    CHECK(a.history.train.back() < a.history.train.front());
}

TEST_CASE("a single sample can be fitted exactly") {
    Rng rng = make_stream(12, StreamTag::model, 0);
    MaskPolicy keep;
    keep.branch_drop_probability = 0.0;
    keep.interval_probability = 0.0;
    const MaskedSample s = synthetic_sample(rng, keep);
    // Two copies: one trains, one validates. A single sample has no spread, so
    // the normalizer is fixed rather than fitted.
    const std::vector<MaskedSample> data = {s, s};
    Normalizer n = test_normalizer();
    TrainingConfig cfg;
    cfg.batch_size = 1;
    cfg.epochs = 2000;
    cfg.validation_fraction = 0.5;
    cfg.final_learning_rate = 1e-5;
    cfg.seed = 3;
    const auto c = train(data, cfg, n);
    CHECK(c.history.train.back() < 1e-6);
}

TEST_CASE("checkpoint round trip and format errors") {
    const auto c = checkpoint_of(random_mlp(13, {38, 16, 80}), test_normalizer());
    const auto dir = std::filesystem::temp_directory_path() / "surfkern_ckpt_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "c.json";
    save_checkpoint(c, path);
    const auto back = load_checkpoint(path);
    std::vector<double> x(38);
    for (std::size_t i = 0; i < 38; ++i) x[i] = 3.0 + 0.03 * static_cast<double>(i);
    CHECK(forward(back, x) == forward(c, x));
    CHECK(back.mlp == c.mlp);
    CHECK(back.normalizer == c.normalizer);
    CHECK(back.history.train == c.history.train);
    CHECK(back.best_epoch == 2);
    CHECK(back.dataset_fingerprint == "abc");

    const std::string text = read_file(path);
    write_file(dir / "t.json", text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(dir / "t.json"), CheckpointFormatError);

    auto doc = nlohmann::json::parse(text);
    doc["version"] = kCheckpointVersion + 1;
    write_file(dir / "v.json", doc.dump());
    CHECK_THROWS_AS(load_checkpoint(dir / "v.json"), CheckpointFormatError);

    doc = nlohmann::json::parse(text);
    doc["layers"][0]["bias"].erase(0);
    write_file(dir / "s.json", doc.dump());
    CHECK_THROWS_AS(load_checkpoint(dir / "s.json"), CheckpointFormatError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), CheckpointFormatError);
    std::filesystem::remove_all(dir);
}

}
